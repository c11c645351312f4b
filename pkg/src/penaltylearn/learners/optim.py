"""Adam with best-validation tracking and early stopping."""

from __future__ import annotations

from typing import Callable

import numpy as np

from .models import TrainConfig

Params = dict[str, np.ndarray]


def split_validation(n: int, cfg: TrainConfig) -> tuple[np.ndarray, np.ndarray]:
    """Random train/validation index split; no validation set below 5 instances."""
    rng = np.random.default_rng(cfg.seed)
    order = rng.permutation(n)
    n_val = int(round(cfg.val_fraction * n)) if n >= 5 else 0
    return np.sort(order[n_val:]), np.sort(order[:n_val])


def adam(params: Params,
         loss_grad: Callable[[Params, np.ndarray], tuple[float, Params]],
         train_idx: np.ndarray,
         val_loss: Callable[[Params], float] | None,
         cfg: TrainConfig,
         batches: bool = False) -> tuple[Params, dict]:
    """Minimize ``loss_grad`` over ``train_idx``; return the best-validation parameters.

    Without a validation function the training loss is tracked instead. With
    ``batches`` each iteration uses one shuffled mini-batch of ``cfg.batch_size``.
    """
    rng = np.random.default_rng(cfg.seed + 1)
    p = {k: v.copy() for k, v in params.items()}
    m = {k: np.zeros_like(v) for k, v in p.items()}
    v2 = {k: np.zeros_like(v) for k, v in p.items()}
    monitor = val_loss if val_loss is not None else (lambda q: loss_grad(q, train_idx)[0])

    best = {k: a.copy() for k, a in p.items()}
    best_loss = monitor(p)
    curve, best_curve, train_curve = [best_loss], [best_loss], []
    stale = 0
    queue: list[np.ndarray] = []
    it = 0
    for it in range(1, cfg.max_iter + 1):
        if batches:
            if not queue:
                perm = rng.permutation(train_idx)
                queue = [perm[i:i + cfg.batch_size] for i in range(0, perm.size, cfg.batch_size)]
            idx = queue.pop(0)
        else:
            idx = train_idx
        loss, grads = loss_grad(p, idx)
        train_curve.append(loss)
        for k in p:
            g = grads[k]
            m[k] = cfg.beta1 * m[k] + (1 - cfg.beta1) * g
            v2[k] = cfg.beta2 * v2[k] + (1 - cfg.beta2) * g * g
            mhat = m[k] / (1 - cfg.beta1 ** it)
            vhat = v2[k] / (1 - cfg.beta2 ** it)
            p[k] = p[k] - cfg.step_size * mhat / (np.sqrt(vhat) + cfg.eps)
        current = monitor(p)
        curve.append(current)
        if current < best_loss:
            best_loss = current
            best = {k: a.copy() for k, a in p.items()}
            stale = 0
        else:
            stale += 1
        best_curve.append(best_loss)
        if stale >= cfg.patience:
            break
    meta = {
        "trained": cfg.max_iter > 0,
        "iterations": it if cfg.max_iter > 0 else 0,
        "best_monitor_loss": float(best_loss),
        "monitor": "validation" if val_loss is not None else "train",
        "monitor_curve": [float(c) for c in curve],
        "best_curve": [float(c) for c in best_curve],
        "train_curve": [float(c) for c in train_curve],
    }
    return best, meta
