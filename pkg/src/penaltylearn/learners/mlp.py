"""Fully connected ReLU network on standardized hand-built features."""

from __future__ import annotations

from typing import Sequence

import numpy as np

from ..data import TargetInterval
from ..features import FeatureVector
from ..losses import hinge_losses
from .baselines import fit_constant
from .linear import fit_scaling, target_arrays
from .models import Mlp, TrainConfig
from .optim import adam, split_validation

ALLOWED_SIZES = (1, 2, 4, 8, 16, 32, 64, 128, 256, 512)


def init_mlp(n_in: int, hidden_sizes: Sequence[int], rng: np.random.Generator) -> dict:
    sizes = [n_in, *hidden_sizes, 1]
    p = {}
    for k, (a, b) in enumerate(zip(sizes[:-1], sizes[1:])):
        bound = 1.0 / np.sqrt(a)
        p[f"W{k}"] = rng.uniform(-bound, bound, size=(b, a))
        p[f"b{k}"] = rng.uniform(-bound, bound, size=b)
    return p


def _n_layers(p):
    return sum(1 for k in p if k.startswith("W"))


def mlp_forward(p: dict, X: np.ndarray):
    """Returns ``(pred, activations, preactivations)``; pred has shape (S,)."""
    acts, pres = [X], []
    h = X
    L = _n_layers(p)
    for k in range(L):
        z = h @ p[f"W{k}"].T + p[f"b{k}"]
        pres.append(z)
        h = np.maximum(z, 0.0) if k < L - 1 else z
        acts.append(h)
    return h[:, 0], acts, pres


def mlp_backward(p: dict, acts, pres, dpred: np.ndarray) -> dict:
    L = _n_layers(p)
    grads = {}
    delta = dpred[:, None]
    for k in range(L - 1, -1, -1):
        grads[f"W{k}"] = delta.T @ acts[k]
        grads[f"b{k}"] = delta.sum(axis=0)
        if k > 0:
            delta = (delta @ p[f"W{k}"]) * (pres[k - 1] > 0)
    return grads


def mlp_loss_grad(p: dict, X, lo, hi, loss_cfg):
    """Mean hinge loss over the rows of X and its parameter gradient."""
    pred, acts, pres = mlp_forward(p, X)
    loss, g = hinge_losses(pred, lo, hi, loss_cfg)
    return float(loss.mean()), mlp_backward(p, acts, pres, g / X.shape[0])


def fit_mlp(features: Sequence[FeatureVector], targets: Sequence[TargetInterval],
            hidden_sizes: Sequence[int], cfg: TrainConfig = TrainConfig()) -> Mlp:
    hidden_sizes = tuple(int(h) for h in hidden_sizes)
    if not 1 <= len(hidden_sizes) <= 3:
        raise ValueError("an MLP needs 1 to 3 hidden layers")
    if any(h < 1 for h in hidden_sizes):
        raise ValueError("hidden layer sizes must be positive")
    if not features:
        raise ValueError("empty training set")
    scaling, X = fit_scaling(features)
    lo, hi = target_arrays(targets)
    rng = np.random.default_rng(cfg.seed)
    p = init_mlp(X.shape[1], hidden_sizes, rng)
    p[f"b{len(hidden_sizes)}"] = np.array([fit_constant(targets, cfg.loss).c])

    tr, va = split_validation(X.shape[0], cfg)

    def loss_grad(q, idx):
        return mlp_loss_grad(q, X[idx], lo[idx], hi[idx], cfg.loss)

    val = (lambda q: loss_grad(q, va)[0]) if va.size else None
    best, meta = adam(p, loss_grad, tr, val, cfg)
    L = len(hidden_sizes) + 1
    return Mlp([best[f"W{k}"] for k in range(L)], [best[f"b{k}"] for k in range(L)],
               scaling, {**meta, "hidden_sizes": list(hidden_sizes)})
