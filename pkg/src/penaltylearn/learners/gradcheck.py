"""Central-difference verification of MLP backprop and recurrent BPTT gradients."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from ..losses import HingeConfig, hinge_losses
from .mlp import init_mlp, mlp_forward, mlp_loss_grad
from .recurrent import GATES, forward_batch, init_recurrent, pad_batch, recurrent_loss_grad

KINDS = ("mlp",) + tuple(GATES)
REL_FLOOR = 1e-5  # denominator floor; central differences at h=1e-6 carry ~1e-10 round-off


@dataclass
class GradCheckReport:
    kind: str
    trials: int
    max_rel_error: float
    tolerance: float

    @property
    def passed(self) -> bool:
        return self.max_rel_error < self.tolerance


def relative_error(analytic: np.ndarray, numeric: np.ndarray) -> float:
    denom = np.maximum(np.maximum(np.abs(analytic), np.abs(numeric)), REL_FLOOR)
    return float(np.max(np.abs(analytic - numeric) / denom))


def numeric_gradient(f, params: dict, h: float = 1e-6) -> dict:
    out = {}
    for k, arr in params.items():
        g = np.zeros_like(arr)
        for idx in np.ndindex(arr.shape):
            old = arr[idx]
            arr[idx] = old + h
            fp = f(params)
            arr[idx] = old - h
            fm = f(params)
            arr[idx] = old
            g[idx] = (fp - fm) / (2 * h)
        out[k] = g
    return out


def _targets_away_from_kinks(pred, rng, gap=0.3):
    """Random intervals placing each prediction inside, below or above, at least ``gap`` from any end."""
    lo = np.empty(pred.size)
    hi = np.empty(pred.size)
    for j, p in enumerate(pred):
        mode = rng.integers(4)
        if mode == 0:    # prediction below the interval
            lo[j] = p + rng.uniform(gap, 1.5)
            hi[j] = np.inf if rng.random() < 0.3 else lo[j] + rng.uniform(0.5, 2)
        elif mode == 1:  # above
            hi[j] = p - rng.uniform(gap, 1.5)
            lo[j] = -np.inf if rng.random() < 0.3 else hi[j] - rng.uniform(0.5, 2)
        elif mode == 2:  # inside
            lo[j] = p - rng.uniform(gap, 1.0)
            hi[j] = p + rng.uniform(gap, 1.0)
        else:            # near a tight interval, still off the kinks
            lo[j] = p + rng.uniform(gap, 1.0)
            hi[j] = lo[j]
    return lo, hi


def _mlp_instance(rng):
    S, p = int(rng.integers(3, 8)), int(rng.integers(2, 6))
    sizes = tuple(int(rng.choice([1, 2, 4])) for _ in range(rng.integers(1, 4)))
    while True:
        X = rng.normal(size=(S, p))
        params = init_mlp(p, sizes, rng)
        _, _, pres = mlp_forward(params, X)
        # stay away from ReLU kinks so the finite difference is valid
        if all(np.min(np.abs(z)) > 1e-3 for z in pres[:-1]):
            return X, params


def _check_mlp(rng, loss_cfg, h):
    X, params = _mlp_instance(rng)
    pred = mlp_forward(params, X)[0]
    lo, hi = _targets_away_from_kinks(pred, rng)
    _, analytic = mlp_loss_grad(params, X, lo, hi, loss_cfg)
    numeric = numeric_gradient(lambda q: mlp_loss_grad(q, X, lo, hi, loss_cfg)[0], params, h)
    return max(relative_error(analytic[k], numeric[k]) for k in params)


def _check_recurrent(kind, rng, loss_cfg, h, max_len=20, max_hidden=4):
    B = int(rng.integers(1, 4))
    arrays = [rng.normal(size=int(rng.integers(1, max_len + 1))) for _ in range(B)]
    X, M = pad_batch(arrays)
    n_layers = int(rng.integers(1, 3))
    hidden = int(rng.integers(1, max_hidden + 1))
    model = init_recurrent(kind, n_layers, hidden, rng, beta0=rng.normal())
    params = model.params()
    pred = forward_batch(params, kind, n_layers, X, M)[0]
    lo, hi = _targets_away_from_kinks(pred, rng)

    def f(q):
        return recurrent_loss_grad(q, kind, n_layers, X, M, lo, hi, loss_cfg)[0]

    _, analytic = recurrent_loss_grad(params, kind, n_layers, X, M, lo, hi, loss_cfg)
    numeric = numeric_gradient(f, params, h)
    return max(relative_error(analytic[k], numeric[k]) for k in params)


def grad_check(kind: str, trials: int = 20, tolerance: float = 1e-4, seed: int = 0,
               h: float = 1e-6, loss_cfg: HingeConfig = HingeConfig()) -> GradCheckReport:
    """Max relative error between analytic and central-difference gradients of the mean hinge loss."""
    if kind not in KINDS:
        raise ValueError(f"unknown model kind {kind!r}; expected one of {KINDS}")
    rng = np.random.default_rng(seed)
    worst = 0.0
    for _ in range(trials):
        if kind == "mlp":
            err = _check_mlp(rng, loss_cfg, h)
        else:
            err = _check_recurrent(kind, rng, loss_cfg, h)
        worst = max(worst, err)
    return GradCheckReport(kind, trials, worst, tolerance)


def zero_loss_gradients(kind: str, seed: int = 0) -> dict:
    """Gradients when every prediction sits inside its target; all should be 0."""
    rng = np.random.default_rng(seed)
    if kind == "mlp":
        X, params = _mlp_instance(rng)
        pred = mlp_forward(params, X)[0]
        return mlp_loss_grad(params, X, pred - 1, pred + 1, HingeConfig())[1]
    arrays = [rng.normal(size=n) for n in (5, 9)]
    X, M = pad_batch(arrays)
    model = init_recurrent(kind, 2, 3, rng)
    params = model.params()
    pred = forward_batch(params, kind, 2, X, M)[0]
    lo, hi = pred - 1, pred + 1
    assert hinge_losses(pred, lo, hi)[0].sum() == 0
    return recurrent_loss_grad(params, kind, 2, X, M, lo, hi, HingeConfig())[1]
