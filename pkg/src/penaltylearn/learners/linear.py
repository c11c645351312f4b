"""L1-regularized linear interval regression fitted with FISTA.

Objective: ``mean_i hinge(x_i . beta + beta0, target_i) + l1 * ||beta||_1``
on standardized features; the bias is not penalized.
"""

from __future__ import annotations

import math
from typing import Sequence

import numpy as np
from scipy.optimize import minimize_scalar

from ..data import TargetInterval
from ..features import FeatureVector, feature_matrix
from ..losses import HingeConfig, hinge_losses
from .models import FeatureScaling, Linear


def fit_scaling(features: Sequence[FeatureVector]) -> tuple[FeatureScaling, np.ndarray]:
    """Drop columns invalid anywhere or constant; standardize the rest.

    Returns the scaling and the standardized (S, p) design matrix.
    """
    if not features:
        raise ValueError("no training instances")
    values, valid = feature_matrix(features)
    keep = valid.all(axis=0)
    center = np.zeros(values.shape[1])
    scale = np.ones(values.shape[1])
    with np.errstate(all="ignore"):
        center[keep] = values[:, keep].mean(axis=0)
        scale[keep] = values[:, keep].std(axis=0)
        # treat columns whose spread is round-off relative to their level as constant
        keep &= np.isfinite(scale) & (scale > 1e-12 * np.maximum(1.0, np.abs(center)))
    if not keep.any():
        raise ValueError("every feature is invalid or constant on the training set")
    names = tuple(n for n, k in zip(features[0].names, keep) if k)
    scaling = FeatureScaling(names, center[keep], scale[keep])
    X = (values[:, keep] - scaling.center) / scaling.scale
    return scaling, X


def target_arrays(targets: Sequence[TargetInterval]) -> tuple[np.ndarray, np.ndarray]:
    return np.array([t.lo for t in targets], float), np.array([t.hi for t in targets], float)


def soft_threshold(z, threshold: float):
    """Proximal map of ``threshold * |.|``."""
    z = np.asarray(z, float)
    return np.sign(z) * np.maximum(np.abs(z) - threshold, 0.0)


def best_bias(lo, hi, cfg: HingeConfig, offset=None) -> float:
    """Exact minimizer of the mean hinge loss over a shared intercept."""
    offset = np.zeros(lo.size) if offset is None else offset
    ends = np.concatenate([lo[np.isfinite(lo)] - offset[np.isfinite(lo)],
                           hi[np.isfinite(hi)] - offset[np.isfinite(hi)]])
    if ends.size == 0:
        return 0.0

    def f(b):
        return hinge_losses(offset + b, lo, hi, cfg)[0].mean()

    a, z = ends.min() - 1.0, ends.max() + 1.0
    res = minimize_scalar(f, bounds=(a, z), method="bounded",
                          options={"xatol": 1e-12, "maxiter": 500})
    # scan the end points too, since p=1 optima sit on them
    cand = np.concatenate([[res.x], ends])
    return float(cand[np.argmin([f(c) for c in cand])])


def l1_max(X, lo, hi, cfg: HingeConfig) -> float:
    """Smallest L1 weight at which the zero coefficient vector is optimal."""
    b = best_bias(lo, hi, cfg)
    _, g = hinge_losses(np.full(lo.size, b), lo, hi, cfg)
    return float(np.max(np.abs(X.T @ g)) / lo.size)


def l1_grid(X, lo, hi, cfg: HingeConfig, start: float = 1e-3, factor: float = 1.2) -> list[float]:
    """Geometric L1 grid from ``start`` until no features remain."""
    top = l1_max(X, lo, hi, cfg)
    grid = [start]
    while grid[-1] <= top:
        grid.append(grid[-1] * factor)
    return grid


def _fista(X, lo, hi, l1, cfg: HingeConfig, max_iter, tol, w0=None, b0=None):
    S, p = X.shape

    def smooth(w, b):
        loss, g = hinge_losses(X @ w + b, lo, hi, cfg)
        return loss.mean(), X.T @ g / S, g.mean()

    def objective(w, b):
        return smooth(w, b)[0] + l1 * np.abs(w).sum()

    w = np.zeros(p) if w0 is None else w0.copy()
    b = best_bias(lo, hi, cfg) if b0 is None else b0
    yw, yb = w.copy(), b
    t = 1.0
    L = 1.0
    F = objective(w, b)
    history = [F]
    for it in range(max_iter):
        fy, gw, gb = smooth(yw, yb)
        while True:
            nw = soft_threshold(yw - gw / L, l1 / L)
            nb = yb - gb / L
            dw, db = nw - yw, nb - yb
            quad = fy + gw @ dw + gb * db + 0.5 * L * (dw @ dw + db * db)
            if smooth(nw, nb)[0] <= quad + 1e-15 * max(1.0, abs(quad)):
                break
            L *= 2.0
        F_new = objective(nw, nb)
        if F_new > F:
            # adaptive restart: drop momentum and retry from the current iterate
            yw, yb, t = w.copy(), b, 1.0
            history.append(F)
            continue
        t_next = (1 + math.sqrt(1 + 4 * t * t)) / 2
        yw = nw + ((t - 1) / t_next) * (nw - w)
        yb = nb + ((t - 1) / t_next) * (nb - b)
        done = F - F_new < tol
        w, b, F, t = nw, nb, F_new, t_next
        history.append(F)
        if done:
            break
        L = max(L / 1.5, 1e-8)
    return w, b, history


def fit_linear_fista(features: Sequence[FeatureVector], targets: Sequence[TargetInterval],
                     l1: float = 0.0, cfg: HingeConfig = HingeConfig(),
                     max_iter: int = 1000, tol: float = 1e-8) -> Linear:
    if l1 < 0:
        raise ValueError("l1 must be nonnegative")
    scaling, X = fit_scaling(features)
    lo, hi = target_arrays(targets)
    w, b, history = _fista(X, lo, hi, l1, cfg, max_iter, tol)
    return Linear(w, float(b), scaling, {
        "trained": True, "l1": l1, "iterations": len(history) - 1,
        "objective": float(history[-1]), "n_nonzero": int(np.count_nonzero(w)),
    })
