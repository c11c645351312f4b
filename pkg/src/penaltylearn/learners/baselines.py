"""Unsupervised penalties and the featureless constant model."""

from __future__ import annotations

import math
from typing import Sequence

import numpy as np

from ..data import TargetInterval
from ..losses import HingeConfig, hinge_losses
from .models import Constant


def _check_len(values):
    x = np.asarray(values, dtype=float)
    if x.size < 2:
        raise ValueError("need at least 2 values")
    return x


def bic_penalty(values) -> float:
    """Population variance times ``ln N``."""
    x = _check_len(values)
    return float(x.var() * math.log(x.size))


def aic_penalty(values, feature: str = "variance") -> float:
    x = _check_len(values)
    if feature == "variance":
        return 2.0 * float(x.var())
    if feature == "sd":
        return 2.0 * float(x.std())
    raise ValueError(f"unknown AIC feature {feature!r}")


def constant_candidates(targets: Sequence[TargetInterval]) -> list[float]:
    cands = set()
    for t in targets:
        if math.isfinite(t.lo):
            cands.add(t.lo)
        if math.isfinite(t.hi):
            cands.add(t.hi)
        if math.isfinite(t.lo) and math.isfinite(t.hi):
            cands.add((t.lo + t.hi) / 2)
    return sorted(cands)


def constant_loss(c: float, targets: Sequence[TargetInterval], cfg: HingeConfig) -> float:
    lo = np.array([t.lo for t in targets])
    hi = np.array([t.hi for t in targets])
    loss, _ = hinge_losses(np.full(lo.size, c), lo, hi, cfg)
    return math.fsum(loss)


def fit_constant(targets: Sequence[TargetInterval], cfg: HingeConfig = HingeConfig()) -> Constant:
    """Best constant among the finite target ends and midpoints; ties go to the smallest."""
    cands = constant_candidates(targets)
    if not cands:
        raise ValueError("every target is unbounded on both sides; nothing to fit")
    losses = [constant_loss(c, targets, cfg) for c in cands]
    k = int(np.argmin(losses))  # first minimum = smallest candidate
    return Constant(cands[k], {"trained": True, "train_loss": losses[k],
                               "n_candidates": len(cands)})
