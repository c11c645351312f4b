"""Interval-regression losses: the squared/linear hinge family and the AFT likelihood."""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass
from typing import Sequence

import numpy as np
from scipy import special

from .data import TargetInterval


class AftOverflowWarning(RuntimeWarning):
    """The interval probability underflowed to zero; the loss is reported as +inf."""


@dataclass(frozen=True)
class HingeConfig:
    margin: float = 0.0
    power: int = 2

    def __post_init__(self):
        if not self.margin >= 0:
            raise ValueError("margin must be nonnegative")
        if self.power not in (1, 2):
            raise ValueError("power must be 1 or 2")


@dataclass(frozen=True)
class AftConfig:
    distribution: str = "normal"
    scale: float = 1.0

    def __post_init__(self):
        if self.distribution not in ("normal", "logistic", "extreme"):
            raise ValueError(f"unknown AFT distribution {self.distribution!r}")
        if not self.scale > 0:
            raise ValueError("scale must be positive")


def hinge_losses(pred, lo, hi, cfg: HingeConfig = HingeConfig()):
    """Vectorized hinge loss and its (sub)gradient with respect to ``pred``.

    Infinite ends contribute nothing. At a kink the gradient is 0.
    """
    pred = np.asarray(pred, dtype=float)
    below = np.maximum(np.asarray(lo, float) - pred + cfg.margin, 0.0)
    above = np.maximum(pred - np.asarray(hi, float) + cfg.margin, 0.0)
    if cfg.power == 1:
        loss = below + above
        grad = (above > 0).astype(float) - (below > 0).astype(float)
    else:
        loss = below ** 2 + above ** 2
        grad = 2.0 * above - 2.0 * below
    return loss, grad


def hinge_loss(pred: float, target: TargetInterval, cfg: HingeConfig = HingeConfig()) -> float:
    loss, _ = hinge_losses(pred, target.lo, target.hi, cfg)
    return float(loss)


def hinge_grad(pred: float, target: TargetInterval, cfg: HingeConfig = HingeConfig()) -> float:
    _, grad = hinge_losses(pred, target.lo, target.hi, cfg)
    return float(grad)


def _cdf(dist, z):
    if dist == "normal":
        return special.ndtr(z)
    if dist == "logistic":
        return special.expit(z)
    return -np.expm1(-np.exp(z))


def _sf(dist, z):
    if dist == "normal":
        return special.ndtr(-z)
    if dist == "logistic":
        return special.expit(-z)
    return np.exp(-np.exp(z))


def aft_nll(pred: float, lam_lo: float, lam_hi: float, cfg: AftConfig = AftConfig()) -> float:
    """Negative log of the probability mass the error law puts on ``[lam_lo, lam_hi]``.

    ``pred`` and the bounds are on the raw penalty scale; ``lam_hi`` may be inf.
    """
    if not (0 <= lam_lo < lam_hi):
        raise ValueError(f"AFT needs 0 <= lam_lo < lam_hi, got [{lam_lo}, {lam_hi}]")
    za = (lam_lo - pred) / cfg.scale
    zb = (lam_hi - pred) / cfg.scale if math.isfinite(lam_hi) else math.inf
    # subtract in whichever tail keeps precision
    if za > 0:
        prob = _sf(cfg.distribution, za) - _sf(cfg.distribution, zb)
    else:
        prob = _cdf(cfg.distribution, zb) - _cdf(cfg.distribution, za)
    prob = float(prob)
    if not prob > 0:
        warnings.warn(f"AFT probability underflow at pred={pred}, scale={cfg.scale}",
                      AftOverflowWarning, stacklevel=2)
        return math.inf
    return -math.log(prob)


def total_loss(preds: Sequence[float], targets: Sequence[TargetInterval],
               loss: str = "hinge", cfg=None) -> float:
    """Sum of per-instance losses.

    For ``hinge`` the predictions are log-penalties; for ``aft`` they are raw
    penalties and each log-scale target is exponentiated.
    """
    if len(preds) != len(targets):
        raise ValueError(f"{len(preds)} predictions for {len(targets)} targets")
    if loss == "hinge":
        cfg = cfg or HingeConfig()
        return math.fsum(hinge_loss(p, t, cfg) for p, t in zip(preds, targets))
    if loss == "aft":
        cfg = cfg or AftConfig()
        return math.fsum(aft_nll(p, math.exp(t.lo), math.exp(t.hi), cfg)
                         for p, t in zip(preds, targets))
    raise ValueError(f"unknown loss {loss!r}")
