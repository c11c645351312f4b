"""Penalized optimal partitioning with the Gaussian mean-change cost.

The dynamic programs use ``G(0) = 0`` and ``G(i) = F(i) + lam`` for
``i > 0``, so that ``F(j) = min_i G(i) + cost(i, j)``. This is the usual
``F(0) = -lam`` recursion rewritten to avoid cancelling large penalties.
Ties go to the smallest last-changepoint index (strict ``<`` scanning ``i``
upwards), which keeps OPART, PELT and brute force comparable.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass

import numpy as np
from numba import njit

BRUTE_FORCE_MAX_N = 16


@dataclass(frozen=True)
class CumulativeStats:
    """Prefix sums of (centered) values and squares; index 0 holds 0."""

    s1: np.ndarray
    s2: np.ndarray

    @classmethod
    def from_values(cls, values) -> "CumulativeStats":
        x = np.asarray(values, dtype=float)
        # Cost is shift invariant; centering limits cancellation in s2 - s1**2/n.
        x = x - x.mean() if x.size else x
        s1 = np.concatenate(([0.0], np.cumsum(x)))
        s2 = np.concatenate(([0.0], np.cumsum(x * x)))
        return cls(s1, s2)

    @property
    def n(self) -> int:
        return self.s1.size - 1


@dataclass(frozen=True)
class Segmentation:
    changepoints: tuple[int, ...]
    means: tuple[float, ...]
    data_cost: float
    penalized_cost: float
    lam: float

    @property
    def n_changes(self) -> int:
        return len(self.changepoints)

    def segments(self, n: int) -> list[tuple[int, int]]:
        """(i, j] boundaries of each segment, 0-based prefix indices."""
        bounds = (0,) + self.changepoints + (n,)
        return list(zip(bounds[:-1], bounds[1:]))


@njit(cache=True)
def _cost(s1, s2, i, j):
    n = j - i
    if n == 1:
        return 0.0
    a = s1[j] - s1[i]
    c = (s2[j] - s2[i]) - a * a / n
    return c if c > 0.0 else 0.0


def segment_cost(stats: CumulativeStats, i: int, j: int) -> float:
    """Sum of squared deviations from the mean over positions i+1..j."""
    if not 0 <= i < j <= stats.n:
        raise ValueError(f"need 0 <= i < j <= {stats.n}, got i={i}, j={j}")
    return float(_cost(stats.s1, stats.s2, i, j))


@njit(cache=True)
def _opart_kernel(s1, s2, lam):
    n = s1.size - 1
    F = np.empty(n + 1)
    last = np.zeros(n + 1, dtype=np.int64)
    F[0] = 0.0
    for j in range(1, n + 1):
        best = _cost(s1, s2, 0, j)
        arg = 0
        for i in range(1, j):
            c = F[i] + lam + _cost(s1, s2, i, j)
            if c < best:
                best = c
                arg = i
        F[j] = best
        last[j] = arg
    return F, last


@njit(cache=True)
def _pelt_kernel(s1, s2, lam):
    n = s1.size - 1
    F = np.empty(n + 1)
    last = np.zeros(n + 1, dtype=np.int64)
    F[0] = 0.0
    cand = np.empty(n + 1, dtype=np.int64)
    vals = np.empty(n + 1)
    n_cand = 1
    cand[0] = 0
    for j in range(1, n + 1):
        best = np.inf
        arg = -1
        # candidates are stored in increasing order, so strict < keeps the smallest index
        for k in range(n_cand):
            i = cand[k]
            g = 0.0 if i == 0 else F[i] + lam
            v = g + _cost(s1, s2, i, j)
            vals[k] = v
            if v < best:
                best = v
                arg = i
        F[j] = best
        last[j] = arg
        threshold = best + lam
        kept = 0
        for k in range(n_cand):
            # strict > so tied candidates survive and the tie rule still applies
            if not vals[k] > threshold:
                cand[kept] = cand[k]
                kept += 1
        cand[kept] = j
        n_cand = kept + 1
    return F, last


@njit(cache=True)
def _backtrack_cost(s1, s2, last):
    """Changepoints (increasing) and total data cost from a last-changepoint table."""
    n = s1.size - 1
    rev = np.empty(n, dtype=np.int64)
    k = 0
    cost = 0.0
    j = n
    while j > 0:
        i = last[j]
        cost += _cost(s1, s2, i, j)
        if i > 0:
            rev[k] = i
            k += 1
        j = i
    return rev[:k][::-1].copy(), cost


@njit(cache=True)
def solve_compact(s1, s2, lam):
    """PELT solve returning only (changepoints, data_cost); used on the penalty path."""
    _, last = _pelt_kernel(s1, s2, lam)
    return _backtrack_cost(s1, s2, last)


def _check_inputs(values, lam):
    x = np.asarray(values, dtype=float)
    if x.ndim != 1 or x.size == 0:
        raise ValueError("values must be a nonempty 1-D sequence")
    if not np.all(np.isfinite(x)):
        raise ValueError("values must be finite")
    lam = float(lam)
    if not math.isfinite(lam) or lam < 0:
        raise ValueError(f"penalty must be finite and nonnegative, got {lam}")
    return x, lam


def _assemble(x, stats, changepoints, lam):
    bounds = (0,) + tuple(changepoints) + (x.size,)
    means = tuple(float(x[i:j].mean()) for i, j in zip(bounds[:-1], bounds[1:]))
    data_cost = float(sum(_cost(stats.s1, stats.s2, i, j)
                          for i, j in zip(bounds[:-1], bounds[1:])))
    k = len(changepoints)
    return Segmentation(tuple(int(t) for t in changepoints), means, data_cost,
                        data_cost + lam * k, lam)


def _backtrack(last):
    cps = []
    j = last.size - 1
    while j > 0:
        i = int(last[j])
        if i > 0:
            cps.append(i)
        j = i
    return cps[::-1]


def opart(values, lam: float) -> Segmentation:
    """Globally optimal segmentation by the quadratic-time dynamic program."""
    x, lam = _check_inputs(values, lam)
    stats = CumulativeStats.from_values(x)
    _, last = _opart_kernel(stats.s1, stats.s2, lam)
    return _assemble(x, stats, _backtrack(last), lam)


def pelt(values, lam: float) -> Segmentation:
    """Same optimum as :func:`opart`, with PELT candidate pruning."""
    x, lam = _check_inputs(values, lam)
    stats = CumulativeStats.from_values(x)
    _, last = _pelt_kernel(stats.s1, stats.s2, lam)
    return _assemble(x, stats, _backtrack(last), lam)


def _two_pass_cost(x):
    return float(((x - x.mean()) ** 2).sum())


def brute_force_segment(values, lam: float) -> Segmentation:
    """Exhaustive search over all changepoint subsets (test oracle, N <= 16).

    Segment costs are computed directly, not from prefix sums. Ties prefer
    fewer changepoints, then the lexicographically smallest set.
    """
    x, lam = _check_inputs(values, lam)
    n = x.size
    if n > BRUTE_FORCE_MAX_N:
        raise ValueError(f"brute force limited to N <= {BRUTE_FORCE_MAX_N}, got {n}")
    seg = {(i, j): _two_pass_cost(x[i:j]) for i in range(n) for j in range(i + 1, n + 1)}
    best = None
    for k in range(n):
        for cps in itertools.combinations(range(1, n), k):
            bounds = (0,) + cps + (n,)
            cost = sum(seg[i, j] for i, j in zip(bounds[:-1], bounds[1:]))
            total = cost + lam * k
            if best is None or total < best[0]:
                best = (total, cps, cost)
    total, cps, cost = best
    means = tuple(float(x[i:j].mean()) for i, j in zip((0,) + cps, cps + (n,)))
    return Segmentation(tuple(cps), means, cost, total, lam)
