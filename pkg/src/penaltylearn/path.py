"""Exact penalty path and per-sequence target intervals.

The map from penalty to optimal segmentation is piecewise constant. Each
optimal model is a line ``data_cost + lam * K`` in ``lam``, and the path is the
lower envelope of those lines. Models are discovered by intersecting the
envelopes of two known models and solving at the crossing, recursively.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, replace
from typing import NamedTuple, Sequence

import numpy as np

from .data import ErrorCount, LabelRegion, TargetInterval
from .labels import count_errors
from .segment import CumulativeStats, opart, segment_cost, solve_compact

DEFAULT_LAMBDA_MIN = 1e-6
DEFAULT_LAMBDA_MAX = 1e12


@dataclass(frozen=True)
class PathSegmentRecord:
    lambda_lo: float
    lambda_hi: float
    n_changes: int
    data_cost: float
    changepoints: tuple[int, ...]
    errors: ErrorCount | None = None

    def interior(self, frac: float) -> float:
        """A penalty strictly inside the record, ``frac`` in (0, 1) along log scale."""
        lo, hi = self.lambda_lo, self.lambda_hi
        if lo == 0 and math.isinf(hi):
            return math.exp(-20 + 40 * frac)
        if lo == 0:
            return hi * math.exp(-20 * (1 - frac))
        if math.isinf(hi):
            return lo * math.exp(20 * frac)
        return math.exp(math.log(lo) + frac * (math.log(hi) - math.log(lo)))


class _Model(NamedTuple):
    changepoints: tuple[int, ...]
    data_cost: float

    @property
    def n_changes(self) -> int:
        return len(self.changepoints)


def _crossing(a: _Model, b: _Model) -> float:
    # penalty at which a (more changes) and b (fewer) have equal penalized cost
    return (b.data_cost - a.data_cost) / (a.n_changes - b.n_changes)


def _lower_envelope(models: list[_Model]) -> list[_Model]:
    """Keep models that are optimal on an interval of positive length."""
    models = sorted(models, key=lambda m: (-m.n_changes, m.data_cost))
    # for each K keep the cheapest, and drop models not cheaper than one with fewer changes
    by_k: dict[int, _Model] = {}
    for m in models:
        by_k.setdefault(m.n_changes, m)
    hull: list[_Model] = []
    for m in sorted(by_k.values(), key=lambda m: -m.n_changes):
        while hull and hull[-1].data_cost >= m.data_cost:
            hull.pop()
        while len(hull) >= 2 and _crossing(hull[-2], hull[-1]) >= _crossing(hull[-1], m):
            hull.pop()
        hull.append(m)
    return hull


def penalty_path(values, lambda_min: float = DEFAULT_LAMBDA_MIN,
                 lambda_max: float = DEFAULT_LAMBDA_MAX) -> list[PathSegmentRecord]:
    """All optimal segmentations over ``lam`` in (0, inf), ordered by increasing penalty.

    The search starts from ``[lambda_min, lambda_max]`` and is widened down to
    ``lam = 0`` and up to a penalty above the unsegmented cost, where no
    changepoint can pay for itself.
    """
    if not (0 < lambda_min < lambda_max) or not math.isfinite(lambda_max):
        raise ValueError(f"need 0 < lambda_min < lambda_max < inf, got {lambda_min}, {lambda_max}")
    x = np.asarray(values, dtype=float)
    if x.ndim != 1 or x.size == 0 or not np.all(np.isfinite(x)):
        raise ValueError("values must be a nonempty finite 1-D sequence")
    stats = CumulativeStats.from_values(x)
    found: list[_Model] = []

    def solve(lam):
        # PELT returns the same optimum as OPART under the shared tie rule
        cps, cost = solve_compact(stats.s1, stats.s2, float(lam))
        m = _Model(tuple(int(t) for t in cps), float(cost))
        found.append(m)
        return m

    def explore(a: _Model, b: _Model):
        if a.n_changes <= b.n_changes:
            return
        lam = _crossing(a, b)
        if not lam > 0:
            return
        m = solve(lam)
        if not (b.n_changes < m.n_changes < a.n_changes):
            return
        level = a.data_cost + lam * a.n_changes
        if m.data_cost + lam * m.n_changes < level - 1e-12 * max(1.0, abs(level)):
            explore(a, m)
            explore(m, b)

    lo, hi = solve(lambda_min), solve(lambda_max)
    explore(lo, hi)
    bottom = solve(0.0)
    if bottom.n_changes != lo.n_changes:
        explore(bottom, lo)
    if hi.n_changes > 0:
        total = segment_cost(stats, 0, x.size)
        top = solve(max(2 * total + 1.0, 2 * lambda_max))
        explore(hi, top)

    hull = _lower_envelope(found)
    records = []
    for k, m in enumerate(hull):
        lam_lo = 0.0 if k == 0 else _crossing(hull[k - 1], m)
        lam_hi = math.inf if k == len(hull) - 1 else _crossing(m, hull[k + 1])
        records.append(PathSegmentRecord(lam_lo, lam_hi, m.n_changes, m.data_cost, m.changepoints))
    return records


def annotate_path(records: Sequence[PathSegmentRecord],
                  labels: Sequence[LabelRegion]) -> list[PathSegmentRecord]:
    return [replace(r, errors=count_errors(r.changepoints, labels)) for r in records]


def _log(lam):
    return -math.inf if lam == 0 else math.log(lam)


def _widest_min_run(errors: Sequence[int], bounds: Sequence[tuple[float, float]]):
    """Index range of the widest run achieving the minimum error; first wins ties."""
    best_err = min(errors)
    best = None
    k = 0
    while k < len(errors):
        if errors[k] != best_err:
            k += 1
            continue
        start = k
        while k + 1 < len(errors) and errors[k + 1] == best_err:
            k += 1
        lo, hi = bounds[start][0], bounds[k][1]
        width = hi - lo
        if best is None or width > best[0]:
            best = (width, lo, hi)
        k += 1
    return best


def target_interval(values, labels: Sequence[LabelRegion],
                    records: Sequence[PathSegmentRecord] | None = None) -> TargetInterval:
    """Widest log-penalty interval minimizing ``fp + fn`` over the labels."""
    if not labels:
        raise ValueError("target interval needs at least one label")
    if records is None:
        records = penalty_path(values)
    annotated = annotate_path(records, labels)
    errors = [r.errors.errors for r in annotated]
    bounds = [(_log(r.lambda_lo), _log(r.lambda_hi)) for r in annotated]
    _, lo, hi = _widest_min_run(errors, bounds)
    return TargetInterval(lo, hi)


def grid_oracle_target(values, labels: Sequence[LabelRegion], grid) -> TargetInterval:
    """Brute-force target on a sorted penalty grid: the widest min-error run of grid points."""
    grid = [float(g) for g in grid]
    if not grid:
        raise ValueError("grid must be nonempty")
    if any(g <= 0 for g in grid) or any(b <= a for a, b in zip(grid, grid[1:])):
        raise ValueError("grid must be positive and strictly increasing")
    if not labels:
        raise ValueError("target interval needs at least one label")
    x = np.asarray(values, dtype=float)
    errors = [count_errors(opart(x, g).changepoints, labels).errors for g in grid]
    bounds = [(math.log(g), math.log(g)) for g in grid]
    _, lo, hi = _widest_min_run(errors, bounds)
    return TargetInterval(lo, hi)


def path_errors_at(records: Sequence[PathSegmentRecord], lam: float) -> PathSegmentRecord:
    """Record owning ``lam``; a breakpoint belongs to the higher-penalty record."""
    for r in records:
        if r.lambda_lo <= lam < r.lambda_hi:
            return r
    return records[-1]
