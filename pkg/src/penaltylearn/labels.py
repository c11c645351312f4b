"""Scoring changepoints against annotated label regions."""

from __future__ import annotations

import bisect
from typing import Iterable, Sequence

from .data import ErrorCount, LabelRegion


def count_errors(changepoints: Sequence[int], labels: Iterable[LabelRegion]) -> ErrorCount:
    """One outcome per label.

    A changepoint ``t`` falls inside a label iff ``start <= t <= end - 1``,
    i.e. both ``t`` and ``t + 1`` lie in the region.
    """
    cps = list(changepoints)
    if any(b <= a for a, b in zip(cps, cps[1:])):
        raise ValueError("changepoints must be strictly increasing")
    tp = tn = fp = fn = 0
    for r in labels:
        c = bisect.bisect_right(cps, r.end - 1) - bisect.bisect_left(cps, r.start)
        if c > r.max_changes:
            fp += 1
        elif c < r.min_changes:
            fn += 1
        elif r.min_changes >= 1:
            tp += 1
        else:
            tn += 1
    return ErrorCount(tp, tn, fp, fn)


def accuracy(counts: Iterable[ErrorCount]) -> float:
    total = sum(counts, ErrorCount())
    if total.total == 0:
        raise ValueError("accuracy needs at least one label")
    return (total.tp + total.tn) / total.total
