"""Domain types and CSV ingestion for labeled sequence datasets.

Positions are 1-based and inclusive throughout. A changepoint at ``t`` sits
between positions ``t`` and ``t + 1``.
"""

from __future__ import annotations

import csv
import math
import warnings
from dataclasses import dataclass, field
from pathlib import Path
from typing import Iterable, Mapping

import numpy as np


class DataFormatError(ValueError):
    """Raised when an input file or a constructed object violates its contract."""


@dataclass(frozen=True)
class Sequence:
    id: str
    values: np.ndarray

    def __post_init__(self):
        if not self.id:
            raise DataFormatError("sequence id must be nonempty")
        values = np.asarray(self.values, dtype=float)
        if values.ndim != 1 or values.size == 0:
            raise DataFormatError(f"sequence {self.id!r} must hold at least one value")
        if not np.all(np.isfinite(values)):
            raise DataFormatError(f"sequence {self.id!r} has non-finite values")
        values.setflags(write=False)
        object.__setattr__(self, "values", values)

    def __len__(self):
        return self.values.size

    def __eq__(self, other):
        if not isinstance(other, Sequence):
            return NotImplemented
        return self.id == other.id and np.array_equal(self.values, other.values)

    __hash__ = None


@dataclass(frozen=True)
class LabelRegion:
    start: int
    end: int
    min_changes: int
    max_changes: float  # int or math.inf

    def __post_init__(self):
        if self.start < 1 or self.end < self.start:
            raise DataFormatError(f"bad label range [{self.start}, {self.end}]")
        if self.min_changes < 0 or self.max_changes < self.min_changes:
            raise DataFormatError(
                f"bad label bounds min={self.min_changes} max={self.max_changes}")

    @property
    def positive(self) -> bool:
        return self.min_changes >= 1


@dataclass(frozen=True)
class TargetInterval:
    """Target range for ``log(lambda)``; ends may be infinite."""

    lo: float
    hi: float

    def __post_init__(self):
        if math.isnan(self.lo) or math.isnan(self.hi) or self.lo > self.hi:
            raise DataFormatError(f"bad target interval ({self.lo}, {self.hi})")

    @property
    def kind(self) -> str:
        lo_fin, hi_fin = math.isfinite(self.lo), math.isfinite(self.hi)
        if lo_fin and hi_fin:
            return "uncensored" if self.lo == self.hi else "interval"
        if hi_fin:
            return "left"
        if lo_fin:
            return "right"
        return "unbounded"

    def contains(self, x: float) -> bool:
        return self.lo <= x <= self.hi


@dataclass(frozen=True)
class ErrorCount:
    tp: int = 0
    tn: int = 0
    fp: int = 0
    fn: int = 0

    def __add__(self, other: "ErrorCount") -> "ErrorCount":
        return ErrorCount(self.tp + other.tp, self.tn + other.tn,
                          self.fp + other.fp, self.fn + other.fn)

    @property
    def total(self) -> int:
        return self.tp + self.tn + self.fp + self.fn

    @property
    def errors(self) -> int:
        return self.fp + self.fn


@dataclass
class Dataset:
    sequences: list[Sequence] = field(default_factory=list)
    labels: dict[str, list[LabelRegion]] = field(default_factory=dict)
    targets: dict[str, TargetInterval] | None = None

    def __post_init__(self):
        seen = set()
        for s in self.sequences:
            if s.id in seen:
                raise DataFormatError(f"duplicate sequence id {s.id!r}")
            seen.add(s.id)

    @property
    def ids(self) -> list[str]:
        return [s.id for s in self.sequences]

    @property
    def labeled_ids(self) -> list[str]:
        return [s.id for s in self.sequences if self.labels.get(s.id)]

    @property
    def size(self) -> int:
        return len(self.labeled_ids)

    def get(self, seq_id: str) -> Sequence:
        for s in self.sequences:
            if s.id == seq_id:
                return s
        raise KeyError(seq_id)

    def subset(self, ids: Iterable[str]) -> "Dataset":
        keep = set(ids)
        targets = None
        if self.targets is not None:
            targets = {k: v for k, v in self.targets.items() if k in keep}
        return Dataset(
            sequences=[s for s in self.sequences if s.id in keep],
            labels={k: v for k, v in self.labels.items() if k in keep},
            targets=targets,
        )


def _open_csv(path):
    fh = open(path, newline="", encoding="utf-8")
    return fh, csv.reader(fh)


def _check_header(header, expected, path):
    if header is None or [h.strip() for h in header] != expected:
        raise DataFormatError(f"{path}: expected header {','.join(expected)!r}, got {header!r}")


def _parse_float(text, path, lineno):
    try:
        x = float(text)
    except ValueError:
        raise DataFormatError(f"{path}: line {lineno}: cannot parse value {text!r}") from None
    if not math.isfinite(x):
        raise DataFormatError(f"{path}: line {lineno}: non-finite value {text!r}")
    return x


def load_sequences(path) -> Dataset:
    """Read ``sequenceID,value`` rows; values keep file order within each id."""
    fh, reader = _open_csv(path)
    with fh:
        _check_header(next(reader, None), ["sequenceID", "value"], path)
        grouped: dict[str, list[float]] = {}
        for lineno, row in enumerate(reader, start=2):
            if not row:
                continue
            if len(row) != 2:
                raise DataFormatError(f"{path}: line {lineno}: expected 2 fields, got {len(row)}")
            seq_id = row[0].strip()
            if not seq_id:
                raise DataFormatError(f"{path}: line {lineno}: empty sequence id")
            grouped.setdefault(seq_id, []).append(_parse_float(row[1], path, lineno))
    return Dataset(sequences=[Sequence(k, np.array(v)) for k, v in grouped.items()])


def _parse_count(text, path, lineno, allow_inf=False):
    text = text.strip()
    if allow_inf and text.lower() in ("inf", "+inf", "infinity"):
        return math.inf
    try:
        n = int(text)
    except ValueError:
        raise DataFormatError(f"{path}: line {lineno}: bad integer {text!r}") from None
    return n


def validate_labels(labels: Mapping[str, list[LabelRegion]], lengths: Mapping[str, int]):
    """Check ownership, range and overlap; returns labels sorted by start."""
    out = {}
    for seq_id, regions in labels.items():
        if seq_id not in lengths:
            raise DataFormatError(f"label refers to unknown sequence {seq_id!r}")
        n = lengths[seq_id]
        regions = sorted(regions, key=lambda r: r.start)
        for r in regions:
            if r.end > n:
                raise DataFormatError(
                    f"label [{r.start}, {r.end}] exceeds length {n} of {seq_id!r}")
            if r.start == r.end:
                warnings.warn(f"label [{r.start}, {r.end}] on {seq_id!r} has length 1 "
                              "and can never contain a changepoint", stacklevel=2)
        for a, b in zip(regions, regions[1:]):
            if b.start <= a.end:
                raise DataFormatError(
                    f"overlapping labels [{a.start}, {a.end}] and [{b.start}, {b.end}] on {seq_id!r}")
        out[seq_id] = regions
    return out


def load_labels(path, dataset: Dataset) -> Dataset:
    fh, reader = _open_csv(path)
    with fh:
        _check_header(next(reader, None),
                      ["sequenceID", "start", "end", "min_changes", "max_changes"], path)
        raw: dict[str, list[LabelRegion]] = {}
        for lineno, row in enumerate(reader, start=2):
            if not row:
                continue
            if len(row) != 5:
                raise DataFormatError(f"{path}: line {lineno}: expected 5 fields, got {len(row)}")
            seq_id = row[0].strip()
            try:
                region = LabelRegion(
                    start=_parse_count(row[1], path, lineno),
                    end=_parse_count(row[2], path, lineno),
                    min_changes=_parse_count(row[3], path, lineno),
                    max_changes=_parse_count(row[4], path, lineno, allow_inf=True),
                )
            except DataFormatError as e:
                raise DataFormatError(f"{path}: line {lineno}: {e}") from None
            raw.setdefault(seq_id, []).append(region)
    lengths = {s.id: len(s) for s in dataset.sequences}
    labels = validate_labels(raw, lengths)
    return Dataset(sequences=list(dataset.sequences), labels=labels, targets=dataset.targets)


def _fmt(x: float) -> str:
    if math.isinf(x):
        return "inf" if x > 0 else "-inf"
    return repr(float(x))


def write_sequences(dataset: Dataset, path):
    with open(path, "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["sequenceID", "value"])
        for s in dataset.sequences:
            for v in s.values:
                w.writerow([s.id, _fmt(v)])


def write_labels(dataset: Dataset, path):
    with open(path, "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["sequenceID", "start", "end", "min_changes", "max_changes"])
        for s in dataset.sequences:
            for r in dataset.labels.get(s.id, []):
                mx = "inf" if math.isinf(r.max_changes) else str(int(r.max_changes))
                w.writerow([s.id, r.start, r.end, r.min_changes, mx])


def write_targets(targets: Mapping[str, TargetInterval], path):
    with open(path, "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["sequenceID", "min_log_lambda", "max_log_lambda"])
        for seq_id, t in targets.items():
            w.writerow([seq_id, _fmt(t.lo), _fmt(t.hi)])


def load_targets(path) -> dict[str, TargetInterval]:
    fh, reader = _open_csv(path)
    out = {}
    with fh:
        _check_header(next(reader, None), ["sequenceID", "min_log_lambda", "max_log_lambda"], path)
        for lineno, row in enumerate(reader, start=2):
            if not row:
                continue
            try:
                out[row[0]] = TargetInterval(float(row[1]), float(row[2]))
            except (ValueError, IndexError):
                raise DataFormatError(f"{path}: line {lineno}: bad target row {row!r}") from None
    return out


# Folds -----------------------------------------------------------------------

def generate_folds(dataset_or_ids, n_folds: int, seed: int) -> dict[str, int]:
    """Shuffle sorted ids with PCG64(seed) and deal them round-robin into folds 1..F."""
    if isinstance(dataset_or_ids, Dataset):
        ids = dataset_or_ids.labeled_ids or dataset_or_ids.ids
    else:
        ids = list(dataset_or_ids)
    ids = sorted(ids)
    if n_folds < 2:
        raise ValueError("n_folds must be at least 2")
    if n_folds > len(ids):
        raise ValueError(f"n_folds={n_folds} exceeds the {len(ids)} available sequences")
    rng = np.random.Generator(np.random.PCG64(seed))
    order = rng.permutation(len(ids))
    return {ids[j]: rank % n_folds + 1 for rank, j in enumerate(order)}


def write_folds(folds: Mapping[str, int], path):
    with open(path, "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["sequenceID", "fold"])
        for seq_id in sorted(folds):
            w.writerow([seq_id, folds[seq_id]])


def load_folds(path) -> dict[str, int]:
    fh, reader = _open_csv(path)
    out = {}
    with fh:
        _check_header(next(reader, None), ["sequenceID", "fold"], path)
        for lineno, row in enumerate(reader, start=2):
            if not row:
                continue
            try:
                out[row[0]] = int(row[1])
            except (ValueError, IndexError):
                raise DataFormatError(f"{path}: line {lineno}: bad fold row {row!r}") from None
    return out


def read_dataset(sequences_path, labels_path=None) -> Dataset:
    ds = load_sequences(sequences_path)
    if labels_path is not None and Path(labels_path).exists():
        ds = load_labels(labels_path, ds)
    return ds
