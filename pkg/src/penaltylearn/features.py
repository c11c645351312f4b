"""Hand-built sequence features and sequence preprocessing (pooling, log1p, scaling)."""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Sequence as Seq

import numpy as np

from .data import Dataset, Sequence

SOURCES = ("identity", "residual", "difference")
VALUE_TRANSFORMS = ("identity", "absolute", "square")
STATISTICS = ("sum", "mean", "sd", "q0", "q25", "q50", "q75", "q100")
FEATURE_TRANSFORMS = ("identity", "sqrt", "log", "loglog", "square")


def _base_names() -> list[str]:
    names = [f"{src}.{tr}.{st}" for src in SOURCES for tr in VALUE_TRANSFORMS for st in STATISTICS]
    return names + ["length"]


BASE_NAMES: tuple[str, ...] = tuple(_base_names())
FEATURE_NAMES: tuple[str, ...] = tuple(
    name if ft == "identity" else f"{ft}({name})"
    for ft in FEATURE_TRANSFORMS for name in BASE_NAMES
)
N_FEATURES = len(FEATURE_NAMES)  # 5 * 73 = 365


@dataclass(frozen=True)
class FeatureVector:
    names: tuple[str, ...]
    values: np.ndarray
    valid: np.ndarray

    def __getitem__(self, name: str) -> float:
        k = self.names.index(name)
        return float(self.values[k]) if self.valid[k] else math.nan


def _stats(v: np.ndarray) -> list[float]:
    q = np.quantile(v, [0.0, 0.25, 0.5, 0.75, 1.0])  # linear interpolation
    return [float(v.sum()), float(v.mean()), float(v.std())] + [float(a) for a in q]


def base_features(values) -> np.ndarray:
    """The 73 untransformed features in ``BASE_NAMES`` order."""
    d = np.asarray(values, dtype=float)
    if d.size < 2:
        raise ValueError("feature extraction needs at least 2 values")
    sources = {"identity": d, "residual": d - d.mean(), "difference": np.diff(d)}
    out = []
    for src in SOURCES:
        v = sources[src]
        for tr in VALUE_TRANSFORMS:
            w = v if tr == "identity" else np.abs(v) if tr == "absolute" else v * v
            out.extend(_stats(w))
    out.append(float(d.size))
    return np.array(out)


def _transform(kind: str, z: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    with np.errstate(all="ignore"):
        if kind == "identity":
            return z.copy(), np.ones(z.shape, bool)
        if kind == "sqrt":
            return np.sqrt(z), z >= 0
        if kind == "log":
            return np.log(z), z > 0
        if kind == "loglog":
            ok = z > 1
            return np.log(np.log(np.where(ok, z, math.e))), ok
        if kind == "square":
            return z * z, np.ones(z.shape, bool)
    raise ValueError(kind)


def extract_features(values) -> FeatureVector:
    base = base_features(values)
    vals, valid = [], []
    for ft in FEATURE_TRANSFORMS:
        v, ok = _transform(ft, base)
        ok = ok & np.isfinite(v)
        vals.append(np.where(ok, v, np.nan))
        valid.append(ok)
    return FeatureVector(FEATURE_NAMES, np.concatenate(vals), np.concatenate(valid))


def feature_matrix(vectors: Seq[FeatureVector]) -> tuple[np.ndarray, np.ndarray]:
    """Stack vectors into (values, valid) arrays of shape (S, 365)."""
    return (np.vstack([f.values for f in vectors]),
            np.vstack([f.valid for f in vectors]))


# Preprocessing ---------------------------------------------------------------

def pool(values, window: int, stat: str = "mean") -> np.ndarray:
    """Non-overlapping windows, left to right; a short final window is kept."""
    if window < 1:
        raise ValueError("window must be >= 1")
    if stat not in ("mean", "median"):
        raise ValueError(f"unknown pooling statistic {stat!r}")
    x = np.asarray(values, dtype=float)
    if window == 1:
        return x.copy()
    reduce = np.mean if stat == "mean" else np.median
    return np.array([reduce(x[i:i + window]) for i in range(0, x.size, window)])


@dataclass(frozen=True)
class NormalizationStats:
    mean: float
    sd: float

    def __post_init__(self):
        if not self.sd > 0:
            raise ValueError("normalization needs a positive standard deviation")


def fit_normalization(arrays: Seq[np.ndarray]) -> NormalizationStats:
    allv = np.concatenate([np.asarray(a, float) for a in arrays])
    sd = float(allv.std())
    if not sd > 0:
        raise ValueError("all values are identical; cannot normalize (sd = 0)")
    return NormalizationStats(float(allv.mean()), sd)


def log1p_normalize(dataset: Dataset, stats: NormalizationStats | None = None,
                    log1p: bool = True) -> tuple[Dataset, NormalizationStats]:
    """``z -> log(z + 1)`` then standardize with pooled dataset statistics.

    Pass ``stats`` from the training split to transform a test split the same way.
    """
    transformed = []
    for s in dataset.sequences:
        v = s.values
        if log1p:
            if np.any(v <= -1):
                raise ValueError(f"sequence {s.id!r} has values <= -1; log1p undefined")
            v = np.log1p(v)
        transformed.append(v)
    if stats is None:
        stats = fit_normalization(transformed)
    seqs = [Sequence(s.id, (v - stats.mean) / stats.sd)
            for s, v in zip(dataset.sequences, transformed)]
    return Dataset(seqs, dict(dataset.labels), dataset.targets), stats
