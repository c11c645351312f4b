"""Synthetic labeled sequences with planted Gaussian mean shifts."""

from __future__ import annotations

import numpy as np

from .data import Dataset, LabelRegion, Sequence

MIN_SEGMENT = 15


def planted_sequence(rng: np.random.Generator, length: int, n_shifts: int, noise_sd: float,
                     shift_range=(2.0, 5.0), min_segment: int = MIN_SEGMENT):
    """Values and true changepoints; shift sizes are multiples of the noise sd."""
    if (n_shifts + 1) * min_segment > length:
        raise ValueError(f"{n_shifts} shifts with segments >= {min_segment} do not fit in {length} points")
    while True:
        cps = np.sort(rng.choice(np.arange(min_segment, length - min_segment + 1),
                                 size=n_shifts, replace=False))
        bounds = np.concatenate(([0], cps, [length]))
        if np.all(np.diff(bounds) >= min_segment):
            break
    means = np.zeros(n_shifts + 1)
    for k in range(1, n_shifts + 1):
        means[k] = means[k - 1] + rng.choice([-1, 1]) * rng.uniform(*shift_range) * noise_sd
    signal = np.repeat(means, np.diff(bounds))
    values = signal + rng.normal(scale=noise_sd, size=length)
    return values, [int(c) for c in cps]


def labels_from_truth(rng: np.random.Generator, length: int, cps, min_segment: int = MIN_SEGMENT):
    """One positive region around each planted change, one negative inside each segment."""
    regions = []
    bounds = [0, *cps, length]
    half = max(2, min_segment // 3)
    for t in cps:
        w = int(rng.integers(2, half + 1))
        regions.append(LabelRegion(t - w + 1, t + w, 1, 1))
    for a, b in zip(bounds[:-1], bounds[1:]):
        # keep clear of the positive windows on either side
        lo, hi = a + half + 1, b - half
        if hi - lo >= 4:
            start = int(rng.integers(lo, lo + (hi - lo) // 3 + 1))
            end = int(rng.integers(start + 2, hi + 1))
            regions.append(LabelRegion(start, end, 0, 0))
    return sorted(regions, key=lambda r: r.start)


def make_benchmark(n_sequences: int = 200, seed: int = 0, length_range=(50, 500),
                   shifts_range=(1, 3), noise_sd_range=(0.1, 10.0)) -> Dataset:
    """Sequences whose best penalty scales with their (log-uniform) noise variance."""
    rng = np.random.default_rng(seed)
    seqs, labels = [], {}
    width = len(str(n_sequences - 1))
    for k in range(n_sequences):
        length = int(rng.integers(length_range[0], length_range[1] + 1))
        n_shifts = int(rng.integers(shifts_range[0], shifts_range[1] + 1))
        # short sequences cannot hold every shift at the minimum segment length
        n_shifts = min(n_shifts, length // MIN_SEGMENT - 1)
        sd = float(np.exp(rng.uniform(np.log(noise_sd_range[0]), np.log(noise_sd_range[1]))))
        values, cps = planted_sequence(rng, length, n_shifts, sd)
        seq_id = f"seq{k:0{width}d}"
        seqs.append(Sequence(seq_id, values))
        labels[seq_id] = labels_from_truth(rng, length, cps)
    return Dataset(seqs, labels)
