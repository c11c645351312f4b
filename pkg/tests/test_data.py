import math
import warnings

import numpy as np
import pytest
from hypothesis import given, strategies as st

from penaltylearn.data import (DataFormatError, Dataset, ErrorCount, LabelRegion, Sequence,
                               TargetInterval, generate_folds, load_folds, load_labels,
                               load_sequences, load_targets, read_dataset, write_folds,
                               write_labels, write_sequences, write_targets)

from conftest import write_csv


def test_load_sequences_groups_by_id(tmp_path):
    p = write_csv(tmp_path / "s.csv", ["sequenceID", "value"], [("s1", 1.0), ("s1", 2.0), ("s2", 5.0)])
    ds = load_sequences(p)
    assert ds.ids == ["s1", "s2"]
    assert [len(s) for s in ds.sequences] == [2, 1]
    assert list(ds.get("s1").values) == [1.0, 2.0]


def test_load_sequences_empty_body(tmp_path):
    p = write_csv(tmp_path / "s.csv", ["sequenceID", "value"], [])
    assert load_sequences(p).sequences == []


def test_load_sequences_parse_error_names_line(tmp_path):
    p = write_csv(tmp_path / "s.csv", ["sequenceID", "value"], [("s1", "abc")])
    with pytest.raises(DataFormatError, match="line 2"):
        load_sequences(p)


@pytest.mark.parametrize("rows,match", [
    ([("s1", "inf")], "non-finite"),
    ([("", 1.0)], "empty sequence id"),
    ([("s1", 1.0, 2.0)], "expected 2 fields"),
])
def test_load_sequences_rejects(tmp_path, rows, match):
    p = write_csv(tmp_path / "s.csv", ["sequenceID", "value"], rows)
    with pytest.raises(DataFormatError, match=match):
        load_sequences(p)


def test_load_sequences_missing_header(tmp_path):
    p = tmp_path / "s.csv"
    p.write_text("s1,1.0\n")
    with pytest.raises(DataFormatError, match="header"):
        load_sequences(p)


def _one_seq(tmp_path, n=4):
    p = write_csv(tmp_path / "s.csv", ["sequenceID", "value"], [("s1", float(i)) for i in range(n)])
    return load_sequences(p)


LABEL_HEADER = ["sequenceID", "start", "end", "min_changes", "max_changes"]


def test_load_labels_positive(tmp_path):
    ds = _one_seq(tmp_path)
    p = write_csv(tmp_path / "l.csv", LABEL_HEADER, [("s1", 2, 3, 1, 1)])
    (lab,) = load_labels(p, ds).labels["s1"]
    assert lab == LabelRegion(2, 3, 1, 1) and lab.positive


def test_load_labels_inf_max(tmp_path):
    ds = _one_seq(tmp_path)
    p = write_csv(tmp_path / "l.csv", LABEL_HEADER, [("s1", 2, 3, 1, "inf")])
    (lab,) = load_labels(p, ds).labels["s1"]
    assert lab.max_changes == math.inf


@pytest.mark.parametrize("rows,match", [
    ([("s1", 1, 4, 0, 0), ("s1", 3, 4, 1, 1)], "overlapping"),
    ([("s9", 1, 2, 0, 0)], "unknown sequence"),
    ([("s1", 3, 2, 0, 0)], "bad label range"),
    ([("s1", 1, 5, 0, 0)], "exceeds length"),
    ([("s1", 1, 2, 2, 1)], "bad label bounds"),
    ([("s1", 1, 2, "x", 1)], "bad integer"),
])
def test_load_labels_rejects(tmp_path, rows, match):
    ds = _one_seq(tmp_path)
    p = write_csv(tmp_path / "l.csv", LABEL_HEADER, rows)
    with pytest.raises(DataFormatError, match=match):
        load_labels(p, ds)


def test_labels_sorted_by_start(tmp_path):
    ds = _one_seq(tmp_path, 10)
    p = write_csv(tmp_path / "l.csv", LABEL_HEADER, [("s1", 6, 8, 0, 0), ("s1", 1, 3, 1, 1)])
    assert [r.start for r in load_labels(p, ds).labels["s1"]] == [1, 6]


def test_length_one_label_warns(tmp_path):
    ds = _one_seq(tmp_path)
    p = write_csv(tmp_path / "l.csv", LABEL_HEADER, [("s1", 2, 2, 0, 0)])
    with pytest.warns(UserWarning, match="length 1"):
        load_labels(p, ds)


def test_generate_folds_deterministic_and_balanced():
    ids = [f"id{k}" for k in range(6)]
    a = generate_folds(ids, 3, seed=7)
    assert a == generate_folds(list(reversed(ids)), 3, seed=7)
    assert sorted(np.bincount(list(a.values()))[1:]) == [2, 2, 2]
    sizes = np.bincount(list(generate_folds(ids[:5], 2, seed=0).values()))[1:]
    assert sorted(sizes) == [2, 3]


def test_generate_folds_errors():
    with pytest.raises(ValueError):
        generate_folds(["a", "b"], 3, seed=0)
    with pytest.raises(ValueError):
        generate_folds(["a", "b"], 1, seed=0)


@given(n=st.integers(2, 60), f=st.integers(2, 8), seed=st.integers(0, 2**32 - 1))
def test_fold_sizes_differ_by_at_most_one(n, f, seed):
    if f > n:
        return
    folds = generate_folds([f"x{k}" for k in range(n)], f, seed)
    sizes = np.bincount(list(folds.values()), minlength=f + 1)[1:]
    assert sizes.min() >= 1 and sizes.max() - sizes.min() <= 1


finite = st.floats(-1e6, 1e6, allow_nan=False, allow_infinity=False)


@given(seqs=st.lists(st.lists(finite, min_size=4, max_size=12), min_size=1, max_size=5))
def test_dataset_round_trip(tmp_path_factory, seqs):
    tmp = tmp_path_factory.mktemp("rt")
    sequences = [Sequence(f"s{k}", np.array(v)) for k, v in enumerate(seqs)]
    labels = {s.id: [LabelRegion(1, 2, 0, 0), LabelRegion(3, len(s), 1, math.inf)] for s in sequences}
    ds = Dataset(sequences, labels)
    write_sequences(ds, tmp / "s.csv")
    write_labels(ds, tmp / "l.csv")
    back = read_dataset(tmp / "s.csv", tmp / "l.csv")
    assert back.sequences == ds.sequences
    assert back.labels == ds.labels


def test_targets_and_folds_round_trip(tmp_path):
    targets = {"a": TargetInterval(-math.inf, 2.5), "b": TargetInterval(0.1, math.inf),
               "c": TargetInterval(-1.0, 1 / 3)}
    write_targets(targets, tmp_path / "t.csv")
    assert load_targets(tmp_path / "t.csv") == targets
    assert "-inf" in (tmp_path / "t.csv").read_text()
    folds = generate_folds(list("abcdef"), 3, 1)
    write_folds(folds, tmp_path / "f.csv")
    assert load_folds(tmp_path / "f.csv") == folds


def test_target_kinds():
    assert TargetInterval(1, 2).kind == "interval"
    assert TargetInterval(-math.inf, 2).kind == "left"
    assert TargetInterval(1, math.inf).kind == "right"
    assert TargetInterval(1, 1).kind == "uncensored"
    assert TargetInterval(-math.inf, math.inf).kind == "unbounded"
    with pytest.raises(DataFormatError):
        TargetInterval(2, 1)


def test_sequence_invariants():
    with pytest.raises(DataFormatError):
        Sequence("a", np.array([]))
    with pytest.raises(DataFormatError):
        Sequence("a", np.array([1.0, np.nan]))
    with pytest.raises(DataFormatError):
        Sequence("", np.array([1.0]))
    with pytest.raises(DataFormatError):
        Dataset([Sequence("a", [1.0]), Sequence("a", [2.0])])


def test_error_count_sum():
    assert ErrorCount(1, 2, 3, 4) + ErrorCount(1, 1, 1, 1) == ErrorCount(2, 3, 4, 5)
    assert ErrorCount(1, 2, 3, 4).total == 10 and ErrorCount(1, 2, 3, 4).errors == 7


@given(start=st.integers(-2, 10), end=st.integers(-2, 10), lo=st.integers(-1, 3),
       hi=st.one_of(st.integers(-1, 3), st.just(math.inf)))
def test_label_region_invariants(start, end, lo, hi):
    ok = 1 <= start <= end and 0 <= lo <= hi
    if ok:
        r = LabelRegion(start, end, lo, hi)
        assert r.positive == (lo >= 1)
    else:
        with pytest.raises(DataFormatError):
            LabelRegion(start, end, lo, hi)


label_row = st.tuples(st.integers(-1, 12), st.integers(-1, 12), st.integers(-1, 3),
                      st.one_of(st.integers(-1, 3), st.just("inf")))


@given(rows=st.lists(label_row, max_size=4))
def test_loaded_labels_satisfy_invariants(tmp_path_factory, rows):
    tmp = tmp_path_factory.mktemp("lab")
    ds = load_sequences(write_csv(tmp / "s.csv", ["sequenceID", "value"], [("s1", float(i)) for i in range(10)]))
    p = write_csv(tmp / "l.csv", LABEL_HEADER, [("s1", *r) for r in rows])
    try:
        with warnings.catch_warnings():
            warnings.simplefilter("ignore")
            loaded = load_labels(p, ds).labels.get("s1", [])
    except DataFormatError:
        return
    for r in loaded:
        assert 1 <= r.start <= r.end <= 10 and 0 <= r.min_changes <= r.max_changes
    for a, b in zip(loaded, loaded[1:]):
        assert a.end < b.start


def test_benchmark_short_sequences_fit_their_shifts():
    from penaltylearn.synth import make_benchmark, planted_sequence
    ds = make_benchmark(40, seed=1, length_range=(30, 60))
    assert all(len(s) >= 30 for s in ds.sequences)
    with pytest.raises(ValueError):
        planted_sequence(np.random.default_rng(0), 50, 3, 1.0)
