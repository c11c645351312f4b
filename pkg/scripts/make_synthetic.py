"""Write the planted-shift benchmark as sequences.csv, labels.csv and an experiment config."""

import argparse
from pathlib import Path

from penaltylearn.data import write_labels, write_sequences
from penaltylearn.synth import make_benchmark

CONFIG = """\
name = "synthetic"
sequences = "sequences.csv"
labels = "labels.csv"
n_folds = 4
seed = {seed}
inner_folds = 3
output_dir = "results"

[loss]
margin = 0.0
power = 2

[train]
max_iter = 1000

[[models]]
name = "bic"
kind = "bic"

[[models]]
name = "constant"
kind = "constant"

[[models]]
name = "linear"
kind = "linear"
grid = {{ l1 = "auto" }}

[[models]]
name = "gru"
kind = "gru"
grid = {{ layers = [1], hidden = [8], window = [1], stat = ["mean"], log1p = [false] }}
"""


def write_benchmark(out: Path, n_sequences: int = 200, seed: int = 0) -> Path:
    out.mkdir(parents=True, exist_ok=True)
    ds = make_benchmark(n_sequences, seed=seed)
    write_sequences(ds, out / "sequences.csv")
    write_labels(ds, out / "labels.csv")
    cfg = out / "exp.toml"
    cfg.write_text(CONFIG.format(seed=seed))
    return cfg


if __name__ == "__main__":
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("out", type=Path)
    ap.add_argument("--n", type=int, default=200)
    ap.add_argument("--seed", type=int, default=0)
    a = ap.parse_args()
    print(write_benchmark(a.out, a.n, a.seed))
