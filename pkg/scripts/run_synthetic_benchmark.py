"""Generate the synthetic benchmark and run the 4-fold experiment on it.

    python scripts/run_synthetic_benchmark.py /tmp/synth
"""

import argparse
import sys
import time
from pathlib import Path

sys.path.insert(0, str(Path(__file__).resolve().parent))

from make_synthetic import write_benchmark  # noqa: E402

from penaltylearn.cli import main  # noqa: E402

if __name__ == "__main__":
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("out", type=Path)
    ap.add_argument("--n", type=int, default=200)
    ap.add_argument("--seed", type=int, default=0)
    ap.add_argument("--threads", type=int, default=1)
    a = ap.parse_args()
    cfg = write_benchmark(a.out, a.n, a.seed)
    t0 = time.perf_counter()
    status = main(["experiment", "--config", str(cfg), "--threads", str(a.threads), "--plot"])
    print(f"elapsed {time.perf_counter() - t0:.1f}s")
    sys.exit(status)
