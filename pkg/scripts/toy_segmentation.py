"""Segment a small two-level toy sequence across penalties and print its penalty path."""

import numpy as np

from penaltylearn.data import LabelRegion
from penaltylearn.path import annotate_path, penalty_path, target_interval

values = np.array([1.0, 1.2, 0.9, 1.1, 4.0, 4.2, 3.9, 4.1, 4.0, 1.0, 0.8, 1.1])
labels = [LabelRegion(3, 5, 1, 1), LabelRegion(6, 7, 0, 0), LabelRegion(8, 10, 1, 1)]

for r in annotate_path(penalty_path(values), labels):
    e = r.errors
    print(f"[{r.lambda_lo:10.4g}, {r.lambda_hi:10.4g})  K={r.n_changes}  "
          f"cps={list(r.changepoints)}  fp={e.fp} fn={e.fn}")
t = target_interval(values, labels)
print(f"target log-lambda interval: ({t.lo:.4f}, {t.hi:.4f})")
