"""Fold-wise experiments: targets, preprocessing and model selection on train folds only.

Each (fold, model) cell is independent and gets its own seed, so cells can run
in any order or in parallel without changing results.
"""

from __future__ import annotations

import csv
import json
import logging
import math
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field, replace
from pathlib import Path
from typing import Callable

import numpy as np

from .config import RECURRENT_KINDS, ExperimentConfig, ModelSpec
from .data import (DataFormatError, Dataset, ErrorCount, Sequence, TargetInterval,
                   generate_folds, load_folds, read_dataset)
from .features import FeatureVector, extract_features, fit_normalization, pool
from .labels import count_errors
from .learners.baselines import aic_penalty, bic_penalty, fit_constant
from .learners.linear import fit_linear_fista, fit_scaling, l1_grid, target_arrays
from .learners.mlp import fit_mlp
from .learners.models import Preprocessing, TrainConfig, log_predict
from .learners.recurrent import fit_recurrent
from .losses import hinge_losses
from .path import target_interval
from .segment import opart

log = logging.getLogger(__name__)

LOG_LAMBDA_CLIP = 20.0
RESULT_HEADER = ["dataset", "fold", "model", "hyperparams", "accuracy", "tp", "tn", "fp", "fn", "seconds"]
SUMMARY_HEADER = ["dataset", "model", "mean_accuracy", "sd_accuracy"]
ERROR_HEADER = ["dataset", "fold", "model", "message"]

Predictor = Callable[[Sequence], float]


@dataclass(frozen=True)
class ResultRow:
    dataset: str
    fold: int
    model: str
    hyperparams: dict
    accuracy: float
    counts: ErrorCount
    seconds: float | None = None

    def __post_init__(self):
        if not 0.0 <= self.accuracy <= 1.0:
            raise ValueError(f"accuracy must lie in [0, 1], got {self.accuracy}")


@dataclass(frozen=True)
class CellError:
    dataset: str
    fold: int
    model: str
    message: str


@dataclass
class ExperimentResult:
    rows: list[ResultRow]
    errors: list[CellError]
    # (fold, stage, ids) for every place that consumes training information
    audit: list[tuple[int, str, frozenset]] = field(default_factory=list)

    def summary(self) -> list[tuple[str, float, float]]:
        return summarize(self.rows)


class Workspace:
    """Per-cell view of the dataset with memoized targets and features."""

    def __init__(self, dataset: Dataset, fold: int, target_cache: dict | None = None):
        self.dataset = dataset
        self.fold = fold
        self.audit: list[tuple[int, str, frozenset]] = []
        # a target depends only on its own sequence and labels, so sharing across folds is safe
        self._targets: dict[str, TargetInterval | None] = {} if target_cache is None else target_cache
        self._features: dict[str, FeatureVector] = {}

    def record(self, stage: str, ids):
        self.audit.append((self.fold, stage, frozenset(ids)))

    def targets(self, ids) -> dict[str, TargetInterval]:
        """Targets of the given (training) ids; unlabeled or failing sequences are dropped."""
        ids = list(ids)
        self.record("targets", ids)
        out = {}
        for i in ids:
            if i not in self._targets:
                try:
                    labels = self.dataset.labels.get(i, [])
                    self._targets[i] = target_interval(self.dataset.get(i).values, labels)
                except ValueError as exc:
                    log.warning("sequence %s excluded from training: %s", i, exc)
                    self._targets[i] = None
            if self._targets[i] is not None:
                out[i] = self._targets[i]
        return out

    def features(self, seq_id: str) -> FeatureVector:
        if seq_id not in self._features:
            self._features[seq_id] = extract_features(self.dataset.get(seq_id).values)
        return self._features[seq_id]


def _safe_log(lam: float) -> float:
    return math.log(lam) if lam > 0 else -math.inf


def fit_predictor(ws: Workspace, kind: str, hp: dict, ids, train: TrainConfig) -> Predictor:
    """Fit one model on ``ids`` and return a log-penalty predictor for raw sequences."""
    if kind == "bic":
        return lambda s: _safe_log(bic_penalty(s.values))
    if kind == "aic":
        feature = hp["feature"]
        return lambda s: _safe_log(aic_penalty(s.values, feature))
    targets = ws.targets(ids)
    if not targets:
        raise ValueError("no training sequence has a target interval")
    tids = list(targets)
    tlist = [targets[i] for i in tids]
    if kind == "constant":
        c = fit_constant(tlist, train.loss).c
        return lambda s: c
    if kind in ("linear", "mlp"):
        feats = [ws.features(i) for i in tids]
        if kind == "linear":
            model = fit_linear_fista(feats, tlist, float(hp["l1"]), train.loss,
                                     max_iter=max(train.max_iter, 1))
        else:
            model = fit_mlp(feats, tlist, hp["hidden_sizes"], train)
        # a feature valid on every training sequence can still be invalid on a new one
        return lambda s: log_predict(model, ws.features(s.id), impute=True)
    if kind in RECURRENT_KINDS:
        window, stat, log1p = int(hp["window"]), hp["stat"], bool(hp["log1p"])
        pooled = [pool(ws.dataset.get(i).values, window, stat) for i in tids]
        if log1p:
            if any(np.any(v <= -1) for v in pooled):
                raise ValueError("values <= -1 cannot be log1p-transformed")
            pooled = [np.log1p(v) for v in pooled]
        ws.record("normalization", tids)
        stats = fit_normalization(pooled)
        pre = Preprocessing(window, stat, log1p, stats.mean, stats.sd)
        arrays = [(v - stats.mean) / stats.sd for v in pooled]
        model = fit_recurrent(arrays, tlist, kind, int(hp["layers"]), int(hp["hidden"]), train, pre)
        return lambda s: log_predict(model, s)
    raise ValueError(f"unknown model kind {kind!r}")


def grid_points(ws: Workspace, spec: ModelSpec, train_ids, train: TrainConfig) -> list[dict]:
    """Grid in declared order; an ``auto`` L1 grid is derived from the training split."""
    if not spec.auto_l1:
        return spec.points()
    targets = ws.targets(train_ids)
    tids = list(targets)
    _, X = fit_scaling([ws.features(i) for i in tids])
    lo, hi = target_arrays([targets[i] for i in tids])
    return [{"l1": v} for v in l1_grid(X, lo, hi, train.loss)]


def validation_loss(predictor: Predictor, ws: Workspace, ids, targets, train: TrainConfig) -> float:
    pred = np.array([predictor(ws.dataset.get(i)) for i in ids])
    lo, hi = target_arrays([targets[i] for i in ids])
    with np.errstate(invalid="ignore"):
        loss = hinge_losses(pred, lo, hi, train.loss)[0]
    loss = np.where(np.isnan(loss), np.inf, loss)
    return float(loss.mean())


def cross_validate(ws: Workspace, spec: ModelSpec, points: list[dict], train_ids,
                   inner_folds: int, seed: int, train: TrainConfig) -> tuple[dict, list[float]]:
    """Grid point with the lowest mean inner-validation hinge loss; first wins ties."""
    if not points:
        raise ValueError("empty hyperparameter grid")
    if len(points) == 1:
        return points[0], []
    if inner_folds < 2:
        raise ValueError("inner_folds must be at least 2")
    targets = ws.targets(train_ids)
    ids = sorted(targets)
    if len(ids) < inner_folds:
        raise ValueError(f"degenerate split: {len(ids)} labeled training sequences for {inner_folds} inner folds")
    inner = generate_folds(ids, inner_folds, seed)
    losses = []
    for hp in points:
        per_fold = []
        for k in range(1, inner_folds + 1):
            fit_ids = [i for i in ids if inner[i] != k]
            val_ids = [i for i in ids if inner[i] == k]
            try:
                predictor = fit_predictor(ws, spec.kind, hp, fit_ids, train)
                per_fold.append(validation_loss(predictor, ws, val_ids, targets, train))
            except (ValueError, FloatingPointError, ArithmeticError) as exc:
                log.info("grid point %s failed on inner fold %d: %s", hp, k, exc)
                per_fold.append(math.inf)
        losses.append(float(np.mean(per_fold)))
    best = 0
    for k, v in enumerate(losses):
        if v < losses[best]:
            best = k
    if not math.isfinite(losses[best]):
        raise ValueError("every grid point failed during cross-validation")
    return points[best], losses


def score(predictor: Predictor, ws: Workspace, test_ids) -> ErrorCount:
    """Segment each labeled test sequence at the predicted penalty and count label errors."""
    total = ErrorCount(0, 0, 0, 0)
    for i in test_ids:
        labels = ws.dataset.labels.get(i)
        if not labels:
            continue
        s = ws.dataset.get(i)
        z = predictor(s)
        if math.isnan(z):
            raise ValueError(f"prediction for {i} is NaN")
        if abs(z) > LOG_LAMBDA_CLIP:
            log.warning("fold %d: log-penalty %.4g for %s clipped to +/-%g", ws.fold, z, i, LOG_LAMBDA_CLIP)
            z = max(-LOG_LAMBDA_CLIP, min(LOG_LAMBDA_CLIP, z))
        total = total + count_errors(opart(s.values, math.exp(z)).changepoints, labels)
    if total.total == 0:
        raise ValueError("no labeled sequences in the test fold")
    return total


def cell_seed(seed: int, fold: int, model_index: int) -> int:
    return int(np.random.SeedSequence([seed, fold, model_index]).generate_state(1)[0])


def _normalize_hp(hp: dict) -> dict:
    return {k: (list(v) if isinstance(v, tuple) else v) for k, v in hp.items()}


def run_cell(dataset: Dataset, cfg: ExperimentConfig, fold: int, model_index: int,
             train_ids: list[str], test_ids: list[str], target_cache: dict | None = None):
    """One (fold, model) cell; returns (row or None, error or None, audit)."""
    spec = cfg.models[model_index]
    ws = Workspace(dataset, fold, target_cache)
    seed = cell_seed(cfg.seed, fold, model_index)
    train = replace(cfg.train, seed=seed, loss=cfg.loss)
    t0 = time.perf_counter()
    try:
        points = grid_points(ws, spec, train_ids, train)
        hp, _ = cross_validate(ws, spec, points, train_ids, cfg.inner_folds, seed, train)
        predictor = fit_predictor(ws, spec.kind, hp, train_ids, train)
        counts = score(predictor, ws, test_ids)
    except Exception as exc:  # recorded per cell, other cells continue
        log.error("fold %d model %s failed: %s", fold, spec.name, exc)
        return None, CellError(cfg.name, fold, spec.name, f"{type(exc).__name__}: {exc}"), ws.audit
    seconds = time.perf_counter() - t0
    acc = 1.0 - counts.errors / counts.total
    row = ResultRow(cfg.name, fold, spec.name, _normalize_hp(hp), acc, counts,
                    seconds if cfg.record_time else None)
    return row, None, ws.audit


def _fold_assignment(dataset: Dataset, cfg: ExperimentConfig) -> dict[str, int]:
    if cfg.folds is None:
        return generate_folds(dataset, cfg.n_folds, cfg.seed)
    folds = load_folds(cfg.folds)
    missing = set(dataset.labeled_ids) - set(folds)
    if missing:
        raise DataFormatError(f"{cfg.folds}: no fold for sequences {sorted(missing)[:5]}")
    unknown = set(folds) - set(dataset.ids)
    if unknown:
        raise DataFormatError(f"{cfg.folds}: unknown sequences {sorted(unknown)[:5]}")
    return folds


def run_experiment(cfg: ExperimentConfig, dataset: Dataset | None = None,
                   write: bool = True) -> ExperimentResult:
    """Train and test every model on every fold; write CSV outputs to ``cfg.output_dir``."""
    if dataset is None:
        dataset = read_dataset(cfg.sequences, cfg.labels)
    folds = _fold_assignment(dataset, cfg)
    fold_ids = sorted(set(folds.values()))
    ids = [i for i in dataset.ids if i in folds]
    jobs = []
    for fold in fold_ids:
        test_ids = [i for i in ids if folds[i] == fold]
        train_ids = [i for i in ids if folds[i] != fold]
        for m in range(len(cfg.models)):
            jobs.append((fold, m, train_ids, test_ids))

    if cfg.threads > 1:
        with ProcessPoolExecutor(max_workers=cfg.threads) as pool_:
            futures = [pool_.submit(run_cell, dataset, cfg, *job) for job in jobs]
            outputs = [f.result() for f in futures]
    else:
        cache: dict = {}
        outputs = [run_cell(dataset, cfg, *job, target_cache=cache) for job in jobs]

    result = ExperimentResult([], [])
    for row, err, audit in outputs:
        if row is not None:
            result.rows.append(row)
        if err is not None:
            result.errors.append(err)
        result.audit.extend(audit)
    if write:
        write_outputs(result, cfg)
    return result


def summarize(rows: list[ResultRow]) -> list[tuple[str, float, float]]:
    """(model, mean, sample sd) of fold accuracies, in first-seen model order."""
    by_model: dict[str, list[float]] = {}
    for r in rows:
        by_model.setdefault(r.model, []).append(r.accuracy)
    out = []
    for name, accs in by_model.items():
        a = np.array(accs)
        sd = float(a.std(ddof=1)) if a.size > 1 else math.nan
        out.append((name, float(a.mean()), sd))
    return out


def _hp_text(hp: dict) -> str:
    return json.dumps(hp, sort_keys=True, separators=(",", ":"))


def write_outputs(result: ExperimentResult, cfg: ExperimentConfig):
    out = Path(cfg.output_dir)
    out.mkdir(parents=True, exist_ok=True)
    dataset = cfg.name
    with open(out / "results.csv", "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(RESULT_HEADER)
        for r in result.rows:
            c = r.counts
            w.writerow([r.dataset, r.fold, r.model, _hp_text(r.hyperparams), repr(r.accuracy),
                        c.tp, c.tn, c.fp, c.fn, "" if r.seconds is None else f"{r.seconds:.3f}"])
    with open(out / "summary.csv", "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(SUMMARY_HEADER)
        for name, mean, sd in result.summary():
            w.writerow([dataset, name, repr(mean), repr(sd)])
    with open(out / "errors.csv", "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(ERROR_HEADER)
        for e in result.errors:
            w.writerow([e.dataset, e.fold, e.model, e.message])
    if cfg.plot:
        with open(out / "plot_data.csv", "w", newline="") as fh:
            w = csv.writer(fh, lineterminator="\n")
            w.writerow(["dataset", "model", "fold", "accuracy"])
            for r in result.rows:
                w.writerow([r.dataset, r.model, r.fold, repr(r.accuracy)])


def read_results(path) -> list[dict]:
    with open(path, newline="") as fh:
        return list(csv.DictReader(fh))
