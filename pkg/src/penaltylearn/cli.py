"""Command-line entry point.

Exit status: 0 on success, 1 on usage errors, 2 on data errors, 3 when a
gradient check runs but fails its tolerance.
"""

from __future__ import annotations

import argparse
import csv
import json
import logging
import math
import sys
from pathlib import Path

import numpy as np

from . import data as data_mod
from .config import RECURRENT_KINDS, ConfigError, load_config
from .data import DataFormatError, Dataset, ErrorCount, Sequence, read_dataset
from .features import FEATURE_NAMES, FeatureVector, extract_features, fit_normalization, pool
from .harness import run_experiment, summarize
from .labels import accuracy, count_errors
from .learners.baselines import fit_constant
from .learners.gradcheck import KINDS as GRADCHECK_KINDS, grad_check
from .learners.linear import fit_linear_fista
from .learners.mlp import fit_mlp
from .learners.models import (Constant, Linear, Mlp, ModelKindError, Preprocessing, Recurrent,
                              TrainConfig, load_model, log_predict, save_model)
from .learners.recurrent import fit_recurrent
from .losses import HingeConfig
from .path import target_interval
from .segment import opart, pelt

log = logging.getLogger("penaltylearn")

TRAIN_KINDS = ("constant", "linear", "mlp") + RECURRENT_KINDS


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(1, f"{self.prog}: error: {message}\n")


def _global_flags(parser, suppress: bool):
    d = argparse.SUPPRESS if suppress else None
    parser.add_argument("--seed", type=int, default=d, help="random seed")
    parser.add_argument("--threads", type=int, default=d, help="worker processes")
    parser.add_argument("--output-dir", type=Path, default=d, help="where output files go")


def build_parser() -> argparse.ArgumentParser:
    p = _Parser(prog="penaltylearn", description="Supervised penalty learning for changepoint detection.")
    _global_flags(p, suppress=False)
    p.add_argument("-v", "--verbose", action="store_true")
    sub = p.add_subparsers(dest="command", required=True, parser_class=_Parser)

    def add(name, help_):
        sp = sub.add_parser(name, help=help_)
        _global_flags(sp, suppress=True)
        return sp

    sp = add("segment", "optimal changepoints at a fixed penalty")
    sp.add_argument("--sequences", type=Path, required=True)
    sp.add_argument("--lambda", dest="lam", type=float, required=True)
    sp.add_argument("--solver", choices=("opart", "pelt"), default="opart")

    sp = add("targets", "target log-penalty intervals from labels")
    sp.add_argument("--sequences", type=Path, required=True)
    sp.add_argument("--labels", type=Path, required=True)

    sp = add("features", "365 hand-built features per sequence")
    sp.add_argument("--sequences", type=Path, required=True)

    sp = add("pool", "replace each window by its mean or median")
    sp.add_argument("--sequences", type=Path, required=True)
    sp.add_argument("--window", type=int, required=True)
    sp.add_argument("--stat", choices=("mean", "median"), default="mean")

    sp = add("train", "fit a penalty model and save it as JSON")
    sp.add_argument("--kind", choices=TRAIN_KINDS, required=True)
    sp.add_argument("--sequences", type=Path, required=True)
    sp.add_argument("--labels", type=Path, help="labels (targets are computed from them)")
    sp.add_argument("--targets", type=Path, help="precomputed targets.csv")
    sp.add_argument("--l1", type=float, default=0.0)
    sp.add_argument("--hidden-sizes", type=int, nargs="+", default=[8])
    sp.add_argument("--layers", type=int, choices=(1, 2), default=1)
    sp.add_argument("--hidden", type=int, default=8)
    sp.add_argument("--window", type=int, default=1)
    sp.add_argument("--stat", choices=("mean", "median"), default="mean")
    sp.add_argument("--log1p", action="store_true")
    sp.add_argument("--max-iter", type=int, default=1000)
    sp.add_argument("--margin", type=float, default=0.0)
    sp.add_argument("--power", type=int, default=2)
    sp.add_argument("--model-out", type=Path, help="default: <output-dir>/model.json")

    sp = add("predict", "predicted penalties from a saved model")
    sp.add_argument("--model", type=Path, required=True)
    src = sp.add_mutually_exclusive_group(required=True)
    src.add_argument("--sequences", type=Path)
    src.add_argument("--features", type=Path)

    sp = add("evaluate", "label errors of segmentations at given penalties")
    sp.add_argument("--sequences", type=Path, required=True)
    sp.add_argument("--labels", type=Path, required=True)
    pen = sp.add_mutually_exclusive_group(required=True)
    pen.add_argument("--predictions", type=Path, help="predictions.csv from predict")
    pen.add_argument("--lambda", dest="lam", type=float)

    sp = add("experiment", "cross-validated comparison of models")
    sp.add_argument("--config", type=Path, required=True)
    sp.add_argument("--plot", action="store_true", help="also write plot_data.csv")

    sp = add("gradcheck", "finite-difference check of analytic gradients")
    sp.add_argument("--kind", choices=GRADCHECK_KINDS + ("all",), default="all")
    sp.add_argument("--trials", type=int, default=20)
    sp.add_argument("--tolerance", type=float, default=1e-4)
    return p


def _out_dir(args) -> Path:
    out = args.output_dir if args.output_dir is not None else Path(".")
    out.mkdir(parents=True, exist_ok=True)
    return out


def _writer(fh):
    return csv.writer(fh, lineterminator="\n")


def cmd_segment(args):
    ds = data_mod.load_sequences(args.sequences)
    solver = opart if args.solver == "opart" else pelt
    path = _out_dir(args) / "changepoints.csv"
    with open(path, "w", newline="") as fh:
        w = _writer(fh)
        w.writerow(["sequenceID", "changepoint"])
        for s in ds.sequences:
            for t in solver(s.values, args.lam).changepoints:
                w.writerow([s.id, t])
    print(path)


def _compute_targets(ds: Dataset) -> dict:
    out = {}
    for s in ds.sequences:
        labels = ds.labels.get(s.id)
        if not labels:
            log.warning("sequence %s has no labels; no target", s.id)
            continue
        out[s.id] = target_interval(s.values, labels)
    return out


def cmd_targets(args):
    ds = read_dataset(args.sequences, args.labels)
    path = _out_dir(args) / "targets.csv"
    data_mod.write_targets(_compute_targets(ds), path)
    print(path)


def cmd_features(args):
    ds = data_mod.load_sequences(args.sequences)
    path = _out_dir(args) / "features.csv"
    with open(path, "w", newline="") as fh:
        w = _writer(fh)
        w.writerow(["sequenceID", *FEATURE_NAMES])
        for s in ds.sequences:
            fv = extract_features(s.values)
            w.writerow([s.id] + [repr(float(v)) if ok else "" for v, ok in zip(fv.values, fv.valid)])
    print(path)


def load_features(path) -> dict[str, FeatureVector]:
    with open(path, newline="") as fh:
        reader = csv.reader(fh)
        header = next(reader, None)
        if header is None or header[0] != "sequenceID":
            raise DataFormatError(f"{path}: not a features file (first column must be sequenceID)")
        if tuple(header[1:]) != FEATURE_NAMES:
            raise DataFormatError(f"{path}: feature columns do not match the {len(FEATURE_NAMES)} canonical names")
        out = {}
        for lineno, row in enumerate(reader, start=2):
            if not row:
                continue
            if len(row) != len(header):
                raise DataFormatError(f"{path}: line {lineno}: expected {len(header)} fields")
            try:
                vals = np.array([float(x) if x else math.nan for x in row[1:]])
            except ValueError:
                raise DataFormatError(f"{path}: line {lineno}: unparsable feature value") from None
            valid = np.isfinite(vals)
            out[row[0]] = FeatureVector(FEATURE_NAMES, vals, valid)
    return out


def cmd_pool(args):
    ds = data_mod.load_sequences(args.sequences)
    pooled = Dataset([Sequence(s.id, pool(s.values, args.window, args.stat)) for s in ds.sequences])
    path = _out_dir(args) / "sequences.csv"
    data_mod.write_sequences(pooled, path)
    print(path)


def cmd_train(args):
    ds = read_dataset(args.sequences, args.labels)
    if args.targets is not None:
        targets = data_mod.load_targets(args.targets)
    elif args.labels is not None:
        targets = _compute_targets(ds)
    else:
        raise UsageError("train needs --labels or --targets")
    ids = [s.id for s in ds.sequences if s.id in targets]
    if not ids:
        raise DataFormatError("no sequence has a target interval")
    tlist = [targets[i] for i in ids]
    loss = HingeConfig(args.margin, args.power)
    cfg = TrainConfig(max_iter=args.max_iter, seed=args.seed or 0, loss=loss)
    kind = args.kind
    if kind == "constant":
        model = fit_constant(tlist, loss)
    elif kind in ("linear", "mlp"):
        feats = [extract_features(ds.get(i).values) for i in ids]
        if kind == "linear":
            model = fit_linear_fista(feats, tlist, args.l1, loss, max_iter=max(args.max_iter, 1))
        else:
            model = fit_mlp(feats, tlist, args.hidden_sizes, cfg)
    else:
        pooled = [pool(ds.get(i).values, args.window, args.stat) for i in ids]
        if args.log1p:
            if any(np.any(v <= -1) for v in pooled):
                raise DataFormatError("values <= -1 cannot be log1p-transformed")
            pooled = [np.log1p(v) for v in pooled]
        stats = fit_normalization(pooled)
        pre = Preprocessing(args.window, args.stat, args.log1p, stats.mean, stats.sd)
        arrays = [(v - stats.mean) / stats.sd for v in pooled]
        model = fit_recurrent(arrays, tlist, kind, args.layers, args.hidden, cfg, pre)
    path = args.model_out or _out_dir(args) / "model.json"
    save_model(model, path)
    print(path)


def _model_kind(model) -> str:
    if isinstance(model, Recurrent):
        return model.cell_kind
    return {Constant: "constant", Linear: "linear", Mlp: "mlp"}[type(model)]


def cmd_predict(args):
    model = load_model(args.model)
    kind = _model_kind(model)
    needs = "features" if isinstance(model, (Linear, Mlp)) else "sequences"
    given = "features" if args.features is not None else "sequences"
    if not isinstance(model, Constant) and needs != given:
        raise ModelKindError(f"model kind {kind!r} needs {needs} input, got {given} "
                             f"(pass --{needs} instead of --{given})")
    if given == "features":
        inputs = list(load_features(args.features).items())
    else:
        inputs = [(s.id, s) for s in data_mod.load_sequences(args.sequences).sequences]
    path = _out_dir(args) / "predictions.csv"
    with open(path, "w", newline="") as fh:
        w = _writer(fh)
        w.writerow(["sequenceID", "log_lambda", "lambda"])
        for seq_id, x in inputs:
            z = log_predict(model, x)
            w.writerow([seq_id, repr(z), repr(math.exp(z))])
    print(path)


def _load_predictions(path) -> dict[str, float]:
    out = {}
    with open(path, newline="") as fh:
        reader = csv.DictReader(fh)
        if reader.fieldnames is None or "sequenceID" not in reader.fieldnames or "lambda" not in reader.fieldnames:
            raise DataFormatError(f"{path}: expected columns sequenceID and lambda")
        for lineno, row in enumerate(reader, start=2):
            try:
                out[row["sequenceID"]] = float(row["lambda"])
            except ValueError:
                raise DataFormatError(f"{path}: line {lineno}: bad lambda {row['lambda']!r}") from None
    return out


def cmd_evaluate(args):
    ds = read_dataset(args.sequences, args.labels)
    lams = _load_predictions(args.predictions) if args.predictions else None
    path = _out_dir(args) / "evaluation.csv"
    total = ErrorCount(0, 0, 0, 0)
    with open(path, "w", newline="") as fh:
        w = _writer(fh)
        w.writerow(["sequenceID", "tp", "tn", "fp", "fn"])
        for s in ds.sequences:
            labels = ds.labels.get(s.id)
            if not labels:
                continue
            lam = args.lam if lams is None else lams.get(s.id)
            if lam is None:
                raise DataFormatError(f"no prediction for sequence {s.id!r}")
            c = count_errors(opart(s.values, lam).changepoints, labels)
            total = total + c
            w.writerow([s.id, c.tp, c.tn, c.fp, c.fn])
        w.writerow(["TOTAL", total.tp, total.tn, total.fp, total.fn])
    print(f"accuracy {accuracy([total]):.6f}")
    print(path)


def cmd_experiment(args):
    cfg = load_config(args.config, seed=args.seed, threads=args.threads,
                      output_dir=args.output_dir, plot=True if args.plot else None)
    result = run_experiment(cfg)
    for name, mean, sd in summarize(result.rows):
        print(f"{name:12s} {mean:.4f} +/- {sd:.4f}")
    for e in result.errors:
        print(f"error: fold {e.fold} model {e.model}: {e.message}", file=sys.stderr)
    print(Path(cfg.output_dir) / "results.csv")


def cmd_gradcheck(args):
    kinds = GRADCHECK_KINDS if args.kind == "all" else (args.kind,)
    ok = True
    for k in kinds:
        rep = grad_check(k, trials=args.trials, tolerance=args.tolerance, seed=args.seed or 0)
        status = "PASS" if rep.passed else "FAIL"
        print(f"{status} {k:5s} trials={rep.trials} max_rel_error={rep.max_rel_error:.3e} tol={rep.tolerance:g}")
        ok &= rep.passed
    return 0 if ok else 3


COMMANDS = {
    "segment": cmd_segment, "targets": cmd_targets, "features": cmd_features, "pool": cmd_pool,
    "train": cmd_train, "predict": cmd_predict, "evaluate": cmd_evaluate,
    "experiment": cmd_experiment, "gradcheck": cmd_gradcheck,
}


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code or 0)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        status = COMMANDS[args.command](args)
    except UsageError as exc:
        print(f"penaltylearn: error: {exc}", file=sys.stderr)
        return 1
    except (DataFormatError, ConfigError, ModelKindError, ValueError, KeyError,
            FileNotFoundError, json.JSONDecodeError) as exc:
        print(f"penaltylearn: data error: {exc}", file=sys.stderr)
        return 2
    return int(status or 0)


if __name__ == "__main__":
    sys.exit(main())
