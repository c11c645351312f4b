"""Penalty-predicting model containers, prediction, and JSON model files.

Every model predicts ``log(lambda)``; :func:`predict` exponentiates.
"""

from __future__ import annotations

import json
import logging
import math
from dataclasses import dataclass, field
from typing import Union

import numpy as np

from ..data import Sequence
from ..features import FeatureVector, pool
from ..losses import HingeConfig

FORMAT_VERSION = 1
log = logging.getLogger(__name__)


class ModelKindError(TypeError):
    """A model was given an input of the wrong kind."""


@dataclass(frozen=True)
class TrainConfig:
    step_size: float = 1e-2
    max_iter: int = 1000
    val_fraction: float = 0.2
    patience: int = 50
    seed: int = 0
    loss: HingeConfig = field(default_factory=HingeConfig)
    beta1: float = 0.9
    beta2: float = 0.999
    eps: float = 1e-8
    batch_points: int = 1_000_000
    batch_size: int = 32

    def __post_init__(self):
        if self.max_iter < 0:
            raise ValueError("max_iter must be nonnegative")


@dataclass(frozen=True)
class Preprocessing:
    """Sequence preprocessing a recurrent model applies before its forward pass."""

    window: int = 1
    stat: str = "mean"
    log1p: bool = False
    mean: float = 0.0
    sd: float = 1.0

    def apply(self, values) -> np.ndarray:
        v = pool(values, self.window, self.stat)
        if self.log1p:
            if np.any(v <= -1):
                raise ValueError("values <= -1 cannot be log1p-transformed")
            v = np.log1p(v)
        return (v - self.mean) / self.sd


@dataclass(frozen=True)
class FeatureScaling:
    """Columns of the 365-feature vector kept for a model, with train center/scale."""

    names: tuple[str, ...]
    center: np.ndarray
    scale: np.ndarray

    def transform(self, fv: FeatureVector, required=None, impute: bool = False) -> np.ndarray:
        """Standardized kept columns; invalid entries that are not required map to the center.

        With ``impute`` every invalid entry maps to the center instead of raising.
        """
        idx = [fv.names.index(n) for n in self.names]
        vals = fv.values[idx]
        ok = fv.valid[idx]
        need = np.ones(len(idx), bool) if required is None else np.asarray(required, bool)
        bad = [n for n, o, r in zip(self.names, ok, need) if r and not o]
        if bad and impute:
            log.info("imputing train center for invalid feature(s): %s", ", ".join(bad[:5]))
        elif bad:
            raise ValueError(f"required feature(s) invalid for this input: {', '.join(bad[:5])}")
        z = (np.where(ok, vals, self.center) - self.center) / self.scale
        return z


@dataclass
class Constant:
    c: float
    train_meta: dict = field(default_factory=dict)
    kind = "constant"


@dataclass
class Linear:
    beta: np.ndarray         # coefficients on standardized features
    beta0: float
    scaling: FeatureScaling
    train_meta: dict = field(default_factory=dict)
    kind = "linear"

    def original_coefficients(self) -> tuple[np.ndarray, float]:
        """Coefficients and intercept on the raw (unstandardized) feature scale."""
        b = self.beta / self.scaling.scale
        return b, float(self.beta0 - np.dot(b, self.scaling.center))

    def log_predict(self, fv: FeatureVector, impute: bool = False) -> float:
        z = self.scaling.transform(fv, required=self.beta != 0, impute=impute)
        return float(z @ self.beta + self.beta0)


@dataclass
class Mlp:
    weights: list[np.ndarray]   # weights[k] has shape (out, in)
    biases: list[np.ndarray]
    scaling: FeatureScaling
    train_meta: dict = field(default_factory=dict)
    kind = "mlp"

    @property
    def hidden_sizes(self) -> tuple[int, ...]:
        return tuple(w.shape[0] for w in self.weights[:-1])

    def log_predict(self, fv: FeatureVector, impute: bool = False) -> float:
        from .mlp import mlp_forward
        z = self.scaling.transform(fv, impute=impute)
        return float(mlp_forward(self.params(), z[None, :])[0][0])

    def params(self) -> dict[str, np.ndarray]:
        p = {}
        for k, (w, b) in enumerate(zip(self.weights, self.biases)):
            p[f"W{k}"] = w
            p[f"b{k}"] = b
        return p


@dataclass
class Recurrent:
    cell_kind: str
    layers: list[dict[str, np.ndarray]]   # per layer: Wx, Wh, b
    beta: np.ndarray
    beta0: float
    preprocessing: Preprocessing = field(default_factory=Preprocessing)
    train_meta: dict = field(default_factory=dict)
    kind = "recurrent"

    @property
    def hidden(self) -> int:
        return self.beta.size

    @property
    def n_layers(self) -> int:
        return len(self.layers)

    def params(self) -> dict[str, np.ndarray]:
        p = {}
        for k, layer in enumerate(self.layers):
            for name, arr in layer.items():
                p[f"L{k}.{name}"] = arr
        p["beta"] = self.beta
        p["beta0"] = np.array([self.beta0])
        return p

    def with_params(self, p: dict[str, np.ndarray]) -> "Recurrent":
        layers = [{name: p[f"L{k}.{name}"] for name in layer} for k, layer in enumerate(self.layers)]
        return Recurrent(self.cell_kind, layers, p["beta"], float(p["beta0"][0]),
                         self.preprocessing, dict(self.train_meta))

    def log_predict(self, values) -> float:
        from .recurrent import recurrent_forward
        return recurrent_forward(self, values)[0]


LearnerModel = Union[Constant, Linear, Mlp, Recurrent]


def log_predict(model: LearnerModel, x, impute: bool = False) -> float:
    """Log-scale prediction; raw sequences are preprocessed for recurrent models.

    ``impute`` lets feature models replace invalid inputs by their train center.
    """
    if isinstance(model, Constant):
        return float(model.c)
    if isinstance(model, (Linear, Mlp)):
        if not isinstance(x, FeatureVector):
            raise ModelKindError(f"{model.kind} model needs a feature vector, got {_kind_of(x)}")
        return model.log_predict(x, impute)
    if isinstance(model, Recurrent):
        if isinstance(x, FeatureVector):
            raise ModelKindError(f"recurrent model needs a sequence, got {_kind_of(x)}")
        values = x.values if isinstance(x, Sequence) else np.asarray(x, float)
        return model.log_predict(model.preprocessing.apply(values))
    raise ModelKindError(f"unknown model type {type(model).__name__}")


def predict(model: LearnerModel, x) -> float:
    """Predicted penalty on the raw scale, ``exp`` of the log-scale head."""
    return math.exp(log_predict(model, x))


def _kind_of(x) -> str:
    if isinstance(x, FeatureVector):
        return "feature vector"
    if isinstance(x, Sequence):
        return "sequence"
    return type(x).__name__


# Serialization ---------------------------------------------------------------

def _arr(a) -> list:
    return np.asarray(a, float).tolist()


def _scaling_to_json(s: FeatureScaling) -> dict:
    return {"names": list(s.names), "center": _arr(s.center), "scale": _arr(s.scale)}


def _scaling_from_json(d: dict) -> FeatureScaling:
    return FeatureScaling(tuple(d["names"]), np.array(d["center"], float), np.array(d["scale"], float))


def model_to_dict(model: LearnerModel) -> dict:
    doc = {"format_version": FORMAT_VERSION, "kind": model.kind, "train_meta": model.train_meta}
    if isinstance(model, Constant):
        doc.update(arch={}, params={"c": model.c}, preprocessing_stats={})
    elif isinstance(model, Linear):
        b, b0 = model.original_coefficients()
        doc.update(
            arch={"n_features": len(model.scaling.names)},
            params={"beta_standardized": _arr(model.beta), "beta0_standardized": model.beta0,
                    "beta": _arr(b), "beta0": b0},
            preprocessing_stats=_scaling_to_json(model.scaling),
        )
    elif isinstance(model, Mlp):
        doc.update(
            arch={"n_features": len(model.scaling.names), "hidden_sizes": list(model.hidden_sizes)},
            params={"weights": [np.asarray(w).tolist() for w in model.weights],
                    "biases": [_arr(b) for b in model.biases]},
            preprocessing_stats=_scaling_to_json(model.scaling),
        )
    elif isinstance(model, Recurrent):
        pp = model.preprocessing
        doc.update(
            arch={"cell_kind": model.cell_kind, "layers": model.n_layers, "hidden": model.hidden},
            params={"layers": [{k: np.asarray(v).tolist() for k, v in layer.items()}
                               for layer in model.layers],
                    "beta": _arr(model.beta), "beta0": model.beta0},
            preprocessing_stats={"window": pp.window, "stat": pp.stat, "log1p": pp.log1p,
                                 "mean": pp.mean, "sd": pp.sd},
        )
    else:
        raise ModelKindError(f"cannot serialize {type(model).__name__}")
    return doc


def model_from_dict(doc: dict) -> LearnerModel:
    if doc.get("format_version") != FORMAT_VERSION:
        raise ValueError(f"unsupported model format version {doc.get('format_version')!r}")
    kind = doc.get("kind")
    if kind not in ("constant", "linear", "mlp", "recurrent"):
        raise ValueError(f"unknown model kind {kind!r}")
    p, meta = doc["params"], doc.get("train_meta", {})
    if kind == "constant":
        return Constant(float(p["c"]), meta)
    if kind == "linear":
        return Linear(np.array(p["beta_standardized"], float), float(p["beta0_standardized"]),
                      _scaling_from_json(doc["preprocessing_stats"]), meta)
    if kind == "mlp":
        return Mlp([np.array(w, float) for w in p["weights"]],
                   [np.array(b, float) for b in p["biases"]],
                   _scaling_from_json(doc["preprocessing_stats"]), meta)
    if kind == "recurrent":
        layers = [{k: np.array(v, float) for k, v in layer.items()} for layer in p["layers"]]
        return Recurrent(doc["arch"]["cell_kind"], layers, np.array(p["beta"], float),
                         float(p["beta0"]), Preprocessing(**doc["preprocessing_stats"]), meta)
    raise ValueError(f"unknown model kind {kind!r}")


def save_model(model: LearnerModel, path):
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(model_to_dict(model), fh, indent=1)
        fh.write("\n")


def load_model(path) -> LearnerModel:
    with open(path, encoding="utf-8") as fh:
        return model_from_dict(json.load(fh))
