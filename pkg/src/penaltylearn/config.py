"""Experiment configuration read from a TOML file.

Example::

    name = "synthetic"
    sequences = "sequences.csv"      # paths are relative to the config file
    labels = "labels.csv"
    # folds = "folds.csv"            # otherwise n_folds + seed generate them
    n_folds = 4
    seed = 0
    inner_folds = 3
    output_dir = "results"
    threads = 1
    record_time = false              # fill the seconds column (breaks byte-identical reruns)
    plot = false                     # also write plot_data.csv

    [loss]
    margin = 0.0
    power = 2

    [train]
    max_iter = 1000
    step_size = 0.01

    [[models]]
    name = "linear"
    kind = "linear"
    grid = { l1 = "auto" }

    [[models]]
    name = "gru"
    kind = "gru"
    grid = { layers = [1, 2], hidden = [4, 8], window = [1], stat = ["mean"], log1p = [false] }
"""

from __future__ import annotations

import itertools
import sys
from dataclasses import dataclass, field, fields, replace
from pathlib import Path
from typing import Any

from .learners.models import TrainConfig
from .losses import HingeConfig

if sys.version_info >= (3, 11):
    import tomllib
else:
    import tomli as tomllib

RECURRENT_KINDS = ("rnn", "lstm", "gru")
MODEL_KINDS = ("bic", "aic", "constant", "linear", "mlp") + RECURRENT_KINDS

# grid keys each kind accepts, with the default used when a key is missing
GRID_DEFAULTS: dict[str, dict[str, list]] = {
    "bic": {},
    "aic": {"feature": ["variance"]},
    "constant": {},
    "linear": {"l1": ["auto"]},
    "mlp": {"hidden_sizes": [[8]]},
    **{k: {"layers": [1], "hidden": [8], "window": [1], "stat": ["mean"], "log1p": [False]}
       for k in RECURRENT_KINDS},
}


class ConfigError(ValueError):
    pass


@dataclass(frozen=True)
class ModelSpec:
    name: str
    kind: str
    grid: dict[str, list] = field(default_factory=dict)

    def __post_init__(self):
        if self.kind not in MODEL_KINDS:
            raise ConfigError(f"model {self.name!r}: unknown kind {self.kind!r}; expected one of {MODEL_KINDS}")
        allowed = GRID_DEFAULTS[self.kind]
        extra = set(self.grid) - set(allowed)
        if extra:
            raise ConfigError(f"model {self.name!r}: unknown grid keys {sorted(extra)}")
        full = {}
        for key, default in allowed.items():
            vals = self.grid.get(key, default)
            if key == "l1" and vals == "auto":
                vals = ["auto"]
            if not isinstance(vals, list):
                vals = [vals]
            if not vals:
                raise ConfigError(f"model {self.name!r}: grid for {key!r} is empty")
            full[key] = list(vals)
        object.__setattr__(self, "grid", full)

    @property
    def auto_l1(self) -> bool:
        return self.grid.get("l1") == ["auto"]

    def points(self) -> list[dict[str, Any]]:
        """Cartesian product of the grid in declared key order."""
        keys = list(self.grid)
        return [dict(zip(keys, combo)) for combo in itertools.product(*(self.grid[k] for k in keys))]


@dataclass(frozen=True)
class ExperimentConfig:
    sequences: Path
    labels: Path
    models: tuple[ModelSpec, ...]
    name: str = "dataset"
    folds: Path | None = None
    n_folds: int = 4
    seed: int = 0
    inner_folds: int = 3
    output_dir: Path = Path("results")
    threads: int = 1
    record_time: bool = False
    plot: bool = False
    loss: HingeConfig = field(default_factory=HingeConfig)
    train: TrainConfig = field(default_factory=TrainConfig)

    def validate(self) -> "ExperimentConfig":
        if not self.models:
            raise ConfigError("at least one model is required")
        names = [m.name for m in self.models]
        if len(set(names)) != len(names):
            raise ConfigError(f"model names must be unique, got {names}")
        for p in (self.sequences, self.labels, self.folds):
            if p is not None and not Path(p).is_file():
                raise ConfigError(f"file not found: {p}")
        if self.folds is None and self.n_folds < 2:
            raise ConfigError("n_folds must be at least 2")
        if self.inner_folds < 2:
            raise ConfigError("inner_folds must be at least 2")
        if self.threads < 1:
            raise ConfigError("threads must be at least 1")
        return self


def _section(raw: dict, key: str, cls):
    data = raw.pop(key, {}) or {}
    known = {f.name for f in fields(cls)}
    unknown = set(data) - known
    if unknown:
        raise ConfigError(f"[{key}]: unknown keys {sorted(unknown)}")
    return data


def parse_config(raw: dict, base_dir: Path = Path(".")) -> ExperimentConfig:
    raw = dict(raw)
    loss = HingeConfig(**_section(raw, "loss", HingeConfig))
    train_kw = _section(raw, "train", TrainConfig)
    train_kw.pop("loss", None)
    train = TrainConfig(loss=loss, **train_kw)
    models = []
    for m in raw.pop("models", []):
        m = dict(m)
        try:
            kind = m.pop("kind")
        except KeyError:
            raise ConfigError("every [[models]] entry needs a kind") from None
        name = m.pop("name", kind)
        grid = m.pop("grid", {})
        if m:
            raise ConfigError(f"model {name!r}: unknown keys {sorted(m)}")
        models.append(ModelSpec(name, kind, dict(grid)))
    for key in ("sequences", "labels"):
        if key not in raw:
            raise ConfigError(f"missing required key {key!r}")
    known = {f.name for f in fields(ExperimentConfig)} - {"models", "loss", "train"}
    unknown = set(raw) - known
    if unknown:
        raise ConfigError(f"unknown keys {sorted(unknown)}")
    for key in ("sequences", "labels", "folds", "output_dir"):
        if key in raw:
            raw[key] = base_dir / raw[key]
    return ExperimentConfig(models=tuple(models), loss=loss, train=train, **raw)


def load_config(path, **overrides) -> ExperimentConfig:
    """Read a TOML config; keyword overrides that are not None replace file values."""
    path = Path(path)
    try:
        with open(path, "rb") as fh:
            raw = tomllib.load(fh)
    except tomllib.TOMLDecodeError as exc:
        raise ConfigError(f"{path}: {exc}") from None
    cfg = parse_config(raw, path.parent)
    overrides = {k: v for k, v in overrides.items() if v is not None}
    if "output_dir" in overrides:
        overrides["output_dir"] = Path(overrides["output_dir"])
    return replace(cfg, **overrides).validate()
