"""Run configuration: one JSON document drives every subcommand.

The file parses completely before any work starts; unknown keys are
rejected. Command-line flags (--seed, --out, --trials, --family) override
the corresponding keys after parsing.
"""

from __future__ import annotations

import dataclasses
import hashlib
import json
from dataclasses import dataclass, field
from pathlib import Path

from .errors import ConfigError, ParameterError
from .features import FeatureConfig
from .models.gbt import GbtParams
from .models.mlp import TrainConfig
from .solargeo import GeoPoint
from .synth import SynthConfig

DEFAULT_SPLITS = {
    "train": ("2014-01-01", "2015-12-31"),
    "validation": ("2016-01-01", "2016-12-31"),
    "test": ("2017-01-01", "2017-12-31"),
}


@dataclass(frozen=True)
class HyperoptConfig:
    trials: int = 50
    max_epochs: int = 150  # reduced budget per trial; winner retrains at full budget
    n_starts: int = 1
    patience: int = 15
    gamma: float = 0.25
    n_candidates: int = 24

    def __post_init__(self) -> None:
        if self.trials < 1:
            raise ConfigError("hyperopt.trials must be >= 1")


@dataclass(frozen=True)
class RunConfig:
    seed: int = 1
    out_dir: str = "runs/default"
    synth: SynthConfig = field(default_factory=SynthConfig)
    splits: dict = field(default_factory=lambda: dict(DEFAULT_SPLITS))
    train_sites: tuple[str, ...] = ()  # empty: first train_site_count site ids
    train_site_count: int = 5
    min_elevation_deg: float = 3.0
    global_features: FeatureConfig = field(default_factory=FeatureConfig.paper_optimal)
    global_hidden: tuple[int, ...] = (208, 63)
    global_train: TrainConfig = field(default_factory=TrainConfig)
    local_features: FeatureConfig = field(default_factory=FeatureConfig.local_default)
    local_ridge_lambda: float = 1e-6
    local_gbt: GbtParams = field(default_factory=GbtParams)
    local_hidden: tuple[int, ...] = (128, 64)
    local_train: TrainConfig = field(
        default_factory=lambda: TrainConfig(
            initial_learning_rate=1.16e-3, dropout_rate=0.1, max_epochs=250, patience=15, n_starts=2
        )
    )
    hyperopt: HyperoptConfig = field(default_factory=HyperoptConfig)
    skill_window: int = 200
    workers: int = 1
    families: tuple[str, ...] = ("persistence", "linear", "gbt", "local-dnn", "global-dnn")

    def split_boundaries(self):
        return (
            tuple(self.splits["train"]),
            tuple(self.splits["validation"]),
            tuple(self.splits["test"]),
        )


def _build_dataclass(cls, data: dict, where: str):
    if not isinstance(data, dict):
        raise ConfigError(f"{where}: expected an object")
    names = {f.name for f in dataclasses.fields(cls)}
    unknown = set(data) - names
    if unknown:
        raise ConfigError(f"{where}: unknown keys {sorted(unknown)}")
    try:
        return cls(**data)
    except (ParameterError, TypeError, ValueError) as exc:
        raise ConfigError(f"{where}: {exc}") from None


def _parse_synth(data: dict) -> SynthConfig:
    if "bbox" in data:
        try:
            (lat0, lon0), (lat1, lon1) = data["bbox"]
            data = dict(data, bbox=(GeoPoint(lat0, lon0), GeoPoint(lat1, lon1)))
        except (TypeError, ValueError, ParameterError) as exc:
            raise ConfigError(f"synth.bbox: {exc}") from None
    return _build_dataclass(SynthConfig, data, "synth")


def _parse_splits(data: dict) -> dict:
    unknown = set(data) - {"train", "validation", "test"}
    if unknown:
        raise ConfigError(f"splits: unknown keys {sorted(unknown)}")
    out = dict(DEFAULT_SPLITS)
    for k, v in data.items():
        if not (isinstance(v, (list, tuple)) and len(v) == 2):
            raise ConfigError(f"splits.{k}: expected [start_date, end_date]")
        out[k] = (str(v[0]), str(v[1]))
    return out


def config_from_dict(data: dict) -> RunConfig:
    if not isinstance(data, dict):
        raise ConfigError("configuration root must be an object")
    known = {f.name for f in dataclasses.fields(RunConfig)}
    unknown = set(data) - known
    if unknown:
        raise ConfigError(f"unknown configuration keys {sorted(unknown)}")
    kwargs: dict = {}
    for key, value in data.items():
        if key == "synth":
            kwargs[key] = _parse_synth(value)
        elif key == "splits":
            kwargs[key] = _parse_splits(value)
        elif key in ("global_features", "local_features"):
            kwargs[key] = _build_dataclass(FeatureConfig, value, key)
        elif key in ("global_train", "local_train"):
            kwargs[key] = _build_dataclass(TrainConfig, value, key)
        elif key == "local_gbt":
            kwargs[key] = _build_dataclass(GbtParams, value, key)
        elif key == "hyperopt":
            kwargs[key] = _build_dataclass(HyperoptConfig, value, key)
        elif key in ("train_sites", "families", "global_hidden", "local_hidden"):
            kwargs[key] = tuple(value)
        else:
            kwargs[key] = value
    try:
        return RunConfig(**kwargs)
    except (ParameterError, TypeError, ValueError) as exc:
        raise ConfigError(str(exc)) from None


def load_config(path) -> RunConfig:
    try:
        with open(Path(path), encoding="utf-8") as fh:
            data = json.load(fh)
    except OSError as exc:
        raise ConfigError(f"cannot read config {path}: {exc}") from None
    except json.JSONDecodeError as exc:
        raise ConfigError(f"config {path} is not valid JSON: {exc}") from None
    return config_from_dict(data)


def config_hash(cfg: RunConfig) -> str:
    def default(o):
        if dataclasses.is_dataclass(o):
            return dataclasses.asdict(o)
        if isinstance(o, tuple):
            return list(o)
        raise TypeError(str(type(o)))

    text = json.dumps(dataclasses.asdict(cfg), sort_keys=True, default=default)
    return hashlib.sha256(text.encode()).hexdigest()
