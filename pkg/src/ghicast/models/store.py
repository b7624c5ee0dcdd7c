"""Model artifacts: self-describing JSON, exact float round-trip.

Floats are emitted through Python's shortest-roundtrip repr (<= 17
significant decimal digits), so loading reproduces parameters bit-exactly.
Loading re-runs every shape/finiteness invariant via the model
constructors.
"""

from __future__ import annotations

import dataclasses
import json
from pathlib import Path

import numpy as np

from ..errors import ParseError
from ..features import FeatureConfig, NormStats
from .gbt import GbtModel, GbtParams
from .linear import LinearArxModel
from .mlp import MlpModel

FORMAT_NAME = "ghicast-model"
FORMAT_VERSION = 1


def _norm_to_dict(stats: NormStats | None):
    if stats is None:
        return None
    return {
        "mean": stats.mean.tolist(),
        "std": stats.std.tolist(),
        "passthrough": stats.passthrough.astype(int).tolist(),
    }


def _norm_from_dict(d) -> NormStats | None:
    if d is None:
        return None
    return NormStats(
        mean=np.asarray(d["mean"], dtype=np.float64),
        std=np.asarray(d["std"], dtype=np.float64),
        passthrough=np.asarray(d["passthrough"], dtype=bool),
    )


def _model_to_dict(model):
    if isinstance(model, MlpModel):
        return {
            "kind": "mlp",
            "layer_sizes": model.layer_sizes,
            "weights": [w.tolist() for w in model.weights],
            "biases": [b.tolist() for b in model.biases],
        }
    if isinstance(model, LinearArxModel):
        return {
            "kind": "linear",
            "coefficients": model.coefficients.tolist(),
            "intercept": model.intercept,
            "key": list(model.key) if model.key else None,
        }
    if isinstance(model, GbtModel):
        return {
            "kind": "gbt",
            "base": model.base,
            "shrinkage": model.shrinkage,
            "params": dataclasses.asdict(model.params),
            "key": list(model.key) if model.key else None,
            "trees": [
                {
                    "feature": t[0].tolist(),
                    "threshold": t[1].tolist(),
                    "left": t[2].tolist(),
                    "right": t[3].tolist(),
                    "value": t[4].tolist(),
                }
                for t in model.trees
            ],
        }
    raise TypeError(f"cannot serialize {type(model).__name__}")


def _model_from_dict(d):
    kind = d["kind"]
    if kind == "mlp":
        return MlpModel(
            layer_sizes=list(d["layer_sizes"]),
            weights=[np.asarray(w, dtype=np.float64) for w in d["weights"]],
            biases=[np.asarray(b, dtype=np.float64) for b in d["biases"]],
        )
    if kind == "linear":
        return LinearArxModel(
            coefficients=np.asarray(d["coefficients"], dtype=np.float64),
            intercept=float(d["intercept"]),
            key=tuple(d["key"]) if d.get("key") else None,
        )
    if kind == "gbt":
        trees = [
            (
                np.asarray(t["feature"], dtype=np.int32),
                np.asarray(t["threshold"], dtype=np.float64),
                np.asarray(t["left"], dtype=np.int32),
                np.asarray(t["right"], dtype=np.int32),
                np.asarray(t["value"], dtype=np.float64),
            )
            for t in d["trees"]
        ]
        return GbtModel(
            base=float(d["base"]),
            shrinkage=float(d["shrinkage"]),
            params=GbtParams(**d["params"]),
            trees=trees,
            key=tuple(d["key"]) if d.get("key") else None,
        )
    raise ParseError(f"unknown model kind {kind!r}")


def save_model(
    path,
    model,
    feature_config: FeatureConfig | None = None,
    norm_stats: NormStats | None = None,
    meta: dict | None = None,
) -> None:
    doc = {
        "format": FORMAT_NAME,
        "version": FORMAT_VERSION,
        "feature_config": dataclasses.asdict(feature_config) if feature_config else None,
        "norm_stats": _norm_to_dict(norm_stats),
        "model": _model_to_dict(model),
        "meta": meta or {},
    }
    Path(path).parent.mkdir(parents=True, exist_ok=True)
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(doc, fh, sort_keys=True)
        fh.write("\n")


def load_model(path):
    """-> (model, feature_config | None, norm_stats | None, meta dict)."""
    try:
        with open(path, encoding="utf-8") as fh:
            doc = json.load(fh)
    except (OSError, json.JSONDecodeError) as exc:
        raise ParseError(f"{path}: cannot read model artifact: {exc}") from None
    if doc.get("format") != FORMAT_NAME:
        raise ParseError(f"{path}: not a {FORMAT_NAME} artifact")
    cfg = FeatureConfig(**doc["feature_config"]) if doc.get("feature_config") else None
    return (
        _model_from_dict(doc["model"]),
        cfg,
        _norm_from_dict(doc.get("norm_stats")),
        doc.get("meta", {}),
    )
