"""On-disk layout of a run directory and trained-model artifacts.

  <out>/data/observations.csv, nwp.csv, manifest.json
  <out>/models/<family>/...        one JSON artifact per model + manifest
  <out>/hyperopt/trials.jsonl, best.json
  <out>/reports/records.npz, report.csv, report.json, histogram.csv
"""

from __future__ import annotations

import json
from pathlib import Path

from .errors import IntegrityError, ParameterError
from .models.suite import GlobalModel, LocalSuite
from .models.store import load_model, save_model
from .pipeline import Prepared, TrainedModels

PERSISTENCE_MARKER = "MARKER"


def data_dir(out_dir) -> Path:
    return Path(out_dir) / "data"


def models_dir(out_dir, family: str) -> Path:
    return Path(out_dir) / "models" / family


def reports_dir(out_dir) -> Path:
    return Path(out_dir) / "reports"


def hyperopt_dir(out_dir) -> Path:
    return Path(out_dir) / "hyperopt"


def _family_manifest(prepared: Prepared, seed: int, extra: dict | None = None) -> dict:
    doc = {
        "partition_hash": prepared.partition_hash(),
        "train_sites": list(prepared.partition.train_sites),
        "eval_sites": list(prepared.partition.eval_sites),
        "seed": seed,
    }
    doc.update(extra or {})
    return doc


def _write_manifest(path: Path, doc: dict) -> None:
    path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(doc, fh, sort_keys=True, indent=2)
        fh.write("\n")


def save_family(out_dir, family: str, obj, prepared: Prepared, seed: int) -> int:
    """Persist one trained family; returns the number of model artifacts."""
    root = models_dir(out_dir, family)
    root.mkdir(parents=True, exist_ok=True)
    count = 0
    if family == "persistence":
        (root / PERSISTENCE_MARKER).write_text("stateless clear-sky-index persistence model\n")
    elif family == "global-dnn":
        assert isinstance(obj, GlobalModel)
        save_model(
            root / "model.json",
            obj.model,
            feature_config=prepared.cfg.global_features,
            norm_stats=obj.norm_stats,
            meta=_family_manifest(
                prepared, seed, {"family": family, "trained_sites": list(obj.trained_sites)}
            ),
        )
        count = 1
    elif family == "local-dnn":
        assert isinstance(obj, LocalSuite)
        for site, model in sorted(obj.models.items()):
            save_model(
                root / f"{site}.json",
                model,
                feature_config=prepared.cfg.local_features,
                norm_stats=obj.norm_stats[site],
                meta=_family_manifest(prepared, seed, {"family": family, "site": site}),
            )
            count += 1
    elif family in ("linear", "gbt"):
        assert isinstance(obj, LocalSuite)
        for key, model in sorted(obj.models.items()):
            site, hod, p = key
            save_model(
                root / f"{site}_h{hod:02d}_p{p}.json",
                model,
                feature_config=prepared.cfg.local_features,
                meta={"family": family, "key": list(key)},
            )
            count += 1
    else:
        raise ParameterError(f"unknown family {family!r}")
    _write_manifest(
        root / "manifest.json",
        _family_manifest(prepared, seed, {"family": family, "n_models": count}),
    )
    return count


def _require_manifest(root: Path, family: str) -> dict:
    path = root / "manifest.json"
    if not path.exists():
        raise ParameterError(f"no trained artifacts for {family!r} (missing {path})")
    with open(path, encoding="utf-8") as fh:
        return json.load(fh)


def load_families(out_dir, families, prepared: Prepared) -> TrainedModels:
    """Reload trained families, enforcing the no-leakage guard for the
    global network (it must not have been trained on any current eval site)."""
    trained = TrainedModels()
    for family in families:
        root = models_dir(out_dir, family)
        if family == "persistence":
            if not (root / PERSISTENCE_MARKER).exists():
                raise ParameterError(f"no trained artifacts for {family!r}")
            trained.persistence = True
            continue
        if family == "nwp":
            continue  # stateless channel read-out
        manifest = _require_manifest(root, family)
        if family == "global-dnn":
            model, fcfg, stats, meta = load_model(root / "model.json")
            overlap = sorted(set(meta.get("trained_sites", [])) & set(prepared.partition.eval_sites))
            if overlap:
                raise IntegrityError(
                    f"global-dnn was trained on current eval sites {overlap}; refusing to evaluate"
                )
            trained.global_model = GlobalModel(
                model=model, norm_stats=stats, trace=None, trained_sites=tuple(meta["trained_sites"])
            )
            trained.meta[family] = meta
        elif family == "local-dnn":
            suite = LocalSuite(family=family)
            for path in sorted(p for p in root.glob("*.json") if p.name != "manifest.json"):
                model, _, stats, meta = load_model(path)
                suite.models[meta["site"]] = model
                suite.norm_stats[meta["site"]] = stats
            trained.local_dnn = suite
            trained.meta[family] = manifest
        else:
            suite = LocalSuite(family=family)
            for path in sorted(root.glob("*_h*_p*.json")):
                model, _, _, meta = load_model(path)
                suite.models[tuple(meta["key"])] = model
            if family == "linear":
                trained.linear = suite
            else:
                trained.gbt = suite
            trained.meta[family] = manifest
    return trained
