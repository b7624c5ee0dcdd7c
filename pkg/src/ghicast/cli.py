"""Command-line entry point.

Subcommands: gen-data, hypersearch, train, evaluate, report. A JSON config
file provides defaults; flags override config keys. Exit codes: 0 success,
2 configuration error, 3 data error, 4 training failure.
"""

from __future__ import annotations

import argparse
import dataclasses
import json
import logging
import sys

from . import artifacts, pipeline
from .config import RunConfig, config_from_dict, config_hash, load_config
from .data import load_sites, write_sites
from .errors import (
    ConfigError,
    GhicastError,
    IntegrityError,
    ParameterError,
    ParseError,
    TrainingFailureError,
    UnknownSiteError,
)
from .metrics import (
    aggregate_report,
    load_records_npz,
    save_records_npz,
    write_histogram_csv,
    write_report_csv,
    write_report_json,
)
from .synth import STREAM_LABELS, gen_dataset

log = logging.getLogger(__name__)

EXIT_OK = 0
EXIT_CONFIG = 2
EXIT_DATA = 3
EXIT_TRAINING = 4


def _load_run_config(args) -> RunConfig:
    cfg = load_config(args.config) if args.config else config_from_dict({})
    overrides = {}
    if getattr(args, "seed", None) is not None:
        overrides["seed"] = args.seed
    if getattr(args, "out", None) is not None:
        overrides["out_dir"] = args.out
    if overrides:
        merged = dataclasses.replace(cfg, **overrides)
        if "seed" in overrides:
            merged = dataclasses.replace(
                merged, synth=dataclasses.replace(cfg.synth, seed=overrides["seed"])
            )
        cfg = merged
    return cfg


def _load_dataset(cfg: RunConfig):
    ddir = artifacts.data_dir(cfg.out_dir)
    obs, nwp = ddir / "observations.csv", ddir / "nwp.csv"
    if not obs.exists():
        raise ParseError(f"dataset not found under {ddir} (run gen-data first)")
    return load_sites([obs], [nwp] if nwp.exists() else [], turbidity=cfg.synth.turbidity)


def cmd_gen_data(args) -> int:
    cfg = _load_run_config(args)
    ddir = artifacts.data_dir(cfg.out_dir)
    ddir.mkdir(parents=True, exist_ok=True)
    series = gen_dataset(cfg.synth)
    obs, nwp = ddir / "observations.csv", ddir / "nwp.csv"
    write_sites(series, obs, nwp)
    manifest = {
        "seed": cfg.synth.seed,
        "config_hash": config_hash(cfg),
        "stream_labels": list(STREAM_LABELS),
        "n_sites": len(series),
        "files": {"observations": obs.name, "nwp": nwp.name},
    }
    with open(ddir / "manifest.json", "w", encoding="utf-8") as fh:
        json.dump(manifest, fh, sort_keys=True, indent=2)
        fh.write("\n")
    print(f"wrote {len(series)} sites to {ddir}")
    return EXIT_OK


def cmd_hypersearch(args) -> int:
    cfg = _load_run_config(args)
    series = _load_dataset(cfg)
    hdir = artifacts.hyperopt_dir(cfg.out_dir)
    hdir.mkdir(parents=True, exist_ok=True)
    trials = args.trials if args.trials is not None else cfg.hyperopt.trials
    best, history = pipeline.hypersearch(
        series, cfg, trials, log_path=hdir / "trials.jsonl", restart=args.restart
    )
    best_doc = {"theta": best, "performance": history.best().performance, "trials": len(history)}
    with open(hdir / "best.json", "w", encoding="utf-8") as fh:
        json.dump(best_doc, fh, sort_keys=True, indent=2)
        fh.write("\n")
    print(f"best validation rRMSE {history.best().performance:.3f}% after {len(history)} trials")
    print(json.dumps(best, sort_keys=True))
    return EXIT_OK


def _apply_search_theta(cfg: RunConfig) -> RunConfig:
    path = artifacts.hyperopt_dir(cfg.out_dir) / "best.json"
    if not path.exists():
        raise ParameterError(f"--theta search requested but {path} is missing")
    with open(path, encoding="utf-8") as fh:
        theta = json.load(fh)["theta"]
    fcfg, hidden, tc = pipeline.theta_to_configs(theta, cfg.global_train, cfg.global_train.seed)
    from .models.mlp import TrainConfig

    return dataclasses.replace(
        cfg,
        global_features=fcfg,
        global_hidden=tuple(hidden),
        global_train=TrainConfig(**tc),
    )


def cmd_train(args) -> int:
    cfg = _load_run_config(args)
    if args.family == "global-dnn" and args.theta == "search":
        cfg = _apply_search_theta(cfg)
    series = _load_dataset(cfg)
    prepared = pipeline.prepare(series, cfg)
    obj = pipeline.train_family(prepared, args.family, cfg.seed, workers=cfg.workers)
    n = artifacts.save_family(cfg.out_dir, args.family, obj, prepared, cfg.seed)
    print(f"trained family {args.family}: {n} artifact(s) under "
          f"{artifacts.models_dir(cfg.out_dir, args.family)}")
    return EXIT_OK


def _emit_reports(out_dir, records_by_model, window) -> None:
    rdir = artifacts.reports_dir(out_dir)
    rdir.mkdir(parents=True, exist_ok=True)
    report = aggregate_report(records_by_model, window=window)
    write_report_csv(rdir / "report.csv", report)
    write_report_json(rdir / "report.json", report)
    write_histogram_csv(rdir / "histogram.csv", report)
    for model, cell in sorted(report.overall.items()):
        skill = cell["skill_pct"]
        print(
            f"{model:>11s}: rRMSE {cell['rrmse_pct']:6.2f}%  "
            f"s {skill:6.2f}%  MBE {cell['mbe_wm2']:+7.2f} W/m2"
            if skill is not None
            else f"{model:>11s}: rRMSE {cell['rrmse_pct']:6.2f}%  MBE {cell['mbe_wm2']:+7.2f} W/m2"
        )


def cmd_evaluate(args) -> int:
    cfg = _load_run_config(args)
    series = _load_dataset(cfg)
    prepared = pipeline.prepare(series, cfg)
    models = tuple(args.models.split(",")) if args.models else pipeline.ALL_MODELS
    families = [m for m in models if m != "nwp"]
    trained = artifacts.load_families(cfg.out_dir, families, prepared)
    if "persistence" in models:
        trained.persistence = True
    records = pipeline.evaluate(prepared, trained, models)
    if not records:
        raise ParameterError("evaluation produced no records (empty test period?)")
    rdir = artifacts.reports_dir(cfg.out_dir)
    rdir.mkdir(parents=True, exist_ok=True)
    save_records_npz(rdir / "records.npz", records)
    _emit_reports(cfg.out_dir, records, cfg.skill_window)
    return EXIT_OK


def cmd_report(args) -> int:
    cfg = _load_run_config(args)
    path = artifacts.reports_dir(cfg.out_dir) / "records.npz"
    if not path.exists():
        raise ParseError(f"no saved records at {path} (run evaluate first)")
    records = load_records_npz(path)
    _emit_reports(cfg.out_dir, records, cfg.skill_window)
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="ghicast",
        description="Multi-site short-term GHI forecasting: synthetic data, "
        "hyperparameter search, training, and evaluation.",
    )
    parser.add_argument("--config", help="JSON run configuration")
    parser.add_argument("--seed", type=int, help="override the run seed")
    parser.add_argument("--out", help="override the output directory")
    sub = parser.add_subparsers(dest="command", required=True)

    sub.add_parser("gen-data", help="generate the synthetic dataset CSVs")

    p = sub.add_parser("hypersearch", help="TPE search over the global network")
    p.add_argument("--trials", type=int, help="total trial budget")
    p.add_argument("--restart", action="store_true", help="discard an existing trial log")

    p = sub.add_parser("train", help="train one model family")
    p.add_argument(
        "--family",
        required=True,
        choices=pipeline.TRAINABLE_FAMILIES,
    )
    p.add_argument(
        "--theta",
        choices=("default", "search"),
        default="default",
        help="hyperparameters: config defaults or the hypersearch winner",
    )

    p = sub.add_parser("evaluate", help="evaluate trained models on the held-out sites")
    p.add_argument("--models", help="comma-separated subset of " + ",".join(pipeline.ALL_MODELS))

    sub.add_parser("report", help="re-emit report files from saved records")
    return parser


def main(argv=None) -> int:
    logging.basicConfig(level=logging.INFO, format="%(levelname)s %(name)s: %(message)s")
    args = build_parser().parse_args(argv)
    handlers = {
        "gen-data": cmd_gen_data,
        "hypersearch": cmd_hypersearch,
        "train": cmd_train,
        "evaluate": cmd_evaluate,
        "report": cmd_report,
    }
    try:
        return handlers[args.command](args)
    except ConfigError as exc:
        print(f"configuration error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except (ParseError, IntegrityError, UnknownSiteError, FileNotFoundError) as exc:
        print(f"data error: {exc}", file=sys.stderr)
        return EXIT_DATA
    except TrainingFailureError as exc:
        print(f"training failure: {exc}", file=sys.stderr)
        return EXIT_TRAINING
    except ParameterError as exc:
        print(f"configuration error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except GhicastError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_CONFIG


if __name__ == "__main__":
    sys.exit(main())
