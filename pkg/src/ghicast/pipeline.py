"""End-to-end protocol: prepare data, train the model zoo, evaluate.

The evaluation frame per site is the intersection of issue hours usable by
every requested model (satellite-sourced global features, ground-sourced
local features, and per-hour local-model coverage), so all models are
scored on identical records. Negative predictions are clipped to zero at
record-building time only; clipping is logged.
"""

from __future__ import annotations

import hashlib
import json
import logging
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .config import RunConfig
from .data import (
    N_HORIZONS,
    DatasetSplit,
    SitePartition,
    SiteSeries,
    drop_incomplete,
    partition_sites,
    split_time,
)
from .errors import IntegrityError, ParameterError
from .features import (
    FeatureConfig,
    SampleSet,
    build_samples,
    nwp_matrix,
)
from .hyperopt import SearchSpace, TrialHistory, TrialLog, default_mlp_space, smbo_optimize
from .metrics import EvalRecords
from .models.mlp import TrainConfig
from .models.persistence import CLEARSKY_EPS_WM2, persistence_forecast_arrays
from .models.suite import GlobalModel, LocalSuite, predict_local_scalar, train_global, train_local_suite
from .rngutil import derive_seed
from .solargeo import elevation_filter

log = logging.getLogger(__name__)

ALL_MODELS = ("persistence", "nwp", "linear", "gbt", "local-dnn", "global-dnn")
TRAINABLE_FAMILIES = ("persistence", "linear", "gbt", "local-dnn", "global-dnn")


def required_channels(cfg: FeatureConfig) -> set[str]:
    need = {"ground"}
    if cfg.use_sat:
        need.add(cfg.source_channel)
    if cfg.use_temp_hist:
        need.add("temp")
    if cfg.use_humid_hist:
        need.add("humidity")
    return need


@dataclass
class PreparedSite:
    series: SiteSeries
    split: DatasetSplit
    global_samples: dict[str, SampleSet]  # part -> samples ("train"/"validation"/"test")
    local_samples: dict[str, SampleSet]


@dataclass
class Prepared:
    sites: dict[str, PreparedSite]
    partition: SitePartition
    cfg: RunConfig

    def partition_hash(self) -> str:
        doc = {"train": list(self.partition.train_sites), "eval": list(self.partition.eval_sites)}
        return hashlib.sha256(json.dumps(doc, sort_keys=True).encode()).hexdigest()


def _part_samples(
    series: SiteSeries, fcfg: FeatureConfig, split: DatasetSplit, retained: np.ndarray
) -> dict[str, SampleSet]:
    out = {}
    for name, idx in (("train", split.train), ("validation", split.validation), ("test", split.test)):
        mask = np.zeros(series.n, dtype=bool)
        mask[idx] = True
        out[name] = build_samples(series, fcfg, retained & mask)
    return out


def prepare(
    series_map: dict[str, SiteSeries],
    cfg: RunConfig,
    *,
    global_features: FeatureConfig | None = None,
) -> Prepared:
    gcfg = global_features if global_features is not None else cfg.global_features
    lcfg = cfg.local_features
    train_ids = list(cfg.train_sites) or sorted(series_map)[: cfg.train_site_count]
    partition = partition_sites(series_map, train_ids)
    boundaries = cfg.split_boundaries()

    sites: dict[str, PreparedSite] = {}
    for sid in sorted(series_map):
        series = series_map[sid]
        elev_ok = elevation_filter(series, cfg.min_elevation_deg)
        split = split_time(series, boundaries)
        retained_g = elev_ok & drop_incomplete(series, sorted(required_channels(gcfg)))
        retained_l = elev_ok & drop_incomplete(series, sorted(required_channels(lcfg)))
        sites[sid] = PreparedSite(
            series=series,
            split=split,
            global_samples=_part_samples(series, gcfg, split, retained_g),
            local_samples=_part_samples(series, lcfg, split, retained_l),
        )
    return Prepared(sites=sites, partition=partition, cfg=cfg)


@dataclass
class TrainedModels:
    global_model: GlobalModel | None = None
    linear: LocalSuite | None = None
    gbt: LocalSuite | None = None
    local_dnn: LocalSuite | None = None
    persistence: bool = False
    meta: dict = field(default_factory=dict)


def train_family(prepared: Prepared, family: str, seed: int, workers: int = 1):
    cfg = prepared.cfg
    part = prepared.partition
    if family == "persistence":
        return True
    if family == "global-dnn":
        tc_dict = {**_train_cfg_dict(cfg.global_train), "seed": derive_seed(seed, "train/global-dnn")}
        return train_global(
            [prepared.sites[s].global_samples["train"] for s in part.train_sites],
            [prepared.sites[s].global_samples["validation"] for s in part.train_sites],
            list(cfg.global_hidden),
            TrainConfig(**tc_dict),
        )
    train_samples = {s: prepared.sites[s].local_samples["train"] for s in part.eval_sites}
    if family == "linear":
        return train_local_suite(
            train_samples, "linear", ridge_lambda=cfg.local_ridge_lambda, workers=workers
        )
    if family == "gbt":
        return train_local_suite(train_samples, "gbt", gbt_params=cfg.local_gbt, workers=workers)
    if family == "local-dnn":
        tc_dict = {**_train_cfg_dict(cfg.local_train), "seed": derive_seed(seed, "train/local-dnn")}
        return train_local_suite(
            train_samples,
            "local-dnn",
            val_samples={s: prepared.sites[s].local_samples["validation"] for s in part.eval_sites},
            hidden_sizes=list(cfg.local_hidden),
            train_cfg=TrainConfig(**tc_dict),
        )
    raise ParameterError(f"unknown family {family!r}")


def _train_cfg_dict(tc: TrainConfig) -> dict:
    import dataclasses

    return dataclasses.asdict(tc)


def _suite_hod_coverage(suite: LocalSuite, site: str) -> set[int]:
    hods = {}
    for key in suite.models:
        if key[0] == site:
            hods.setdefault(key[1], set()).add(key[2])
    return {h for h, ps in hods.items() if ps == set(range(1, N_HORIZONS + 1))}


def _clip_nonneg(pred: np.ndarray, model: str) -> np.ndarray:
    clipped = int((pred < 0).sum())
    if clipped:
        log.info("%s: clipped %d negative predictions to 0 at reporting", model, clipped)
    return np.maximum(pred, 0.0)


def evaluate(
    prepared: Prepared,
    trained: TrainedModels,
    models: tuple[str, ...] = ALL_MODELS,
    part_name: str = "test",
) -> dict[str, EvalRecords]:
    """Score the requested models on the eval sites over one split part."""
    for m in models:
        if m not in ALL_MODELS:
            raise ParameterError(f"unknown model {m!r}")
        if m == "global-dnn" and trained.global_model is None:
            raise ParameterError("global-dnn requested but no trained global model")
        if m == "linear" and trained.linear is None:
            raise ParameterError("linear requested but suite not trained")
        if m == "gbt" and trained.gbt is None:
            raise ParameterError("gbt requested but suite not trained")
        if m == "local-dnn" and trained.local_dnn is None:
            raise ParameterError("local-dnn requested but suite not trained")

    per_model_parts: dict[str, list[EvalRecords]] = {m: [] for m in models}
    for site in prepared.partition.eval_sites:
        ps = prepared.sites[site]
        gs = ps.global_samples[part_name]
        ls = ps.local_samples[part_name]
        common = np.intersect1d(gs.issue_epochs, ls.issue_epochs)
        if len(common) == 0:
            continue
        hods = ((common // 3600) % 24).astype(int)
        keep = np.ones(len(common), dtype=bool)
        for name, suite in (("linear", trained.linear), ("gbt", trained.gbt)):
            if name in models:
                covered = _suite_hod_coverage(suite, site)
                keep &= np.isin(hods, sorted(covered))
        common = common[keep]
        if len(common) == 0:
            continue

        g_rows = np.searchsorted(gs.issue_epochs, common)
        l_rows = np.searchsorted(ls.issue_epochs, common)
        y = gs.y[g_rows]
        if not np.array_equal(y, ls.y[l_rows]):
            raise IntegrityError(f"site {site}: target mismatch between feature frames")

        series = ps.series
        slot0 = int(series.epochs[0])
        islot = ((common - slot0) // 3600).astype(np.int64)
        n = len(common)
        ic_target = np.stack(
            [series.clearsky_ghi[islot + p] for p in range(1, N_HORIZONS + 1)], axis=1
        )
        ic_issue = series.clearsky_ghi[islot]
        ground_issue = series.ground_ghi[islot]
        k_issue = np.where(
            ic_issue > CLEARSKY_EPS_WM2, ground_issue / np.maximum(ic_issue, 1e-12), 1.0
        )
        with np.errstate(divide="ignore", invalid="ignore"):
            kc_target = np.where(ic_target > 0, y / np.where(ic_target > 0, ic_target, 1.0), 0.0)
        kc_step = kc_target - k_issue[:, None]

        preds: dict[str, np.ndarray] = {}
        if "persistence" in models:
            pred, _ = persistence_forecast_arrays(
                ground_issue[:, None], ic_issue[:, None], ic_target
            )
            preds["persistence"] = pred
        if "nwp" in models:
            preds["nwp"] = nwp_matrix(series, "ghi")[islot]
        if "global-dnn" in models:
            sub = SampleSet(
                x=gs.x[g_rows], y=y, site_ids=gs.site_ids[g_rows],
                issue_epochs=common, cfg=gs.cfg,
            )
            preds["global-dnn"] = trained.global_model.predict(sub)
        if "local-dnn" in models:
            model = trained.local_dnn.models.get(site)
            stats = trained.local_dnn.norm_stats.get(site)
            if model is None:
                log.warning("local-dnn: site %s untrained, excluded", site)
            else:
                xn = (ls.x[l_rows] - stats.mean) / stats.std
                preds["local-dnn"] = model.forward(xn)
        for name, suite in (("linear", trained.linear), ("gbt", trained.gbt)):
            if name in models:
                sub = SampleSet(
                    x=ls.x[l_rows], y=y, site_ids=ls.site_ids[l_rows],
                    issue_epochs=common, cfg=ls.cfg,
                )
                pred, covered = predict_local_scalar(suite, sub)
                if not covered.all():
                    raise IntegrityError(f"{name}: uncovered rows escaped the frame filter")
                preds[name] = pred

        for model, pred in preds.items():
            pred = _clip_nonneg(np.asarray(pred, dtype=np.float64), model)
            per_model_parts[model].append(
                EvalRecords(
                    site_ids=np.repeat(np.array([site]), n * N_HORIZONS),
                    issue_epochs=np.repeat(common, N_HORIZONS),
                    horizons=np.tile(np.arange(1, N_HORIZONS + 1), n),
                    y_true=y.ravel(),
                    y_pred=pred.ravel(),
                    clearsky_target=ic_target.ravel(),
                    kc_step=kc_step.ravel(),
                )
            )

    out: dict[str, EvalRecords] = {}
    for model, parts in per_model_parts.items():
        if parts:
            out[model] = EvalRecords(
                **{
                    k: np.concatenate([p.to_arrays()[k] for p in parts])
                    for k in parts[0].to_arrays()
                }
            )
    return out


def theta_to_configs(theta: dict, base_train: TrainConfig, seed: int) -> tuple[FeatureConfig, list[int], dict]:
    """Map one search point to (features, hidden sizes, train-config kwargs)."""
    fcfg = FeatureConfig(
        use_nwp=bool(theta.get("use_nwp", 0)),
        use_clearsky=bool(theta.get("use_clearsky", 0)),
        use_sat=bool(theta.get("use_sat", 0)),
        use_temp_hist=bool(theta.get("use_temp_hist", 0)),
        use_humid_hist=bool(theta.get("use_humid_hist", 0)),
        use_temp_fc=bool(theta.get("use_temp_fc", 0)),
        use_humid_fc=bool(theta.get("use_humid_fc", 0)),
        sat_lags_current=int(theta.get("sat_lags_current", 1)),
        sat_daily_lag=bool(theta.get("sat_daily_lag", 0)),
        source_channel="sat",
    )
    hidden = [int(theta[f"neurons_{k}"]) for k in range(1, int(theta["hidden_layers"]) + 1)]
    tc = dict(
        _train_cfg_dict(base_train),
        initial_learning_rate=float(theta["learning_rate"]),
        dropout_rate=min(float(theta["dropout"]), 0.99),
        seed=seed,
    )
    return fcfg, hidden, tc


def hypersearch(
    series_map: dict[str, SiteSeries],
    cfg: RunConfig,
    n_trials: int,
    log_path=None,
    restart: bool = False,
    space: SearchSpace | None = None,
) -> tuple[dict, TrialHistory]:
    """TPE search over the global network's hyperparameters and features.

    The objective trains at a reduced epoch budget and returns the pooled
    validation rRMSE of the training sites; the winning point should be
    retrained at full budget.
    """
    space = space or default_mlp_space()
    hp = cfg.hyperopt
    base = TrainConfig(
        **{
            **_train_cfg_dict(cfg.global_train),
            "max_epochs": hp.max_epochs,
            "patience": min(hp.patience, hp.max_epochs - 1),
            "n_starts": hp.n_starts,
        }
    )

    def objective(theta: dict) -> float:
        theta_seed = derive_seed(
            cfg.seed, "hypersearch/" + json.dumps(theta, sort_keys=True, default=str)
        )
        fcfg, hidden, tc = theta_to_configs(theta, base, theta_seed)
        prepared = prepare(series_map, cfg, global_features=fcfg)
        gm = train_global(
            [prepared.sites[s].global_samples["train"] for s in prepared.partition.train_sites],
            [prepared.sites[s].global_samples["validation"] for s in prepared.partition.train_sites],
            hidden,
            TrainConfig(**tc),
        )
        from .features import concat_samples

        val = concat_samples(
            [prepared.sites[s].global_samples["validation"] for s in prepared.partition.train_sites]
        )
        pred = gm.predict(val)
        mean_y = float(np.mean(val.y))
        if mean_y <= 0:
            return float("inf")
        return 100.0 * float(np.sqrt(np.mean((val.y - pred) ** 2))) / mean_y

    trial_log = None
    history = TrialHistory()
    if log_path is not None:
        trial_log = TrialLog(log_path, space, cfg.seed)
        if restart or not Path(log_path).exists():
            trial_log.start()
        else:
            history = trial_log.read()
    return smbo_optimize(
        objective,
        space,
        n_trials,
        cfg.seed,
        gamma=hp.gamma,
        n_candidates=hp.n_candidates,
        log=trial_log,
        history=history,
    )
