"""Training drivers: the pooled global network and the local-model suites.

Local linear/GBT models are keyed (site_id, issue hour-of-day, horizon);
local networks are one 6-output model per site. Keys with too few samples
are reported untrained and excluded from evaluation. Suite training is
pure per key, so it may run on a worker pool; results are reduced in
sorted key order, which makes output independent of the pool size.
"""

from __future__ import annotations

import logging
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field

import numpy as np

from ..data import N_HORIZONS
from ..errors import ParameterError
from ..features import NormStats, SampleSet, concat_samples, fit_norm_stats, horizon_view, normalize
from .gbt import GbtParams, fit_gbt
from .linear import fit_linear_arx
from .mlp import MlpModel, TrainConfig, TrainingTrace, mlp_train

log = logging.getLogger(__name__)

LOCAL_FAMILIES = ("linear", "gbt", "local-dnn")


@dataclass
class GlobalModel:
    """The cross-site network plus everything needed to apply it anywhere."""

    model: MlpModel
    norm_stats: NormStats
    trace: TrainingTrace | None
    trained_sites: tuple[str, ...]

    def predict(self, samples: SampleSet) -> np.ndarray:
        x = normalize(samples, self.norm_stats).x if not samples.normalized else samples.x
        return self.model.forward(x)


def train_global(
    train_sets: list[SampleSet],
    val_sets: list[SampleSet],
    hidden_sizes: list[int],
    cfg: TrainConfig,
) -> GlobalModel:
    """Pool the training sites' samples and fit one network usable at any site."""
    train_sets = [s for s in train_sets if s.n > 0]
    val_sets = [s for s in val_sets if s.n > 0]
    if not train_sets or not val_sets:
        raise ParameterError("global training needs samples from at least one site")
    pooled_train = concat_samples(train_sets)
    pooled_val = concat_samples(val_sets)
    stats = fit_norm_stats(pooled_train)
    tr = normalize(pooled_train, stats)
    va = normalize(pooled_val, stats)
    arch = [pooled_train.cfg.dim, *hidden_sizes, N_HORIZONS]
    model, trace = mlp_train(tr.x, tr.y, va.x, va.y, arch, cfg)
    sites = tuple(sorted(set(pooled_train.site_ids.tolist())))
    return GlobalModel(model=model, norm_stats=stats, trace=trace, trained_sites=sites)


@dataclass
class LocalSuite:
    family: str
    models: dict = field(default_factory=dict)
    norm_stats: dict = field(default_factory=dict)  # per site, local-dnn only
    traces: dict = field(default_factory=dict)
    untrained: list = field(default_factory=list)  # (key, reason)


def _hour_groups(samples: SampleSet) -> dict[int, np.ndarray]:
    hours = samples.issue_hours_utc()
    return {int(h): np.nonzero(hours == h)[0] for h in np.unique(hours)}


def _fit_linear_site(site, samples, ridge_lambda):
    out, skipped = {}, []
    for hod, rows in sorted(_hour_groups(samples).items()):
        for p in range(1, N_HORIZONS + 1):
            key = (site, hod, p)
            x_all, y_all = horizon_view(samples, p)
            try:
                out[key] = fit_linear_arx(x_all[rows], y_all[rows], ridge_lambda, key=key)
            except ParameterError as exc:
                skipped.append((key, str(exc)))
    return out, skipped


def _fit_gbt_site(site, samples, params):
    out, skipped = {}, []
    for hod, rows in sorted(_hour_groups(samples).items()):
        for p in range(1, N_HORIZONS + 1):
            key = (site, hod, p)
            x_all, y_all = horizon_view(samples, p)
            try:
                out[key] = fit_gbt(x_all[rows], y_all[rows], params, key=key)
            except ParameterError as exc:
                skipped.append((key, str(exc)))
    return out, skipped


def train_local_suite(
    train_samples: dict[str, SampleSet],
    family: str,
    *,
    val_samples: dict[str, SampleSet] | None = None,
    ridge_lambda: float = 1e-6,
    gbt_params: GbtParams | None = None,
    hidden_sizes: list[int] | None = None,
    train_cfg: TrainConfig | None = None,
    workers: int = 1,
) -> LocalSuite:
    """Fit the per-site benchmark family from each site's own ground data.

    linear/gbt: one model per (site, issue hour-of-day, horizon);
    local-dnn: one 6-output network per site (all hours share it).
    """
    if family not in LOCAL_FAMILIES:
        raise ParameterError(f"unknown local family {family!r}")
    suite = LocalSuite(family=family)
    sites = sorted(train_samples)

    if family in ("linear", "gbt"):
        if family == "gbt" and gbt_params is None:
            gbt_params = GbtParams()

        def task(site):
            samples = train_samples[site]
            if family == "linear":
                return _fit_linear_site(site, samples, ridge_lambda)
            return _fit_gbt_site(site, samples, gbt_params)

        if workers > 1:
            with ThreadPoolExecutor(max_workers=workers) as pool:
                results = dict(zip(sites, pool.map(task, sites)))
        else:
            results = {site: task(site) for site in sites}
        for site in sites:
            models, skipped = results[site]
            suite.models.update(models)
            suite.untrained.extend(skipped)
    else:
        if train_cfg is None or hidden_sizes is None or val_samples is None:
            raise ParameterError("local-dnn needs hidden_sizes, train_cfg, and val_samples")
        for site in sites:
            tr, va = train_samples[site], val_samples.get(site)
            if tr.n == 0 or va is None or va.n == 0:
                suite.untrained.append((site, "no training or validation samples"))
                continue
            stats = fit_norm_stats(tr)
            trn = normalize(tr, stats)
            van = normalize(va, stats)
            arch = [tr.cfg.dim, *hidden_sizes, N_HORIZONS]
            model, trace = mlp_train(trn.x, trn.y, van.x, van.y, arch, train_cfg)
            suite.models[site] = model
            suite.norm_stats[site] = stats
            suite.traces[site] = trace

    for key, reason in suite.untrained:
        log.warning("untrained %s key %s: %s", family, key, reason)
    return suite


def predict_local_scalar(
    suite: LocalSuite, samples: SampleSet
) -> tuple[np.ndarray, np.ndarray]:
    """Per-horizon predictions from a keyed linear/GBT suite.

    Returns (pred (N, 6), covered (N, 6) bool); entries for untrained keys
    are NaN with covered=False.
    """
    if suite.family not in ("linear", "gbt"):
        raise ParameterError("scalar prediction applies to linear/gbt suites")
    n = samples.n
    pred = np.full((n, N_HORIZONS), np.nan)
    covered = np.zeros((n, N_HORIZONS), dtype=bool)
    hours = samples.issue_hours_utc()
    site = samples.site_ids
    for p in range(1, N_HORIZONS + 1):
        x_all, _ = horizon_view(samples, p)
        for hod in np.unique(hours):
            rows_h = np.nonzero(hours == hod)[0]
            for s in np.unique(site[rows_h]):
                rows = rows_h[site[rows_h] == s]
                model = suite.models.get((str(s), int(hod), p))
                if model is None:
                    continue
                pred[rows, p - 1] = model.predict(x_all[rows])
                covered[rows, p - 1] = True
    return pred, covered
