"""Model input/target assembly from site series.

A sample is issued at hour h and targets the 6 hourly irradiance values at
h+1..h+6. Canonical feature order (blocks present only when enabled):

  nwp_p1..nwp_p6            NWP GHI valid at h+1..h+6 (latest issuance <= h)
  clearsky_p1..clearsky_p6  deterministic clear-sky GHI at h+1..h+6
  <src>_lag0..<src>_lag{L-1}  irradiance history at h, h-1, ..., h-L+1
  <src>_d24_p1.._p6         irradiance at (h+p)-24h for each prediction hour
  temp_lag0..temp_lag{L-1}  auxiliary history, same lag count L
  humidity_lag0..
  temp_fc_p1..temp_fc_p6    auxiliary forecasts, per-horizon like NWP
  humidity_fc_p1..

<src> is the satellite channel for the global model and the ground channel
for local models. Everything observable in x is at or before h except the
NWP/clear-sky/aux-forecast blocks, which refer to h+1..h+6 by construction.
"""

from __future__ import annotations

import logging
import warnings
from dataclasses import dataclass, replace

import numpy as np

from .data import HOUR, N_HORIZONS, SiteSeries
from .errors import ParameterError

log = logging.getLogger(__name__)

DAILY_LAG_H = 24


@dataclass(frozen=True)
class FeatureConfig:
    """Which channels feed the model, and with which lag structure."""

    use_nwp: bool = True
    use_clearsky: bool = True
    use_sat: bool = True
    use_temp_hist: bool = False
    use_humid_hist: bool = False
    use_temp_fc: bool = False
    use_humid_fc: bool = False
    sat_lags_current: int = 4  # L: lags 0..L-1 w.r.t. the issue hour
    sat_daily_lag: bool = True  # lag-24 values w.r.t. each prediction hour
    source_channel: str = "sat"  # "sat" (global) or "ground" (local)

    def __post_init__(self) -> None:
        flags = (
            self.use_nwp,
            self.use_clearsky,
            self.use_sat,
            self.use_temp_hist,
            self.use_humid_hist,
            self.use_temp_fc,
            self.use_humid_fc,
        )
        if not any(flags):
            raise ParameterError("at least one input flag must be set")
        if not 1 <= self.sat_lags_current <= 6:
            raise ParameterError("sat_lags_current must be in [1, 6]")
        if self.source_channel not in ("sat", "ground"):
            raise ParameterError("source_channel must be 'sat' or 'ground'")

    @property
    def feature_names(self) -> list[str]:
        names: list[str] = []
        if self.use_nwp:
            names += [f"nwp_p{p}" for p in range(1, N_HORIZONS + 1)]
        if self.use_clearsky:
            names += [f"clearsky_p{p}" for p in range(1, N_HORIZONS + 1)]
        if self.use_sat:
            names += [f"{self.source_channel}_lag{k}" for k in range(self.sat_lags_current)]
            if self.sat_daily_lag:
                names += [f"{self.source_channel}_d24_p{p}" for p in range(1, N_HORIZONS + 1)]
        if self.use_temp_hist:
            names += [f"temp_lag{k}" for k in range(self.sat_lags_current)]
        if self.use_humid_hist:
            names += [f"humidity_lag{k}" for k in range(self.sat_lags_current)]
        if self.use_temp_fc:
            names += [f"temp_fc_p{p}" for p in range(1, N_HORIZONS + 1)]
        if self.use_humid_fc:
            names += [f"humidity_fc_p{p}" for p in range(1, N_HORIZONS + 1)]
        return names

    @property
    def dim(self) -> int:
        return len(self.feature_names)

    @classmethod
    def paper_optimal(cls) -> "FeatureConfig":
        """The winning global configuration: NWP + clear sky + satellite
        lags 0..3 and the six daily lags (input dimension 22)."""
        return cls()

    @classmethod
    def local_default(cls) -> "FeatureConfig":
        return cls(sat_lags_current=2, source_channel="ground")


@dataclass
class SampleSet:
    """A batch of samples from one or more sites, in canonical feature order."""

    x: np.ndarray  # (N, D)
    y: np.ndarray  # (N, 6) W/m^2
    site_ids: np.ndarray  # (N,) str
    issue_epochs: np.ndarray  # (N,) int64
    cfg: FeatureConfig
    normalized: bool = False

    @property
    def n(self) -> int:
        return len(self.x)

    @property
    def feature_names(self) -> list[str]:
        return self.cfg.feature_names

    def issue_hours_utc(self) -> np.ndarray:
        return ((self.issue_epochs // HOUR) % 24).astype(np.int64)


def concat_samples(parts: list[SampleSet]) -> SampleSet:
    if not parts:
        raise ParameterError("cannot concatenate zero sample sets")
    cfg = parts[0].cfg
    if any(p.cfg != cfg for p in parts) or any(p.normalized != parts[0].normalized for p in parts):
        raise ParameterError("sample sets differ in feature config or normalization state")
    return SampleSet(
        x=np.concatenate([p.x for p in parts]),
        y=np.concatenate([p.y for p in parts]),
        site_ids=np.concatenate([p.site_ids for p in parts]),
        issue_epochs=np.concatenate([p.issue_epochs for p in parts]),
        cfg=cfg,
        normalized=parts[0].normalized,
    )


def nwp_matrix(series: SiteSeries, channel: str) -> np.ndarray:
    """(n_slots, 6) NWP values targeting slot h+p, NaN where unavailable."""
    n = series.n
    out = np.full((n, N_HORIZONS), np.nan)
    store = series.nwp
    if store.n_issues == 0:
        return out
    values = {"ghi": store.ghi, "temp": store.temp, "humidity": store.humidity}[channel]
    offsets = (store.issue_epochs - series.epochs[0]) // HOUR
    aligned = (
        store.n_issues == n - N_HORIZONS
        and np.array_equal(offsets, np.arange(store.n_issues))
    )
    if aligned:
        out[: store.n_issues] = values
        return out
    for i in range(n):
        h = int(series.epochs[i])
        for p in range(1, N_HORIZONS + 1):
            out[i, p - 1] = store.lookup(h, h + p * HOUR, channel)
    return out


def build_samples(series: SiteSeries, cfg: FeatureConfig, retained_mask: np.ndarray) -> SampleSet:
    """One sample per retained issue hour whose lags, NWP values, and all six
    targets are available; slots failing any requirement are skipped."""
    n = series.n
    retained_mask = np.asarray(retained_mask, dtype=bool)
    if len(retained_mask) != n:
        raise ParameterError("retained_mask length does not match the series")

    L = cfg.sat_lags_current
    src = series.channel(cfg.source_channel)
    ground = series.ground_ghi

    ok = retained_mask.copy()
    # all six targets exist and are retained
    tgt_ok = np.zeros(n, dtype=bool)
    lim = n - N_HORIZONS
    if lim > 0:
        t = np.ones(lim, dtype=bool)
        for p in range(1, N_HORIZONS + 1):
            t &= retained_mask[p : lim + p] & ~np.isnan(ground[p : lim + p])
        tgt_ok[:lim] = t
    ok &= tgt_ok

    def hist_ok(channel: np.ndarray) -> np.ndarray:
        good = np.zeros(n, dtype=bool)
        good[L - 1 :] = True
        for k in range(L):
            good[L - 1 :] &= ~np.isnan(channel[L - 1 - k : n - k])
        return good

    needs_nwp = []
    if cfg.use_nwp:
        needs_nwp.append("ghi")
    if cfg.use_temp_fc:
        needs_nwp.append("temp")
    if cfg.use_humid_fc:
        needs_nwp.append("humidity")
    nwp_mats = {ch: nwp_matrix(series, ch) for ch in needs_nwp}
    for mat in nwp_mats.values():
        ok &= ~np.isnan(mat).any(axis=1)

    if cfg.use_sat:
        ok &= hist_ok(src)
        if cfg.sat_daily_lag:
            daily_ok = np.zeros(n, dtype=bool)
            if n > DAILY_LAG_H - N_HORIZONS:
                base = np.arange(n)
                for p in range(1, N_HORIZONS + 1):
                    j = base + p - DAILY_LAG_H
                    valid = j >= 0
                    d = np.zeros(n, dtype=bool)
                    d[valid] = ~np.isnan(src[j[valid]])
                    if p == 1:
                        daily_ok = d
                    else:
                        daily_ok &= d
            ok &= daily_ok
    if cfg.use_temp_hist:
        ok &= hist_ok(series.temp)
    if cfg.use_humid_hist:
        ok &= hist_ok(series.humidity)

    idx = np.nonzero(ok)[0]
    skipped = int(retained_mask.sum() - len(idx))
    if skipped:
        log.debug("site %s: skipped %d retained hours lacking lags/NWP/targets",
                  series.site_id, skipped)

    blocks: list[np.ndarray] = []
    if cfg.use_nwp:
        blocks.append(nwp_mats["ghi"][idx])
    if cfg.use_clearsky:
        blocks.append(
            np.stack([series.clearsky_ghi[idx + p] for p in range(1, N_HORIZONS + 1)], axis=1)
        )
    if cfg.use_sat:
        blocks.append(np.stack([src[idx - k] for k in range(L)], axis=1))
        if cfg.sat_daily_lag:
            blocks.append(
                np.stack([src[idx + p - DAILY_LAG_H] for p in range(1, N_HORIZONS + 1)], axis=1)
            )
    if cfg.use_temp_hist:
        blocks.append(np.stack([series.temp[idx - k] for k in range(L)], axis=1))
    if cfg.use_humid_hist:
        blocks.append(np.stack([series.humidity[idx - k] for k in range(L)], axis=1))
    if cfg.use_temp_fc:
        blocks.append(nwp_mats["temp"][idx])
    if cfg.use_humid_fc:
        blocks.append(nwp_mats["humidity"][idx])

    x = np.concatenate(blocks, axis=1) if len(idx) else np.zeros((0, cfg.dim))
    y = (
        np.stack([ground[idx + p] for p in range(1, N_HORIZONS + 1)], axis=1)
        if len(idx)
        else np.zeros((0, N_HORIZONS))
    )
    return SampleSet(
        x=x,
        y=y,
        site_ids=np.array([series.site_id] * len(idx)),
        issue_epochs=series.epochs[idx].copy(),
        cfg=cfg,
    )


@dataclass(frozen=True)
class NormStats:
    mean: np.ndarray  # (D,)
    std: np.ndarray  # (D,), 1.0 where passthrough
    passthrough: np.ndarray  # (D,) bool, zero-variance dimensions


def fit_norm_stats(samples: SampleSet) -> NormStats:
    """Per-feature mean/std from (training) samples; zero-variance features
    pass through unscaled with a warning."""
    mean = samples.x.mean(axis=0)
    std = samples.x.std(axis=0)
    passthrough = std == 0.0
    if passthrough.any():
        names = [samples.feature_names[i] for i in np.nonzero(passthrough)[0]]
        warnings.warn(f"zero-variance features left unscaled: {names}", stacklevel=2)
    out_mean = np.where(passthrough, 0.0, mean)
    out_std = np.where(passthrough, 1.0, std)
    return NormStats(mean=out_mean, std=out_std, passthrough=passthrough)


def normalize(samples: SampleSet, stats: NormStats) -> SampleSet:
    """Apply training-split statistics; targets stay in W/m^2."""
    if samples.normalized:
        raise ParameterError("sample set is already normalized (double-normalization guard)")
    if len(stats.mean) != samples.x.shape[1]:
        raise ParameterError("normalization stats dimension mismatch")
    x = (samples.x - stats.mean) / stats.std
    return replace(samples, x=x, normalized=True)


def horizon_view(samples: SampleSet, p: int) -> tuple[np.ndarray, np.ndarray]:
    """Per-horizon design matrix and scalar target for local models.

    Columns, in order: nwp_p, clearsky_p, the irradiance-history block,
    daily lag for hour h+p, then any enabled aux blocks (hist whole,
    forecasts at p).
    """
    if not 1 <= p <= N_HORIZONS:
        raise ParameterError(f"horizon {p} outside 1..{N_HORIZONS}")
    cfg = samples.cfg
    names = samples.feature_names
    col = {name: i for i, name in enumerate(names)}
    take: list[int] = []
    if cfg.use_nwp:
        take.append(col[f"nwp_p{p}"])
    if cfg.use_clearsky:
        take.append(col[f"clearsky_p{p}"])
    if cfg.use_sat:
        take += [col[f"{cfg.source_channel}_lag{k}"] for k in range(cfg.sat_lags_current)]
        if cfg.sat_daily_lag:
            take.append(col[f"{cfg.source_channel}_d24_p{p}"])
    if cfg.use_temp_hist:
        take += [col[f"temp_lag{k}"] for k in range(cfg.sat_lags_current)]
    if cfg.use_humid_hist:
        take += [col[f"humidity_lag{k}"] for k in range(cfg.sat_lags_current)]
    if cfg.use_temp_fc:
        take.append(col[f"temp_fc_p{p}"])
    if cfg.use_humid_fc:
        take.append(col[f"humidity_fc_p{p}"])
    return samples.x[:, take], samples.y[:, p - 1]
