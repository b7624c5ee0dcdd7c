"""Evaluation metrics and report aggregation.

rRMSE: 100 * RMS(y - yhat) / mean(y). MBE: mean(y - yhat), W/m^2.
Forecasting skill s = 1 - U/V, where U is the RMS clear-sky-normalized
forecast error and V the RMS issue-to-target clear-sky-index change, both
over disjoint 200-record windows per (site, horizon); by construction the
persistence model scores 0, a perfect forecast 1, and anything uniformly
worse than persistence is negative.

Aggregates pool raw records (union semantics): the overall rRMSE is the
rRMSE of all records, never a mean of per-cell rRMSEs.
"""

from __future__ import annotations

import csv
import json
import logging
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .errors import MetricUndefinedError, ParameterError

log = logging.getLogger(__name__)

SKILL_WINDOW = 200
CLEARSKY_EPS_WM2 = 1.0
HIST_BIN_PCT = 0.5


@dataclass
class EvalRecords:
    """Flat per-(site, issue hour, horizon) forecast/truth records."""

    site_ids: np.ndarray  # (N,) str
    issue_epochs: np.ndarray  # (N,) int64
    horizons: np.ndarray  # (N,) int, 1..6
    y_true: np.ndarray  # (N,) W/m^2
    y_pred: np.ndarray  # (N,) W/m^2
    clearsky_target: np.ndarray  # (N,) W/m^2 at the prediction hour
    kc_step: np.ndarray  # (N,) k_c(target) - k_c(issue)

    def __post_init__(self) -> None:
        n = len(self.site_ids)
        for name in ("issue_epochs", "horizons", "y_true", "y_pred", "clearsky_target", "kc_step"):
            if len(getattr(self, name)) != n:
                raise ParameterError(f"records field {name} length mismatch")
        if n and (np.nanmin(self.y_true) < 0 or np.nanmin(self.clearsky_target) < 0):
            raise ParameterError("y_true and clearsky_target must be >= 0")

    @property
    def n(self) -> int:
        return len(self.site_ids)

    def subset(self, mask: np.ndarray) -> "EvalRecords":
        return EvalRecords(
            site_ids=self.site_ids[mask],
            issue_epochs=self.issue_epochs[mask],
            horizons=self.horizons[mask],
            y_true=self.y_true[mask],
            y_pred=self.y_pred[mask],
            clearsky_target=self.clearsky_target[mask],
            kc_step=self.kc_step[mask],
        )

    def to_arrays(self) -> dict:
        return {
            "site_ids": self.site_ids,
            "issue_epochs": self.issue_epochs,
            "horizons": self.horizons,
            "y_true": self.y_true,
            "y_pred": self.y_pred,
            "clearsky_target": self.clearsky_target,
            "kc_step": self.kc_step,
        }


def concat_records(parts: list[EvalRecords]) -> EvalRecords:
    if not parts:
        raise ParameterError("no records to concatenate")
    return EvalRecords(
        **{k: np.concatenate([p.to_arrays()[k] for p in parts]) for k in parts[0].to_arrays()}
    )


def rrmse(records: EvalRecords) -> float:
    """Relative root-mean-square error, percent of mean observed irradiance."""
    if records.n < 1:
        raise ParameterError("rRMSE needs at least one record")
    mean_y = float(np.mean(records.y_true))
    if mean_y <= 0.0:
        raise MetricUndefinedError("rRMSE undefined: mean observed irradiance <= 0")
    rms = float(np.sqrt(np.mean((records.y_true - records.y_pred) ** 2)))
    return 100.0 * rms / mean_y


def mbe(records: EvalRecords) -> float:
    """Mean bias error (observed - predicted), W/m^2."""
    if records.n < 1:
        raise ParameterError("MBE needs at least one record")
    return float(np.mean(records.y_true - records.y_pred))


def forecast_skill(records: EvalRecords, window: int = SKILL_WINDOW) -> float:
    """Record-weighted mean of per-window (1 - U/V), percent.

    Windows are disjoint spans of `window` time-ordered records per (site,
    horizon); a tail window is kept when it has >= 2 records. Slots whose
    target clear-sky value is at or below 1 W/m^2 are excluded from U and V
    symmetrically; windows with V = 0 are skipped with a diagnostic.
    """
    if window < 2:
        raise ParameterError("skill window must be >= 2")
    usable = records.subset(records.clearsky_target > CLEARSKY_EPS_WM2)
    if usable.n == 0:
        raise MetricUndefinedError("no records above the clear-sky threshold")

    norm_err = (usable.y_pred - usable.y_true) / usable.clearsky_target
    weighted = 0.0
    weight = 0.0
    skipped = 0
    for site in np.unique(usable.site_ids):
        m_site = usable.site_ids == site
        for p in np.unique(usable.horizons[m_site]):
            rows = np.nonzero(m_site & (usable.horizons == p))[0]
            rows = rows[np.argsort(usable.issue_epochs[rows], kind="stable")]
            for lo in range(0, len(rows), window):
                chunk = rows[lo : lo + window]
                if len(chunk) < 2:
                    continue
                u = float(np.sqrt(np.mean(norm_err[chunk] ** 2)))
                v = float(np.sqrt(np.mean(usable.kc_step[chunk] ** 2)))
                if v == 0.0:
                    skipped += 1
                    continue
                weighted += len(chunk) * (1.0 - u / v)
                weight += len(chunk)
    if skipped:
        log.warning("forecast_skill: skipped %d windows with zero variability", skipped)
    if weight == 0.0:
        raise MetricUndefinedError("no usable skill windows (all had zero variability)")
    return 100.0 * weighted / weight


def _cell(records: EvalRecords, window: int) -> dict:
    out = {"n": int(records.n), "rrmse_pct": rrmse(records), "mbe_wm2": mbe(records)}
    try:
        out["skill_pct"] = forecast_skill(records, window)
    except MetricUndefinedError:
        out["skill_pct"] = None
    return out


@dataclass
class EvalReport:
    """Marginal metric tables per model: overall, by horizon, by site."""

    overall: dict = field(default_factory=dict)
    by_horizon: dict = field(default_factory=dict)
    by_site: dict = field(default_factory=dict)
    by_site_horizon: dict = field(default_factory=dict)
    histograms: dict = field(default_factory=dict)  # model -> [(bin_start, count)]


def aggregate_report(
    records_by_model: dict[str, EvalRecords], window: int = SKILL_WINDOW
) -> EvalReport:
    """Build the three marginal tables plus per-site rRMSE histograms."""
    report = EvalReport()
    for model in sorted(records_by_model):
        records = records_by_model[model]
        if records.n == 0:
            continue
        report.overall[model] = _cell(records, window)
        report.by_horizon[model] = {}
        for p in sorted(int(v) for v in np.unique(records.horizons)):
            report.by_horizon[model][p] = _cell(records.subset(records.horizons == p), window)
        report.by_site[model] = {}
        report.by_site_horizon[model] = {}
        site_rrmse = []
        for site in sorted(str(s) for s in np.unique(records.site_ids)):
            m_site = records.site_ids == site
            cell = _cell(records.subset(m_site), window)
            report.by_site[model][site] = cell
            site_rrmse.append(cell["rrmse_pct"])
            per_h = {}
            for p in sorted(int(v) for v in np.unique(records.horizons[m_site])):
                sub = records.subset(m_site & (records.horizons == p))
                per_h[p] = {"n": sub.n, "rrmse_pct": rrmse(sub), "mbe_wm2": mbe(sub)}
            report.by_site_horizon[model][site] = per_h
        bins: dict[float, int] = {}
        for v in site_rrmse:
            start = np.floor(v / HIST_BIN_PCT) * HIST_BIN_PCT
            bins[float(start)] = bins.get(float(start), 0) + 1
        report.histograms[model] = sorted(bins.items())
    return report


def write_report_csv(path, report: EvalReport) -> None:
    """One row per (model, site, horizon)."""
    with open(Path(path), "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh)
        w.writerow(["model", "site_id", "horizon_h", "n", "rrmse_pct", "mbe_wm2"])
        for model in sorted(report.by_site_horizon):
            for site in sorted(report.by_site_horizon[model]):
                for p, cell in sorted(report.by_site_horizon[model][site].items()):
                    w.writerow(
                        [model, site, p, cell["n"], repr(cell["rrmse_pct"]), repr(cell["mbe_wm2"])]
                    )


def write_report_json(path, report: EvalReport) -> None:
    doc = {
        "overall": report.overall,
        "by_horizon": report.by_horizon,
        "by_site": report.by_site,
    }
    with open(Path(path), "w", encoding="utf-8") as fh:
        json.dump(doc, fh, sort_keys=True, indent=2)
        fh.write("\n")


def write_histogram_csv(path, report: EvalReport) -> None:
    with open(Path(path), "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh)
        w.writerow(["model", "bin_start_pct", "count"])
        for model in sorted(report.histograms):
            for start, count in report.histograms[model]:
                w.writerow([model, repr(start), count])


def save_records_npz(path, records_by_model: dict[str, EvalRecords]) -> None:
    arrays = {}
    for model, rec in records_by_model.items():
        for k, v in rec.to_arrays().items():
            arrays[f"{model}::{k}"] = v
    np.savez_compressed(Path(path), **arrays)


def load_records_npz(path) -> dict[str, EvalRecords]:
    data = np.load(Path(path), allow_pickle=False)
    models: dict[str, dict] = {}
    for key in data.files:
        model, k = key.split("::", 1)
        models.setdefault(model, {})[k] = data[key]
    return {m: EvalRecords(**fields) for m, fields in sorted(models.items())}
