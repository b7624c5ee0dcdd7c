"""Multi-site hourly data model, CSV ingestion, and splitting.

Two CSV schemas are understood (header mandatory, UTF-8, decimal point,
empty field = missing):

  observations: site_id,timestamp,lat,lon,ghi_ground,ghi_sat,temp,humidity
  nwp:          site_id,issue_time,horizon_h,ghi_nwp,temp_nwp,humidity_nwp

Timestamps are ISO-8601 UTC on the hour (YYYY-MM-DDTHH:00:00Z). All
irradiance is W/m^2. Within one file a site's rows must ascend in time;
across files and sites, rows are merged and canonicalized.
"""

from __future__ import annotations

import csv
from dataclasses import dataclass, field
from datetime import date, datetime, timezone
from pathlib import Path

import numpy as np

from .errors import IntegrityError, ParameterError, ParseError, UnknownSiteError
from .solargeo import DEFAULT_TURBIDITY, GeoPoint, clearsky_arrays

OBS_COLUMNS = ["site_id", "timestamp", "lat", "lon", "ghi_ground", "ghi_sat", "temp", "humidity"]
NWP_COLUMNS = ["site_id", "issue_time", "horizon_h", "ghi_nwp", "temp_nwp", "humidity_nwp"]
N_HORIZONS = 6
HOUR = 3600

# per-slot channels addressable by name in masks/completeness checks
SLOT_CHANNELS = ("ground", "sat", "temp", "humidity")


def parse_hour_timestamp(text: str, where: str) -> int:
    """ISO-8601 UTC hour timestamp -> unix seconds."""
    try:
        t = datetime.fromisoformat(text.replace("Z", "+00:00"))
    except ValueError as exc:
        raise ParseError(f"{where}: bad timestamp {text!r}: {exc}") from None
    if t.tzinfo is None or t.utcoffset().total_seconds() != 0:
        raise ParseError(f"{where}: timestamp {text!r} must be UTC (Z suffix)")
    if t.minute or t.second or t.microsecond:
        raise ParseError(f"{where}: timestamp {text!r} is not on the hour")
    return int(t.timestamp())


def format_hour_timestamp(epoch_s: int) -> str:
    return datetime.fromtimestamp(int(epoch_s), tz=timezone.utc).strftime("%Y-%m-%dT%H:00:00Z")


def _parse_float(text: str, where: str) -> float:
    text = text.strip()
    if not text:
        return np.nan
    try:
        return float(text)
    except ValueError:
        raise ParseError(f"{where}: unparseable number {text!r}") from None


@dataclass
class NwpStore:
    """Per-site NWP forecasts keyed by (issue_time, horizon 1..6).

    Every present issuance carries all six horizons (no missing entries).
    """

    issue_epochs: np.ndarray  # (m,) int64, ascending
    ghi: np.ndarray  # (m, 6)
    temp: np.ndarray  # (m, 6)
    humidity: np.ndarray  # (m, 6)

    @classmethod
    def empty(cls) -> "NwpStore":
        z = np.zeros((0, N_HORIZONS))
        return cls(np.zeros(0, dtype=np.int64), z, z.copy(), z.copy())

    @property
    def n_issues(self) -> int:
        return len(self.issue_epochs)

    def lookup(self, issue_at: int, target_epoch: int, channel: str = "ghi") -> float:
        """Value for `target_epoch` from the latest issuance at or before
        `issue_at` whose 6-hour window still covers the target. NaN if none."""
        lo = target_epoch - N_HORIZONS * HOUR
        i = int(np.searchsorted(self.issue_epochs, issue_at, side="right")) - 1
        values = getattr(self, channel)
        while i >= 0 and self.issue_epochs[i] >= lo:
            h = (target_epoch - int(self.issue_epochs[i])) // HOUR
            if 1 <= h <= N_HORIZONS:
                return float(values[i, h - 1])
            i -= 1
        return np.nan


@dataclass
class SiteSeries:
    """One site's aligned hourly channels. Immutable after load."""

    site_id: str
    location: GeoPoint
    epochs: np.ndarray  # (n,) int64 slot starts, ascending, 1h step
    ground_ghi: np.ndarray  # (n,) float64, NaN = missing
    sat_ghi: np.ndarray
    temp: np.ndarray
    humidity: np.ndarray
    clearsky_ghi: np.ndarray  # (n,) float64, never NaN
    nwp: NwpStore = field(default_factory=NwpStore.empty)

    def __post_init__(self) -> None:
        n = len(self.epochs)
        if n > 1 and not np.all(np.diff(self.epochs) == HOUR):
            raise IntegrityError(f"site {self.site_id}: slot grid is not a 1h sequence")
        for name in ("ground_ghi", "sat_ghi", "temp", "humidity", "clearsky_ghi"):
            if len(getattr(self, name)) != n:
                raise IntegrityError(f"site {self.site_id}: channel {name} length mismatch")
        if np.isnan(self.clearsky_ghi).any():
            raise IntegrityError(f"site {self.site_id}: clear-sky channel has missing values")
        for name in ("ground_ghi", "sat_ghi", "clearsky_ghi"):
            v = getattr(self, name)
            if np.nanmin(v, initial=0.0) < 0.0:
                raise IntegrityError(f"site {self.site_id}: negative irradiance in {name}")

    @property
    def n(self) -> int:
        return len(self.epochs)

    def channel(self, name: str) -> np.ndarray:
        try:
            return {
                "ground": self.ground_ghi,
                "sat": self.sat_ghi,
                "temp": self.temp,
                "humidity": self.humidity,
                "clearsky": self.clearsky_ghi,
            }[name]
        except KeyError:
            raise ParameterError(f"unknown channel {name!r}") from None

    def slot_index(self, epoch_s: int) -> int:
        """Grid index of a slot start; -1 when outside the grid."""
        if self.n == 0:
            return -1
        off = (int(epoch_s) - int(self.epochs[0])) // HOUR
        if 0 <= off < self.n and (int(epoch_s) - int(self.epochs[0])) % HOUR == 0:
            return int(off)
        return -1


@dataclass(frozen=True)
class DatasetSplit:
    train: np.ndarray
    validation: np.ndarray
    test: np.ndarray


@dataclass(frozen=True)
class SitePartition:
    train_sites: tuple[str, ...]
    eval_sites: tuple[str, ...]


def _read_rows(path: Path, columns: list[str]) -> list[tuple[int, dict]]:
    try:
        fh = open(path, newline="", encoding="utf-8")
    except OSError as exc:
        raise ParseError(f"{path}: cannot open: {exc}") from None
    with fh:
        reader = csv.reader(fh)
        try:
            header = next(reader)
        except StopIteration:
            raise ParseError(f"{path}: empty file, header required") from None
        if [h.strip() for h in header] != columns:
            raise ParseError(f"{path}: header {header} does not match {columns}")
        rows = []
        for lineno, row in enumerate(reader, start=2):
            if not row or (len(row) == 1 and not row[0].strip()):
                continue
            if len(row) != len(columns):
                raise ParseError(f"{path}:{lineno}: expected {len(columns)} fields, got {len(row)}")
            rows.append((lineno, dict(zip(columns, row))))
        return rows


def _as_paths(paths) -> list[Path]:
    if isinstance(paths, (str, Path)):
        paths = [paths]
    return [Path(p) for p in paths]


def load_sites(
    obs_paths,
    nwp_paths=(),
    turbidity: float = DEFAULT_TURBIDITY,
) -> dict[str, SiteSeries]:
    """Load observation (and optional NWP) CSVs into per-site series.

    Channels are aligned on each site's continuous hourly grid; gaps become
    missing slots. The clear-sky channel is computed here (slot midpoints,
    given turbidity), so it can never be missing.
    """
    per_site: dict[str, dict] = {}
    for path in _as_paths(obs_paths):
        last_epoch: dict[str, int] = {}
        for lineno, row in _read_rows(path, OBS_COLUMNS):
            where = f"{path}:{lineno}"
            sid = row["site_id"].strip()
            if not sid:
                raise ParseError(f"{where}: empty site_id")
            epoch = parse_hour_timestamp(row["timestamp"].strip(), where)
            if sid in last_epoch and epoch < last_epoch[sid]:
                raise IntegrityError(f"{where}: timestamps for site {sid} regress within file")
            last_epoch[sid] = epoch
            lat = _parse_float(row["lat"], where)
            lon = _parse_float(row["lon"], where)
            if np.isnan(lat) or np.isnan(lon):
                raise ParseError(f"{where}: lat/lon must be present")
            values = tuple(
                _parse_float(row[c], where) for c in ("ghi_ground", "ghi_sat", "temp", "humidity")
            )
            entry = per_site.setdefault(sid, {"loc": (lat, lon), "rows": {}})
            if abs(entry["loc"][0] - lat) > 1e-9 or abs(entry["loc"][1] - lon) > 1e-9:
                raise IntegrityError(f"{where}: site {sid} coordinates differ from earlier rows")
            if epoch in entry["rows"]:
                raise IntegrityError(f"{where}: duplicate (site, timestamp) for {sid}")
            entry["rows"][epoch] = values

    nwp_per_site: dict[str, dict[int, dict[int, tuple]]] = {}
    for path in _as_paths(nwp_paths):
        for lineno, row in _read_rows(path, NWP_COLUMNS):
            where = f"{path}:{lineno}"
            sid = row["site_id"].strip()
            issue = parse_hour_timestamp(row["issue_time"].strip(), where)
            try:
                horizon = int(row["horizon_h"])
            except ValueError:
                raise ParseError(f"{where}: bad horizon {row['horizon_h']!r}") from None
            if not 1 <= horizon <= N_HORIZONS:
                raise ParseError(f"{where}: horizon {horizon} outside 1..{N_HORIZONS}")
            ghi = _parse_float(row["ghi_nwp"], where)
            if np.isnan(ghi):
                raise ParseError(f"{where}: ghi_nwp must be present")
            issues = nwp_per_site.setdefault(sid, {})
            per_h = issues.setdefault(issue, {})
            if horizon in per_h:
                raise IntegrityError(f"{where}: duplicate (site, issue_time, horizon)")
            per_h[horizon] = (ghi, _parse_float(row["temp_nwp"], where), _parse_float(row["humidity_nwp"], where))

    for sid in nwp_per_site:
        if sid not in per_site:
            raise IntegrityError(f"NWP file references unknown site {sid}")

    out: dict[str, SiteSeries] = {}
    for sid in sorted(per_site):
        entry = per_site[sid]
        epochs_present = np.array(sorted(entry["rows"]), dtype=np.int64)
        grid = np.arange(epochs_present[0], epochs_present[-1] + HOUR, HOUR, dtype=np.int64)
        chans = np.full((4, len(grid)), np.nan)
        idx = (epochs_present - grid[0]) // HOUR
        vals = np.array([entry["rows"][e] for e in epochs_present], dtype=np.float64)
        chans[:, idx] = vals.T
        loc = GeoPoint(entry["loc"][0], entry["loc"][1])

        store = NwpStore.empty()
        if sid in nwp_per_site:
            issues = nwp_per_site[sid]
            issue_epochs = np.array(sorted(issues), dtype=np.int64)
            ghi = np.empty((len(issue_epochs), N_HORIZONS))
            temp = np.empty_like(ghi)
            hum = np.empty_like(ghi)
            for i, ie in enumerate(issue_epochs):
                per_h = issues[int(ie)]
                if sorted(per_h) != list(range(1, N_HORIZONS + 1)):
                    raise IntegrityError(
                        f"site {sid}: issuance {format_hour_timestamp(int(ie))} lacks horizons 1..6"
                    )
                for h in range(1, N_HORIZONS + 1):
                    ghi[i, h - 1], temp[i, h - 1], hum[i, h - 1] = per_h[h]
            store = NwpStore(issue_epochs, ghi, temp, hum)

        out[sid] = SiteSeries(
            site_id=sid,
            location=loc,
            epochs=grid,
            ground_ghi=chans[0],
            sat_ghi=chans[1],
            temp=chans[2],
            humidity=chans[3],
            clearsky_ghi=clearsky_arrays(loc, grid + HOUR // 2, turbidity),
            nwp=store,
        )
    return out


def _fmt(x: float) -> str:
    return "" if np.isnan(x) else format(x, ".12g")


def write_sites(series_map: dict[str, SiteSeries], obs_path, nwp_path=None) -> None:
    """Emit series back to the ingestion schemas (12 significant digits)."""
    obs_path = Path(obs_path)
    with open(obs_path, "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh)
        w.writerow(OBS_COLUMNS)
        for sid in sorted(series_map):
            s = series_map[sid]
            lat, lon = _fmt(s.location.latitude_deg), _fmt(s.location.longitude_deg)
            for i in range(s.n):
                w.writerow(
                    [
                        sid,
                        format_hour_timestamp(int(s.epochs[i])),
                        lat,
                        lon,
                        _fmt(s.ground_ghi[i]),
                        _fmt(s.sat_ghi[i]),
                        _fmt(s.temp[i]),
                        _fmt(s.humidity[i]),
                    ]
                )
    if nwp_path is None:
        return
    with open(Path(nwp_path), "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh)
        w.writerow(NWP_COLUMNS)
        for sid in sorted(series_map):
            nwp = series_map[sid].nwp
            for i in range(nwp.n_issues):
                ts = format_hour_timestamp(int(nwp.issue_epochs[i]))
                for h in range(N_HORIZONS):
                    w.writerow(
                        [sid, ts, h + 1, _fmt(nwp.ghi[i, h]), _fmt(nwp.temp[i, h]), _fmt(nwp.humidity[i, h])]
                    )


def _as_date(d) -> date:
    if isinstance(d, date) and not isinstance(d, datetime):
        return d
    if isinstance(d, str):
        return date.fromisoformat(d)
    raise ParameterError(f"expected a date or ISO date string, got {d!r}")


def _date_epoch(d: date) -> int:
    return int(datetime(d.year, d.month, d.day, tzinfo=timezone.utc).timestamp())


def split_time(series: SiteSeries, boundaries) -> DatasetSplit:
    """Assign slots to train/validation/test by three inclusive date ranges.

    `boundaries` is three (start_date, end_date) pairs, ascending and
    non-overlapping; slots outside all ranges are dropped.
    """
    if len(boundaries) != 3:
        raise ParameterError("need exactly three (start, end) date ranges")
    ranges = []
    for start, end in boundaries:
        s, e = _as_date(start), _as_date(end)
        if e < s:
            raise ParameterError(f"range end {e} before start {s}")
        ranges.append((_date_epoch(s), _date_epoch(e) + 86400))
    for (a0, a1), (b0, b1) in zip(ranges, ranges[1:]):
        if b0 < a1:
            raise ParameterError("date ranges overlap or are not ascending")
    parts = [
        np.nonzero((series.epochs >= lo) & (series.epochs < hi))[0] for lo, hi in ranges
    ]
    return DatasetSplit(train=parts[0], validation=parts[1], test=parts[2])


def partition_sites(all_sites, train_ids) -> SitePartition:
    """Split site ids into the training subset and its complement."""
    ids = list(all_sites.keys()) if isinstance(all_sites, dict) else list(all_sites)
    known = set(ids)
    train = list(dict.fromkeys(train_ids))
    for sid in train:
        if sid not in known:
            raise UnknownSiteError(sid)
    eval_sites = [sid for sid in ids if sid not in set(train)]
    return SitePartition(train_sites=tuple(train), eval_sites=tuple(eval_sites))


def drop_incomplete(series: SiteSeries, required_channels) -> np.ndarray:
    """Mask excluding every slot where any required channel is missing."""
    mask = np.ones(series.n, dtype=bool)
    for name in required_channels:
        mask &= ~np.isnan(series.channel(name))
    return mask
