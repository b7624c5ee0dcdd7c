"""Synthetic multi-site dataset generator.

The stochastic state is a clear-sky-index field k_c(t, site): spatially
correlated across sites through a Gaussian kernel over great-circle
distance, AR(1) in time, clipped to [0.05, 1.1]. Ground truth is
k_c x clear-sky GHI, so nights are exactly zero; the satellite and NWP
channels are derived from the same field (pixel-cell discrepancy +
multiplicative noise, and horizon-growing forecast noise applied in
k_c space), which keeps them zero at night too.

All randomness flows from one 64-bit seed through named Philox
substreams; generation is single-pass vectorized, so output is
bit-identical across runs and thread counts.
"""

from __future__ import annotations

from dataclasses import dataclass
from datetime import date, datetime, timezone

import numpy as np

from .data import HOUR, N_HORIZONS, NwpStore, SiteSeries
from .errors import ParameterError
from .rngutil import substream
from .solargeo import GeoPoint, clearsky_arrays

KC_MIN, KC_MAX = 0.05, 1.1
KC_PHYS_MAX = 1.2  # post-noise clip: irradiance never exceeds 1.2 x clear sky
EARTH_RADIUS_KM = 6371.0

# every substream label the generator derives from the seed
STREAM_LABELS = (
    "sites",
    "kc",
    "sat_pixel/<site>",
    "sat_mult/<site>",
    "nwp_ghi/<site>",
    "nwp_temp/<site>",
    "nwp_humidity/<site>",
    "temp/<site>",
    "humidity/<site>",
    "missing/<channel>/<site>",
)


_stream = substream


@dataclass(frozen=True)
class SynthConfig:
    n_sites: int = 30
    bbox: tuple[GeoPoint, GeoPoint] = (GeoPoint(50.75, 3.40), GeoPoint(53.50, 7.20))
    start: str = "2014-01-01"
    end: str = "2017-12-31"
    seed: int = 1
    cloud_persistence: float = 0.90  # AR(1) coefficient of the k_c field
    spatial_corr_km: float = 80.0  # e-folding distance of the Gaussian kernel
    sat_noise_rel: float = 0.05
    sat_pixel_km: float = 3.0
    nwp_noise_base_rel: float = 0.12
    nwp_noise_growth_rel: float = 0.035
    missing_rate: float = 0.01
    kc_mean: float = 0.65
    kc_std: float = 0.30
    turbidity: float = 3.0

    def __post_init__(self) -> None:
        if self.n_sites < 1:
            raise ParameterError("n_sites must be >= 1")
        lo, hi = self.bbox
        if not (hi.latitude_deg > lo.latitude_deg and hi.longitude_deg > lo.longitude_deg):
            raise ParameterError("bounding box is degenerate (spans must be positive)")
        if not 0.0 <= self.cloud_persistence < 1.0:
            raise ParameterError("cloud_persistence must be in [0, 1)")
        if self.spatial_corr_km <= 0.0:
            raise ParameterError("spatial_corr_km must be positive")
        for name in ("sat_noise_rel", "sat_pixel_km", "nwp_noise_base_rel", "nwp_noise_growth_rel"):
            if getattr(self, name) < 0.0:
                raise ParameterError(f"{name} must be >= 0")
        if not 0.0 <= self.missing_rate <= 0.2:
            raise ParameterError("missing_rate must be in [0, 0.2]")
        if not 0.0 < self.kc_mean < KC_MAX or self.kc_std <= 0.0:
            raise ParameterError("k_c distribution parameters out of range")
        if not 1.0 <= self.turbidity <= 10.0:
            raise ParameterError("turbidity outside [1, 10]")
        date.fromisoformat(self.start), date.fromisoformat(self.end)
        if date.fromisoformat(self.end) < date.fromisoformat(self.start):
            raise ParameterError("end date precedes start date")


def _time_grid(cfg: SynthConfig) -> np.ndarray:
    d0, d1 = date.fromisoformat(cfg.start), date.fromisoformat(cfg.end)
    t0 = int(datetime(d0.year, d0.month, d0.day, tzinfo=timezone.utc).timestamp())
    t1 = int(datetime(d1.year, d1.month, d1.day, 23, tzinfo=timezone.utc).timestamp())
    return np.arange(t0, t1 + 1, HOUR, dtype=np.int64)


def _site_ids(n: int) -> list[str]:
    width = max(2, len(str(n - 1)))
    return [f"s{i:0{width}d}" for i in range(n)]


def gen_sites(cfg: SynthConfig) -> list[tuple[str, GeoPoint]]:
    """Seed-determined site coordinates strictly inside the bounding box."""
    rng = _stream(cfg.seed, "sites")
    lo, hi = cfg.bbox
    u = rng.random((cfg.n_sites, 2))
    lat = lo.latitude_deg + (hi.latitude_deg - lo.latitude_deg) * (0.001 + 0.998 * u[:, 0])
    lon = lo.longitude_deg + (hi.longitude_deg - lo.longitude_deg) * (0.001 + 0.998 * u[:, 1])
    return [
        (sid, GeoPoint(float(lat[i]), float(lon[i])))
        for i, sid in enumerate(_site_ids(cfg.n_sites))
    ]


def great_circle_km(a: GeoPoint, b: GeoPoint) -> float:
    la1, lo1, la2, lo2 = map(
        np.radians, (a.latitude_deg, a.longitude_deg, b.latitude_deg, b.longitude_deg)
    )
    s = np.sin((la2 - la1) / 2) ** 2 + np.cos(la1) * np.cos(la2) * np.sin((lo2 - lo1) / 2) ** 2
    return float(2 * EARTH_RADIUS_KM * np.arcsin(np.sqrt(s)))


def _kc_field(cfg: SynthConfig, sites: list[tuple[str, GeoPoint]], n_slots: int) -> np.ndarray:
    """(n_slots, n_sites) clear-sky-index field, clipped to [KC_MIN, KC_MAX]."""
    n = len(sites)
    dist = np.zeros((n, n))
    for i in range(n):
        for j in range(i + 1, n):
            dist[i, j] = dist[j, i] = great_circle_km(sites[i][1], sites[j][1])
    kernel = np.exp(-((dist / cfg.spatial_corr_km) ** 2)) + 1e-10 * np.eye(n)
    chol = np.linalg.cholesky(kernel)

    eps = _stream(cfg.seed, "kc").standard_normal((n_slots, n))
    corr = eps @ chol.T
    rho = cfg.cloud_persistence
    scale = np.sqrt(1.0 - rho * rho)
    z = np.empty_like(corr)
    z[0] = corr[0]
    for t in range(1, n_slots):
        z[t] = rho * z[t - 1] + scale * corr[t]
    return np.clip(cfg.kc_mean + cfg.kc_std * z, KC_MIN, KC_MAX)


def _inject_missing(cfg: SynthConfig, sid: str, channel: str, values: np.ndarray) -> np.ndarray:
    if cfg.missing_rate == 0.0:
        return values
    u = _stream(cfg.seed, f"missing/{channel}/{sid}").random(values.shape)
    out = values.copy()
    out[u < cfg.missing_rate] = np.nan
    return out


def gen_dataset(cfg: SynthConfig) -> dict[str, SiteSeries]:
    """Generate the full multi-site dataset described by `cfg`."""
    sites = gen_sites(cfg)
    epochs = _time_grid(cfg)
    n_slots = len(epochs)
    kc = _kc_field(cfg, sites, n_slots)

    pixel_scale = cfg.kc_std * np.sqrt(
        1.0 - np.exp(-((cfg.sat_pixel_km / cfg.spatial_corr_km) ** 2))
    )
    n_issues = max(n_slots - N_HORIZONS, 0)
    sigma_nwp = cfg.nwp_noise_base_rel + cfg.nwp_noise_growth_rel * np.arange(N_HORIZONS)
    hod = (epochs // HOUR) % 24
    doy = (epochs.astype("datetime64[s]").astype("datetime64[D]")
           - epochs.astype("datetime64[s]").astype("datetime64[Y]").astype("datetime64[D]")
           ).astype(np.int64) + 1

    out: dict[str, SiteSeries] = {}
    for j, (sid, loc) in enumerate(sites):
        ic = clearsky_arrays(loc, epochs + HOUR // 2, cfg.turbidity)
        kc_j = kc[:, j]
        ground = kc_j * ic

        sat_kc = kc_j
        if pixel_scale > 0.0:
            sat_kc = np.clip(
                kc_j + pixel_scale * _stream(cfg.seed, f"sat_pixel/{sid}").standard_normal(n_slots),
                0.0,
                KC_PHYS_MAX,
            )
        sat = sat_kc * ic
        if cfg.sat_noise_rel > 0.0:
            mult = 1.0 + cfg.sat_noise_rel * _stream(cfg.seed, f"sat_mult/{sid}").standard_normal(n_slots)
            sat = np.clip(sat * mult, 0.0, KC_PHYS_MAX * ic)

        temp = (
            10.0
            + 9.0 * np.sin(2.0 * np.pi * (doy - 110) / 365.25)
            + 5.0 * np.sin(2.0 * np.pi * (hod - 10) / 24.0)
            + 5.0 * (kc_j - cfg.kc_mean)
            + _stream(cfg.seed, f"temp/{sid}").standard_normal(n_slots)
        )
        humidity = np.clip(
            72.0
            - 28.0 * (kc_j - cfg.kc_mean)
            + 4.0 * _stream(cfg.seed, f"humidity/{sid}").standard_normal(n_slots),
            5.0,
            100.0,
        )

        # hourly issuances: at slot h, horizons 1..6 target slots h+1..h+6
        target = np.stack([np.arange(p, n_issues + p) for p in range(1, N_HORIZONS + 1)], axis=1)
        nwp_kc = np.clip(
            kc_j[target]
            + sigma_nwp * _stream(cfg.seed, f"nwp_ghi/{sid}").standard_normal((n_issues, N_HORIZONS)),
            0.0,
            KC_PHYS_MAX,
        )
        nwp_ghi = nwp_kc * ic[target]
        nwp_temp = temp[target] + (
            (0.8 + 0.2 * np.arange(N_HORIZONS))
            * _stream(cfg.seed, f"nwp_temp/{sid}").standard_normal((n_issues, N_HORIZONS))
        )
        nwp_hum = np.clip(
            humidity[target]
            + (3.0 + 0.5 * np.arange(N_HORIZONS))
            * _stream(cfg.seed, f"nwp_humidity/{sid}").standard_normal((n_issues, N_HORIZONS)),
            0.0,
            100.0,
        )

        out[sid] = SiteSeries(
            site_id=sid,
            location=loc,
            epochs=epochs,
            ground_ghi=_inject_missing(cfg, sid, "ground", ground),
            sat_ghi=_inject_missing(cfg, sid, "sat", sat),
            temp=_inject_missing(cfg, sid, "temp", temp),
            humidity=_inject_missing(cfg, sid, "humidity", humidity),
            clearsky_ghi=ic,
            nwp=NwpStore(epochs[:n_issues].copy(), nwp_ghi, nwp_temp, nwp_hum),
        )
    return out
