"""Solar position and clear-sky irradiance.

Position comes from the NOAA solar calculator equations (Meeus-derived,
medium accuracy, valid 1950-2100) including the standard atmospheric
refraction correction. Clear-sky GHI uses the Ineichen-Perez formulation
at sea level with a configurable Linke turbidity.

Hourly slots are labeled by their start hour h and represent the average
over [h, h+1); geometric quantities for a slot are therefore evaluated at
the slot midpoint h+30min.
"""

from __future__ import annotations

from dataclasses import dataclass
from datetime import datetime, timezone

import numpy as np

from .errors import ParameterError, TimestampRangeError

SOLAR_CONSTANT_WM2 = 1366.1
DEFAULT_TURBIDITY = 3.0

# 1950-01-01T00:00Z .. 2100-12-31T23:59:59Z as unix seconds
_EPOCH_MIN = -631152000
_EPOCH_MAX = 4133980799

# elevation snapped to this grid so elevation + zenith == 90 holds exactly
_SNAP = 2.0**20


@dataclass(frozen=True)
class GeoPoint:
    """A ground location in WGS-84 degrees."""

    latitude_deg: float
    longitude_deg: float

    def __post_init__(self) -> None:
        if not -90.0 <= self.latitude_deg <= 90.0:
            raise ParameterError(f"latitude {self.latitude_deg} outside [-90, 90]")
        if not -180.0 <= self.longitude_deg <= 180.0:
            raise ParameterError(f"longitude {self.longitude_deg} outside [-180, 180]")


@dataclass(frozen=True)
class SolarPosition:
    elevation_deg: float
    zenith_deg: float
    azimuth_deg: float


@dataclass(frozen=True)
class ClearSkyValue:
    ghi_wm2: float


def to_epoch(t: datetime) -> int:
    """UTC datetime -> unix seconds. Naive datetimes are taken as UTC."""
    if t.tzinfo is None:
        t = t.replace(tzinfo=timezone.utc)
    return int(t.timestamp())


def _check_epoch_range(epoch_s: np.ndarray) -> None:
    if epoch_s.size == 0:
        return
    lo, hi = int(epoch_s.min()), int(epoch_s.max())
    if lo < _EPOCH_MIN or hi > _EPOCH_MAX:
        raise TimestampRangeError(
            "timestamp outside the 1950-2100 validity window of the solar algorithm"
        )


def _refraction_deg(elev_deg: np.ndarray) -> np.ndarray:
    """NOAA refraction correction, degrees, as a function of true elevation."""
    with np.errstate(divide="ignore", invalid="ignore"):
        te = np.tan(np.radians(elev_deg))
        high = 58.1 / te - 0.07 / te**3 + 0.000086 / te**5
        low = -20.774 / te
    mid = 1735.0 + elev_deg * (-518.2 + elev_deg * (103.4 + elev_deg * (-12.79 + elev_deg * 0.711)))
    corr = np.where(
        elev_deg > 85.0,
        0.0,
        np.where(elev_deg > 5.0, high, np.where(elev_deg > -0.575, mid, low)),
    )
    return corr / 3600.0


def position_arrays(site: GeoPoint, epoch_s: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Apparent elevation and azimuth (degrees) for an array of unix seconds."""
    epoch_s = np.asarray(epoch_s, dtype=np.float64)
    _check_epoch_range(epoch_s)

    jd = epoch_s / 86400.0 + 2440587.5
    t = (jd - 2451545.0) / 36525.0

    mean_long = np.mod(280.46646 + t * (36000.76983 + 0.0003032 * t), 360.0)
    mean_anom = 357.52911 + t * (35999.05029 - 0.0001537 * t)
    ecc = 0.016708634 - t * (0.000042037 + 0.0000001267 * t)

    ma = np.radians(mean_anom)
    eq_center = (
        np.sin(ma) * (1.914602 - t * (0.004817 + 0.000014 * t))
        + np.sin(2 * ma) * (0.019993 - 0.000101 * t)
        + np.sin(3 * ma) * 0.000289
    )
    true_long = mean_long + eq_center
    omega = np.radians(125.04 - 1934.136 * t)
    app_long = np.radians(true_long - 0.00569 - 0.00478 * np.sin(omega))

    obliq0 = 23.0 + (26.0 + (21.448 - t * (46.815 + t * (0.00059 - t * 0.001813))) / 60.0) / 60.0
    obliq = np.radians(obliq0 + 0.00256 * np.cos(omega))

    decl = np.arcsin(np.sin(obliq) * np.sin(app_long))

    y = np.tan(obliq / 2.0) ** 2
    ml = np.radians(mean_long)
    eqtime_min = 4.0 * np.degrees(
        y * np.sin(2 * ml)
        - 2 * ecc * np.sin(ma)
        + 4 * ecc * y * np.sin(ma) * np.cos(2 * ml)
        - 0.5 * y * y * np.sin(4 * ml)
        - 1.25 * ecc * ecc * np.sin(2 * ma)
    )

    tst_min = np.mod(np.mod(epoch_s, 86400.0) / 60.0 + eqtime_min + 4.0 * site.longitude_deg, 1440.0)
    ha_deg = np.where(tst_min / 4.0 < 0.0, tst_min / 4.0 + 180.0, tst_min / 4.0 - 180.0)
    ha = np.radians(ha_deg)

    lat = np.radians(site.latitude_deg)
    cos_zen = np.sin(lat) * np.sin(decl) + np.cos(lat) * np.cos(decl) * np.cos(ha)
    cos_zen = np.clip(cos_zen, -1.0, 1.0)
    zen = np.arccos(cos_zen)
    elev = 90.0 - np.degrees(zen)

    with np.errstate(divide="ignore", invalid="ignore"):
        az_arg = (np.sin(lat) * cos_zen - np.sin(decl)) / (np.cos(lat) * np.sin(zen))
    az_arg = np.clip(np.nan_to_num(az_arg, nan=1.0), -1.0, 1.0)
    az = np.degrees(np.arccos(az_arg))
    azimuth = np.mod(np.where(ha_deg > 0.0, az + 180.0, 540.0 - az), 360.0)

    return elev + _refraction_deg(elev), azimuth


def solar_position(site: GeoPoint, t: datetime) -> SolarPosition:
    """Apparent solar position at instant t (UTC).

    Elevation is snapped to a dyadic grid (~1e-6 deg, far below the
    algorithm's accuracy) so that elevation + zenith == 90 exactly.
    """
    elev, azim = position_arrays(site, np.array([to_epoch(t)]))
    e = np.round(float(elev[0]) * _SNAP) / _SNAP
    a = np.mod(np.round(float(azim[0]) * _SNAP) / _SNAP, 360.0)
    return SolarPosition(elevation_deg=e, zenith_deg=90.0 - e, azimuth_deg=a)


def _day_of_year(epoch_s: np.ndarray) -> np.ndarray:
    d = np.asarray(epoch_s, dtype="int64").astype("datetime64[s]")
    days = d.astype("datetime64[D]")
    year_start = days.astype("datetime64[Y]").astype("datetime64[D]")
    return (days - year_start).astype(np.int64) + 1


def clearsky_arrays(
    site: GeoPoint, epoch_s: np.ndarray, turbidity: float = DEFAULT_TURBIDITY
) -> np.ndarray:
    """Clear-sky GHI (W/m^2) for an array of unix seconds (Ineichen-Perez, 0 m)."""
    if not 1.0 <= turbidity <= 10.0:
        raise ParameterError(f"turbidity {turbidity} outside [1, 10]")
    epoch_s = np.asarray(epoch_s, dtype=np.int64)
    elev, _ = position_arrays(site, epoch_s)

    sin_elev = np.sin(np.radians(np.maximum(elev, 0.0)))
    # Kasten-Young airmass; clamp keeps the horizon pole out of the formula
    am = 1.0 / (sin_elev + 0.50572 * (np.maximum(elev, -1.0) + 6.07995) ** -1.6364)

    doy = _day_of_year(epoch_s)
    ecc = 1.0 + 0.033 * np.cos(2.0 * np.pi * doy / 365.0)

    # altitude 0 m: cg1=0.868, cg2=0.0387, fh1=fh2=1
    ghi = 0.868 * SOLAR_CONSTANT_WM2 * ecc * sin_elev * np.exp(-0.0387 * am * turbidity)
    return np.where(elev > 0.0, np.maximum(ghi, 0.0), 0.0)


def clearsky_ghi(
    site: GeoPoint, t: datetime, turbidity: float = DEFAULT_TURBIDITY
) -> ClearSkyValue:
    ghi = clearsky_arrays(site, np.array([to_epoch(t)]), turbidity)
    return ClearSkyValue(ghi_wm2=float(ghi[0]))


def slot_elevations(site: GeoPoint, slot_epochs: np.ndarray) -> np.ndarray:
    """Apparent elevation at each hourly slot's midpoint (start + 30 min)."""
    mid = np.asarray(slot_epochs, dtype=np.int64) + 1800
    elev, _ = position_arrays(site, mid)
    return elev


def elevation_filter(series, min_elevation_deg: float) -> np.ndarray:
    """Boolean mask of slots whose midpoint solar elevation >= threshold.

    `series` is any object with `location` and `epochs` (hourly slot starts).
    """
    return slot_elevations(series.location, series.epochs) >= min_elevation_deg
