"""Clear-sky-index persistence baseline.

Assumes the clear-sky index at the issue hour holds until the prediction
hour: forecast = (I_h / Ic_h) * Ic_{h+p}.
"""

from __future__ import annotations

import numpy as np

CLEARSKY_EPS_WM2 = 1.0


def persistence_forecast(i_h: float, ic_h: float, ic_hp: float) -> tuple[float, bool]:
    """Forecast irradiance at the prediction hour plus a fallback flag.

    When the issue-hour clear-sky value is at or below 1 W/m^2 the index is
    undefined; the forecast falls back to the clear-sky value (k_c := 1)
    and the flag is set.
    """
    if ic_h <= CLEARSKY_EPS_WM2:
        return float(ic_hp), True
    return float(i_h / ic_h * ic_hp), False


def persistence_forecast_arrays(
    i_h: np.ndarray, ic_h: np.ndarray, ic_hp: np.ndarray
) -> tuple[np.ndarray, np.ndarray]:
    i_h, ic_h, ic_hp = map(np.asarray, (i_h, ic_h, ic_hp))
    fallback = ic_h <= CLEARSKY_EPS_WM2
    with np.errstate(divide="ignore", invalid="ignore"):
        pred = np.where(fallback, ic_hp, i_h / np.where(fallback, 1.0, ic_h) * ic_hp)
    return pred, fallback
