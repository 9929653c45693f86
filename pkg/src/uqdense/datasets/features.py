"""Circular encodings of time-of-year, universal time and local solar time."""

from __future__ import annotations

import numpy as np

from ..errors import DomainError

DAYS_PER_YEAR = 365.25
MAX_DOY = 367.0


def _check_range(name, v, lo, hi):
    v = np.asarray(v, dtype=np.float64)
    if np.any(~np.isfinite(v)) or np.any(v < lo) or np.any(v >= hi):
        raise DomainError(f"{name} outside [{lo}, {hi})")
    return v


def time_features(doy, ut_hours):
    """Return ``(t1, t2, t3, t4)``: sin/cos of the annual and daily phases.

    ``doy`` is a fractional day of year in [0, 367), which covers the last
    day of a leap year; ``ut_hours`` lies in [0, 24).  The annual phase uses
    a 365.25-day year.
    """
    doy = _check_range("doy", doy, 0.0, MAX_DOY)
    ut = _check_range("ut_hours", ut_hours, 0.0, 24.0)
    a = 2.0 * np.pi * doy / DAYS_PER_YEAR
    b = 2.0 * np.pi * ut / 24.0
    return np.sin(a), np.cos(a), np.sin(b), np.cos(b)


def lst_features(lst_hours):
    """Return ``(LST1, LST2)`` = sin/cos of ``2*pi*LST/24``."""
    lst = _check_range("lst_hours", lst_hours, 0.0, 24.0)
    b = 2.0 * np.pi * lst / 24.0
    return np.sin(b), np.cos(b)


def doy_ut(epochs):
    """Fractional day of year (1-based) and UT hours of datetime64 epochs."""
    e = np.asarray(epochs, dtype="datetime64[s]")
    year_start = e.astype("datetime64[Y]").astype("datetime64[s]")
    day_start = e.astype("datetime64[D]").astype("datetime64[s]")
    ut = (e - day_start).astype(np.int64) / 3600.0
    doy = (e - year_start).astype(np.int64) / 86400.0 + 1.0
    return doy, ut


def global_inputs(series) -> tuple[np.ndarray, list[str]]:
    """Feature matrix for the global model: solar, ap, Dst drivers then t1..t4."""
    from .synth import HASDM_DRIVERS

    doy, ut = doy_ut(series.epochs)
    t = time_features(doy, ut)
    x = np.column_stack([series.matrix(HASDM_DRIVERS), *t])
    return x, list(HASDM_DRIVERS) + ["t1", "t2", "t3", "t4"]


LOCAL_INPUT_NAMES = ["F10", "S10", "M10", "Y10", "F81c", "S81c", "M81c", "Y81c", "SYM_H", "S_N", "S_S",
                     "LST1", "LST2", "LAT", "ALT", "t1", "t2", "t3", "t4"]


def local_inputs_from(drivers: dict, lat, lst, alt, doy, ut) -> np.ndarray:
    """Feature matrix for the in-situ model, columns in ``LOCAL_INPUT_NAMES`` order."""
    lat = np.asarray(lat, dtype=np.float64)
    n = lat.size
    cols = [np.broadcast_to(np.asarray(drivers[k], dtype=np.float64), (n,))
            for k in LOCAL_INPUT_NAMES[:11]]
    l1, l2 = lst_features(np.broadcast_to(lst, (n,)))
    t = time_features(np.broadcast_to(doy, (n,)), np.broadcast_to(ut, (n,)))
    return np.column_stack(cols + [l1, l2, lat, np.broadcast_to(alt, (n,)), *t])


def local_inputs(ds) -> tuple[np.ndarray, list[str]]:
    doy, ut = doy_ut(ds.epochs)
    return local_inputs_from(ds.drivers, ds.lat, ds.lst, ds.alt, doy, ut), list(LOCAL_INPUT_NAMES)
