"""Spatial analyses: per-cell coverage maps and altitude uncertainty profiles."""

from __future__ import annotations

import warnings
from dataclasses import dataclass

import numpy as np

from ..errors import ConfigError, NumericError, ShapeError
from ..uq import z_for_level

MIN_STABLE_EPOCHS = 30

# Table of evaluation conditions: solar drivers (all eight, sfu), SYM-H (nT),
# hemispheric Poynting flux (GW), UTC hour and day of year.
CONDITION_PRESETS = {
    "Solar 1": {"FMSY": 75.0, "SYM_H": 0.0, "S_NS": 27.0, "UTC": 0.0, "doy": 262.0},
    "Solar 2": {"FMSY": 120.0, "SYM_H": 0.0, "S_NS": 27.0, "UTC": 0.0, "doy": 262.0},
    "Solar 3": {"FMSY": 190.0, "SYM_H": 0.0, "S_NS": 27.0, "UTC": 0.0, "doy": 262.0},
    "Geo 2": {"FMSY": 120.0, "SYM_H": -75.0, "S_NS": 128.0, "UTC": 0.0, "doy": 262.0},
    "Geo 3": {"FMSY": 190.0, "SYM_H": -75.0, "S_NS": 128.0, "UTC": 0.0, "doy": 262.0},
    "UTC 2": {"FMSY": 120.0, "SYM_H": 0.0, "S_NS": 27.0, "UTC": 12.0, "doy": 262.0},
    "doy 2": {"FMSY": 120.0, "SYM_H": 0.0, "S_NS": 27.0, "UTC": 0.0, "doy": 172.0},
    "doy 3": {"FMSY": 120.0, "SYM_H": 0.0, "S_NS": 27.0, "UTC": 0.0, "doy": 355.0},
}
CONDITION_PRESETS["Geo 1"] = CONDITION_PRESETS["UTC 1"] = CONDITION_PRESETS["doy 1"] = CONDITION_PRESETS["Solar 2"]

PROFILE_LAT = np.linspace(-87.5, 87.5, 36)
PROFILE_LST = np.arange(0.0, 24.0, 1.0)


@dataclass
class Condition:
    drivers: dict
    ut: float
    doy: float
    name: str = ""


def condition_preset(name: str) -> Condition:
    try:
        c = CONDITION_PRESETS[name]
    except KeyError:
        raise ConfigError(f"unknown condition preset {name!r}; choose from {sorted(CONDITION_PRESETS)}") from None
    drivers = {k: c["FMSY"] for k in ("F10", "S10", "M10", "Y10", "F81c", "S81c", "M81c", "Y81c")}
    drivers.update(SYM_H=c["SYM_H"], S_N=c["S_NS"], S_S=c["S_NS"])
    return Condition(drivers, c["UTC"], c["doy"], name)


@dataclass
class CoverageMap:
    level: float
    cells: np.ndarray  # observed coverage per spatial cell
    per_altitude: np.ndarray  # mean over all but the last axis
    n_epochs: int
    warning: str | None = None

    def rows(self, lon=None, lat=None, alt=None) -> list[dict]:
        out = []
        for (i, j, k), v in np.ndenumerate(self.cells):
            out.append({
                "lon": float(lon[i]) if lon is not None else i,
                "lat": float(lat[j]) if lat is not None else j,
                "alt": float(alt[k]) if alt is not None else k,
                "coverage": float(v),
            })
        return out


def coverage_map(mu, sigma, y_true, p: float = 0.90) -> CoverageMap:
    """Fraction of epochs whose truth falls in the closed ``p`` interval, per cell.

    Inputs share a shape whose first axis is the epoch and whose last axis is
    altitude.  Any monotone transform of the predictive distribution (e.g.
    log10 density) gives the same coverage.
    """
    mu, sigma, y = (np.asarray(a, dtype=np.float64) for a in (mu, sigma, y_true))
    if not (mu.shape == sigma.shape == y.shape) or mu.ndim < 2:
        raise ShapeError("mu, sigma and truth must share a shape (epochs, ..., alt)")
    z = z_for_level(p)
    cells = (np.abs(y - mu) <= z * sigma).mean(axis=0)
    per_alt = cells.reshape(-1, cells.shape[-1]).mean(axis=0)
    warn = None
    if mu.shape[0] < MIN_STABLE_EPOCHS:
        warn = f"only {mu.shape[0]} epochs; coverage estimates are unstable below {MIN_STABLE_EPOCHS}"
        warnings.warn(warn, RuntimeWarning, stacklevel=2)
    return CoverageMap(p, cells, per_alt, mu.shape[0], warn)


def lognormal_moments(mu_log10, sigma_log10):
    """Mean and standard deviation of ``10 ** X`` for ``X ~ N(mu, sigma^2)``."""
    s = np.asarray(sigma_log10) * np.log(10.0)
    mean = 10.0 ** np.asarray(mu_log10) * np.exp(0.5 * s * s)
    std = mean * np.sqrt(np.expm1(s * s))
    return mean, std


def altitude_uncertainty_profile(predict_fn, condition: Condition, alts=None, lat=PROFILE_LAT, lst=PROFILE_LST):
    """Lateral mean of ``100 * sigma / mu`` at each altitude.

    ``predict_fn(lat, lst, alt, condition)`` receives flat arrays of grid
    points (one altitude at a time) and returns density mean and standard
    deviation arrays.

    Returns
    -------
    alts, profile : ndarray
    """
    alts = np.arange(300.0, 451.0, 1.0) if alts is None else np.asarray(alts, dtype=np.float64)
    la, ls = np.meshgrid(np.asarray(lat, dtype=np.float64), np.asarray(lst, dtype=np.float64), indexing="ij")
    la, ls = la.ravel(), ls.ravel()
    prof = np.empty(alts.size)
    for i, a in enumerate(alts):
        mu, sd = predict_fn(la, ls, np.full(la.size, a), condition)
        mu = np.asarray(mu, dtype=np.float64)
        if np.any(mu <= 0):
            raise NumericError(f"non-positive mean density at {a} km")
        prof[i] = np.mean(100.0 * np.asarray(sd) / mu)
    return alts, prof
