"""Synthetic space-weather drivers and thermospheric densities with known noise.

The density law is an analytic stand-in for a global empirical model.  Its
constants are generator definitions chosen so that the per-cell noise
standard deviation (in log10 density) is known exactly:

    h = (alt - 175) / 650,  s = (F10 - 60) / 200,  g = clip(ap / 400, 0, 1)
    decl = 23.44 deg * sin(2 pi (doy - 80) / 365.25)
    C = cos(pi (LST - 14) / 12) * cos(lat - decl)
    log10 rho = -11.5 - 4 h (1 - 0.45 s) + 0.35 (1 + s) max(0, C)^2
                + 1.2 g sin^2(lat) h + N(0, sigma_n)
    sigma_n = 0.02 + 0.03 h + 0.05 g
"""

from __future__ import annotations

from dataclasses import dataclass, field, fields

import numpy as np

from ..errors import ConfigError
from ..rom_pca import ALT_KM, GRID_SHAPE, LAT_DEG, LON_DEG, DensityGrid
from .features import doy_ut

SOLAR = ("F10", "S10", "M10", "Y10", "F81c", "S81c", "M81c", "Y81c")
AP_FAMILY = ("apA", "ap", "ap3", "ap6", "ap9", "ap12_33", "ap36_57")
DST_FAMILY = ("DstA", "Dst", "Dst3", "Dst6", "Dst9", "Dst12", "Dst15", "Dst18", "Dst21")
HASDM_DRIVERS = SOLAR + AP_FAMILY + DST_FAMILY
CHAMP_DRIVERS = SOLAR + ("SYM_H", "S_N", "S_S")
ALL_DRIVERS = SOLAR + AP_FAMILY + DST_FAMILY + ("SYM_H", "S_N", "S_S")

AP_LEVELS = np.array([0, 2, 3, 4, 5, 6, 7, 9, 12, 15, 18, 22, 27, 32, 39, 48, 56, 67, 80, 94, 111, 132,
                      154, 179, 207, 236, 300, 400], dtype=np.float64)

INCLINATION_DEG = 87.3
ALT_START_KM = 460.0
ALT_END_KM = 300.0
MISSION_DAYS = 2975  # 2002-01-01 .. 2010-02-22
ORBIT_PERIOD_S = 5520.0
NODE_LST_PERIOD_DAYS = 130.0
CADENCE_S = 10.0
DEFAULT_START = np.datetime64("2002-01-01T00:00:00", "s")


@dataclass
class DriverRecord:
    """Space-weather drivers at one epoch (solar in sfu, Dst/SYM-H in nT, Poynting flux in GW)."""

    epoch: np.datetime64 | None = None
    F10: float = 120.0
    S10: float = 120.0
    M10: float = 120.0
    Y10: float = 120.0
    F81c: float = 120.0
    S81c: float = 120.0
    M81c: float = 120.0
    Y81c: float = 120.0
    apA: float = 4.0
    ap: float = 4.0
    ap3: float = 4.0
    ap6: float = 4.0
    ap9: float = 4.0
    ap12_33: float = 4.0
    ap36_57: float = 4.0
    DstA: float = 0.0
    Dst: float = 0.0
    Dst3: float = 0.0
    Dst6: float = 0.0
    Dst9: float = 0.0
    Dst12: float = 0.0
    Dst15: float = 0.0
    Dst18: float = 0.0
    Dst21: float = 0.0
    SYM_H: float = 0.0
    S_N: float = 27.0
    S_S: float = 27.0

    def __post_init__(self):
        for name in SOLAR:
            if not getattr(self, name) > 0:
                raise ConfigError(f"solar driver {name} must be positive")

    def as_dict(self) -> dict:
        return {f.name: getattr(self, f.name) for f in fields(self) if f.name != "epoch"}


@dataclass
class DriverSeries:
    """Column-oriented driver time series."""

    epochs: np.ndarray  # datetime64[s]
    columns: dict = field(default_factory=dict)

    def __len__(self) -> int:
        return len(self.epochs)

    def __getitem__(self, name):
        if isinstance(name, str):
            return self.columns[name]
        return DriverRecord(self.epochs[name], **{k: float(v[name]) for k, v in self.columns.items()})

    def take(self, idx) -> "DriverSeries":
        return DriverSeries(self.epochs[idx], {k: v[idx] for k, v in self.columns.items()})

    def matrix(self, names) -> np.ndarray:
        return np.column_stack([self.columns[n] for n in names])


# ---------------------------------------------------------------------- drivers
def _ar1(rng, n, phi, sd):
    z = np.empty(n)
    z[0] = rng.standard_normal() * sd
    eps = rng.standard_normal(n) * sd * np.sqrt(1 - phi * phi)
    for i in range(1, n):
        z[i] = phi * z[i - 1] + eps[i]
    return z


def _centered_mean(x, width):
    kernel = np.ones(width) / width
    return np.convolve(x, kernel, mode="same")


def _trailing_mean(x, lo, hi):
    """Mean of ``x[i-hi] .. x[i-lo]`` (inclusive) using edge padding."""
    pad = np.concatenate([np.full(hi, x[0]), x])
    c = np.concatenate([[0.0], np.cumsum(pad)])
    i = np.arange(len(x)) + hi
    return (c[i - lo + 1] - c[i - hi]) / (hi - lo + 1)


def _lag(x, k):
    return np.concatenate([np.full(k, x[0]), x[:-k]]) if k else x.copy()


def synth_drivers(epochs, seed: int = 0) -> DriverSeries:
    """Reproducible driver series sampled at arbitrary epochs.

    Latent processes live on an hourly grid spanning the epochs (plus spin-up
    for the lagged and 81-day averaged quantities); solar drivers are daily,
    ap is three-hourly and quantized to its 28 official levels.
    """
    epochs = np.asarray(epochs, dtype="datetime64[s]")
    if epochs.size == 0:
        raise ConfigError("need at least one epoch")
    rng = np.random.default_rng(seed)
    spin_days = 45
    t0 = epochs.min().astype("datetime64[D]") - np.timedelta64(spin_days, "D")
    t1 = epochs.max().astype("datetime64[D]") + np.timedelta64(spin_days + 1, "D")
    n_days = int((t1 - t0).astype(np.int64))
    n_hours = n_days * 24

    # daily solar activity: mean-reverting level plus 27-day rotation
    days = np.arange(n_days)
    level = 130.0 + 45.0 * _ar1(rng, n_days, 0.9, 1.0)
    rot = 15.0 * np.sin(2 * np.pi * days / 27.0 + rng.uniform(0, 2 * np.pi))
    f10 = np.clip(level + rot + 4.0 * rng.standard_normal(n_days), 65.0, 280.0)
    s10 = np.clip(0.85 * f10 + 18.0 + 6.0 * rng.standard_normal(n_days), 55.0, 280.0)
    m10 = np.clip(0.90 * f10 + 12.0 + 5.0 * rng.standard_normal(n_days), 55.0, 280.0)
    y10 = np.clip(0.80 * f10 + 25.0 + 7.0 * rng.standard_normal(n_days), 55.0, 280.0)
    solar_daily = {"F10": f10, "S10": s10, "M10": m10, "Y10": y10}
    for name in ("F10", "S10", "M10", "Y10"):
        solar_daily[name[0] + "81c"] = _centered_mean(solar_daily[name], 81)

    # three-hourly ap: log-normal AR(1) with occasional storms, quantized
    n3 = n_hours // 3
    log_ap = np.log(7.0) + _ar1(rng, n3, 0.8, 0.8)
    storms = rng.random(n3) < 1.0 / 400.0
    boost = np.zeros(n3)
    for i in np.flatnonzero(storms):
        boost[i : i + 8] += rng.uniform(1.0, 2.5) * np.exp(-np.arange(min(8, n3 - i)) / 3.0)
    ap_raw = np.clip(np.exp(log_ap + boost), 0.0, 400.0)
    ap3h = AP_LEVELS[np.abs(ap_raw[:, None] - AP_LEVELS[None, :]).argmin(axis=1)]
    ap_h = np.repeat(ap3h, 3)

    # hourly Dst tracks ap with a slow recovery
    dst = np.empty(n_hours)
    drive = -0.9 * ap_h + 4.0 * rng.standard_normal(n_hours)
    dst[0] = drive[0]
    for i in range(1, n_hours):
        dst[i] = 0.85 * dst[i - 1] + 0.15 * drive[i]

    hourly = {"ap": ap_h, "Dst": dst}
    hourly["apA"] = np.repeat(ap_h.reshape(n_days, 24).mean(axis=1), 24)
    hourly["ap3"] = _lag(ap_h, 3)
    hourly["ap6"] = _lag(ap_h, 6)
    hourly["ap9"] = _lag(ap_h, 9)
    hourly["ap12_33"] = _trailing_mean(ap_h, 12, 33)
    hourly["ap36_57"] = _trailing_mean(ap_h, 36, 57)
    hourly["DstA"] = np.repeat(dst.reshape(n_days, 24).mean(axis=1), 24)
    for lag in (3, 6, 9, 12, 15, 18, 21):
        hourly[f"Dst{lag}"] = _lag(dst, lag)
    sym_noise = 3.0 * rng.standard_normal(n_hours)
    hourly["SYM_H"] = dst + sym_noise
    hourly["S_N"] = np.maximum(12.0 + 1.1 * ap_h + 3.0 * rng.standard_normal(n_hours), 1.0)
    hourly["S_S"] = np.maximum(10.0 + 1.0 * ap_h + 3.0 * rng.standard_normal(n_hours), 1.0)

    sec = (epochs - t0.astype("datetime64[s]")).astype(np.int64)
    day_idx = sec // 86400
    hour_idx = sec // 3600
    cols = {k: v[day_idx] for k, v in solar_daily.items()}
    for k, v in hourly.items():
        cols[k] = v[hour_idx]
    cols = {k: np.asarray(cols[k], dtype=np.float64) for k in ALL_DRIVERS}
    return DriverSeries(epochs, cols)


# ---------------------------------------------------------------------- density law
def declination_deg(doy):
    return 23.44 * np.sin(2.0 * np.pi * (np.asarray(doy) - 80.0) / 365.25)


def log10_density_clean(lat_deg, lst_h, alt_km, doy, f10, ap):
    """Noise-free log10 density of the analytic law (broadcasting)."""
    h = (np.asarray(alt_km) - 175.0) / 650.0
    s = (np.asarray(f10) - 60.0) / 200.0
    g = np.clip(np.asarray(ap) / 400.0, 0.0, 1.0)
    lat = np.deg2rad(lat_deg)
    dec = np.deg2rad(declination_deg(doy))
    c = np.cos(np.pi * (np.asarray(lst_h) - 14.0) / 12.0) * np.cos(lat - dec)
    return (-11.5 - 4.0 * h * (1.0 - 0.45 * s) + 0.35 * (1.0 + s) * np.maximum(0.0, c) ** 2
            + 1.2 * g * np.sin(lat) ** 2 * h)


def log10_noise_sigma(alt_km, ap):
    h = (np.asarray(alt_km) - 175.0) / 650.0
    g = np.clip(np.asarray(ap) / 400.0, 0.0, 1.0)
    return 0.02 + 0.03 * h + 0.05 * g


def grid_log10_truth(doy, ut_hours, f10, ap):
    """Clean log10 field and noise sigma on the global grid for many epochs.

    Arguments are 1-D arrays over epochs; outputs have shape (m, 24, 19, 27).
    """
    doy, ut, f10, ap = (np.atleast_1d(np.asarray(v, dtype=np.float64)) for v in (doy, ut_hours, f10, ap))
    lon = LON_DEG[None, :, None, None]
    lat = LAT_DEG[None, None, :, None]
    alt = ALT_KM[None, None, None, :]
    e = lambda v: v[:, None, None, None]
    lst = np.mod(e(ut) + lon / 15.0, 24.0)
    mean = log10_density_clean(lat, lst, alt, e(doy), e(f10), e(ap))
    sigma = np.broadcast_to(log10_noise_sigma(alt, e(ap)), mean.shape)
    return mean, np.ascontiguousarray(sigma)


def synth_global(drivers: DriverRecord, epoch=None, seed: int = 0, noise: bool = True):
    """One noisy global grid and its per-cell log10 noise sigma."""
    epoch = drivers.epoch if epoch is None else epoch
    if epoch is None:
        raise ConfigError("an epoch is required")
    doy, ut = doy_ut(np.array([epoch]))
    mean, sigma = grid_log10_truth(doy, ut, [drivers.F10], [drivers.ap])
    logd = mean[0]
    if noise:
        logd = logd + sigma[0] * np.random.default_rng(seed).standard_normal(GRID_SHAPE)
    return DensityGrid(10.0**logd, np.datetime64(epoch, "s")), sigma[0]


def synth_global_series(series: DriverSeries, seed: int = 0, chunk: int = 250, return_truth: bool = False):
    """Noisy density grids for every epoch in ``series``; shape (m, 24, 19, 27).

    Noise is drawn epoch by epoch from one seeded stream, so the result does
    not depend on ``chunk``.  With ``return_truth`` the clean log10 field and
    noise sigma are returned as well.
    """
    doy, ut = doy_ut(series.epochs)
    m = len(series)
    rng = np.random.default_rng(seed)
    out = np.empty((m,) + GRID_SHAPE)
    if return_truth:
        means = np.empty_like(out)
        sigmas = np.empty_like(out)
    for a in range(0, m, chunk):
        sl = slice(a, min(m, a + chunk))
        mean, sigma = grid_log10_truth(doy[sl], ut[sl], series["F10"][sl], series["ap"][sl])
        z = rng.standard_normal(mean.shape)
        out[sl] = 10.0 ** (mean + sigma * z)
        if return_truth:
            means[sl] = mean
            sigmas[sl] = sigma
    if return_truth:
        return out, means, sigmas
    return out


# ---------------------------------------------------------------------- in-situ track
@dataclass
class LocalSample:
    epoch: np.datetime64
    lat: float
    lst: float
    alt: float
    density: float
    drivers: dict


@dataclass
class LocalDataset:
    """Column-oriented in-situ density samples."""

    epochs: np.ndarray
    lat: np.ndarray
    lst: np.ndarray
    alt: np.ndarray
    density: np.ndarray
    drivers: dict
    log10_sigma: np.ndarray | None = None

    def __len__(self) -> int:
        return len(self.epochs)

    def __getitem__(self, i) -> LocalSample:
        return LocalSample(self.epochs[i], float(self.lat[i]), float(self.lst[i]), float(self.alt[i]),
                           float(self.density[i]), {k: float(v[i]) for k, v in self.drivers.items()})

    def take(self, idx) -> "LocalDataset":
        return LocalDataset(self.epochs[idx], self.lat[idx], self.lst[idx], self.alt[idx], self.density[idx],
                            {k: v[idx] for k, v in self.drivers.items()},
                            None if self.log10_sigma is None else self.log10_sigma[idx])


def satellite_track(t_seconds, start_day: float = 0.0, mission_days: float = MISSION_DAYS, lst0: float = 6.0,
                    phase0: float = 0.0):
    """Latitude, local solar time and altitude of a near-polar decaying orbit."""
    t = np.asarray(t_seconds, dtype=np.float64)
    inc = np.deg2rad(INCLINATION_DEG)
    u = 2.0 * np.pi * t / ORBIT_PERIOD_S + phase0
    # clip so rounding never pushes the ground track past the inclination
    lat = np.clip(np.rad2deg(np.arcsin(np.sin(inc) * np.sin(u))), -INCLINATION_DEG, INCLINATION_DEG)
    dlon = np.rad2deg(np.arctan2(np.cos(inc) * np.sin(u), np.cos(u)))
    elapsed_days = start_day + t / 86400.0
    node_lst = lst0 - 24.0 * elapsed_days / NODE_LST_PERIOD_DAYS
    lst = np.mod(node_lst + dlon / 15.0, 24.0)
    lst = np.where(lst >= 24.0, 0.0, lst)
    alt = ALT_START_KM - (ALT_START_KM - ALT_END_KM) * elapsed_days / mission_days
    return lat, lst, alt


def synth_insitu(n_days: int, seed: int = 0, start_day: float = 0.0, mission_days: float = MISSION_DAYS,
                 cadence_s: float = CADENCE_S, start=DEFAULT_START) -> LocalDataset:
    """Simulated accelerometer-style densities along a polar track."""
    if n_days < 1:
        raise ConfigError("n_days must be >= 1")
    n = int(round(n_days * 86400 / cadence_s))
    t = np.arange(n) * cadence_s
    t0 = np.datetime64(start, "s") + np.timedelta64(int(round(start_day * 86400)), "s")
    epochs = t0 + (t * 1000).astype("timedelta64[ms]").astype("timedelta64[s]")
    lat, lst, alt = satellite_track(t, start_day, mission_days)
    ss = np.random.SeedSequence(seed)
    driver_seed, noise_seed = (int(s.generate_state(1)[0]) for s in ss.spawn(2))
    drv = synth_drivers(epochs, driver_seed)
    doy, _ = doy_ut(epochs)
    mean = log10_density_clean(lat, lst, alt, doy, drv["F10"], drv["ap"])
    sigma = log10_noise_sigma(alt, drv["ap"])
    z = np.random.default_rng(noise_seed).standard_normal(n)
    density = 10.0 ** (mean + sigma * z)
    drivers = {k: drv[k] for k in CHAMP_DRIVERS}
    drivers["ap"] = drv["ap"]
    return LocalDataset(epochs, lat, lst, alt, density, drivers, sigma)


def concat_local(parts: list[LocalDataset]) -> LocalDataset:
    sig = None if any(p.log10_sigma is None for p in parts) else np.concatenate([p.log10_sigma for p in parts])
    return LocalDataset(
        np.concatenate([p.epochs for p in parts]),
        np.concatenate([p.lat for p in parts]),
        np.concatenate([p.lst for p in parts]),
        np.concatenate([p.alt for p in parts]),
        np.concatenate([p.density for p in parts]),
        {k: np.concatenate([p.drivers[k] for p in parts]) for k in parts[0].drivers},
        sig,
    )


def synth_insitu_spread(n_days: int, seed: int = 0, mission_days: float = MISSION_DAYS,
                        cadence_s: float = CADENCE_S, start=DEFAULT_START) -> LocalDataset:
    """``n_days`` one-day track segments spaced evenly over the mission.

    A desk-sized sample that still spans the full altitude decay and every
    season.  Segment ``i`` uses its own child seed.
    """
    if n_days < 1:
        raise ConfigError("n_days must be >= 1")
    starts = np.floor(np.linspace(0.0, mission_days - 1.0, n_days))
    seeds = np.random.SeedSequence(seed).spawn(n_days)
    parts = [synth_insitu(1, int(s.generate_state(1)[0]), float(d), mission_days, cadence_s, start)
             for d, s in zip(starts, seeds)]
    return concat_local(parts)
