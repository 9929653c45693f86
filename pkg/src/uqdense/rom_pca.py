"""PCA reduced-order model of global log-density grids.

Snapshots are flattened lon-major, then latitude, then altitude (C order of
a ``(24, 19, 27)`` array).  The snapshot matrix has one mean-removed log10
snapshot per column and its leading left singular vectors are the modes.
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .errors import ConfigError, DataError, DomainError, ShapeError

GRID_SHAPE = (24, 19, 27)
GRID_SIZE = int(np.prod(GRID_SHAPE))
LON_DEG = np.arange(24) * 15.0
LAT_DEG = np.linspace(-90.0, 90.0, 19)
ALT_KM = 175.0 + 25.0 * np.arange(27)
FLATTENING = "lon-major, lat, alt (C order of lon x lat x alt)"
SIGN_CONVENTION = "largest-magnitude entry of each mode is positive"


@dataclass
class DensityGrid:
    values: np.ndarray  # kg/m^3, shape GRID_SHAPE
    epoch: np.datetime64 | None = None

    def __post_init__(self):
        self.values = np.asarray(self.values, dtype=np.float64)
        if self.values.size == GRID_SIZE:
            self.values = self.values.reshape(GRID_SHAPE)
        if self.values.shape != GRID_SHAPE:
            raise ShapeError(f"density grid must have shape {GRID_SHAPE}, got {self.values.shape}")
        if not np.all(self.values > 0):
            raise DomainError("density grid contains non-positive values")

    def flat(self) -> np.ndarray:
        return self.values.reshape(-1)


@dataclass
class PcaBasis:
    spatial_mean: np.ndarray  # (d,)
    modes: np.ndarray  # (d, r), orthonormal columns
    singular_values: np.ndarray  # (r,), nonincreasing

    @property
    def d(self) -> int:
        return self.modes.shape[0]

    @property
    def r(self) -> int:
        return self.modes.shape[1]


def _log_snapshots(snapshots) -> np.ndarray:
    """Stack snapshots as rows of log10 densities, shape (m, d)."""
    if isinstance(snapshots, DensityGrid):
        snapshots = [snapshots]
    if isinstance(snapshots, (list, tuple)):
        rows = [s.flat() if isinstance(s, DensityGrid) else np.asarray(s, dtype=np.float64).reshape(-1) for s in snapshots]
        arr = np.stack(rows) if rows else np.zeros((0, 0))
    else:
        arr = np.asarray(snapshots, dtype=np.float64)
        arr = arr.reshape(arr.shape[0], -1) if arr.ndim > 1 else arr[None, :]
    if not np.all(arr > 0):
        raise DomainError("densities must be strictly positive before the log10 transform")
    return np.log10(arr)


def _fix_signs(modes: np.ndarray):
    idx = np.argmax(np.abs(modes), axis=0)
    signs = np.sign(modes[idx, np.arange(modes.shape[1])])
    signs[signs == 0] = 1.0
    return modes * signs, signs


def fit_pca(snapshots, r: int = 10) -> PcaBasis:
    """Fit a rank-``r`` basis to positive density snapshots.

    ``snapshots`` may be a list of :class:`DensityGrid`, or an array whose
    first axis indexes epochs.
    """
    logs = _log_snapshots(snapshots)
    m, d = logs.shape
    if r < 1:
        raise ConfigError("r must be >= 1")
    if m < 1 or r > min(d, m):
        raise ConfigError(f"r={r} exceeds min(d={d}, m={m})")
    mean = logs.mean(axis=0)
    x = (logs - mean).T  # d x m, columns are epochs
    u, s, _ = np.linalg.svd(x, full_matrices=False)
    modes, _ = _fix_signs(u[:, :r])
    return PcaBasis(mean, np.ascontiguousarray(modes), s[:r].copy())


def encode(basis: PcaBasis, grid) -> np.ndarray:
    """PCA coefficients of one grid (shape (r,)) or many (shape (m, r))."""
    logs = _log_snapshots(grid)
    if logs.shape[1] != basis.d:
        raise ShapeError(f"grid has {logs.shape[1]} cells, basis expects {basis.d}")
    alpha = (logs - basis.spatial_mean) @ basis.modes
    single = isinstance(grid, DensityGrid) or np.ndim(grid) == 1 or (np.ndim(grid) == 3 and np.shape(grid) == GRID_SHAPE)
    return alpha[0] if single else alpha


def decode_log10(basis: PcaBasis, alpha) -> np.ndarray:
    a = np.asarray(alpha, dtype=np.float64)
    if a.shape[-1] != basis.r:
        raise ShapeError(f"alpha has {a.shape[-1]} coefficients, basis has {basis.r}")
    return basis.spatial_mean + a @ basis.modes.T


def decode(basis: PcaBasis, alpha) -> np.ndarray:
    """Densities ``10 ** (mean + modes @ alpha)``; flat (d,) or (m, d)."""
    return 10.0 ** decode_log10(basis, alpha)


def decode_grid(basis: PcaBasis, alpha, epoch=None) -> DensityGrid:
    return DensityGrid(decode(basis, alpha).reshape(GRID_SHAPE), epoch)


def decode_gaussian(basis: PcaBasis, mu_alpha, sigma_alpha) -> tuple[np.ndarray, np.ndarray]:
    """Per-cell log10-density mean and std for independent Gaussian coefficients.

    Cell variance is ``sum_i U_si^2 sigma_i^2``.
    """
    mu = decode_log10(basis, mu_alpha)
    sa = np.asarray(sigma_alpha, dtype=np.float64)
    var = (sa * sa) @ (basis.modes * basis.modes).T
    return mu, np.sqrt(var)


def explained_variance(basis: PcaBasis) -> np.ndarray:
    """Cumulative fraction of retained variance carried by the first i modes."""
    e = basis.singular_values**2
    total = e.sum()
    if total == 0:
        return np.ones_like(e)
    cum = np.cumsum(e) / total
    cum[-1] = 1.0
    return cum


def captured_variance(basis: PcaBasis, snapshots) -> float:
    """Fraction of the snapshots' total log-space variance (about the basis
    mean) that the r modes reproduce."""
    x = _log_snapshots(snapshots) - basis.spatial_mean
    total = float(np.sum(x * x))
    if total == 0:
        return 1.0
    a = x @ basis.modes
    return float(np.sum(a * a) / total)


def reconstruction_error(basis: PcaBasis, snapshots) -> float:
    """Frobenius norm of the log-space residual after projecting on the modes."""
    x = _log_snapshots(snapshots) - basis.spatial_mean
    return float(np.linalg.norm(x - (x @ basis.modes) @ basis.modes.T))


def save_basis(basis: PcaBasis, directory) -> Path:
    d = Path(directory)
    d.mkdir(parents=True, exist_ok=True)
    manifest = {
        "format_version": 1,
        "d": basis.d,
        "r": basis.r,
        "grid_shape": list(GRID_SHAPE) if basis.d == GRID_SIZE else None,
        "flattening": FLATTENING,
        "sign_convention": SIGN_CONVENTION,
        "layout": "spatial_mean[d], modes[d x r row-major], singular_values[r]; little-endian float64",
    }
    (d / "pca.json").write_text(json.dumps(manifest, indent=2))
    flat = np.concatenate([basis.spatial_mean, basis.modes.ravel(), basis.singular_values])
    (d / "pca.bin").write_bytes(flat.astype("<f8").tobytes())
    return d


def load_basis(directory) -> PcaBasis:
    d = Path(directory)
    manifest = json.loads((d / "pca.json").read_text())
    raw = np.frombuffer((d / "pca.bin").read_bytes(), dtype="<f8").astype(np.float64)
    n, r = manifest["d"], manifest["r"]
    if raw.size != n + n * r + r:
        raise DataError(f"pca.bin holds {raw.size} values, expected {n + n * r + r}")
    return PcaBasis(raw[:n].copy(), raw[n : n + n * r].reshape(n, r).copy(), raw[n + n * r :].copy())
