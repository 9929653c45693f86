"""CSV exchange formats for in-situ samples and global PCA-coefficient series.

local schema:        epoch_iso8601, lat_deg, lst_h, alt_km, density_kgm3, F10 .. S_S
global_alpha schema: epoch, alpha_1 .. alpha_r, F10 .. Dst21

Floats are written with ``repr`` so a write/ingest round trip is exact.
"""

from __future__ import annotations

import csv
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from ..errors import ConfigError, DataError
from .synth import CHAMP_DRIVERS, HASDM_DRIVERS, LocalDataset

LOCAL_COLUMNS = ["epoch_iso8601", "lat_deg", "lst_h", "alt_km", "density_kgm3", *CHAMP_DRIVERS]
SCHEMAS = ("local", "global_alpha")


@dataclass
class AlphaDataset:
    epochs: np.ndarray
    alpha: np.ndarray  # (m, r)
    drivers: dict

    def __len__(self) -> int:
        return len(self.epochs)


def _fmt(v: float) -> str:
    return repr(float(v))


def write_local_csv(ds: LocalDataset, path) -> Path:
    path = Path(path)
    with path.open("w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(LOCAL_COLUMNS)
        for i in range(len(ds)):
            w.writerow([str(ds.epochs[i]), _fmt(ds.lat[i]), _fmt(ds.lst[i]), _fmt(ds.alt[i]), _fmt(ds.density[i]),
                        *(_fmt(ds.drivers[k][i]) for k in CHAMP_DRIVERS)])
    return path


def global_alpha_columns(r: int) -> list[str]:
    return ["epoch", *(f"alpha_{i + 1}" for i in range(r)), *HASDM_DRIVERS]


def write_alpha_csv(epochs, alpha, drivers: dict, path) -> Path:
    path = Path(path)
    alpha = np.asarray(alpha)
    with path.open("w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(global_alpha_columns(alpha.shape[1]))
        for i in range(len(epochs)):
            w.writerow([str(np.datetime64(epochs[i], "s")), *(_fmt(a) for a in alpha[i]),
                        *(_fmt(drivers[k][i]) for k in HASDM_DRIVERS)])
    return path


def _parse_float(text: str, line: int, col: str) -> float:
    try:
        v = float(text)
    except ValueError:
        raise DataError(f"line {line}: column {col!r} is not a number: {text!r}") from None
    if not np.isfinite(v):
        raise DataError(f"line {line}: column {col!r} is not finite")
    return v


def ingest_csv(path, schema: str):
    """Read and validate a CSV in one of the two schemas; rows are time-sorted.

    Raises
    ------
    DataError
        On a header mismatch or any malformed row, citing the line number.
    """
    if schema not in SCHEMAS:
        raise ConfigError(f"unknown schema {schema!r}; choose from {SCHEMAS}")
    path = Path(path)
    with path.open(newline="") as fh:
        rows = list(csv.reader(fh))
    if not rows:
        return _empty(schema)
    header = rows[0]
    if schema == "local":
        if header != LOCAL_COLUMNS:
            raise DataError(f"line 1: header does not match the local schema {LOCAL_COLUMNS}")
        r = 0
    else:
        n_alpha = sum(1 for h in header if h.startswith("alpha_"))
        if n_alpha < 1 or header != global_alpha_columns(n_alpha):
            raise DataError("line 1: header does not match the global_alpha schema")
        r = n_alpha

    epochs, values = [], []
    for line, row in enumerate(rows[1:], start=2):
        if not row:
            continue
        if len(row) != len(header):
            raise DataError(f"line {line}: expected {len(header)} fields, got {len(row)}")
        try:
            epochs.append(np.datetime64(row[0], "s"))
        except ValueError:
            raise DataError(f"line {line}: bad epoch {row[0]!r}") from None
        vals = [_parse_float(t, line, c) for t, c in zip(row[1:], header[1:])]
        if schema == "local":
            if vals[3] <= 0:
                raise DataError(f"line {line}: density must be positive, got {vals[3]!r}")
            if not -90 <= vals[0] <= 90 or not 0 <= vals[1] < 24:
                raise DataError(f"line {line}: latitude or local time out of range")
        values.append(vals)

    epochs = np.array(epochs, dtype="datetime64[s]")
    arr = np.array(values, dtype=np.float64).reshape(len(values), len(header) - 1)
    order = np.argsort(epochs, kind="stable")
    epochs, arr = epochs[order], arr[order]
    if schema == "local":
        drivers = {k: arr[:, 4 + i] for i, k in enumerate(CHAMP_DRIVERS)}
        return LocalDataset(epochs, arr[:, 0], arr[:, 1], arr[:, 2], arr[:, 3], drivers)
    drivers = {k: arr[:, r + i] for i, k in enumerate(HASDM_DRIVERS)}
    return AlphaDataset(epochs, arr[:, :r], drivers)


def _empty(schema):
    e = np.array([], dtype="datetime64[s]")
    z = np.array([])
    if schema == "local":
        return LocalDataset(e, z, z, z, z, {k: z for k in CHAMP_DRIVERS})
    return AlphaDataset(e, np.zeros((0, 0)), {k: z for k in HASDM_DRIVERS})
