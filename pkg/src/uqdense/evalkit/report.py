"""CSV and JSON writers for every evaluation artifact.

Floats are written with ``repr`` so files round-trip exactly and identical
inputs give byte-identical files.  NaN cells are written empty in CSV and as
``null`` in JSON.
"""

from __future__ import annotations

import csv
import json
import math
from pathlib import Path

import numpy as np

from .bench import BenchResult
from .conditions import ConditionTable
from .metrics import CalibrationReport, calibration_curve
from .spatial import CoverageMap


def _cell(v):
    if v is None:
        return ""
    if isinstance(v, (float, np.floating)):
        v = float(v)
        return "" if math.isnan(v) else repr(v)
    if isinstance(v, np.integer):
        return str(int(v))
    return str(v)


def _jsonable(obj):
    if isinstance(obj, dict):
        return {str(k): _jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_jsonable(v) for v in obj]
    if isinstance(obj, np.ndarray):
        return _jsonable(obj.tolist())
    if isinstance(obj, (np.floating, float)):
        f = float(obj)
        return None if math.isnan(f) or math.isinf(f) else f
    if isinstance(obj, np.integer):
        return int(obj)
    return obj


def write_csv(rows: list[dict], path, columns=None) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    if columns is None:
        columns = list(rows[0]) if rows else []
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(columns)
        for r in rows:
            w.writerow([_cell(r.get(c)) for c in columns])
    return path


def write_json(obj, path) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text(json.dumps(_jsonable(obj), indent=2, sort_keys=True, allow_nan=False) + "\n")
    return path


def read_json(path):
    return json.loads(Path(path).read_text())


def write_calibration(report: CalibrationReport, out_dir, stem: str = "calibration") -> Path:
    out_dir = Path(out_dir)
    write_json(report.to_dict(), out_dir / f"{stem}.json")
    return write_csv(calibration_curve(report), out_dir / f"{stem}.csv",
                     ["output", "expected", "observed", "deviation"])


def write_conditions(table: ConditionTable, out_dir, stem: str = "conditions") -> Path:
    out_dir = Path(out_dir)
    rows = table.rows()
    write_json({"rows": rows, "counts": table.counts}, out_dir / f"{stem}.json")
    return write_csv(rows, out_dir / f"{stem}.csv", ["ap_bin"] + table.f10_labels + ["All F10"])


def write_coverage(cmap: CoverageMap, out_dir, lon=None, lat=None, alt=None, stem: str = "coverage") -> Path:
    out_dir = Path(out_dir)
    per_alt = [{"alt": float(alt[i]) if alt is not None else i, "coverage": float(v)}
               for i, v in enumerate(cmap.per_altitude)]
    write_json({"level": cmap.level, "n_epochs": cmap.n_epochs, "warning": cmap.warning,
                "per_altitude": per_alt}, out_dir / f"{stem}.json")
    return write_csv(cmap.rows(lon, lat, alt), out_dir / f"{stem}.csv", ["lon", "lat", "alt", "coverage"])


def write_profiles(profiles: dict, out_dir, stem: str = "profiles") -> Path:
    """``profiles`` maps a condition name to ``(alts, values)``."""
    out_dir = Path(out_dir)
    rows = []
    for name, (alts, vals) in profiles.items():
        rows.extend({"condition": name, "alt": float(a), "sigma_over_mu_percent": float(v)} for a, v in zip(alts, vals))
    write_json({name: {"alt": list(map(float, a)), "sigma_over_mu_percent": list(map(float, v))}
                for name, (a, v) in profiles.items()}, out_dir / f"{stem}.json")
    return write_csv(rows, out_dir / f"{stem}.csv", ["condition", "alt", "sigma_over_mu_percent"])


def write_bench(result: BenchResult, out_dir, stem: str = "bench") -> Path:
    return write_json(result.to_dict(), Path(out_dir) / f"{stem}.json")
