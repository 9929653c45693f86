"""Errors binned by solar (F10) and geomagnetic (ap) activity."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from ..errors import ShapeError


def _labels(name, edges):
    out = [f"{name}<={edges[0]:g}"]
    out += [f"{a:g}<{name}<={b:g}" for a, b in zip(edges[:-1], edges[1:])]
    out.append(f"{name}>{edges[-1]:g}")
    return out


@dataclass
class ConditionTable:
    """MAE% per (ap bin, F10 bin) with pooled margins; NaN marks an empty cell."""

    f10_labels: list[str]
    ap_labels: list[str]
    cells: np.ndarray  # (n_ap, n_f10)
    ap_margin: np.ndarray  # (n_ap,) pooled over all F10
    f10_margin: np.ndarray  # (n_f10,) pooled over all ap
    total: float
    counts: np.ndarray

    def rows(self) -> list[dict]:
        out = []
        for i, al in enumerate(self.ap_labels + ["All ap"]):
            row = {"ap_bin": al}
            vals = self.cells[i] if i < len(self.ap_labels) else self.f10_margin
            for fl, v in zip(self.f10_labels, vals):
                row[fl] = None if np.isnan(v) else float(v)
            m = self.ap_margin[i] if i < len(self.ap_labels) else self.total
            row["All F10"] = None if np.isnan(m) else float(m)
            out.append(row)
        return out


def _pooled(err_sum, count):
    return np.where(count > 0, 100.0 * err_sum / np.maximum(count, 1), np.nan)


def condition_binned_errors(y_true, y_pred, f10, ap, f10_edges=(75, 150, 190), ap_edges=(10, 50)) -> ConditionTable:
    """MAE% in each activity bin, pooled over every value of the binned samples.

    Bins are half-open on the left (``75 < F10 <= 150``).  ``y_true`` and
    ``y_pred`` have the sample index first; any trailing axes (grid cells)
    are pooled.
    """
    t = np.asarray(y_true, dtype=np.float64)
    p = np.asarray(y_pred, dtype=np.float64)
    if t.shape != p.shape:
        raise ShapeError(f"shape mismatch {t.shape} vs {p.shape}")
    n = t.shape[0]
    rel = (np.abs(p - t) / t).reshape(n, -1)
    return binned_from_relative(rel.sum(axis=1), np.full(n, rel.shape[1], dtype=np.float64), f10, ap,
                                f10_edges, ap_edges)


def binned_from_relative(rel_sum, counts, f10, ap, f10_edges=(75, 150, 190), ap_edges=(10, 50)) -> ConditionTable:
    """Same table from per-sample sums of relative error and their value counts.

    Lets callers stream large decoded grids sample by sample.
    """
    rel_sum = np.asarray(rel_sum, dtype=np.float64)
    counts = np.asarray(counts, dtype=np.float64)
    fi = np.searchsorted(np.asarray(f10_edges, dtype=np.float64), np.asarray(f10, dtype=np.float64), side="left")
    ai = np.searchsorted(np.asarray(ap_edges, dtype=np.float64), np.asarray(ap, dtype=np.float64), side="left")
    if not (rel_sum.shape == counts.shape == fi.shape == ai.shape):
        raise ShapeError("per-sample errors, counts, F10 and ap must have one entry per sample")
    nf, na = len(f10_edges) + 1, len(ap_edges) + 1
    s = np.zeros((na, nf))
    c = np.zeros((na, nf))
    np.add.at(s, (ai, fi), rel_sum)
    np.add.at(c, (ai, fi), counts)
    return ConditionTable(
        _labels("F10", f10_edges),
        _labels("ap", ap_edges),
        _pooled(s, c),
        _pooled(s.sum(axis=1), c.sum(axis=1)),
        _pooled(s.sum(axis=0), c.sum(axis=0)),
        float(100.0 * s.sum() / c.sum()) if c.sum() else float("nan"),
        c,
    )
