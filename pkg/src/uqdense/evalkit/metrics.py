"""Point-error and calibration metrics."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from ..errors import DomainError, ShapeError
from ..uq import ProbPrediction, z_for_level

PI_LEVELS = np.array([0.05 * i for i in range(1, 20)] + [0.99])


def mae_percent(y_true, y_pred) -> float:
    """Mean absolute percentage error ``100 * mean(|pred - true| / true)``."""
    t = np.asarray(y_true, dtype=np.float64)
    p = np.asarray(y_pred, dtype=np.float64)
    if t.shape != p.shape:
        raise ShapeError(f"shape mismatch {t.shape} vs {p.shape}")
    if not np.all(t > 0):
        raise DomainError("percent error needs strictly positive truth values")
    return float(100.0 * np.mean(np.abs(p - t) / t))


def normalized_mae_percent(y_true, y_pred) -> float:
    """``100 * sum|pred - true| / sum|true|``; usable when targets change sign."""
    t = np.asarray(y_true, dtype=np.float64)
    p = np.asarray(y_pred, dtype=np.float64)
    return float(100.0 * np.sum(np.abs(p - t)) / np.sum(np.abs(t)))


@dataclass
class CalibrationReport:
    pi_levels: np.ndarray
    observed: np.ndarray  # (n_out, len(pi_levels))
    score: float
    n_samples: int

    def recompute_score(self) -> float:
        return float(100.0 * np.mean(np.abs(self.pi_levels[None, :] - self.observed)))

    def to_dict(self) -> dict:
        return {
            "pi_levels": self.pi_levels.tolist(),
            "observed": self.observed.tolist(),
            "score": self.score,
            "n_samples": self.n_samples,
        }


def coverage(pred: ProbPrediction, y_true, p: float) -> np.ndarray:
    """Per-element indicator that ``y_true`` lies in the closed central ``p`` interval."""
    y = np.asarray(y_true, dtype=np.float64)
    z = z_for_level(float(p))
    return np.abs(y - pred.mu) <= z * pred.sigma


def calibration_report(pred: ProbPrediction, y_true, levels=PI_LEVELS) -> CalibrationReport:
    """Observed coverage of each output at each interval level, and the mean
    absolute miscalibration in percent."""
    y = np.asarray(y_true, dtype=np.float64)
    mu = np.asarray(pred.mu)
    if y.ndim == 1:
        y = y[:, None]
    if mu.ndim == 1:
        pred = ProbPrediction(mu[:, None], np.asarray(pred.sigma)[:, None])
    if y.shape != pred.mu.shape:
        raise ShapeError(f"truth {y.shape} vs prediction {pred.mu.shape}")
    levels = np.asarray(levels, dtype=np.float64)
    obs = np.empty((y.shape[1], levels.size))
    for j, p in enumerate(levels):
        obs[:, j] = coverage(pred, y, p).mean(axis=0)
    score = float(100.0 * np.mean(np.abs(levels[None, :] - obs)))
    return CalibrationReport(levels, obs, score, y.shape[0])


def calibration_curve(report: CalibrationReport) -> list[dict]:
    """Rows of (output, expected, observed, deviation = observed - expected)."""
    rows = []
    for i in range(report.observed.shape[0]):
        for p, o in zip(report.pi_levels, report.observed[i]):
            rows.append({"output": i, "expected": float(p), "observed": float(o), "deviation": float(o - p)})
    return rows
