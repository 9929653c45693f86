"""Metrics, calibration, spatial analyses, runtime benchmark and report writers."""

from .bench import TEN_WEEK_SAMPLES, WEEK_SAMPLES, BenchResult, BenchRow, benchmark_runtime
from .conditions import ConditionTable, binned_from_relative, condition_binned_errors
from .metrics import (
    PI_LEVELS,
    CalibrationReport,
    calibration_curve,
    calibration_report,
    coverage,
    mae_percent,
    normalized_mae_percent,
)
from .report import (
    read_json,
    write_bench,
    write_calibration,
    write_conditions,
    write_coverage,
    write_csv,
    write_json,
    write_profiles,
)
from .spatial import (
    CONDITION_PRESETS,
    Condition,
    CoverageMap,
    altitude_uncertainty_profile,
    condition_preset,
    coverage_map,
    lognormal_moments,
)

__all__ = [
    "PI_LEVELS", "CalibrationReport", "calibration_curve", "calibration_report", "coverage", "mae_percent",
    "normalized_mae_percent", "ConditionTable", "binned_from_relative", "condition_binned_errors", "CONDITION_PRESETS", "Condition",
    "CoverageMap", "altitude_uncertainty_profile", "condition_preset", "coverage_map", "lognormal_moments",
    "BenchResult", "BenchRow", "benchmark_runtime", "WEEK_SAMPLES", "TEN_WEEK_SAMPLES", "read_json",
    "write_bench", "write_calibration", "write_conditions", "write_coverage", "write_csv", "write_json",
    "write_profiles",
]
