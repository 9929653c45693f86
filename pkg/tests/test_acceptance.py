"""End-to-end exit criteria at their stated tolerances.

Each test records one line (see ``conftest.record``) that is printed in the
terminal summary, then asserts.  The training runs are shared through
session fixtures so the determinism check can rerun them and compare files.
"""

import time
from pathlib import Path

import numpy as np
import pytest
from scipy.stats import ortho_group

from uqdense import cli, pipelines, rom_pca
from uqdense.config import load_config
from uqdense.datasets import contiguous_segments, split_rolling, synth_drivers, toy_mean, toy_sigma
from uqdense.datasets.synth import DEFAULT_START, grid_log10_truth
from uqdense.datasets.features import doy_ut
from uqdense.evalkit import calibration_report, coverage_map, read_json
from uqdense.nn import Tensor
from uqdense.uq import ProbPrediction

from conftest import record
from oracles import gradient_suite

pytestmark = [pytest.mark.acceptance, pytest.mark.slow]

METRIC_FILES = ("metrics.json", "calibration.csv", "calibration.json", "predictions_train.csv",
                "predictions_validation.csv", "predictions_test.csv", "history.csv", "model/weights.bin")
GLOBAL_FILES = METRIC_FILES + ("coverage.csv", "coverage.json", "conditions.csv", "conditions.json")
RUNS = {"toy1_direct": METRIC_FILES, "toy2_direct": METRIC_FILES, "toy1_mc": METRIC_FILES,
        "global_direct": GLOBAL_FILES}


def timed_run(preset: str, out: Path):
    cfg = load_config(preset=preset, seed=0)
    t0 = time.process_time()
    res = pipelines.run(cfg, out)
    return res, time.process_time() - t0


@pytest.fixture(scope="session")
def acceptance_runs(tmp_path_factory):
    cache = {}

    def get(preset):
        if preset not in cache:
            out = tmp_path_factory.mktemp(preset)
            res, cpu = timed_run(preset, out)
            cache[preset] = (res, cpu, out)
        return cache[preset]

    return get


# ---------------------------------------------------------------- 1-3: toy problems
def test_c01_toy1_direct(acceptance_runs):
    res, cpu, _ = acceptance_runs("toy1_direct")
    sig = res.metrics["sigma_rmse_relative"]
    cal = res.metrics["test"]["calibration_score"]
    ok = sig <= 0.15 and cal <= 5.0 and cpu <= 300 and res.metrics["train"]["n"] + res.metrics["validation"]["n"] \
        + res.metrics["test"]["n"] == 20_000
    record(1, ok, f"toy1 direct: sigma RMSE {100 * sig:.1f}% of mean (<=15), test calibration {cal:.2f}% (<=5), "
                  f"CPU {cpu:.0f}s (<=300)")
    assert ok


def test_c02_toy2_direct(acceptance_runs):
    res, cpu, _ = acceptance_runs("toy2_direct")
    cal = res.metrics["test"]["calibration_score"]
    ok = cal <= 5.0 and cpu <= 300
    record(2, ok, f"toy2 direct: test calibration {cal:.2f}% (<=5), CPU {cpu:.0f}s (<=300)")
    assert ok


def test_c03_toy1_mc(acceptance_runs):
    res, _, _ = acceptance_runs("toy1_mc")
    direct, _, _ = acceptance_runs("toy1_direct")
    assert res.config.k_train == 32 and res.config.k == 1000
    cal = res.metrics["test"]["calibration_score"]
    gap = abs(res.metrics["test"]["mae_percent"] - direct.metrics["test"]["mae_percent"])
    ok = cal <= 7.0 and gap <= 2.0
    record(3, ok, f"toy1 MC dropout (k=32 train, k=1000 eval): test calibration {cal:.2f}% (<=7), "
                  f"|MAE - direct MAE| {gap:.2f} points (<=2)")
    assert ok


# ---------------------------------------------------------------- 4-8: oracles
def test_c04_gradient_suite():
    t0 = time.perf_counter()
    worst = gradient_suite(n_nets=50, seed=0)
    dt = time.perf_counter() - t0
    ok = max(worst.values()) < 1e-4 and dt < 60
    record(4, ok, "gradient suite on 50 nets: " + ", ".join(f"{k} {v:.1e}" for k, v in worst.items())
           + f" (<1e-4), {dt:.1f}s (<60)")
    assert ok


def test_c05_softplus_derivative():
    x = np.linspace(-20, 20, 10_001)
    t = Tensor(x, requires_grad=True)
    t.softplus().sum().backward()
    err = float(np.max(np.abs(t.grad - 1.0 / (1.0 + np.exp(-x)))))
    record(5, err < 1e-12, f"softplus' vs sigmoid on 10,001 points: max error {err:.1e} (<1e-12)")
    assert err < 1e-12


def test_c06_pca():
    rng = np.random.default_rng(0)
    snaps = 10.0 ** (-12.0 + 0.5 * rng.normal(size=(50, 600)))
    full = rom_pca.fit_pca(snaps, r=50)
    rec = rom_pca.decode(full, rom_pca.encode(full, snaps))
    rel = float(np.max(np.abs(rec - snaps) / snaps))
    orth = float(np.max(np.abs(full.modes.T @ full.modes - np.eye(50))))
    b = rom_pca.fit_pca(snaps, r=5)
    err = rom_pca.reconstruction_error(b, snaps)
    wins = sum(err < rom_pca.reconstruction_error(
        rom_pca.PcaBasis(b.spatial_mean, ortho_group.rvs(600, random_state=i)[:, :5], np.zeros(5)), snaps)
        for i in range(20))
    ok = rel < 1e-8 and orth < 1e-10 and wins == 20
    record(6, ok, f"PCA: roundtrip rel error {rel:.1e} (<1e-8), orthonormality {orth:.1e} (<1e-10), "
                  f"beats {wins}/20 random bases")
    assert ok


def test_c07_calibration_oracle():
    n = 100_000
    rng = np.random.default_rng(0)
    x = rng.uniform(-10, 20, n)
    mu, sd = toy_mean(1, x), toy_sigma(1, x)
    y = mu + sd * rng.standard_normal(n)
    exact = calibration_report(ProbPrediction(mu[:, None], sd[:, None]), y[:, None]).score
    covered = calibration_report(ProbPrediction(mu[:, None], np.full((n, 1), 1e12)), y[:, None]).score
    ok = exact < 0.5 and abs(covered - 47.55) <= 1e-9
    record(7, ok, f"calibration oracle: exact model {exact:.3f}% (<0.5), all covered {covered:.12f}% (=47.55)")
    assert ok


def test_c08_coverage_map():
    n = 1000
    epochs = np.datetime64(DEFAULT_START, "s") + np.arange(n) * np.timedelta64(3 * 3600, "s")
    series = synth_drivers(epochs, seed=1)
    doy, ut = doy_ut(series.epochs)
    mean, sigma = grid_log10_truth(doy, ut, series["F10"], series["ap"])
    y = mean + sigma * np.random.default_rng(2).standard_normal(mean.shape)
    cm = coverage_map(mean, sigma, y, 0.90)
    dev = float(np.max(np.abs(cm.per_altitude - 0.90)))
    record(8, dev <= 0.02, f"coverage map, exact model, 1,000 epochs: max |per-altitude - 0.90| {dev:.4f} (<=0.02)")
    assert dev <= 0.02


# ---------------------------------------------------------------- 9: runtime
def test_c09_runtime_benchmark(tmp_path):
    out = tmp_path / "bench"
    assert cli.main(["bench", "--preset", "bench", "--seed", "0", "--out", str(out)]) == 0
    b = read_json(out / "bench.json")
    assert b["k"] == 1000 and b["n_draws"] == 1000
    assert b["model_parameters"]["mc_dropout"] <= b["model_parameters"]["direct_prob"]
    ratio = b["ratio_mc_over_direct"]["8640"]
    table = "; ".join(f"{r['method']} n={r['samples']} {r['cpu_seconds']:.2f}s" for r in b["table"])
    record(9, ratio >= 3, f"runtime at n=8,640: MC/direct {ratio:.1f}x (>=3); {table}")
    assert ratio >= 3


# ---------------------------------------------------------------- 10-11: data pipelines
def test_c10_global_pipeline(acceptance_runs):
    res, _, _ = acceptance_runs("global_direct")
    s = res.split
    disjoint = s.is_disjoint() and s.train.max() < s.validation.min() and s.validation.max() < s.test.min()
    sizes_ok = s.sizes() == (3000, 1000, 1000) and res.config.r == 10 and res.config.n_epochs == 5000
    mae = res.metrics["test"]["mae_percent"]
    cal = res.metrics["test"]["calibration_score"]
    ok = disjoint and sizes_ok and mae <= 15.0 and cal <= 5.0
    record(10, ok, f"global pipeline r=10, 5,000 epochs: test MAE {mae:.2f}% (<=15), test calibration {cal:.2f}% "
                   f"(<=5), chronological 60/20/20 disjoint {disjoint and sizes_ok}")
    assert ok


def test_c11_rolling_split():
    week = 60_480
    s = split_rolling(3 * 10 * week, 10.0)
    segs = [contiguous_segments(getattr(s, n)) for n in ("train", "validation", "test")]
    sizes = {tuple(b - a for a, b in seg) for seg in zip(*segs)}
    gaps = {b[0] - a[1] for a, b in zip(segs[0][:-1], segs[0][1:])}
    ok = sizes == {(483_840, 60_480, 60_480)} and gaps == {120_960} and s.is_disjoint()
    record(11, ok, f"rolling split blocks {sorted(sizes)}, inter-train gaps {sorted(gaps)}")
    assert ok


# ---------------------------------------------------------------- 12: determinism
def test_c12_determinism(acceptance_runs, tmp_path):
    differing = []
    for preset, files in RUNS.items():
        _, _, first = acceptance_runs(preset)
        again = tmp_path / preset
        timed_run(preset, again)
        differing += [f"{preset}/{f}" for f in files if (first / f).read_bytes() != (again / f).read_bytes()]
    n_files = sum(len(f) for f in RUNS.values())
    record(12, not differing, f"reran {len(RUNS)} training runs: {n_files - len(differing)}/{n_files} metric files "
                              f"byte-identical" + (f"; differ: {differing}" if differing else ""))
    assert not differing
