import csv

import numpy as np
import pytest

from uqdense import pipelines, rom_pca
from uqdense.config import RunConfig, load_config
from uqdense.datasets import SplitIndex, synth_insitu, toy_sigma, write_local_csv
from uqdense.datasets.toy import toy_mean
from uqdense.errors import ConfigError, DataError
from uqdense.uq import ProbPrediction

SMALL_GLOBAL = dict(task="global_synth", split="chronological", n_epochs=120, r=3, hidden=[16], epochs=5,
                    patience=None, batch_size=32)


@pytest.fixture(scope="module")
def global_run(tmp_path_factory):
    out = tmp_path_factory.mktemp("global")
    cfg = RunConfig(**SMALL_GLOBAL).resolved()
    return cfg, pipelines.run(cfg, out), out


def test_config_layering(tmp_path):
    p = tmp_path / "c.json"
    p.write_text('{"epochs": 7, "hidden": [5]}')
    cfg = load_config(p, "toy1_direct", epochs=9)
    assert cfg.epochs == 9 and cfg.hidden == [5] and cfg.learning_rate == 3e-3
    r1, r2 = cfg.resolved(), cfg.resolved()
    assert r1 == r2 and len({r1.data_seed, r1.init_seed, r1.train_seed, r1.inference_seed}) == 4
    with pytest.raises(ConfigError):
        load_config(preset="nope")
    with pytest.raises(ConfigError):
        RunConfig(task="toy3")


def test_exact_stub_predictor_is_calibrated(monkeypatch):
    cfg = RunConfig(task="toy1", n_samples=100_000, epochs=0).resolved()
    prep = pipelines.prepare(cfg)

    def oracle(cfg, model, x):
        x = np.asarray(x)[:, 0]
        return ProbPrediction(toy_mean(1, x)[:, None], toy_sigma(1, x)[:, None])

    monkeypatch.setattr(pipelines, "predict_cfg", oracle)
    metrics, _ = pipelines.evaluate(cfg, None, prep)
    assert metrics["test"]["calibration_score"] < 0.5
    assert metrics["sigma_rmse_relative"] == pytest.approx(0.0, abs=1e-15)


def test_overlapping_split_is_rejected():
    cfg = RunConfig(task="toy1", n_samples=50, epochs=1)
    prep = pipelines.prepare(cfg)
    prep.split = SplitIndex(np.arange(30), np.arange(25, 40), np.arange(40, 50))
    with pytest.raises(DataError, match="overlap"):
        pipelines.train_prepared(cfg, prep)


def test_global_split_and_basis_use_train_only(global_run):
    cfg, res, _ = global_run
    prep = res.extras["prepared"]
    assert res.split.is_disjoint() and res.split.sizes() == (72, 24, 24)
    assert res.split.train.max() < res.split.validation.min() < res.split.test.min()
    ref = rom_pca.fit_pca(prep.extras["grids"][res.split.train], 3)
    np.testing.assert_array_equal(prep.extras["basis"].modes, ref.modes)
    assert 0 < res.metrics["captured_variance_train"] <= 1


def test_global_metrics_are_pooled(global_run):
    _, res, _ = global_run
    m = res.metrics
    n = {s: m[s]["n"] for s in ("train", "validation", "test")}
    pooled = sum(m[s]["mae_percent"] * n[s] for s in n) / sum(n.values())
    assert m["conditions_total_mae_percent"] == pytest.approx(pooled, rel=1e-12)
    assert len(m["coverage_per_altitude"]) == 27


def test_global_artifacts(global_run):
    cfg, res, out = global_run
    for name in ("metrics.json", "calibration.csv", "coverage.csv", "coverage.json", "conditions.csv",
                 "history.csv", "config.resolved.json", "pca/pca.json", "model/weights.bin"):
        assert (out / name).exists(), name
    with open(out / "coverage.csv") as fh:
        reader = csv.reader(fh)
        assert next(reader) == ["lon", "lat", "alt", "coverage"]
        assert sum(1 for _ in reader) == rom_pca.GRID_SIZE
    saved, model, basis = pipelines.reload(out)
    assert saved == cfg
    np.testing.assert_array_equal(basis.modes, res.extras["prepared"].extras["basis"].modes)
    np.testing.assert_array_equal(model.get_flat(), res.model.get_flat())
    with pytest.raises(ConfigError):
        pipelines.reload(out / "pca")


def test_global_rerun_gives_identical_metrics(global_run, tmp_path):
    cfg, _, out = global_run
    pipelines.run(cfg, tmp_path)
    for name in ("metrics.json", "calibration.csv", "coverage.csv", "conditions.csv", "predictions_test.csv"):
        assert (tmp_path / name).read_bytes() == (out / name).read_bytes(), name


def test_csv_task_matches_synthetic_source(tmp_path):
    ds = synth_insitu(1, seed=4, cadence_s=60.0)
    write_local_csv(ds, tmp_path / "local.csv")
    cfg = RunConfig(task="csv", data_dir=str(tmp_path), hidden=[8], epochs=2, patience=None)
    prep = pipelines.prepare(cfg)
    assert len(prep.y) == len(ds)
    np.testing.assert_array_equal(prep.y, np.log10(ds.density))
    res = pipelines.run(cfg)
    assert res.model.meta["alt_range"][0] >= ds.alt.min()
    with pytest.raises(ConfigError):
        pipelines.prepare(RunConfig(task="csv"))


def test_toy_data_reads_generated_file(tmp_path):
    cfg = RunConfig(task="toy2", n_samples=40).resolved()
    x, y, sd = pipelines.toy_data(cfg)
    with open(tmp_path / "toy.csv", "w") as fh:
        fh.write("x,y,sigma_true\n")
        for row in zip(x, y, sd):
            fh.write(",".join(repr(float(v)) for v in row) + "\n")
    back = pipelines.toy_data(cfg.updated(data_dir=str(tmp_path)))
    for a, b in zip((x, y, sd), back):
        np.testing.assert_array_equal(a, b)
    with pytest.raises(ConfigError):
        pipelines.toy_data(cfg.updated(data_dir=str(tmp_path / "none")))
