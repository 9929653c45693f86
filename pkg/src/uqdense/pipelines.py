"""End-to-end runs: data, split, training, prediction and the metric bundle.

Each ``run_*`` function takes a resolved :class:`~uqdense.config.RunConfig`
and optionally an output directory.  With a directory it writes the model,
``config.resolved.json``, ``metrics.json`` and the CSV/JSON reports; the
files depend only on the config and the data, never on wall-clock time.
"""

from __future__ import annotations

import csv
import logging
import warnings
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from . import rom_pca
from .config import RunConfig
from .datasets import (
    CHAMP_DRIVERS,
    DriverSeries,
    LocalDataset,
    SplitIndex,
    global_inputs,
    ingest_csv,
    local_inputs,
    local_inputs_from,
    split_global,
    split_random,
    split_rolling,
    synth_drivers,
    synth_global_series,
    synth_insitu,
    synth_insitu_spread,
    toy_generate,
    toy_sigma,
)
from .datasets.synth import DEFAULT_START
from .datasets.toy import DEFAULT_RANGE
from .errors import ConfigError, DataError, NumericError
from .evalkit import (
    altitude_uncertainty_profile,
    binned_from_relative,
    calibration_report,
    condition_preset,
    coverage_map,
    lognormal_moments,
    normalized_mae_percent,
    read_json,
    write_calibration,
    write_conditions,
    write_coverage,
    write_csv,
    write_json,
    write_profiles,
)
from .evalkit.spatial import Condition
from .nn import Architecture, MlpModel, TrainingData, init_model, load_model, save_model, train
from .uq import ProbPrediction, predict

logger = logging.getLogger(__name__)

SPLIT_NAMES = ("train", "validation", "test")


@dataclass
class RunResult:
    config: RunConfig
    model: MlpModel
    metrics: dict
    split: SplitIndex
    history: dict | None = None
    extras: dict = field(default_factory=dict)


# ---------------------------------------------------------------- shared steps
def make_split(cfg: RunConfig, n: int) -> SplitIndex:
    if cfg.split == "random":
        return split_random(n, cfg.split_ratios, seed=cfg.data_seed)
    if cfg.split == "chronological":
        return split_global(n, cfg.split_ratios)
    return split_rolling(n, cfg.cadence_s, cfg.block_weeks)


def architecture(cfg: RunConfig, n_inp: int, n_out: int) -> Architecture:
    return Architecture(n_inp, n_out, list(cfg.hidden), cfg.activations, cfg.dropout, cfg.head())


def fit_model(cfg: RunConfig, x: np.ndarray, y: np.ndarray, split: SplitIndex) -> tuple[MlpModel, dict]:
    """Build and train a model on the split's train rows, early-stopping on validation."""
    y = y.reshape(len(y), -1)
    model = init_model(architecture(cfg, x.shape[1], y.shape[1]), cfg.init_seed)
    data = TrainingData(x[split.train], y[split.train], x[split.validation], y[split.validation])
    hist = train(model, data, cfg.loss_kind(), batch_size=cfg.batch_size, epochs=cfg.epochs,
                 patience=cfg.patience, optimizer=cfg.optimizer, learning_rate=cfg.learning_rate,
                 k=cfg.k_train, seed=cfg.train_seed)
    model.meta["uq_method"] = cfg.uq_method
    return model, hist.to_dict()


def predict_cfg(cfg: RunConfig, model: MlpModel, x) -> ProbPrediction:
    """Predictive Gaussian using the config's method and fixed inference seed."""
    if cfg.uq_method == "mc_dropout":
        return predict(model, x, "mc_dropout", k=cfg.k, seed=cfg.inference_seed, chunk_size=cfg.chunk_size,
                       batch_rows=cfg.batch_rows)
    return predict(model, x, "direct_prob")


def _write_history(hist: dict, path: Path) -> None:
    rows = [{"epoch": i, "train_loss": a, "val_loss": b}
            for i, (a, b) in enumerate(zip(hist["train_loss"], hist["val_loss"]))]
    write_csv(rows, path, ["epoch", "train_loss", "val_loss"])


def _write_predictions(path: Path, y, pred: ProbPrediction, extra: dict | None = None) -> None:
    y = np.asarray(y).reshape(len(y), -1)
    cols, data = [], []
    for name, arr in (extra or {}).items():
        cols.append(name)
        data.append(np.asarray(arr))
    for j in range(y.shape[1]):
        cols += [f"y_{j}", f"mu_{j}", f"sigma_{j}"]
        data += [y[:, j], pred.mu[:, j], pred.sigma[:, j]]
    path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(cols)
        for row in zip(*data):
            w.writerow([repr(float(v)) for v in row])


# ---------------------------------------------------------------- data
@dataclass
class Prepared:
    """Model inputs, targets and split for one task, plus task-specific extras."""

    x: np.ndarray
    y: np.ndarray
    split: SplitIndex
    extras: dict = field(default_factory=dict)


def toy_problem(cfg: RunConfig) -> int:
    if cfg.task not in ("toy1", "toy2"):
        raise ConfigError(f"task {cfg.task!r} is not a toy problem")
    return int(cfg.task[-1])


def toy_data(cfg: RunConfig):
    """``(x, y, sigma_true)`` from ``data_dir/toy.csv`` if configured, else freshly generated."""
    if cfg.data_dir is not None:
        path = Path(cfg.data_dir) / "toy.csv"
        if not path.exists():
            raise ConfigError(f"{path} not found; run gen-data first or unset data_dir")
        try:
            arr = np.loadtxt(path, delimiter=",", skiprows=1, ndmin=2)
        except ValueError as exc:
            raise DataError(f"{path}: {exc}") from None
        return arr[:, 0], arr[:, 1], arr[:, 2]
    return toy_generate(toy_problem(cfg), cfg.n_samples, seed=cfg.data_seed)


def global_epochs(cfg: RunConfig) -> np.ndarray:
    step = np.timedelta64(int(round(cfg.cadence_hours * 3600)), "s")
    return np.datetime64(DEFAULT_START, "s") + np.arange(cfg.n_epochs) * step


def read_driver_csv(path) -> DriverSeries:
    with open(path, newline="") as fh:
        rows = list(csv.reader(fh))
    if not rows or rows[0][0] != "epoch":
        raise DataError(f"{path}: header must start with 'epoch'")
    header = rows[0]
    body = rows[1:]
    try:
        epochs = np.array([r[0] for r in body], dtype="datetime64[s]")
        vals = np.array([[float(v) for v in r[1:]] for r in body], dtype=np.float64).reshape(len(body), -1)
    except ValueError as exc:
        raise DataError(f"{path}: {exc}") from None
    return DriverSeries(epochs, {k: vals[:, i] for i, k in enumerate(header[1:])})


def write_driver_csv(series: DriverSeries, path) -> Path:
    path = Path(path)
    names = list(series.columns)
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["epoch", *names])
        for i in range(len(series)):
            w.writerow([str(series.epochs[i]), *(repr(float(series.columns[k][i])) for k in names)])
    return path


def global_data(cfg: RunConfig) -> tuple[DriverSeries, np.ndarray]:
    """Driver series and noisy density grids, shape (m, 24, 19, 27).

    Read from ``data_dir`` (``drivers.csv`` + ``grids.npy``) when configured.
    """
    if cfg.data_dir is not None:
        d = Path(cfg.data_dir)
        if not (d / "grids.npy").exists() or not (d / "drivers.csv").exists():
            raise ConfigError(f"{d} needs grids.npy and drivers.csv; run gen-data first")
        series = read_driver_csv(d / "drivers.csv")
        grids = np.load(d / "grids.npy")
        if grids.shape != (len(series),) + rom_pca.GRID_SHAPE:
            raise DataError(f"grids.npy has shape {grids.shape}, expected ({len(series)}, 24, 19, 27)")
        return series, grids
    ss = np.random.SeedSequence(cfg.data_seed)
    drv_seed, grid_seed = (int(s.generate_state(1)[0]) for s in ss.spawn(2))
    series = synth_drivers(global_epochs(cfg), drv_seed)
    return series, synth_global_series(series, grid_seed)


def local_data(cfg: RunConfig) -> LocalDataset:
    if cfg.task == "csv" or cfg.data_dir is not None:
        if cfg.data_dir is None:
            raise ConfigError("task 'csv' needs data_dir pointing at a directory with local.csv")
        path = Path(cfg.data_dir) / "local.csv"
        if not path.exists():
            raise ConfigError(f"{path} not found")
        return ingest_csv(path, "local")
    if cfg.spread_days:
        return synth_insitu_spread(cfg.n_days, seed=cfg.data_seed, cadence_s=cfg.cadence_s)
    return synth_insitu(cfg.n_days, seed=cfg.data_seed, cadence_s=cfg.cadence_s)


def prepare(cfg: RunConfig, data=None, basis: rom_pca.PcaBasis | None = None) -> Prepared:
    """Load or generate the task's data and split it.

    For the global task the PCA basis is fitted on the training epochs only
    (or ``basis`` is reused) and the targets are the r coefficients.
    """
    cfg = cfg.resolved()
    if cfg.task in ("toy1", "toy2"):
        x, y, sd = toy_data(cfg) if data is None else data
        x = np.asarray(x, dtype=np.float64).reshape(-1, 1)
        return Prepared(x, np.asarray(y, dtype=np.float64), make_split(cfg, len(x)), {"sigma_true": sd})
    if cfg.task == "global_synth":
        series, grids = global_data(cfg) if data is None else data
        split = make_split(cfg, len(series))
        if basis is None:
            basis = rom_pca.fit_pca(grids[split.train], cfg.r)
        alpha = rom_pca.encode(basis, grids)
        x, _ = global_inputs(series)
        return Prepared(x, alpha, split, {"series": series, "grids": grids, "basis": basis})
    ds = local_data(cfg) if data is None else data
    if len(ds) < 3:
        raise DataError(f"need at least 3 samples, got {len(ds)}")
    x, _ = local_inputs(ds)
    return Prepared(x, np.log10(ds.density), make_split(cfg, len(ds)), {"dataset": ds})


def train_prepared(cfg: RunConfig, prep: Prepared) -> tuple[MlpModel, dict]:
    cfg = cfg.resolved()
    if not prep.split.is_disjoint():
        raise DataError("train/validation/test splits overlap")
    model, hist = fit_model(cfg, prep.x, prep.y, prep.split)
    model.meta["task"] = cfg.task
    if cfg.task == "global_synth":
        model.meta["r"] = cfg.r
    if "dataset" in prep.extras:
        alt = prep.extras["dataset"].alt[prep.split.train]
        model.meta["alt_range"] = [float(alt.min()), float(alt.max())]
    return model, hist


# ---------------------------------------------------------------- evaluation
def sigma_grid_error(cfg: RunConfig, model: MlpModel, n_grid: int = 200) -> float:
    """RMSE of predicted against true sigma on an even grid, relative to mean true sigma."""
    p = toy_problem(cfg)
    g = np.linspace(*DEFAULT_RANGE[p], n_grid)
    pred = predict_cfg(cfg, model, g[:, None])
    true = toy_sigma(p, g)
    return float(np.sqrt(np.mean((pred.sigma[:, 0] - true) ** 2)) / np.mean(true))


def _global_rel_errors(basis, mu_alpha, grids, chunk: int = 200) -> np.ndarray:
    """Per-epoch sum over cells of |decoded - true| / true."""
    n = len(mu_alpha)
    rel_sum = np.empty(n)
    for a in range(0, n, chunk):
        sl = slice(a, min(n, a + chunk))
        dens = rom_pca.decode(basis, mu_alpha[sl])
        truth = grids[sl].reshape(dens.shape)
        rel_sum[sl] = (np.abs(dens - truth) / truth).sum(axis=1)
    return rel_sum


def evaluate(cfg: RunConfig, model: MlpModel, prep: Prepared, out=None) -> tuple[dict, dict]:
    """Per-split MAE% and calibration score, plus task-specific analyses.

    Toy tasks report a normalized MAE% (targets cross zero); the global task
    reports MAE% on decoded densities pooled over every cell and calibration
    on the PCA coefficients; the local task reports MAE% of the predictive
    median ``10**mu`` and calibration on log10 density.
    """
    cfg = cfg.resolved()
    pred_all = predict_cfg(cfg, model, prep.x)
    y = prep.y.reshape(len(prep.y), -1)
    metrics, reports, extras = {}, {}, {}
    per_sample_extra = {}
    if cfg.task == "global_synth":
        basis, grids, series = prep.extras["basis"], prep.extras["grids"], prep.extras["series"]
        rel_sum = _global_rel_errors(basis, pred_all.mu, grids)
        d = basis.d
    for name in SPLIT_NAMES:
        idx = getattr(prep.split, name)
        if len(idx) == 0:
            raise ConfigError(f"split {name!r} is empty")
        rep = calibration_report(pred_all[idx], y[idx])
        if cfg.task in ("toy1", "toy2"):
            mae = normalized_mae_percent(y[idx, 0], pred_all.mu[idx, 0])
            per_sample_extra[name] = {"x": prep.x[idx, 0]}
        elif cfg.task == "global_synth":
            mae = float(100.0 * rel_sum[idx].sum() / (len(idx) * d))
            per_sample_extra[name] = {"epoch_index": idx.astype(np.float64), "mae_percent": 100.0 * rel_sum[idx] / d}
        else:
            dens = prep.extras["dataset"].density[idx]
            mae = float(100.0 * np.mean(np.abs(10.0 ** pred_all.mu[idx, 0] - dens) / dens))
            per_sample_extra[name] = {}
        metrics[name] = {"n": int(len(idx)), "mae_percent": mae, "calibration_score": rep.score}
        reports[name] = rep

    if cfg.task in ("toy1", "toy2"):
        metrics["sigma_rmse_relative"] = sigma_grid_error(cfg, model)
    if cfg.task == "global_synth":
        te = prep.split.test
        mu_log, sd_log = rom_pca.decode_gaussian(basis, pred_all.mu[te], pred_all.sigma[te])
        shape = (len(te),) + rom_pca.GRID_SHAPE
        with warnings.catch_warnings():
            warnings.simplefilter("ignore", RuntimeWarning)
            cmap = coverage_map(mu_log.reshape(shape), sd_log.reshape(shape), np.log10(grids[te]).reshape(shape),
                                cfg.coverage_level)
        cond = binned_from_relative(rel_sum, np.full(len(series), float(d)), series["F10"], series["ap"])
        metrics["captured_variance_train"] = rom_pca.captured_variance(basis, grids[prep.split.train])
        metrics["coverage_per_altitude"] = cmap.per_altitude.tolist()
        metrics["conditions_total_mae_percent"] = cond.total
        extras.update(coverage=cmap, conditions=cond)

    if out is not None:
        out = Path(out)
        out.mkdir(parents=True, exist_ok=True)
        write_json(metrics, out / "metrics.json")
        write_calibration(reports["test"], out)
        for name in SPLIT_NAMES:
            idx = getattr(prep.split, name)
            _write_predictions(out / f"predictions_{name}.csv", y[idx], pred_all[idx], per_sample_extra[name])
        if cfg.task == "global_synth":
            write_coverage(extras["coverage"], out, rom_pca.LON_DEG, rom_pca.LAT_DEG, rom_pca.ALT_KM)
            write_conditions(extras["conditions"], out)
    extras["reports"] = reports
    return metrics, extras


def save_training(out, cfg: RunConfig, model: MlpModel, hist: dict, prep: Prepared | None = None) -> Path:
    out = Path(out)
    out.mkdir(parents=True, exist_ok=True)
    write_json(cfg.resolved().to_dict(), out / "config.resolved.json")
    save_model(model, out / "model")
    _write_history(hist, out / "history.csv")
    if prep is not None and "basis" in prep.extras:
        rom_pca.save_basis(prep.extras["basis"], out / "pca")
    return out


def run(cfg: RunConfig, out=None, data=None) -> RunResult:
    """Prepare, train and evaluate; write every artifact when ``out`` is given."""
    cfg = cfg.resolved()
    prep = prepare(cfg, data)
    model, hist = train_prepared(cfg, prep)
    if out is not None:
        save_training(out, cfg, model, hist, prep)
    metrics, extras = evaluate(cfg, model, prep, out)
    extras["prepared"] = prep
    return RunResult(cfg, model, metrics, prep.split, hist, extras)


run_toy = run_global = run_local = run


# ---------------------------------------------------------------- global maps from a local model
MAP_LAT = rom_pca.LAT_DEG
MAP_LST = np.arange(0.0, 24.0, 1.0)


def _condition_inputs(cond: Condition, lat, lst, alt):
    drivers = {k: cond.drivers[k] for k in CHAMP_DRIVERS}
    return local_inputs_from(drivers, lat, lst, alt, cond.doy, cond.ut)


def density_predictor(cfg: RunConfig, model: MlpModel):
    """``fn(lat, lst, alt, condition) -> (mean, std)`` in density units (lognormal moments)."""

    def fn(lat, lst, alt, cond):
        pred = predict_cfg(cfg, model, _condition_inputs(cond, lat, lst, alt))
        return lognormal_moments(pred.mu[:, 0], pred.sigma[:, 0])

    return fn


def predict_grid(cfg: RunConfig, model: MlpModel, condition: str | Condition, alts, out=None) -> dict:
    """Density mean and std on a latitude x local-time grid at each altitude.

    Altitudes outside the model's training range are predicted but flagged in
    the returned metadata.
    """
    cfg = cfg.resolved()
    cond = condition_preset(condition) if isinstance(condition, str) else condition
    alts = [float(a) for a in np.atleast_1d(alts)]
    la, ls = np.meshgrid(MAP_LAT, MAP_LST, indexing="ij")
    fn = density_predictor(cfg, model)
    maps, warns = {}, []
    trust = model.meta.get("alt_range")
    for a in alts:
        mean, std = fn(la.ravel(), ls.ravel(), np.full(la.size, a), cond)
        if not np.all(std > 0) or not np.all(mean > 0):
            raise NumericError(f"non-positive density moments at {a} km")
        maps[a] = (mean.reshape(la.shape), std.reshape(la.shape))
        if trust is not None and not trust[0] <= a <= trust[1]:
            warns.append(f"altitude {a} km is outside the training range {trust[0]:.1f}-{trust[1]:.1f} km; "
                         "predictions may be unreliable")
    meta = {"condition": cond.name, "drivers": cond.drivers, "ut": cond.ut, "doy": cond.doy, "alts": alts,
            "trust_range_km": trust, "warnings": warns, "lat": MAP_LAT.tolist(), "lst": MAP_LST.tolist()}
    if out is not None:
        out = Path(out)
        rows = []
        for a, (mean, std) in maps.items():
            for (i, j), v in np.ndenumerate(mean):
                rows.append({"alt": a, "lat": float(MAP_LAT[i]), "lst": float(MAP_LST[j]), "density_mean": float(v),
                             "density_std": float(std[i, j])})
        write_csv(rows, out / "density_map.csv", ["alt", "lat", "lst", "density_mean", "density_std"])
        write_json(meta, out / "density_map.json")
    return {"maps": maps, "meta": meta}


def uncertainty_profiles(cfg: RunConfig, model: MlpModel, conditions, out=None) -> dict:
    """Altitude profiles of ``100 * sigma / mu`` for named condition presets."""
    cfg = cfg.resolved()
    lo, hi, step = cfg.alt_range
    alts = np.arange(lo, hi + 0.5 * step, step)
    fn = density_predictor(cfg, model)
    profiles = {name: altitude_uncertainty_profile(fn, condition_preset(name), alts) for name in conditions}
    if out is not None:
        write_profiles(profiles, out)
    return profiles


def reload(out) -> tuple[RunConfig, MlpModel, rom_pca.PcaBasis | None]:
    """Config, model and (for global runs) PCA basis saved by a previous run."""
    out = Path(out)
    if not (out / "config.resolved.json").exists():
        raise ConfigError(f"{out} holds no config.resolved.json; train first")
    cfg = RunConfig.from_dict(read_json(out / "config.resolved.json"))
    basis = rom_pca.load_basis(out / "pca") if (out / "pca" / "pca.json").exists() else None
    return cfg, load_model(out / "model"), basis


__all__ = [
    "RunResult", "Prepared", "make_split", "architecture", "fit_model", "predict_cfg", "toy_data", "global_data",
    "local_data", "global_epochs", "prepare", "train_prepared", "evaluate", "save_training", "run", "run_toy",
    "run_global", "run_local", "sigma_grid_error", "predict_grid", "density_predictor", "uncertainty_profiles",
    "reload", "read_driver_csv", "write_driver_csv",
]
