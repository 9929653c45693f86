"""Command-line interface: ``uqdense {gen-data,train,eval,tune,bench,predict-grid}``.

Every command takes the same configuration flags.  Values are layered as
defaults < ``--preset`` < ``--config`` file < explicit flags, and the
resolved configuration is written next to the outputs.

Exit codes: 0 success, 2 configuration error, 3 data error, 4 numeric
failure.
"""

from __future__ import annotations

import os

_threads = os.environ.get("UQDENSE_THREADS")
if _threads:
    # must happen before numpy loads its BLAS
    for _var in ("OMP_NUM_THREADS", "OPENBLAS_NUM_THREADS", "MKL_NUM_THREADS", "NUMEXPR_NUM_THREADS"):
        os.environ.setdefault(_var, _threads)

import argparse  # noqa: E402
import logging  # noqa: E402
import sys  # noqa: E402
from dataclasses import replace  # noqa: E402
from pathlib import Path  # noqa: E402

import numpy as np  # noqa: E402

from . import pipelines  # noqa: E402
from .config import PRESETS, RunConfig, load_config  # noqa: E402
from .datasets import toy_generate, write_local_csv  # noqa: E402
from .datasets.synth import CADENCE_S, INCLINATION_DEG  # noqa: E402
from .datasets.toy import DEFAULT_RANGE  # noqa: E402
from .errors import ConfigError, UqDenseError  # noqa: E402
from .evalkit import BenchResult, benchmark_runtime, read_json, write_bench, write_csv, write_json  # noqa: E402
from .nn import load_model, save_model  # noqa: E402
from .tuner import SearchSpace, gp_guided_search, make_trainer, rank_trials, tuning_data  # noqa: E402

log = logging.getLogger("uqdense")

TOY_TRUTH = {
    1: {"mean": "0.3*x + cos(0.5*x) - 4", "sigma": "0.5*exp(sin(0.2*x)) / (1 + exp(sin(0.8*x)))"},
    2: {"mean": "sin(2*x + cos(3*x))", "sigma": "|0.05*sin(0.2*x)|"},
}


# ---------------------------------------------------------------- config handling
def _config(args, base: RunConfig | None = None) -> RunConfig:
    flags = {"seed": args.seed, "uq_method": args.method, "k": args.k, "n_draws": args.draws}
    if getattr(args, "data", None) is not None:
        flags["data_dir"] = str(args.data)
    if base is not None:
        # a saved run: only keys named by the preset or file replace the saved values
        d = base.to_dict()
        if args.preset is not None:
            d.update(PRESETS[args.preset])
        if args.config is not None:
            d.update(_read_config(args.config))
        return RunConfig.from_dict(d).updated(**flags).resolved()
    return load_config(args.config, args.preset, **flags).resolved()


def _read_config(path) -> dict:
    try:
        return read_json(path)
    except FileNotFoundError:
        raise ConfigError(f"config file {path} not found") from None
    except ValueError as exc:
        raise ConfigError(f"config file {path} is not valid JSON: {exc}") from None


def _out(args, cfg: RunConfig) -> Path:
    out = Path(args.out if args.out is not None else cfg.out)
    out.mkdir(parents=True, exist_ok=True)
    return out


def _print_metrics(metrics: dict) -> None:
    for name in ("train", "validation", "test"):
        if name in metrics:
            m = metrics[name]
            print(f"{name:>10}: n={m['n']:<8d} MAE%={m['mae_percent']:.3f}  calibration%={m['calibration_score']:.3f}")


# ---------------------------------------------------------------- commands
def cmd_gen_data(args) -> int:
    cfg = replace(_config(args), data_dir=None)
    out = _out(args, cfg)
    truth: dict = {"task": cfg.task, "data_seed": cfg.data_seed}
    if cfg.task in ("toy1", "toy2"):
        p = int(cfg.task[-1])
        x, y, sd = toy_generate(p, cfg.n_samples, seed=cfg.data_seed)
        write_csv([{"x": a, "y": b, "sigma_true": c} for a, b, c in zip(x, y, sd)], out / "toy.csv",
                  ["x", "y", "sigma_true"])
        truth.update(problem=p, n_samples=cfg.n_samples, x_range=list(DEFAULT_RANGE[p]), **TOY_TRUTH[p])
    elif cfg.task == "global_synth":
        series, grids = pipelines.global_data(cfg)
        np.save(out / "grids.npy", grids)
        pipelines.write_driver_csv(series, out / "drivers.csv")
        truth.update(n_epochs=len(series), cadence_hours=cfg.cadence_hours, grid_shape=list(grids.shape[1:]),
                     noise="log10 density + N(0, sigma(alt, ap)); see uqdense.datasets.synth.log10_noise_sigma")
    elif cfg.task == "local_synth":
        ds = pipelines.local_data(cfg)
        write_local_csv(ds, out / "local.csv")
        truth.update(n_days=cfg.n_days, spread_days=cfg.spread_days, n_rows=len(ds), cadence_s=cfg.cadence_s,
                     inclination_deg=INCLINATION_DEG, nominal_cadence_s=CADENCE_S,
                     noise="log10 density + N(0, sigma(alt, ap)); see uqdense.datasets.synth.log10_noise_sigma")
    else:
        raise ConfigError("gen-data needs a synthetic task (toy1, toy2, global_synth or local_synth)")
    write_json(truth, out / "truth.json")
    write_json(cfg.to_dict(), out / "config.resolved.json")
    print(f"wrote {cfg.task} data to {out}")
    return 0


def cmd_train(args) -> int:
    cfg = _config(args)
    out = _out(args, cfg)
    prep = pipelines.prepare(cfg)
    model, hist = pipelines.train_prepared(cfg, prep)
    pipelines.save_training(out, cfg, model, hist, prep)
    best = int(np.argmin(hist["val_loss"])) if hist.get("val_loss") else -1
    print(f"trained {cfg.uq_method} model for {cfg.task}; best epoch {best}; saved to {out / 'model'}")
    return 0


def _reloaded(args):
    if args.out is None:
        raise ConfigError("--out must point at a directory written by 'uqdense train'")
    saved, model, basis = pipelines.reload(args.out)
    cfg = _config(args, saved)
    if cfg.uq_method != model.meta.get("uq_method", cfg.uq_method):
        raise ConfigError(f"model in {args.out} was trained with {model.meta['uq_method']}, not {cfg.uq_method}")
    return cfg, model, basis, Path(args.out)


def cmd_eval(args) -> int:
    cfg, model, basis, out = _reloaded(args)
    prep = pipelines.prepare(cfg, basis=basis)
    metrics, _ = pipelines.evaluate(cfg, model, prep, out)
    _print_metrics(metrics)
    return 0


def cmd_tune(args) -> int:
    cfg = _config(args)
    out = _out(args, cfg)
    prep = pipelines.prepare(cfg)
    space = SearchSpace.from_dict(cfg.search_space)
    trainer = make_trainer(cfg.head(), epochs=cfg.tune_epochs, batch_size=cfg.batch_size,
                           patience=cfg.patience or cfg.tune_epochs, k=cfg.k_train)
    trials = gp_guided_search(space, tuning_data(prep.x, prep.y, prep.split), cfg.loss_kind(), cfg.n_random,
                              cfg.n_guided, seed=cfg.search_seed, trainer=trainer, log_path=out / "trials.jsonl")
    ranked = rank_trials(trials)
    write_json({"space": space.to_dict(), "best": ranked[0].to_dict(), "ranking": [t.index for t in ranked]},
               out / "tuning.json")
    write_json(cfg.to_dict(), out / "config.resolved.json")
    b = ranked[0]
    print(f"best trial {b.index} ({b.phase}): validation loss {b.validation_loss:.5f}, hidden {b.spec.hidden}")
    return 0


def _bench_pair(cfg: RunConfig, out: Path):
    if cfg.mc_model and cfg.direct_model:
        return load_model(cfg.mc_model), load_model(cfg.direct_model), None
    mc_cfg = cfg.updated(uq_method="mc_dropout")
    if not np.any(np.asarray(mc_cfg.dropout, dtype=np.float64) > 0):
        raise ConfigError("the benchmark needs a dropout rate > 0 for the MC model (or set mc_model/direct_model)")
    prep = pipelines.prepare(cfg)
    mc, _ = pipelines.train_prepared(mc_cfg, prep)
    direct, _ = pipelines.train_prepared(cfg.updated(uq_method="direct_prob", dropout=0.0), prep)
    save_model(mc, out / "mc_model")
    save_model(direct, out / "direct_model")
    return mc, direct, prep.x


def cmd_bench(args) -> int:
    cfg = _config(args)
    out = _out(args, cfg)
    mc, direct, x = _bench_pair(cfg, out)
    if x is None:
        x = pipelines.prepare(cfg).x
    result: BenchResult = benchmark_runtime(mc, direct, x, n_samples=tuple(cfg.bench_samples), k=cfg.k,
                                            n_draws=cfg.n_draws, repeats=cfg.bench_repeats,
                                            chunk_size=cfg.chunk_size, batch_rows=cfg.batch_rows,
                                            seed=cfg.inference_seed)
    # wall-clock timings live only in bench.json, never in the deterministic outputs
    write_bench(result, out)
    write_json(cfg.to_dict(), out / "config.resolved.json")
    for row in result.table():
        print(f"{row['method']:>12} {row['samples']:>7d}  {row['cpu_seconds']:.3f} s")
    for n in cfg.bench_samples:
        print(f"MC/direct ratio at {n}: {result.ratio(n):.1f}x")
    return 0


def cmd_predict_grid(args) -> int:
    cfg, model, _, out = _reloaded(args)
    if args.alt_range is not None:
        lo, hi, step = args.alt_range
        alts = np.arange(lo, hi + 0.5 * step, step)
    elif args.alt:
        alts = args.alt
    else:
        alts = cfg.grid_alts
    res = pipelines.predict_grid(cfg, model, args.condition or cfg.condition, alts, out)
    for w in res["meta"]["warnings"]:
        print(f"warning: {w}", file=sys.stderr)
    if cfg.profile_conditions and not args.no_profiles:
        pipelines.uncertainty_profiles(cfg, model, cfg.profile_conditions, out)
    print(f"wrote density maps for {len(res['maps'])} altitude(s) to {out}")
    return 0


# ---------------------------------------------------------------- parser
def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", type=Path, help="JSON config file")
    common.add_argument("--preset", choices=sorted(PRESETS), help="named preset applied before --config")
    common.add_argument("--seed", type=int, help="master seed (unsigned 64-bit)")
    common.add_argument("--out", type=Path, help="output directory")
    common.add_argument("--method", choices=("mc", "direct"), help="uncertainty method")
    common.add_argument("--k", type=int, help="MC dropout forward passes")
    common.add_argument("--draws", type=int, help="samples drawn from each predictive Gaussian")
    common.add_argument("--data", type=Path, help="directory written by gen-data")
    common.add_argument("-v", "--verbose", action="store_true")

    parser = argparse.ArgumentParser(prog="uqdense", description=__doc__.splitlines()[0])
    sub = parser.add_subparsers(dest="command", required=True)
    sub.add_parser("gen-data", parents=[common], help="write a synthetic dataset").set_defaults(fn=cmd_gen_data)
    sub.add_parser("train", parents=[common], help="train and save a model").set_defaults(fn=cmd_train)
    sub.add_parser("eval", parents=[common], help="metrics for a trained model").set_defaults(fn=cmd_eval)
    sub.add_parser("tune", parents=[common], help="hyperparameter search").set_defaults(fn=cmd_tune)
    sub.add_parser("bench", parents=[common], help="MC vs direct runtime").set_defaults(fn=cmd_bench)
    pg = sub.add_parser("predict-grid", parents=[common], help="global maps from a local model")
    pg.add_argument("--condition", help="condition preset name, e.g. 'Solar 2' or 'doy 3'")
    pg.add_argument("--alt", type=float, action="append", help="altitude in km (repeatable)")
    pg.add_argument("--alt-range", type=float, nargs=3, metavar=("LO", "HI", "STEP"))
    pg.add_argument("--no-profiles", action="store_true", help="skip the altitude uncertainty profiles")
    pg.set_defaults(fn=cmd_predict_grid)
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING, format="%(levelname)s %(message)s")
    if args.seed is not None and not 0 <= args.seed < 2**64:
        print("error: --seed must be an unsigned 64-bit integer", file=sys.stderr)
        return 2
    try:
        return args.fn(args)
    except UqDenseError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return exc.exit_code
    except OSError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except FloatingPointError as exc:
        print(f"error: numeric failure: {exc}", file=sys.stderr)
        return 4


if __name__ == "__main__":
    sys.exit(main())
