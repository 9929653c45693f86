"""Run configuration shared by the pipelines and the command-line interface.

A :class:`RunConfig` is built from defaults, then an optional named preset,
then a JSON file, then explicit overrides (later sources win).  Derived seeds
are filled in by :meth:`RunConfig.resolved`, and the resolved config is what
every run writes to ``config.resolved.json``.
"""

from __future__ import annotations

import json
from dataclasses import asdict, dataclass, field, fields, replace
from pathlib import Path

import numpy as np

from .errors import ConfigError

TASKS = ("toy1", "toy2", "global_synth", "local_synth", "csv")
METHODS = ("mc_dropout", "direct_prob")
SPLITS = ("random", "chronological", "rolling")
SEED_NAMES = ("data_seed", "init_seed", "train_seed", "inference_seed", "search_seed")
METHOD_ALIASES = {"mc": "mc_dropout", "mc_dropout": "mc_dropout", "direct": "direct_prob", "direct_prob": "direct_prob"}


@dataclass
class RunConfig:
    task: str = "toy1"
    uq_method: str = "direct_prob"
    # architecture
    hidden: list = field(default_factory=lambda: [64, 64])
    activations: object = "tanh"
    dropout: object = 0.0
    # training
    epochs: int = 200
    batch_size: int = 256
    learning_rate: float = 3e-3
    optimizer: str = "adam"
    patience: int | None = 50
    k_train: int = 32
    # inference
    k: int = 1000
    n_draws: int = 1000
    chunk_size: int = 100
    batch_rows: int = 2**17
    # seeds; None means derived from ``seed``
    seed: int = 0
    data_seed: int | None = None
    init_seed: int | None = None
    train_seed: int | None = None
    inference_seed: int | None = None
    search_seed: int | None = None
    # data
    split: str = "random"
    split_ratios: list = field(default_factory=lambda: [0.6, 0.2, 0.2])
    block_weeks: list = field(default_factory=lambda: [8, 1, 1])
    n_samples: int = 20000
    n_epochs: int = 5000
    cadence_hours: float = 3.0
    r: int = 10
    n_days: int = 20
    spread_days: bool = True
    cadence_s: float = 10.0
    data_dir: str | None = None
    csv_schema: str = "local"
    # evaluation
    coverage_level: float = 0.9
    condition: str = "Solar 2"
    profile_conditions: list = field(default_factory=lambda: ["Solar 1", "Solar 2", "Solar 3"])
    alt_range: list = field(default_factory=lambda: [300.0, 450.0, 1.0])
    grid_alts: list = field(default_factory=lambda: [400.0])
    # tuning
    search_space: dict = field(default_factory=dict)
    n_random: int = 5
    n_guided: int = 10
    tune_epochs: int = 30
    # benchmark
    bench_samples: list = field(default_factory=lambda: [8640, 86400])
    bench_repeats: int = 3
    mc_model: str | None = None
    direct_model: str | None = None
    # output
    out: str = "run"

    def __post_init__(self):
        self.uq_method = METHOD_ALIASES.get(self.uq_method, self.uq_method)
        self.validate()

    def validate(self) -> None:
        if self.task not in TASKS:
            raise ConfigError(f"unknown task {self.task!r}; choose from {TASKS}")
        if self.uq_method not in METHODS:
            raise ConfigError(f"unknown uq_method {self.uq_method!r}; choose from {METHODS}")
        if self.split not in SPLITS:
            raise ConfigError(f"unknown split {self.split!r}; choose from {SPLITS}")
        for name in ("epochs", "batch_size", "k_train", "k", "n_draws", "chunk_size", "batch_rows", "n_samples",
                     "n_epochs", "r", "n_days", "bench_repeats"):
            if int(getattr(self, name)) < (0 if name == "epochs" else 1):
                raise ConfigError(f"{name} must be positive, got {getattr(self, name)}")
        if self.uq_method == "mc_dropout" and self.k < 2:
            raise ConfigError("MC dropout evaluation needs k >= 2")
        if not self.hidden:
            raise ConfigError("at least one hidden layer is required")

    def resolved(self) -> "RunConfig":
        """Copy with every derived seed filled in from ``seed``."""
        ss = np.random.SeedSequence(int(self.seed))
        derived = [int(c.generate_state(1)[0]) for c in ss.spawn(len(SEED_NAMES))]
        upd = {n: (d if getattr(self, n) is None else int(getattr(self, n))) for n, d in zip(SEED_NAMES, derived)}
        return replace(self, **upd)

    def loss_kind(self) -> str:
        return "nlpd_mc" if self.uq_method == "mc_dropout" else "nlpd_direct"

    def head(self) -> str:
        return "plain" if self.uq_method == "mc_dropout" else "direct"

    def to_dict(self) -> dict:
        return asdict(self)

    @classmethod
    def from_dict(cls, d: dict) -> "RunConfig":
        names = {f.name for f in fields(cls)}
        unknown = set(d) - names
        if unknown:
            raise ConfigError(f"unknown config keys {sorted(unknown)}")
        return cls(**d)

    def updated(self, **kw) -> "RunConfig":
        return RunConfig.from_dict({**self.to_dict(), **{k: v for k, v in kw.items() if v is not None}})


# Shipped presets.  "desk" sizes fit a laptop CPU in minutes.
PRESETS: dict[str, dict] = {
    "toy1_direct": {"task": "toy1", "uq_method": "direct_prob", "hidden": [64, 64], "epochs": 200,
                    "learning_rate": 3e-3, "patience": 50},
    "toy2_direct": {"task": "toy2", "uq_method": "direct_prob", "hidden": [64, 64], "epochs": 300,
                    "learning_rate": 3e-3, "patience": 60},
    "toy1_mc": {"task": "toy1", "uq_method": "mc_dropout", "hidden": [64, 64], "dropout": [0.0, 0.2],
                "epochs": 700, "learning_rate": 3e-3, "patience": 100},
    "toy2_mc": {"task": "toy2", "uq_method": "mc_dropout", "hidden": [64, 64], "dropout": [0.0, 0.2],
                "epochs": 120, "learning_rate": 1e-2, "patience": 30},
    "global_direct": {"task": "global_synth", "uq_method": "direct_prob", "split": "chronological",
                      "n_epochs": 5000, "r": 10, "hidden": [128, 128], "activations": "tanh", "epochs": 2000,
                      "batch_size": 64, "learning_rate": 1e-3, "patience": 300},
    "global_mc": {"task": "global_synth", "uq_method": "mc_dropout", "split": "chronological",
                  "n_epochs": 5000, "r": 10, "hidden": [128, 128], "activations": "tanh", "dropout": [0.0, 0.1],
                  "epochs": 150, "batch_size": 128, "learning_rate": 3e-3, "patience": 40},
    "local_direct": {"task": "local_synth", "uq_method": "direct_prob", "split": "rolling", "n_days": 20,
                     "block_weeks": [8 / 7, 1 / 7, 1 / 7], "hidden": [128, 128], "epochs": 40,
                     "batch_size": 512, "learning_rate": 2e-3, "patience": 10},
    "local_mc": {"task": "local_synth", "uq_method": "mc_dropout", "split": "rolling", "n_days": 20,
                 "block_weeks": [8 / 7, 1 / 7, 1 / 7], "hidden": [128, 128], "dropout": [0.0, 0.1], "epochs": 15,
                 "batch_size": 512, "learning_rate": 2e-3, "patience": 5, "k": 200},
    # matched pair for the runtime benchmark; timing does not depend on fit quality
    "bench": {"task": "local_synth", "uq_method": "mc_dropout", "split": "random", "n_days": 2,
              "hidden": [128, 128], "dropout": [0.0, 0.1], "epochs": 3, "batch_size": 512,
              "learning_rate": 2e-3, "patience": None},
}


def load_config(path=None, preset: str | None = None, **overrides) -> RunConfig:
    """Defaults, then ``preset``, then the JSON file, then non-None ``overrides``."""
    d: dict = {}
    if preset is not None:
        if preset not in PRESETS:
            raise ConfigError(f"unknown preset {preset!r}; choose from {sorted(PRESETS)}")
        d.update(PRESETS[preset])
    if path is not None:
        try:
            d.update(json.loads(Path(path).read_text()))
        except FileNotFoundError:
            raise ConfigError(f"config file {path} not found") from None
        except json.JSONDecodeError as exc:
            raise ConfigError(f"config file {path} is not valid JSON: {exc}") from None
    d.update({k: v for k, v in overrides.items() if v is not None})
    return RunConfig.from_dict(d)
