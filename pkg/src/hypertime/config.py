"""Run configuration: one JSON document, overridable from the command line."""

from __future__ import annotations

import json
from dataclasses import asdict, dataclass, field, fields

from .hyper import DEFAULT_LAMBDAS, HyperTimeConfig
from .imputation import BASELINES, DEFAULT_TV_WEIGHT
from .inr import ACTIVATIONS, FitOptions
from .evaluation import DEFAULT_BAND, PredictorSpec
from .data_io import PRESETS


class ConfigError(ValueError):
    pass


@dataclass
class RunConfig:
    seed: int = 0
    # INR fitting
    epochs: int = 2000
    lr: float = 1e-4
    omega0: float = 30.0
    activation: str = "sine"
    hidden: list = field(default_factory=lambda: [60, 60, 60])
    activations: list = field(default_factory=lambda: list(ACTIVATIONS))
    max_series: int = 300
    channels: int = 1
    # imputation
    fractions: list = field(default_factory=lambda: [0.0, 0.1, 0.5, 0.7, 0.9])
    methods: list = field(default_factory=lambda: ["siren", "siren_tv", *BASELINES])
    tv_weight: float = DEFAULT_TV_WEIGHT
    # HyperTime
    lambdas: list = field(default_factory=lambda: list(DEFAULT_LAMBDAS))
    steps: int = 2000
    batch_size: int = 32
    hyper_lr: float = 1e-4
    n_samples: int = 100
    alpha_range: list = field(default_factory=lambda: [0.25, 0.75])
    n_components: int = 40
    # evaluation
    band: list = field(default_factory=lambda: list(DEFAULT_BAND))
    predictor_window: int = 8
    predictor_hidden: int = 32
    predictor_epochs: int = 500
    predictor_lr: float = 1e-3
    # synthetic data
    preset: str = "multisine"
    n_series: int = 20
    length: int = 128

    def __post_init__(self):
        self.validate()

    def validate(self):
        def need(cond, msg):
            if not cond:
                raise ConfigError(msg)

        need(self.epochs >= 1 and self.steps >= 0, "epochs must be >= 1 and steps >= 0")
        need(self.lr > 0 and self.hyper_lr > 0 and self.predictor_lr > 0, "learning rates must be positive")
        need(self.omega0 > 0, "omega0 must be positive")
        need(self.activation in ACTIVATIONS, f"activation must be one of {ACTIVATIONS}")
        need(all(a in ACTIVATIONS for a in self.activations), f"activations must be drawn from {ACTIVATIONS}")
        need(len(self.hidden) >= 1 and all(int(w) > 0 for w in self.hidden), "hidden widths must be positive")
        need(self.max_series >= 1 and self.channels >= 1, "max_series and channels must be >= 1")
        need(all(0.0 <= f < 1.0 for f in self.fractions), "missing fractions must lie in [0, 1)")
        known = {"siren", "siren_tv", *BASELINES}
        need(all(m in known for m in self.methods), f"methods must be drawn from {sorted(known)}")
        need(self.tv_weight >= 0, "tv_weight must be >= 0")
        need(len(self.lambdas) == 3 and all(x >= 0 for x in self.lambdas), "lambdas: three non-negative numbers")
        need(self.batch_size >= 1 and self.n_samples >= 1, "batch_size and n_samples must be >= 1")
        lo, hi = self.alpha_range
        need(0.0 <= lo <= hi <= 1.0, "alpha_range must satisfy 0 <= lo <= hi <= 1")
        need(self.n_components >= 1, "n_components must be >= 1")
        qlo, qhi = self.band
        need(0.0 <= qlo < qhi <= 1.0, "band must satisfy 0 <= lo < hi <= 1")
        need(self.predictor_window >= 1 and self.predictor_hidden >= 1 and self.predictor_epochs >= 1,
             "predictor window, hidden and epochs must be >= 1")
        need(self.preset in PRESETS, f"preset must be one of {PRESETS}")
        need(self.n_series >= 2 and self.length >= 16, "synthetic corpora need n_series >= 2, length >= 16")

    @classmethod
    def from_dict(cls, d: dict) -> "RunConfig":
        names = {f.name for f in fields(cls)}
        unknown = sorted(set(d) - names)
        if unknown:
            raise ConfigError(f"unknown config keys: {', '.join(unknown)}")
        return cls(**d)

    @classmethod
    def load(cls, path) -> "RunConfig":
        try:
            with open(path) as fh:
                d = json.load(fh)
        except json.JSONDecodeError as exc:
            raise ConfigError(f"{path}: invalid JSON ({exc})") from None
        if not isinstance(d, dict):
            raise ConfigError(f"{path}: config must be a JSON object")
        return cls.from_dict(d)

    def override(self, **kw) -> "RunConfig":
        d = asdict(self)
        d.update({k: v for k, v in kw.items() if v is not None})
        return self.from_dict(d)

    def to_dict(self) -> dict:
        return asdict(self)

    # views consumed by the modules
    def fit_options(self, tv_weight: float = 0.0) -> FitOptions:
        return FitOptions(self.epochs, self.lr, self.seed, tv_weight)

    def hypertime(self) -> HyperTimeConfig:
        return HyperTimeConfig(
            steps=self.steps, batch_size=self.batch_size, lr=self.hyper_lr, seed=self.seed,
            lambdas=tuple(self.lambdas), omega0=self.omega0, hypo_hidden=tuple(self.hidden),
        )

    def predictor(self) -> PredictorSpec:
        return PredictorSpec(self.predictor_window, self.predictor_hidden, self.predictor_epochs,
                             self.predictor_lr, self.seed)
