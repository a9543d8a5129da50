"""JSON experiment configuration.

One document describes the network, the data source, the likelihood, the
parametrisation and the sampler. Defaults are the desk-scale reference
settings (sigma = 0.1, hidden sigma_w^2 = 2, sigma_b^2 = 0.01, readout
sigma_w^2 = 1, thinning 25, lam = sigma^2, 100 projections).
"""

from __future__ import annotations

import json
import math
from dataclasses import asdict, dataclass, field, fields
from typing import Optional, Union

from .errors import ConfigError

DATA_SOURCES = ("synthetic-1d", "gaussian-blobs", "linear", "csv")


@dataclass
class NetworkConfig:
    widths: list = field(default_factory=lambda: [256])
    nonlinearity: str = "gelu"
    sigma_w2: float = 2.0
    sigma_b2: float = 0.01
    readout_sigma_w2: float = 1.0
    readout_sigma_b2: float = 0.01
    architecture: str = "plain"
    skip_c: float = 1.0


@dataclass
class DataConfig:
    source: str = "gaussian-blobs"
    n: int = 64
    input_dim: int = 4
    num_classes: int = 3
    seed: int = 0
    test_points: int = 0
    path: Optional[str] = None
    mode: str = "classification"
    label_column: int = -1
    target_columns: Optional[list] = None


@dataclass
class SamplerConfig:
    stepsize: Union[float, str] = "auto"  # number or "auto" (tuned for acceptance)
    damping: float = 0.9
    steps: int = 20000
    burn_in: int = 2000
    thin: int = 25
    mh_correction: bool = False
    chains: int = 1
    workers: int = 1
    target_acceptance: float = 0.985  # used by "auto"


@dataclass
class BenchConfig:
    widths: list = field(default_factory=lambda: [32, 128, 512])
    steps: int = 1000
    warmup: int = 100


@dataclass
class SliceConfig:
    resolution: int = 20
    param_files: list = field(default_factory=list)  # three files; empty -> prior draws


@dataclass
class ExperimentConfig:
    network: NetworkConfig = field(default_factory=NetworkConfig)
    data: DataConfig = field(default_factory=DataConfig)
    noise: float = 0.01  # observation variance sigma^2
    parametrisation: str = "standard"
    lam: Optional[float] = None  # only with "repriorised"; None -> noise
    density_path: str = "auto"
    sampler: SamplerConfig = field(default_factory=SamplerConfig)
    projections: int = 100
    projection_seed: int = 0
    seed: int = 0
    bench: BenchConfig = field(default_factory=BenchConfig)
    slice: SliceConfig = field(default_factory=SliceConfig)

    def validate(self) -> "ExperimentConfig":
        if self.parametrisation not in ("standard", "repriorised"):
            raise ConfigError(f"parametrisation must be 'standard' or 'repriorised', got {self.parametrisation!r}")
        if self.lam is not None:
            if self.parametrisation != "repriorised":
                raise ConfigError("lam is only meaningful with the repriorised parametrisation")
            if not (isinstance(self.lam, (int, float)) and self.lam > 0):
                raise ConfigError("lam must be a positive number")
        if not (isinstance(self.noise, (int, float)) and self.noise > 0 and math.isfinite(self.noise)):
            raise ConfigError("noise must be a positive finite number")
        if self.density_path not in ("auto", "general", "marginal"):
            raise ConfigError(f"unknown density_path {self.density_path!r}")
        d = self.data
        if d.source not in DATA_SOURCES:
            raise ConfigError(f"data.source must be one of {DATA_SOURCES}")
        if d.source == "csv" and not d.path:
            raise ConfigError("data.path is required for csv sources")
        if d.mode not in ("classification", "regression"):
            raise ConfigError(f"unknown data.mode {d.mode!r}")
        if d.n < 1 or d.input_dim < 1 or d.num_classes < 1 or d.test_points < 0:
            raise ConfigError("data sizes must be positive")
        s = self.sampler
        if isinstance(s.stepsize, str):
            if s.stepsize != "auto":
                raise ConfigError("sampler.stepsize must be a number or 'auto'")
        elif not s.stepsize >= 0:
            raise ConfigError("sampler.stepsize must be >= 0")
        if not 0.0 <= s.damping <= 1.0:
            raise ConfigError("sampler.damping must lie in [0, 1]")
        if s.thin < 1 or s.chains < 1 or s.workers < 1:
            raise ConfigError("sampler.thin, chains and workers must be >= 1")
        if not 0 <= s.burn_in < s.steps:
            raise ConfigError("need 0 <= sampler.burn_in < sampler.steps")
        if self.projections < 1:
            raise ConfigError("projections must be >= 1")
        if self.network.architecture not in ("plain", "residual"):
            raise ConfigError(f"unknown architecture {self.network.architecture!r}")
        if self.bench.steps < 1 or self.bench.warmup < 0 or not self.bench.widths:
            raise ConfigError("bench needs widths, steps >= 1 and warmup >= 0")
        if self.slice.resolution < 1:
            raise ConfigError("slice.resolution must be >= 1")
        if self.slice.param_files and len(self.slice.param_files) != 3:
            raise ConfigError("slice.param_files needs exactly three entries")
        return self

    # -- serialisation -----------------------------------------------------

    def to_dict(self) -> dict:
        return asdict(self)

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), indent=2, sort_keys=True) + "\n"

    @classmethod
    def from_dict(cls, d: dict) -> "ExperimentConfig":
        if not isinstance(d, dict):
            raise ConfigError("config must be a JSON object")
        nested = {"network": NetworkConfig, "data": DataConfig, "sampler": SamplerConfig, "bench": BenchConfig, "slice": SliceConfig}
        kwargs = {}
        for key, value in d.items():
            if key not in _field_names(cls):
                raise ConfigError(f"unknown config key {key!r}")
            if key in nested:
                kwargs[key] = _build(nested[key], value, key)
            else:
                kwargs[key] = value
        return cls(**kwargs).validate()

    @classmethod
    def from_json(cls, text: str) -> "ExperimentConfig":
        try:
            return cls.from_dict(json.loads(text))
        except json.JSONDecodeError as exc:
            raise ConfigError(f"invalid JSON: {exc}") from None

    @classmethod
    def load(cls, path) -> "ExperimentConfig":
        try:
            with open(path, encoding="utf-8") as fh:
                return cls.from_json(fh.read())
        except OSError as exc:
            raise ConfigError(str(exc)) from None


def _field_names(cls) -> set:
    return {f.name for f in fields(cls)}


def _build(cls, value, where: str):
    if not isinstance(value, dict):
        raise ConfigError(f"{where} must be an object")
    unknown = set(value) - _field_names(cls)
    if unknown:
        raise ConfigError(f"unknown keys in {where}: {sorted(unknown)}")
    try:
        return cls(**value)
    except TypeError as exc:
        raise ConfigError(f"{where}: {exc}") from None
