"""
Config Module for streamgp

This module parses experiment files: flat UTF-8 `key = value` lines with `#`
comments, into a frozen ExperimentConfig. Unknown keys and bad values are
rejected with the offending line number.
High cohesion: Contains only configuration parsing and validation.
Low coupling: Depends on constants, errors and the enum parsers of the model modules.
"""

from dataclasses import dataclass, fields, replace
from typing import Dict, Optional

from .constants import (DEFAULT_ECE_SAMPLES, DEFAULT_N_TASKS, DEFAULT_NUM_INDUCING, DEFAULT_RFF_SAMPLES)
from .errors import ConfigError, InputError
from .hippo import BasisFamily, Scheme
from .kernels import KernelVariant
from .logger import get_logger
from .multidim import OrderingStrategy
from .online import KfuSource

logger = get_logger("config")

METHODS = ("ohsgpr", "osgpr-fixedz", "osgpr-resamplez", "ovc-pivchol", "exact-gp", "sgpr-batch")
MODES = ("timeseries", "multidim")


@dataclass(frozen=True)
class ExperimentConfig:
    """
    One benchmark run.

    Every field can be set from the config file under its own name.
    """

    dataset: Optional[str] = None
    mode: str = "timeseries"
    method: str = "ohsgpr"
    kernel: str = "rbf"
    lengthscale: float = 1.0
    output_scale: float = 1.0
    noise: float = 0.1
    fit_hyperparameters: bool = True
    num_inducing: int = DEFAULT_NUM_INDUCING
    basis: str = "legs"
    theta: float = 1.0
    dt: Optional[float] = None
    scheme: str = "euler"
    kfu_source: str = "features"
    rff_samples: int = DEFAULT_RFF_SAMPLES
    n_tasks: int = DEFAULT_N_TASKS
    ordering: str = "k_max"
    ordering_dim: int = 0
    stride: int = 1
    seed: int = 0
    output: Optional[str] = None
    ece_samples: int = DEFAULT_ECE_SAMPLES
    wall_time: bool = False
    jitter: Optional[float] = None
    synth_n: int = 1000
    synth_noise: float = 0.1
    tol_coefficients: float = 1e-2
    tol_kfu: float = 1e-2
    tol_kuu: float = 0.1
    tol_streaming: float = 1e-5

    def validate(self) -> "ExperimentConfig":
        """
        Check value ranges and enum names.

        Raises:
            ConfigError: On the first invalid entry
        """
        if self.mode not in MODES:
            raise ConfigError(f"mode must be one of {', '.join(MODES)}")
        if self.method not in METHODS:
            raise ConfigError(f"method must be one of {', '.join(METHODS)}")
        try:
            KernelVariant.parse(self.kernel)
            BasisFamily.parse(self.basis)
            Scheme.parse(self.scheme)
            KfuSource.parse(self.kfu_source)
            OrderingStrategy.parse(self.ordering)
        except InputError as exc:
            raise ConfigError(str(exc)) from None
        for name in ("num_inducing", "rff_samples", "n_tasks", "stride", "synth_n"):
            if getattr(self, name) < 1:
                raise ConfigError(f"{name} must be positive")
        for name in ("lengthscale", "output_scale", "noise", "theta"):
            if not getattr(self, name) > 0.0:
                raise ConfigError(f"{name} must be positive")
        if self.dt is not None and not self.dt > 0.0:
            raise ConfigError("dt must be positive")
        if self.ece_samples == 1 or self.ece_samples < 0:
            raise ConfigError("ece_samples must be 0 (disabled) or at least 2")
        if self.synth_noise < 0.0 or self.ordering_dim < 0:
            raise ConfigError("synth_noise and ordering_dim must be non-negative")
        if KernelVariant.parse(self.kernel) is KernelVariant.LINEAR:
            raise ConfigError("experiments need a stationary kernel")
        return self


def _coerce(name: str, kind, text: str, line: int):
    if text.lower() in ("none", "") and "Optional" in str(kind):
        return None
    try:
        if kind is bool:
            lowered = text.lower()
            if lowered in ("true", "yes", "1", "on"):
                return True
            if lowered in ("false", "no", "0", "off"):
                return False
            raise ValueError(text)
        if kind is int:
            return int(text)
        if kind in (float, Optional[float]):
            return float(text)
        return text
    except ValueError:
        raise ConfigError(f"invalid value {text!r} for {name}", line) from None


def parse_config(text: str) -> ExperimentConfig:
    """
    Parse config text.

    Raises:
        ConfigError: On malformed lines, unknown or repeated keys, bad values
            or an empty file
    """
    known = {f.name: f.type for f in fields(ExperimentConfig)}
    values: Dict[str, object] = {}
    for number, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        key, sep, value = line.partition("=")
        key, value = key.strip(), value.strip()
        if not sep or not key:
            raise ConfigError(f"expected 'key = value', got {raw.strip()!r}", number)
        if key not in known:
            logger.error(f"Unknown config key {key!r} on line {number}")
            raise ConfigError(f"unknown key {key!r}", number)
        if key in values:
            raise ConfigError(f"duplicate key {key!r}", number)
        values[key] = _coerce(key, known[key], value, number)
    if not values:
        raise ConfigError("configuration is empty")
    return ExperimentConfig(**values).validate()


def load_config(path: str) -> ExperimentConfig:
    """Read and parse a config file."""
    try:
        with open(path, "r", encoding="utf-8") as handle:
            text = handle.read()
    except OSError as exc:
        raise ConfigError(f"cannot read config {path}: {exc.strerror}") from None
    return parse_config(text)


def with_overrides(config: ExperimentConfig, seed: Optional[int] = None,
                   output: Optional[str] = None) -> ExperimentConfig:
    """Apply command-line overrides."""
    changes = {}
    if seed is not None:
        changes["seed"] = seed
    if output is not None:
        changes["output"] = output
    return replace(config, **changes) if changes else config
