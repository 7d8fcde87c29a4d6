"""Run configuration: defaults, INI config files and flag overrides."""

from __future__ import annotations

import configparser
from dataclasses import asdict, dataclass, fields, replace
from pathlib import Path
from typing import Any, Mapping

from .errors import ConfigError
from .sampler import DISCRETIZATIONS, SamplerGrid
from .schedule import IdmSchedule, LinearBeta, Schedule, VeSchedule, VpSchedule
from .signal import ScalingConfig, StftConfig


@dataclass(frozen=True)
class RunConfig:
    schedule: str = "vp"
    beta_min: float = 0.1
    beta_max: float = 2.0
    lambda_rate: float = 1.5
    sigma_min: float = 0.05
    sigma_max: float = 0.5
    epsilon: float = 0.04
    steps: int | None = None  # None: derived from epsilon
    a: float = 0.15
    c: float = 0.5
    frame: int = 510
    hop: int = 128
    window: str = "sqrthann"
    seed: int = 0
    discretization: str = "standard"
    jobs: int = 1

    def __post_init__(self):
        if self.schedule not in ("vp", "ve", "idm"):
            raise ConfigError(f"unknown schedule {self.schedule!r}")
        if self.discretization not in DISCRETIZATIONS:
            raise ConfigError(f"unknown discretization {self.discretization!r}")
        if not (0.0 < self.epsilon < 1.0):
            raise ConfigError(f"epsilon must lie in (0, 1), got {self.epsilon}")
        if self.jobs < 1:
            raise ConfigError("jobs must be at least 1")

    def build_schedule(self, kind: str | None = None) -> Schedule:
        kind = kind or self.schedule
        if kind == "ve":
            return VeSchedule(self.sigma_min, self.sigma_max, self.lambda_rate)
        vp = VpSchedule(LinearBeta(self.beta_min, self.beta_max), self.lambda_rate)
        return IdmSchedule.from_schedule(vp) if kind == "idm" else vp

    def grid(self) -> SamplerGrid:
        return SamplerGrid.from_epsilon(self.epsilon, self.steps)

    def stft_config(self) -> StftConfig:
        return StftConfig(self.frame, self.hop, self.window)

    def scaling(self) -> ScalingConfig:
        return ScalingConfig(self.a, self.c)

    def to_dict(self) -> dict[str, Any]:
        return asdict(self)


_TYPES = {f.name: f.type for f in fields(RunConfig)}


def _coerce(name: str, value: Any) -> Any:
    if value is None:
        return None
    kind = _TYPES[name]
    try:
        if "int" in kind:
            return int(value)
        if "float" in kind:
            return float(value)
    except ValueError:
        raise ConfigError(f"bad value for {name}: {value!r}") from None
    return str(value)


_ALIASES = {"lambda": "lambda_rate"}


def load_config_file(path: str | Path) -> dict[str, Any]:
    """Read ``key = value`` pairs from an INI file; section names are ignored.

    Keys use the RunConfig field names, with dashes allowed for underscores;
    ``lambda`` is accepted for ``lambda_rate`` to match the CLI flag.
    """
    parser = configparser.ConfigParser()
    try:
        with open(path) as fh:
            parser.read_string("[__top__]\n" + fh.read())
    except configparser.Error as exc:
        raise ConfigError(f"cannot parse {path}: {exc}") from None
    values = {}
    for section in parser.sections():
        for key, raw in parser.items(section):
            name = _ALIASES.get(key, key.replace("-", "_"))
            if name not in _TYPES:
                raise ConfigError(f"unknown config key {key!r} in {path}")
            values[name] = _coerce(name, raw)
    return values


def resolve(file_values: Mapping[str, Any], flag_values: Mapping[str, Any]) -> RunConfig:
    """Flags override the file, the file overrides defaults."""
    merged = {**file_values, **{k: v for k, v in flag_values.items() if v is not None}}
    try:
        return replace(RunConfig(), **merged)
    except TypeError as exc:
        raise ConfigError(str(exc)) from None
