"""Run configuration: TOML file keys mirror the long CLI flags (``tile-size`` -> ``tile_size``).

Example::

    tile_size = 256
    overlap = 0.8
    weight = "taper"          # uniform | taper
    enhancer = "gain-gamma"   # identity | gain-gamma | exec:<command>
    gain = "auto"             # a positive number, or "auto"
    predictor = "luma:8,0.2"  # const:<p> | luma:<radius>,<threshold> | exec:<command> | oracle
    mode = "hard"             # hard | soft
    seed = 7
    workers = 4

    [sim]                     # only read by `simulate`
    darken_range = [0.02, 0.2]
    quant_bits = 8
"""
from __future__ import annotations

import dataclasses
from dataclasses import dataclass, field, fields

try:
    import tomllib
except ModuleNotFoundError:  # python < 3.11
    import tomli as tomllib

from .enhancers import EnhancerKind, EnhancerSpec
from .ensemble import WeightFn, WeightKind
from .errors import InvalidInputError
from .image import MIN_TILE
from .scale import Mode, Predictor
from .sim import SimConfig


class ConfigError(InvalidInputError):
    pass


@dataclass
class RunConfig:
    tile_size: int = 256
    overlap: float = 0.8
    weight: str = "uniform"
    enhancer: str = "gain-gamma"
    gain: float | str = 1.0
    predictor: str = "luma:8,0.2"
    mode: str = "hard"
    seed: int = 0
    workers: int = 1
    long_size: int | None = None
    noise_sigma: float = 0.0
    timeout: float = 30.0
    sim: dict = field(default_factory=dict)

    def validate(self) -> "RunConfig":
        if self.tile_size < MIN_TILE:
            raise ConfigError(f"tile_size must be at least {MIN_TILE}")
        if self.long_size is not None and self.long_size < MIN_TILE:
            raise ConfigError(f"long_size must be at least {MIN_TILE}")
        if not 0.0 <= self.overlap < 1.0:
            raise ConfigError("overlap must lie in [0, 1)")
        if self.workers < 1:
            raise ConfigError("workers must be at least 1")
        if self.noise_sigma < 0:
            raise ConfigError("noise_sigma must be non-negative")
        try:
            WeightKind(self.weight)
            Mode(self.mode)
        except ValueError as exc:
            raise ConfigError(str(exc)) from None
        if self.gain != "auto":
            try:
                self.gain = float(self.gain)
            except (TypeError, ValueError):
                raise ConfigError(f"gain must be a number or 'auto', got {self.gain!r}") from None
            if self.gain <= 0:
                raise ConfigError("gain must be positive")
        try:
            self.predictor_obj()
            self.enhancer_spec()
            self.sim_config()
        except InvalidInputError as exc:
            raise ConfigError(str(exc)) from None
        except TypeError as exc:
            raise ConfigError(f"[sim]: {exc}") from None
        return self

    def weight_fn(self) -> WeightFn:
        return WeightFn(WeightKind(self.weight))

    def predictor_obj(self) -> Predictor:
        return Predictor.parse(self.predictor)

    def mode_enum(self) -> Mode:
        return Mode(self.mode)

    def enhancer_spec(self, gain: float = 1.0) -> EnhancerSpec:
        name = self.enhancer
        if name == "identity":
            spec = EnhancerSpec.identity(gain)
        elif name == "gain-gamma":
            spec = EnhancerSpec(EnhancerKind.GAIN_GAMMA, gain=gain)
        elif name.startswith("exec:") and len(name) > 5:
            spec = EnhancerSpec.external(name[5:], gain=gain, timeout=self.timeout)
        else:
            raise ConfigError(f"unknown enhancer {name!r}")
        if self.noise_sigma > 0:
            spec = EnhancerSpec.noisy(spec, self.noise_sigma, seed=self.seed)
        return spec

    def sim_config(self, **overrides) -> SimConfig:
        kw = {k: tuple(v) if isinstance(v, list) else v for k, v in self.sim.items()}
        kw.update(overrides)
        return SimConfig(**kw)


RUN_KEYS = {f.name for f in fields(RunConfig)}


def load_config(path=None, **overrides) -> RunConfig:
    """Read a TOML file (optional), apply non-None ``overrides``, validate."""
    data = {}
    if path is not None:
        try:
            with open(path, "rb") as fh:
                data = tomllib.load(fh)
        except tomllib.TOMLDecodeError as exc:
            raise ConfigError(f"{path}: {exc}") from None
    unknown = set(data) - RUN_KEYS
    if unknown:
        raise ConfigError(f"unknown config keys: {', '.join(sorted(unknown))}")
    if "sim" in data and not isinstance(data["sim"], dict):
        raise ConfigError("[sim] must be a table")
    cfg = RunConfig(**data)
    updates = {k: v for k, v in overrides.items() if v is not None}
    return dataclasses.replace(cfg, **updates).validate()
