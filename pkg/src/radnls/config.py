"""Flat ``block.key = value`` configuration files.

Lines are ``key = value``; ``#`` starts a comment.  Top-level keys are
``dimension`` and ``epsilon``; everything else lives in a block (``grid``,
``solver``, ``initial``, ``verify``, ``sweep``, ``output``).  Lists are comma
separated.  Unknown keys are errors, reported with their line number.
"""
from __future__ import annotations

import dataclasses
import math
from dataclasses import dataclass, field
from pathlib import Path

from .diagnostics import reference_epsilon
from .grid import SCHEMES


class ConfigError(ValueError):
    pass


PROFILES = ("gaussian", "ring_bump", "band_limited")


@dataclass(frozen=True)
class GridBlock:
    max_radius: float = 20.0
    nodes: int = 512
    scheme: str = "bessel_zeros"


@dataclass(frozen=True)
class SolverBlock:
    dt: float = 1e-3
    t_end: float = 0.5
    record_stride: int = 10
    scheme: str = "strang"
    dealias: bool = False
    nonlinear: bool = True


@dataclass(frozen=True)
class InitialBlock:
    profile: str = "gaussian"
    amplitude: float = 2.0
    width: float = 0.7071067811865476
    center: float = 2.0
    seed: int = 0
    band_lo: float = 1.0
    band_hi: float = 6.0


@dataclass(frozen=True)
class VerifyBlock:
    seed: int = 0
    samples: int = 10
    n_list: tuple = (0.5, 1.0, 2.0, 4.0, 8.0, 16.0, 32.0, 64.0)
    eta_grid: tuple = (0.1, 0.01, 0.001)
    fd_tolerance: float = 0.01
    mass_tolerance: float = 1e-6
    energy_tolerance: float = 1e-4
    weight_dimensions: tuple = ()
    weight_epsilons: tuple = ()
    weight_floor: float = 0.0
    localize_n: float = 0.0
    bilinear_tolerance: float = 1e-6
    hls_tolerance: float = 1e-4
    sobolev_tolerance: float = 1e-5
    uncertainty_exponents: tuple = (-4, 10)
    uncertainty_spread: float = 10.0
    uncertainty_slope: float = 0.05
    strichartz_times: tuple = (1.0, 10.0, 100.0)
    saturation_growth: float = 0.05


@dataclass(frozen=True)
class SweepBlock:
    suite: str = "verify-weights"
    dimensions: tuple = (3, 4, 5)
    epsilons: tuple = (0.01, 0.05)


@dataclass(frozen=True)
class OutputBlock:
    directory: str = "out"
    formats: tuple = ("csv", "json")


BLOCKS = {
    "grid": GridBlock, "solver": SolverBlock, "initial": InitialBlock,
    "verify": VerifyBlock, "sweep": SweepBlock, "output": OutputBlock,
}


@dataclass(frozen=True)
class Config:
    dimension: int = 3
    epsilon: float | str = 0.01
    grid: GridBlock = field(default_factory=GridBlock)
    solver: SolverBlock = field(default_factory=SolverBlock)
    initial: InitialBlock = field(default_factory=InitialBlock)
    verify: VerifyBlock = field(default_factory=VerifyBlock)
    sweep: SweepBlock = field(default_factory=SweepBlock)
    output: OutputBlock = field(default_factory=OutputBlock)

    @property
    def eps(self) -> float:
        if self.epsilon == "paper":
            return reference_epsilon(self.dimension)
        return float(self.epsilon)

    def as_dict(self) -> dict:
        d = dataclasses.asdict(self)
        d["epsilon_value"] = self.eps
        return d

    def replace(self, **flat) -> "Config":
        """Copy with dotted-key overrides given as already-parsed values."""
        top, blocks = {}, {}
        for key, v in flat.items():
            if "." in key:
                b, k = key.split(".", 1)
                blocks.setdefault(b, {})[k] = v
            else:
                top[key] = v
        for b, kv in blocks.items():
            top[b] = dataclasses.replace(getattr(self, b), **kv)
        cfg = dataclasses.replace(self, **top)
        validate(cfg)
        return cfg


def keys() -> dict:
    """Every accepted dotted key with its default value."""
    out = {"dimension": 3, "epsilon": 0.01}
    for b, cls in BLOCKS.items():
        for f in dataclasses.fields(cls):
            out[f"{b}.{f.name}"] = f.default
    return out


def _bool(s: str) -> bool:
    t = s.strip().lower()
    if t in ("true", "yes", "on", "1"):
        return True
    if t in ("false", "no", "off", "0"):
        return False
    raise ValueError(f"expected a boolean, got {s!r}")


def _scalar_like(default, s: str):
    if isinstance(default, bool):
        return _bool(s)
    if isinstance(default, int):
        return int(s)
    if isinstance(default, float):
        return float(s)
    return s.strip()


def parse_value(key: str, raw: str):
    table = keys()
    if key not in table:
        raise KeyError(key)
    default = table[key]
    raw = raw.strip()
    if key == "epsilon":
        return "paper" if raw == "paper" else float(raw)
    if isinstance(default, tuple):
        items = [x.strip() for x in raw.split(",") if x.strip()]
        # element type follows the default's elements; strings otherwise
        proto = default[0] if default else (0.0 if key.startswith("verify.weight_") else "")
        if key == "verify.weight_dimensions" or key == "sweep.dimensions":
            proto = 0
        return tuple(_scalar_like(proto, x) for x in items)
    return _scalar_like(default, raw)


def validate(cfg: Config) -> None:
    if cfg.dimension < 3:
        raise ConfigError(f"dimension must be >= 3 (the Morawetz weight argument needs n >= 3), got {cfg.dimension}")
    if cfg.epsilon != "paper" and not 0 < float(cfg.epsilon) < 1:
        raise ConfigError(f"epsilon must lie in (0, 1) or be 'paper', got {cfg.epsilon}")
    g, s, i, v = cfg.grid, cfg.solver, cfg.initial, cfg.verify
    if not g.max_radius > 0 or g.nodes < 8:
        raise ConfigError("grid.max_radius must be > 0 and grid.nodes >= 8")
    if g.scheme not in SCHEMES:
        raise ConfigError(f"grid.scheme must be one of {SCHEMES}, got {g.scheme!r}")
    if not (s.dt > 0 and s.t_end > 0 and s.record_stride >= 1):
        raise ConfigError("solver.dt, solver.t_end must be > 0 and solver.record_stride >= 1")
    if s.scheme not in ("strang", "lie"):
        raise ConfigError(f"solver.scheme must be 'strang' or 'lie', got {s.scheme!r}")
    if i.profile not in PROFILES:
        raise ConfigError(f"initial.profile must be one of {PROFILES}, got {i.profile!r}")
    if not i.width > 0:
        raise ConfigError("initial.width must be > 0")
    if v.samples < 1:
        raise ConfigError("verify.samples must be >= 1")
    if any(not (x > 0 and math.isfinite(x)) for x in v.n_list):
        raise ConfigError("verify.n_list entries must be positive")
    if any(not 0 < x < 1 for x in v.eta_grid):
        raise ConfigError("verify.eta_grid entries must lie in (0, 1)")
    if len(v.uncertainty_exponents) != 2:
        raise ConfigError("verify.uncertainty_exponents takes two integers: low, high")
    if any(x < 3 for x in tuple(v.weight_dimensions) + tuple(cfg.sweep.dimensions)):
        raise ConfigError("dimensions below 3 are outside the Morawetz weight argument (n >= 3)")
    if any(not 0 < x < 1 for x in tuple(v.weight_epsilons) + tuple(cfg.sweep.epsilons)):
        raise ConfigError("epsilon lists must lie in (0, 1)")
    if cfg.sweep.suite not in ("verify-weights", "verify-morawetz", "simulate"):
        raise ConfigError(f"sweep.suite must be verify-weights, verify-morawetz or simulate, got {cfg.sweep.suite!r}")
    for f in cfg.output.formats:
        if f not in ("csv", "json"):
            raise ConfigError(f"output.formats entries must be csv or json, got {f!r}")


def parse_config(text: str, source: str = "<config>") -> Config:
    flat = {}
    for lineno, line in enumerate(text.splitlines(), 1):
        body = line.split("#", 1)[0].strip()
        if not body:
            continue
        if "=" not in body:
            raise ConfigError(f"{source}:{lineno}: expected 'key = value', got {line.strip()!r}")
        key, raw = (x.strip() for x in body.split("=", 1))
        try:
            flat[key] = parse_value(key, raw)
        except KeyError:
            raise ConfigError(f"{source}:{lineno}: unknown key {key!r}") from None
        except ValueError as e:
            raise ConfigError(f"{source}:{lineno}: bad value for {key!r}: {e}") from None
    try:
        return Config().replace(**flat)
    except ConfigError as e:
        raise ConfigError(f"{source}: {e}") from None


def load_config(path=None) -> Config:
    if path is None:
        return Config()
    p = Path(path)
    try:
        text = p.read_text(encoding="utf-8")
    except OSError as e:
        raise ConfigError(f"cannot read config {p}: {e}") from None
    return parse_config(text, str(p))
