"""Split-step integration of i u_t + Lap u = |u|^(4/n) u for radial data.

The linear substep is exact on the dual grid (multiplication by
exp(-i dt rho^2)); the nonlinear substep i u_t = |u|^(4/n) u is solved exactly
by u -> u exp(-i |u|^(4/n) dt) because |u| is constant along it.
"""
from __future__ import annotations

import json
import math
import time
import warnings
from dataclasses import asdict, dataclass, field
from functools import cached_property
from pathlib import Path

import numpy as np

from .grid import GridError, RadialField, RadialGrid, build_grid, check_decay
from .spectral import plan_for, free_propagate, _aliasing_check, _resolution_check

CHECKPOINT_VERSION = 1
BOUNDARY_SHELL = 0.05
BOUNDARY_MASS_FRACTION = 1e-6


class DomainBreachError(RuntimeError):
    """Mass reached the outer shell of the grid; the truncation is no longer honest."""


@dataclass(frozen=True)
class SolverConfig:
    dt: float = 1e-3
    t_end: float = 0.5
    record_stride: int = 1
    scheme: str = "strang"
    dealias: bool = False
    nonlinear: bool = True
    boundary_fraction: float = BOUNDARY_MASS_FRACTION
    decay_floor: float = 1e-12

    def __post_init__(self):
        if not self.dt > 0:
            raise ValueError(f"dt must be positive, got {self.dt}")
        if int(self.record_stride) != self.record_stride or self.record_stride < 1:
            raise ValueError(f"record_stride must be an integer >= 1, got {self.record_stride}")
        if self.scheme not in ("strang", "lie"):
            raise ValueError(f"scheme must be 'strang' or 'lie', got {self.scheme!r}")
        if self.t_end < 0:
            raise ValueError("t_end must be non-negative")

    @property
    def steps(self) -> int:
        return int(round(self.t_end / self.dt))


@dataclass(frozen=True, eq=False)
class Trajectory:
    times: np.ndarray
    fields: tuple
    provenance: dict = field(default_factory=dict)

    def __post_init__(self):
        times = np.asarray(self.times, dtype=float)
        fields = tuple(self.fields)
        if times.ndim != 1 or len(times) != len(fields) or len(fields) == 0:
            raise ValueError("times and fields must be non-empty and of equal length")
        if np.any(np.diff(times) <= 0):
            raise ValueError("times must be strictly increasing")
        g = fields[0].grid
        if any(f.grid != g for f in fields):
            raise ValueError("all states of a trajectory must share one grid")
        times.flags.writeable = False
        object.__setattr__(self, "times", times)
        object.__setattr__(self, "fields", fields)

    @classmethod
    def from_values(cls, grid: RadialGrid, times, values, provenance=None) -> "Trajectory":
        values = np.asarray(values, dtype=complex)
        return cls(times, tuple(RadialField(grid, v) for v in values), provenance or {})

    @property
    def grid(self) -> RadialGrid:
        return self.fields[0].grid

    @cached_property
    def values(self) -> np.ndarray:
        out = np.array([f.values for f in self.fields])
        out.flags.writeable = False
        return out

    def __len__(self):
        return len(self.fields)

    def index_of(self, t: float) -> int:
        hit = np.nonzero(np.isclose(self.times, t, rtol=1e-12, atol=1e-12))[0]
        if len(hit) == 0:
            raise ValueError(f"t={t} is not a recorded time")
        return int(hit[0])

    def map(self, func, **provenance) -> "Trajectory":
        """Apply a field-to-field map to every state."""
        prov = dict(self.provenance)
        prov.update(provenance)
        return Trajectory(self.times, tuple(func(f) for f in self.fields), prov)


def nonlinear_phase(values: np.ndarray, dt: float, n: int) -> np.ndarray:
    amp2 = values.real**2 + values.imag**2
    return values * np.exp(-1j * dt * amp2 ** (2.0 / n))


def nonlinearity(values: np.ndarray, n: int) -> np.ndarray:
    """F(u) = |u|^(4/n) u."""
    amp2 = values.real**2 + values.imag**2
    return amp2 ** (2.0 / n) * values


class _Stepper:
    def __init__(self, grid: RadialGrid, cfg: SolverConfig):
        self.n = grid.dimension
        self.plan = plan_for(grid)
        rho = self.plan.rho
        self.cfg = cfg
        sym = np.exp(-1j * cfg.dt * rho**2)
        if cfg.dealias:
            sym = np.where(rho <= 2.0 / 3.0 * self.plan.band, sym, 0.0)
        self.sym = sym

    def linear(self, v):
        return self.plan.inverse(self.sym * self.plan.forward(v))

    def step(self, v):
        dt, n = self.cfg.dt, self.n
        if not self.cfg.nonlinear:
            return self.linear(v)
        if self.cfg.scheme == "lie":
            return self.linear(nonlinear_phase(v, dt, n))
        v = nonlinear_phase(v, 0.5 * dt, n)
        v = self.linear(v)
        return nonlinear_phase(v, 0.5 * dt, n)


def strang_step(f: RadialField, dt: float, nonlinear: bool = True) -> RadialField:
    """One Strang step: half nonlinear phase, full linear flow, half nonlinear phase."""
    if not nonlinear:
        return free_propagate(f, dt)
    plan = plan_for(f.grid)
    _aliasing_check(plan.forward(f.values), plan, dt)
    cfg = SolverConfig(dt=dt, t_end=dt)
    return RadialField(f.grid, _Stepper(f.grid, cfg).step(f.values))


def boundary_mass_fraction(f: RadialField, shell: float = BOUNDARY_SHELL) -> float:
    w = f.grid.weights * f.abs2()
    total = w.sum()
    if total == 0:
        return 0.0
    start = int(math.floor((1.0 - shell) * f.grid.node_count))
    return float(w[start:].sum() / total)


def _check_boundary(f: RadialField, t: float, cfg: SolverConfig) -> None:
    frac = boundary_mass_fraction(f)
    if frac > cfg.boundary_fraction:
        raise DomainBreachError(
            f"at t={t:g} the outer {BOUNDARY_SHELL:.0%} of nodes hold {frac:.3e} of the mass "
            f"(limit {cfg.boundary_fraction:g}); enlarge R"
        )


def evolve(u0: RadialField, cfg: SolverConfig, initial_data: dict | str | None = None) -> Trajectory:
    """Integrate from t=0 to cfg.t_end, recording every ``record_stride`` steps."""
    from .diagnostics import energy, mass

    check_decay(u0, cfg.decay_floor, "initial data")
    _check_boundary(u0, 0.0, cfg)
    stepper = _Stepper(u0.grid, cfg)
    _aliasing_check(stepper.plan.forward(u0.values), stepper.plan, cfg.dt)
    _resolution_check(stepper.plan.forward(u0.values), stepper.plan)

    steps = cfg.steps
    v = u0.values.copy()
    times, states = [0.0], [v.copy()]
    wall = time.perf_counter()
    for k in range(1, steps + 1):
        v = stepper.step(v)
        if k % cfg.record_stride == 0 or k == steps:
            t = k * cfg.dt
            state = RadialField(u0.grid, v.copy())
            _check_boundary(state, t, cfg)
            times.append(t)
            states.append(state.values)
    wall = time.perf_counter() - wall

    fields = tuple(RadialField(u0.grid, s) for s in states)
    m = np.array([mass(f) for f in fields])
    e = np.array([energy(f, nonlinear=cfg.nonlinear).total for f in fields])
    prov = {
        "config": asdict(cfg),
        "grid": {"dimension": u0.grid.dimension, "max_radius": u0.grid.max_radius,
                 "node_count": u0.grid.node_count, "scheme": u0.grid.scheme},
        "initial_data": initial_data if initial_data is not None else "unspecified",
        "nonlinear": cfg.nonlinear,
        "steps": steps,
        "mass_drift": _drift(m),
        "energy_drift": _drift(e),
        "wall_seconds": wall,
    }
    return Trajectory(np.array(times), fields, prov)


def _drift(x: np.ndarray) -> float:
    ref = abs(x[0])
    if ref == 0:
        return float(np.max(np.abs(x - x[0])))
    return float(np.max(np.abs(x - x[0])) / ref)


def duhamel_residual(traj: Trajectory, t0: float, t1: float) -> float:
    """Relative L^2 defect of the Duhamel formula between two recorded times.

    The time integral is the composite trapezoid rule over the recorded states.
    """
    if t1 < t0:
        raise ValueError(f"need t1 >= t0, got t0={t0}, t1={t1}")
    i0, i1 = traj.index_of(t0), traj.index_of(t1)
    if i1 == i0:
        return 0.0
    grid = traj.grid
    plan = plan_for(grid)
    n = grid.dimension
    rho2 = plan.rho**2
    ts = traj.times[i0 : i1 + 1]
    vals = traj.values[i0 : i1 + 1]
    T1 = traj.times[i1]
    lin = plan.forward(vals[0]) * np.exp(-1j * (T1 - ts[0]) * rho2)
    spec = plan.forward(vals[-1]) - lin
    if traj.provenance.get("nonlinear", True):
        Fh = plan.forward(nonlinearity(vals, n))
        ph = np.exp(-1j * (T1 - ts)[:, None] * rho2[None, :])
        spec = spec + 1j * np.trapezoid(ph * Fh, ts, axis=0)
    res = RadialField(grid, plan.inverse(spec))
    end = RadialField(grid, vals[-1])
    den = np.sum(grid.weights * end.abs2())
    if den == 0:
        return float(np.sqrt(np.sum(grid.weights * res.abs2())))
    return float(np.sqrt(np.sum(grid.weights * res.abs2()) / den))


def rescale_field(f: RadialField, lam: float) -> RadialField:
    """lam^(-n/2) f(x / lam) resampled on the same grid."""
    from .spectral import evaluate

    if not lam > 0:
        raise ValueError(f"lambda must be positive, got {lam}")
    if lam == 1:
        return f
    grid = f.grid
    R = grid.max_radius
    if lam > 1:
        # the dilate lives on [0, lam R]; what lies beyond R / lam is lost
        r = grid.nodes
        w = grid.weights * f.abs2()
        total = w.sum()
        lost = w[r > R / lam].sum() / total if total > 0 else 0.0
        if lost > BOUNDARY_MASS_FRACTION:
            raise GridError(
                f"dilation by {lam:g} pushes {lost:.3e} of the mass beyond r={R:g}"
            )
    src = grid.nodes / lam
    inside = src <= R
    vals = np.zeros(grid.node_count, dtype=complex)
    vals[inside] = evaluate(f, src[inside])
    out = RadialField(grid, lam ** (-grid.dimension / 2) * vals)
    if lam < 1:
        plan = plan_for(grid)
        _resolution_check(plan.forward(out.values), plan)
    return out


def rescale_trajectory(traj: Trajectory, lam: float) -> Trajectory:
    """u^lam(t, x) = lam^(-n/2) u(t / lam^2, x / lam)."""
    if not lam > 0:
        raise ValueError(f"lambda must be positive, got {lam}")
    if lam == 1:
        return traj
    prov = dict(traj.provenance)
    prov["rescaled_by"] = prov.get("rescaled_by", 1.0) * lam
    fields = tuple(rescale_field(f, lam) for f in traj.fields)
    return Trajectory(traj.times * lam**2, fields, prov)


def free_trajectory(u0: RadialField, times, check: bool = True) -> Trajectory:
    """Samples of e^{it Lap} u0 at the given increasing times."""
    times = np.asarray(times, dtype=float)
    plan = plan_for(u0.grid)
    spec = plan.forward(u0.values)
    if check and len(times):
        _aliasing_check(spec, plan, float(np.max(np.abs(times))))
    ph = np.exp(-1j * times[:, None] * (plan.rho**2)[None, :])
    vals = plan.inverse(ph * spec[None, :])
    return Trajectory.from_values(u0.grid, times, vals, {"nonlinear": False, "initial_data": "free flow"})


# --- checkpoints ---------------------------------------------------------------

def save_checkpoint(traj: Trajectory, path) -> Path:
    """Write grid key, times, complex samples and provenance to a versioned .npz."""
    path = Path(path)
    g = traj.grid
    with warnings.catch_warnings():
        warnings.simplefilter("ignore")
        np.savez(
            path,
            format_version=np.int64(CHECKPOINT_VERSION),
            dimension=np.int64(g.dimension),
            max_radius=np.float64(g.max_radius),
            node_count=np.int64(g.node_count),
            scheme=np.str_(g.scheme),
            times=traj.times,
            values=traj.values,
            provenance=np.str_(json.dumps(traj.provenance, sort_keys=True, default=str)),
        )
    return path if path.suffix == ".npz" else path.with_suffix(path.suffix + ".npz")


def load_checkpoint(path) -> Trajectory:
    with np.load(Path(path), allow_pickle=False) as z:
        version = int(z["format_version"])
        if version != CHECKPOINT_VERSION:
            raise ValueError(f"unsupported checkpoint version {version}")
        grid = build_grid(int(z["dimension"]), float(z["max_radius"]),
                          int(z["node_count"]), str(z["scheme"]))
        prov = json.loads(str(z["provenance"]))
        return Trajectory.from_values(grid, z["times"], z["values"], prov)
