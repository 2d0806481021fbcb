"""Norm functionals and almost-periodicity quantities of radial trajectories."""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from functools import lru_cache
from typing import NamedTuple

import numpy as np
from scipy.interpolate import CubicSpline
from scipy.optimize import brentq

from .grid import RadialField, RadialGrid, weighted_lp_norm
from .kernels import base_breakpoints, log_panel_rule, riesz_constant, riesz_potential_rule
from .solver import Trajectory, nonlinearity
from .spectral import (
    LOWEST_NODE_SHARE,
    SpectralPreconditionError,
    _matvec,
    apply_multiplier,
    bump,
    dyadic_ge,
    dyadic_lt,
    lam,
    panel_matrices,
    panel_rule,
    plan_for,
)

DEFAULT_EPSILON = 0.01


def reference_epsilon(n: int) -> float:
    """The fixed exponent n^-10."""
    return float(n) ** -10


def _as_traj(x) -> Trajectory:
    if isinstance(x, Trajectory):
        return x
    if isinstance(x, RadialField):
        return Trajectory(np.array([0.0]), (x,))
    raise TypeError(f"expected a Trajectory or RadialField, got {type(x).__name__}")


def time_integral(times: np.ndarray, values: np.ndarray) -> float:
    """Trapezoid rule over recorded times.

    A single recorded state is read as an instantaneous slice: the value
    itself is returned, so that norms of one state reduce to spatial norms.
    """
    values = np.asarray(values, dtype=float)
    if len(values) == 1:
        return float(values[0])
    return float(np.trapezoid(values, times))


@lru_cache(maxsize=16)
def _origin_rule(grid: RadialGrid):
    # A non-integer power of r spoils the grid quadrature near r = 0.  The
    # weight is split with a smooth cutoff chi of radius rc = 16 node
    # spacings: chi r^a |v|^p is integrated on Gauss-Legendre panels through
    # the band-limited interpolant, (1 - chi) r^a |v|^p by the grid rule.
    plan = plan_for(grid)
    n = grid.dimension
    rc = 16.0 * grid.max_radius / grid.node_count
    _, x, w = panel_rule(0.0, 2 * rc, 16)
    K = lam(plan.nu, np.outer(x, plan.rho)) * ((2 * math.pi) ** (-n / 2) * plan.dual.weights)[None, :]
    M = K @ plan.forward_matrix
    near_w = grid.surface_area * w * bump(x / rc)
    far_w = grid.measure() * (1.0 - bump(grid.nodes / rc))
    for a in (M, x, near_w, far_w):
        a.flags.writeable = False
    return x, near_w, far_w, M


def weighted_power_sum(grid: RadialGrid, vals: np.ndarray, p: float, gamma: float) -> np.ndarray:
    """Per-row int |x|^(gamma p) |v|^p dx with an origin-corrected quadrature."""
    vals = np.asarray(vals)
    a = gamma * p
    if a == 0 or (a > 0 and a % 2 == 0):
        return np.sum(grid.measure() * grid.nodes**a * np.abs(vals) ** p, axis=-1)
    if not a + grid.dimension > 0:
        raise ValueError(f"|x|^{a} is not locally integrable in dimension {grid.dimension}")
    x, near_w, far_w, M = _origin_rule(grid)
    near = _matvec(M, vals)
    n = grid.dimension
    return (np.sum(far_w * grid.nodes**a * np.abs(vals) ** p, axis=-1)
            + np.sum(near_w * x ** (a + n - 1) * np.abs(near) ** p, axis=-1))


def weighted_norm(f: RadialField, p: float, gamma: float = 0.0) -> float:
    """|| |x|^gamma f ||_p, accurate also for non-integer powers of |x|."""
    if math.isinf(p):
        return float(np.max(f.grid.nodes**gamma * np.abs(f.values)))
    return float(weighted_power_sum(f.grid, f.values, p, gamma)) ** (1.0 / p)


def _weighted_sq(grid: RadialGrid, vals: np.ndarray, gamma: float) -> np.ndarray:
    """Per-row int |x|^(2 gamma) |v|^2 dx."""
    return weighted_power_sum(grid, vals, 2.0, gamma)


def _spectral_sq(grid: RadialGrid, spec: np.ndarray, power: float = 0.0) -> np.ndarray:
    """Per-row (2 pi)^-n int |xi|^(2 power) |f^|^2 d xi (Plancherel side)."""
    plan = plan_for(grid)
    dual = plan.dual
    rho = plan.rho
    w = dual.surface_area * dual.weights * rho ** (2 * power)
    if power < 0:
        w = w.copy()
        w[0] = 0.0
    return np.sum(w * np.abs(spec) ** 2, axis=-1) / (2 * math.pi) ** grid.dimension


# --- conserved quantities ------------------------------------------------------

def mass(f: RadialField) -> float:
    return float(np.sum(f.grid.measure() * f.abs2()))


class Energy(NamedTuple):
    kinetic: float
    potential: float
    total: float


def energy(f: RadialField, nonlinear: bool = True) -> Energy:
    """E = int 1/2 |grad u|^2 + n/(2(n+2)) |u|^(2(n+2)/n); kinetic part on the Fourier side."""
    n = f.grid.dimension
    kin = 0.5 * float(_spectral_sq(f.grid, f.spectrum.values, 1.0))
    pot = 0.0
    if nonlinear:
        pot = n / (2 * (n + 2)) * float(np.sum(f.grid.measure() * f.abs2() ** ((n + 2) / n)))
    return Energy(kin, pot, kin + pot)


# --- spacetime norms -----------------------------------------------------------

def spacetime_norm(traj, q: float, r: float) -> float:
    """|| u ||_{L^q_t L^r_x} with trapezoid time quadrature."""
    traj = _as_traj(traj)
    if q < 1 or r < 1:
        raise ValueError("q and r must lie in [1, inf]")
    norms = np.array([weighted_lp_norm(f, r) for f in traj.fields])
    if math.isinf(q):
        return float(norms.max())
    return time_integral(traj.times, norms**q) ** (1.0 / q)


def linf_l2(traj) -> float:
    return spacetime_norm(traj, math.inf, 2)


class SNormTerms(NamedTuple):
    weighted: float
    mass_term: float

    @property
    def total(self) -> float:
        return self.weighted + self.mass_term


def _weighted_strichartz_sq(traj: Trajectory, power: float, gamma: float) -> np.ndarray:
    """Per-state || |x|^gamma |grad|^power u ||_2^2 (power >= 0)."""
    grid = traj.grid
    plan = plan_for(grid)
    spec = plan.forward(traj.values)
    vals = plan.inverse(spec * plan.rho**power)
    return _weighted_sq(grid, vals, gamma)


def s_norm_terms(traj, eps: float = DEFAULT_EPSILON, power: float = 0.0) -> SNormTerms:
    """The two terms of the S-norm of |grad|^power u.

    weighted  = || |x|^-(1+eps)/2 |grad|^((1-eps)/2 + power) u ||_{L^2_{t,x}}
    mass_term = || |grad|^power u ||_{L^inf_t L^2_x}
    """
    traj = _as_traj(traj)
    s = (1 - eps) / 2 + power
    if s < 0:
        raise SpectralPreconditionError(f"S-norm weighted term needs (1-eps)/2 + power >= 0, got {s}")
    sq = _weighted_strichartz_sq(traj, s, -(1 + eps) / 2)
    spec = plan_for(traj.grid).forward(traj.values)
    m = _spectral_sq(traj.grid, spec, power) if power != 0 else _weighted_sq(traj.grid, traj.values, 0.0)
    return SNormTerms(math.sqrt(max(time_integral(traj.times, sq), 0.0)), float(np.sqrt(m.max())))


def s_norm(traj, eps: float = DEFAULT_EPSILON) -> float:
    return s_norm_terms(traj, eps).total


def n_norm(G_traj, eps: float = DEFAULT_EPSILON, method: str = "spectral") -> float:
    """|| |x|^((1+eps)/2) |grad|^-((1-eps)/2) G ||_{L^2_{t,x}}.

    ``spectral`` applies rho^-s on the dual grid after the low-frequency
    precondition; ``riesz`` convolves with the Riesz kernel in real space.
    """
    G = _as_traj(G_traj)
    s = (1 - eps) / 2
    gamma = (1 + eps) / 2
    if method == "spectral":
        plan = plan_for(G.grid)
        spec = plan.forward(G.values)
        e = plan.dual.weights * np.abs(spec) ** 2
        total = e.sum(axis=1)
        share = np.divide(e[:, 0], total, out=np.zeros_like(total), where=total > 0)
        bad = np.nonzero(share >= LOWEST_NODE_SHARE)[0]
        if len(bad):
            listing = ", ".join(f"t={G.times[i]:g} (share {share[i]:.2e})" for i in bad[:8])
            raise SpectralPreconditionError(
                f"|grad|^-{s:g} precondition fails at {len(bad)} time slice(s): {listing}"
            )
        sym = plan.rho ** (-s)
        sym[0] = 0.0
        sq = _weighted_sq(G.grid, plan.inverse(spec * sym), gamma)
    elif method == "riesz":
        grid = G.grid
        sq = riesz_weighted_sq([field_interpolant(f) for f in G.fields], grid.dimension, s,
                               gamma, scale=1.0, extent=grid.max_radius)
    else:
        raise ValueError(f"unknown method {method!r}")
    return math.sqrt(max(time_integral(G.times, sq), 0.0))


def field_interpolant(f: RadialField, oversample: int = 4):
    """Cubic spline through the band-limited interpolant, zero beyond R."""
    R = f.grid.max_radius
    x = np.linspace(0.0, R, oversample * f.grid.node_count + 1)
    y = plan_for(f.grid).evaluate(f.spectrum.values, x)
    spl = CubicSpline(x, y, bc_type=((1, 0.0), "not-a-knot"))

    def g(r):
        r = np.asarray(r, dtype=float)
        return np.where(r <= R, spl(np.minimum(r, R)), 0.0)

    return g


def riesz_weighted_sq(funcs, n: int, s: float, gamma: float, scale: float = 1.0,
                      extent: float = 12.0, rule=None) -> np.ndarray:
    """|| |x|^gamma |grad|^-s g ||_2^2 for each callable g supported in [0, extent*scale].

    The potential is evaluated on log-spaced panels out to 20 * extent * scale;
    beyond that only its monopole term c (int g) r^(s-n) is kept.
    """
    breaks = base_breakpoints(scale, extent)
    lo, hi = 1e-6 * scale, 20.0 * extent * scale
    r_eval, w_eval = log_panel_rule(lo, hi)
    if rule is None:
        rule = riesz_potential_rule(n, s, r_eval, breaks)
    c = riesz_constant(n, s)
    from .grid import surface_area

    om = surface_area(n)
    xr, xw = log_panel_rule(1e-8 * scale, extent * scale, per_decade=16)
    out = []
    e = 2 * gamma + 2 * (s - n) + n
    for g in funcs:
        pot = c * rule(g)
        body = om * np.sum(w_eval * r_eval ** (2 * gamma + n - 1) * np.abs(pot) ** 2)
        monopole = om * np.sum(xw * xr ** (n - 1) * g(xr))
        tail = 0.0
        if abs(monopole) > 0:
            if e >= 0:
                raise ValueError("weighted Riesz potential is not square integrable")
            tail = om * abs(c * monopole) ** 2 * hi**e / (-e)
        out.append(body + tail)
    return np.array(out)


# --- frequency-localised quantities --------------------------------------------

def q_functional(traj, N: float, eps: float = DEFAULT_EPSILON) -> float:
    """int_I int |grad u_{<N}|^2 / |N x|^(1+eps) dx dt."""
    traj = _as_traj(traj)
    if not N > 0:
        raise ValueError(f"N must be positive, got {N}")
    plan = plan_for(traj.grid)
    spec = plan.forward(traj.values) * dyadic_lt(N)(plan.rho)
    du = plan.derivative(spec)
    dens = _weighted_sq(traj.grid, du, -(1 + eps) / 2) * N ** (-(1 + eps))
    return time_integral(traj.times, dens)


class _Cumulative:
    """Cumulative integral of a density sampled on Gauss-Legendre panels."""

    def __init__(self, edges: np.ndarray, density: np.ndarray, weights: np.ndarray):
        P = len(edges) - 1
        self.order = len(density) // P
        self.edges = edges
        self.dens = density.reshape(P, self.order)
        self.x, self.w = np.polynomial.legendre.leggauss(self.order)
        per = (weights * density).reshape(P, self.order).sum(axis=1)
        self.cum = np.concatenate([[0.0], np.cumsum(per)])
        self.total = float(self.cum[-1])
        V = np.polynomial.legendre.legvander(self.x, self.order - 1)
        self._proj = (V * self.w[:, None]).T * ((2 * np.arange(self.order) + 1) / 2)[:, None]

    def below(self, t: float) -> float:
        k = int(np.clip(np.searchsorted(self.edges, t, side="right") - 1, 0, len(self.edges) - 2))
        a, b = self.edges[k], self.edges[k + 1]
        coef = self._proj @ self.dens[k]
        anti = np.polynomial.legendre.legint(coef, lbnd=-1) * (b - a) / 2
        u = 2 * (min(max(t, a), b) - a) / (b - a) - 1
        return float(self.cum[k] + np.polynomial.legendre.legval(u, anti))

    def quantile(self, m: float) -> float:
        """Smallest t with below(t) >= m."""
        if m <= 0:
            return 0.0
        if m >= self.total:
            return float(self.edges[-1])
        k = int(np.searchsorted(self.cum, m) - 1)
        k = min(max(k, 0), len(self.edges) - 2)
        a, b = self.edges[k], self.edges[k + 1]
        fa, fb = self.below(a) - m, self.below(b) - m
        if fa >= 0:
            return float(a)
        if fb <= 0:
            return float(b)
        return float(brentq(lambda t: self.below(t) - m, a, b, xtol=1e-14, rtol=1e-13))


def _spectral_cumulative(f: RadialField) -> _Cumulative:
    n = f.grid.dimension
    edges, nodes, wts, M = panel_matrices(f.grid, "frequency")
    spec = M @ f.values.real + 1j * (M @ f.values.imag)
    dens = f.grid.surface_area * np.abs(spec) ** 2 * nodes ** (n - 1) / (2 * math.pi) ** n
    return _Cumulative(edges, dens, wts)


def _spatial_cumulative(f: RadialField) -> _Cumulative:
    n = f.grid.dimension
    edges, nodes, wts, M = panel_matrices(f.grid, "space")
    vals = M @ f.values.real + 1j * (M @ f.values.imag)
    dens = f.grid.surface_area * np.abs(vals) ** 2 * nodes ** (n - 1)
    return _Cumulative(edges, dens, wts)


def frequency_scale(f: RadialField) -> float:
    """Median spectral radius: half of (2 pi)^-n int |f^|^2 lies below it."""
    cum = _spectral_cumulative(f)
    if not cum.total > 0:
        raise ValueError("frequency_scale of a zero field is undefined")
    return cum.quantile(0.5 * cum.total)


@dataclass
class AlmostPeriodicityProfile:
    times: np.ndarray
    N_of_t: np.ndarray
    eta_grid: np.ndarray
    C_of_eta: np.ndarray
    radii: dict = field(default_factory=dict, repr=False)

    def rows(self) -> list[dict]:
        out = [{"quantity": "N", "key": float(t), "value": float(v)}
               for t, v in zip(self.times, self.N_of_t)]
        out += [{"quantity": "C", "key": float(e), "value": float(c)}
                for e, c in zip(self.eta_grid, self.C_of_eta)]
        return out

    def to_json(self) -> dict:
        return {
            "times": [float(t) for t in self.times],
            "N_of_t": [float(v) for v in self.N_of_t],
            "eta_grid": [float(e) for e in self.eta_grid],
            "C_of_eta": [float(c) for c in self.C_of_eta],
        }


def concentration_profile(traj, eta_grid, stride: int = 1) -> AlmostPeriodicityProfile:
    """N(t) and C(eta) = max_t max(r_eta(t) N(t), rho_eta(t) / N(t)).

    r_eta is the smallest radius whose exterior holds at most eta of the
    mass, rho_eta the same for (2 pi)^-n |u^|^2, so both tails are measured in
    the units of the mass.
    """
    traj = _as_traj(traj)
    eta = np.asarray(sorted(eta_grid), dtype=float)
    if np.any(eta <= 0):
        raise ValueError("eta values must be positive")
    idx = range(0, len(traj), stride)
    times, Ns = [], []
    C = np.zeros(len(eta))
    rx = np.zeros((len(idx), len(eta)))
    rk = np.zeros((len(idx), len(eta)))
    for j, i in enumerate(idx):
        f = traj.fields[i]
        spec = _spectral_cumulative(f)
        if not spec.total > 0:
            raise ValueError(f"zero state at t={traj.times[i]:g}")
        space = _spatial_cumulative(f)
        N = spec.quantile(0.5 * spec.total)
        for k, e in enumerate(eta):
            rx[j, k] = space.quantile(space.total - e) if e < space.total else 0.0
            rk[j, k] = spec.quantile(spec.total - e) if e < spec.total else 0.0
        C = np.maximum(C, np.maximum(rx[j] * N, rk[j] / N))
        times.append(traj.times[i])
        Ns.append(N)
    return AlmostPeriodicityProfile(np.array(times), np.array(Ns), eta, C,
                                    {"spatial": rx, "spectral": rk})


def commutator(f: RadialField, N: float, F=None) -> RadialField:
    """P_{<N} F(f) - F(P_{<N} f), with F(u) = |u|^(4/n) u by default."""
    n = f.grid.dimension
    if F is None:
        def F(v):
            return nonlinearity(v, n)
    P = dyadic_lt(N)
    lo = apply_multiplier(f, P)
    return apply_multiplier(f.with_values(F(f.values)), P) - lo.with_values(F(lo.values))


# --- tables ----------------------------------------------------------------------

@dataclass
class NormEntry:
    name: str
    params: dict
    value: float
    tolerance: float | None = None


@dataclass
class NormTable:
    entries: list = field(default_factory=list)

    def add(self, name: str, value: float, tolerance: float | None = None, **params):
        value = float(value)
        if not (math.isfinite(value) and value >= 0):
            raise ValueError(f"norm {name} has invalid value {value}")
        self.entries.append(NormEntry(name, params, value, tolerance))

    def values(self, name: str) -> list[float]:
        return [e.value for e in self.entries if e.name == name]

    def rows(self) -> list[dict]:
        keys = sorted({k for e in self.entries for k in e.params})
        out = []
        for e in self.entries:
            row = {"name": e.name}
            row.update({k: e.params.get(k, "") for k in keys})
            row["value"] = e.value
            row["tolerance"] = "" if e.tolerance is None else e.tolerance
            out.append(row)
        return out

    def to_csv(self) -> str:
        from .report import format_rows

        return format_rows(self.rows())

    def to_json(self) -> dict:
        return {"entries": [
            {"name": e.name, "params": e.params, "value": e.value, "tolerance": e.tolerance}
            for e in self.entries
        ]}


def high_freq_s_decay(traj, N_list, eps: float = DEFAULT_EPSILON) -> NormTable:
    """||u_{>=N}||_S and N^-(1+eps)/2 || |grad|^-(1-eps)/2 grad u_{<N} ||_S over N_list.

    For radial u the second S-norm reduces to
    || |x|^-(1+eps)/2 d_r u_{<N} ||_{L^2_{t,x}} + sup_t || |grad|^((1+eps)/2) u_{<N} ||_2.
    """
    traj = _as_traj(traj)
    grid = traj.grid
    plan = plan_for(grid)
    spec = plan.forward(traj.values)
    table = NormTable()
    for N in N_list:
        hi = spec * dyadic_ge(N)(plan.rho)
        hi_traj = Trajectory.from_values(grid, traj.times, plan.inverse(hi))
        terms = s_norm_terms(hi_traj, eps)
        table.add("s_norm_high", terms.total, N=N)
        table.add("linf_l2_high", terms.mass_term, N=N)
        lo = spec * dyadic_lt(N)(plan.rho)
        du = plan.derivative(lo)
        w = math.sqrt(max(time_integral(traj.times, _weighted_sq(grid, du, -(1 + eps) / 2)), 0.0))
        m = float(np.sqrt(_spectral_sq(grid, lo, (1 + eps) / 2).max()))
        table.add("s_norm_low_gradient", N ** (-(1 + eps) / 2) * (w + m), N=N)
    return table
