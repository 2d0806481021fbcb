"""Radial Fourier analysis.

For a radial function on R^n with nu = n/2 - 1 the Fourier transform
f^(xi) = int e^{-ix.xi} f(x) dx reduces to a Hankel transform,

    f^(rho) = (2 pi)^{n/2} int_0^inf f(r) Lam(rho r) r^{n-1} dr,
    f(r)    = (2 pi)^{-n/2} int_0^inf f^(rho) Lam(rho r) rho^{n-1} drho,

with Lam(z) = J_nu(z) / z^nu.  On ``bessel_zeros`` grids both integrals are
discretised by the quasi-discrete Hankel transform, which is orthogonal up to
~1e-10; on ``uniform`` grids the same formulas are applied with plain
quadrature weights (slow, independent route).
"""
from __future__ import annotations

import math
import warnings
from dataclasses import dataclass, field
from functools import cached_property, lru_cache
from typing import Callable

import numpy as np
from scipy.special import jv

from .grid import RadialField, RadialGrid, bessel_zeros, build_grid


class ResolutionWarning(UserWarning):
    """Spectral content reaches the top of the dual grid."""


class AliasingWarning(UserWarning):
    """Free flow moves spectral content beyond the truncation radius."""


class SpectralPreconditionError(ValueError):
    pass


RESOLUTION_FRACTION = 1e-6
LOWEST_NODE_SHARE = 1e-10


def lam(nu: float, z: np.ndarray) -> np.ndarray:
    """J_nu(z) / z^nu, continuous at z = 0."""
    z = np.asarray(z, dtype=float)
    out = np.empty_like(z)
    small = np.abs(z) < 1e-6
    zs = z[small]
    out[small] = (1.0 - zs**2 / (4 * (nu + 1))) / (2**nu * math.gamma(nu + 1))
    zb = z[~small]
    out[~small] = jv(nu, zb) / zb**nu
    return out


def _dlam(nu: float, z: np.ndarray) -> np.ndarray:
    # d/dz Lam(z) = -z J_{nu+1}(z) / z^{nu+1} = -z * Lam_{nu+1}(z)
    return -z * lam(nu + 1, z)


def _matvec(M: np.ndarray, v: np.ndarray) -> np.ndarray:
    """M @ v along the last axis of v, for real M and complex v."""
    v = np.asarray(v)
    if np.iscomplexobj(v):
        return (v.real @ M.T) + 1j * (v.imag @ M.T)
    return v @ M.T


class HankelPlan:
    """Precomputed transform matrices for one grid (immutable once built)."""

    def __init__(self, grid: RadialGrid):
        self.grid = grid
        n = grid.dimension
        self.nu = n / 2 - 1
        if grid.scheme == "bessel_zeros":
            J, R = grid.node_count, grid.max_radius
            z = bessel_zeros(self.nu, J + 1)
            S = z[-1]
            jk = z[:-1]
            band = S / R
            rho = jk / R
            rho_w = 2.0 * band**2 / (S**2 * jv(self.nu + 1, jk) ** 2) * rho ** (n - 2)
            dual = RadialGrid(n, band, J, "bessel_dual", rho, rho_w)
        else:
            # an eighth of the Nyquist band of spacing R/J: the composite
            # weights lose accuracy quickly as the kernel oscillates faster
            band = 0.125 * math.pi * grid.node_count / grid.max_radius
            dual = build_grid(n, band, grid.node_count, "uniform")
        self.dual = dual
        self.band = dual.max_radius

    @property
    def rho(self) -> np.ndarray:
        return self.dual.nodes

    @cached_property
    def _kernel(self) -> np.ndarray:
        return lam(self.nu, np.outer(self.dual.nodes, self.grid.nodes))

    @cached_property
    def forward_matrix(self) -> np.ndarray:
        n = self.grid.dimension
        return (2 * math.pi) ** (n / 2) * self._kernel * self.grid.weights[None, :]

    @cached_property
    def inverse_matrix(self) -> np.ndarray:
        n = self.grid.dimension
        return (2 * math.pi) ** (-n / 2) * self._kernel.T * self.dual.weights[None, :]

    @cached_property
    def derivative_matrix(self) -> np.ndarray:
        n = self.grid.dimension
        rho = self.dual.nodes
        arg = np.outer(self.grid.nodes, rho)
        return (2 * math.pi) ** (-n / 2) * _dlam(self.nu, arg) * (self.dual.weights * rho)[None, :]

    def forward(self, values: np.ndarray) -> np.ndarray:
        return _matvec(self.forward_matrix, values)

    def inverse(self, spec: np.ndarray) -> np.ndarray:
        return _matvec(self.inverse_matrix, spec)

    def derivative(self, spec: np.ndarray) -> np.ndarray:
        return _matvec(self.derivative_matrix, spec)

    def evaluate(self, spec: np.ndarray, r: np.ndarray) -> np.ndarray:
        """Band-limited interpolation: the inverse transform at arbitrary radii."""
        n = self.grid.dimension
        K = lam(self.nu, np.outer(np.atleast_1d(r), self.dual.nodes))
        K *= (2 * math.pi) ** (-n / 2) * self.dual.weights[None, :]
        return _matvec(K, spec)

    def spectrum_at(self, values: np.ndarray, rho: np.ndarray) -> np.ndarray:
        """The forward transform evaluated at arbitrary frequencies."""
        n = self.grid.dimension
        K = lam(self.nu, np.outer(np.atleast_1d(rho), self.grid.nodes))
        K *= (2 * math.pi) ** (n / 2) * self.grid.weights[None, :]
        return _matvec(K, values)


@lru_cache(maxsize=16)
def plan_for(grid: RadialGrid) -> HankelPlan:
    return HankelPlan(grid)


@dataclass(frozen=True, eq=False)
class SpectralField:
    """Samples of f^ on the dual grid of ``grid``."""

    grid: RadialGrid
    values: np.ndarray

    @property
    def plan(self) -> HankelPlan:
        return plan_for(self.grid)

    @property
    def rho(self) -> np.ndarray:
        return self.plan.rho

    def norm2(self) -> float:
        """int |f^|^2 d xi over R^n (no (2 pi)^-n factor)."""
        dual = self.plan.dual
        return float(np.sum(dual.surface_area * dual.weights * np.abs(self.values) ** 2))


def _resolution_check(spec: np.ndarray, plan: HankelPlan) -> None:
    e = plan.dual.weights * np.abs(spec) ** 2
    total = e.sum()
    if total <= 0:
        return
    top = e[plan.rho > 0.9 * plan.band].sum() / total
    if top > RESOLUTION_FRACTION:
        warnings.warn(
            f"{top:.2e} of the spectral energy sits in the top 10% of the band "
            f"(rho > {0.9 * plan.band:.3g}); refine the grid",
            ResolutionWarning,
            stacklevel=3,
        )


def hankel_forward(f: RadialField, check: bool = True) -> SpectralField:
    plan = plan_for(f.grid)
    spec = plan.forward(f.values)
    if check:
        _resolution_check(spec, plan)
    return SpectralField(f.grid, spec)


def hankel_inverse(F: SpectralField) -> RadialField:
    return RadialField(F.grid, F.plan.inverse(F.values))


# --- multipliers -----------------------------------------------------------

def _psi(x):
    x = np.asarray(x, dtype=float)
    out = np.zeros_like(x)
    pos = x > 0
    out[pos] = np.exp(-1.0 / x[pos])
    return out


def bump(rho) -> np.ndarray:
    """Smooth radial cutoff: 1 on [0, 1], 0 on [2, inf), C^inf in between."""
    rho = np.asarray(rho, dtype=float)
    a = _psi(2.0 - rho)
    b = _psi(rho - 1.0)
    out = np.where(rho <= 1.0, 1.0, 0.0)
    mid = (rho > 1.0) & (rho < 2.0)
    out[mid] = a[mid] / (a[mid] + b[mid])
    return out


@dataclass(frozen=True)
class MultiplierSymbol:
    kind: str
    params: tuple
    evaluator: Callable[[np.ndarray], np.ndarray] = field(compare=False, repr=False)
    regularity_tag: bool = False

    def __call__(self, rho) -> np.ndarray:
        return self.evaluator(np.asarray(rho, dtype=float))

    def __mul__(self, other: "MultiplierSymbol") -> "MultiplierSymbol":
        f, g = self.evaluator, other.evaluator
        return MultiplierSymbol(
            "riesz_composite",
            ((self.kind, self.params), (other.kind, other.params)),
            lambda rho: f(rho) * g(rho),
            self.regularity_tag and other.regularity_tag,
        )

    def scaled(self, c: float) -> "MultiplierSymbol":
        f = self.evaluator
        return MultiplierSymbol(self.kind, self.params + (("scale", c),),
                                lambda rho: c * f(rho), self.regularity_tag)


def dyadic_le(N: float) -> MultiplierSymbol:
    """P_{<=N}: phi(rho / N)."""
    return MultiplierSymbol("dyadic_le", (N,), lambda rho: bump(rho / N), True)


def dyadic_lt(N: float) -> MultiplierSymbol:
    """P_{<N} = P_{<=N/2}."""
    return MultiplierSymbol("dyadic_lt", (N,), lambda rho: bump(2.0 * rho / N), True)


def dyadic_gt(N: float) -> MultiplierSymbol:
    """P_{>N}: 1 - phi(rho / N)."""
    return MultiplierSymbol("dyadic_gt", (N,), lambda rho: 1.0 - bump(rho / N), True)


def dyadic_ge(N: float) -> MultiplierSymbol:
    """P_{>=N} = 1 - P_{<N}."""
    return MultiplierSymbol("dyadic_ge", (N,), lambda rho: 1.0 - bump(2.0 * rho / N), True)


def dyadic_band(N: float) -> MultiplierSymbol:
    """P_N: phi(rho / N) - phi(2 rho / N)."""
    return MultiplierSymbol(
        "dyadic_band", (N,), lambda rho: bump(rho / N) - bump(2.0 * rho / N), True
    )


def dyadic_between(M: float, N: float) -> MultiplierSymbol:
    """P_{M < . <= N} = P_{<=N} - P_{<=M}."""
    return MultiplierSymbol(
        "dyadic_between", (M, N), lambda rho: bump(rho / N) - bump(rho / M), True
    )


def frac_power(s: float) -> MultiplierSymbol:
    def ev(rho):
        with np.errstate(divide="ignore"):
            return np.where(rho > 0, rho, 0.0) ** s if s >= 0 else np.where(rho > 0, rho ** s, 0.0)

    # |xi|^s alone is homogeneous, not Hormander-Mikhlin unless s == 0
    return MultiplierSymbol("frac_power", (s,), ev, s == 0)


def free_flow(t: float) -> MultiplierSymbol:
    return MultiplierSymbol("free_flow", (t,), lambda rho: np.exp(-1j * t * rho**2), False)


def custom(evaluator, regularity_tag: bool = False, name: str = "custom") -> MultiplierSymbol:
    return MultiplierSymbol("custom", (name,), evaluator, regularity_tag)


def identity_symbol() -> MultiplierSymbol:
    return MultiplierSymbol("custom", ("identity",), lambda rho: np.ones_like(rho), True)


def dyadic_range(lo_exp: int = -8, hi_exp: int = 8) -> list[float]:
    return [2.0**k for k in range(lo_exp, hi_exp + 1)]


# --- operators ---------------------------------------------------------------

def apply_multiplier(f: RadialField, m: MultiplierSymbol) -> RadialField:
    spec = f.spectrum
    plan = spec.plan
    return RadialField(f.grid, plan.inverse(m(plan.rho) * spec.values))


def apply_symbol_values(f: RadialField, values: np.ndarray) -> RadialField:
    plan = plan_for(f.grid)
    return RadialField(f.grid, plan.inverse(values * f.spectrum.values))


def _negative_power_symbol(spec: SpectralField, s: float) -> np.ndarray:
    plan = spec.plan
    e = plan.dual.weights * np.abs(spec.values) ** 2
    total = e.sum()
    sym = plan.rho**s
    if total == 0:
        return sym
    share = e[0] / total
    if share >= LOWEST_NODE_SHARE:
        raise SpectralPreconditionError(
            f"|grad|^{s:g} needs vanishing low-frequency content; "
            f"lowest dual node carries {share:.3e} of the spectral energy"
        )
    sym = sym.copy()
    sym[0] = 0.0
    return sym


def fractional_derivative(f: RadialField, s: float) -> RadialField:
    """|grad|^s f.  Negative s requires negligible energy at the lowest dual node."""
    spec = f.spectrum
    if s == 0:
        return f
    sym = spec.rho**s if s > 0 else _negative_power_symbol(spec, s)
    return RadialField(f.grid, spec.plan.inverse(sym * spec.values))


def free_propagate(f: RadialField, t: float, check: bool = True) -> RadialField:
    """e^{it Delta} f, i.e. multiplication by e^{-it rho^2}."""
    if t == 0:
        return f
    spec = f.spectrum
    plan = spec.plan
    if check:
        _aliasing_check(spec.values, plan, t)
    return RadialField(f.grid, plan.inverse(np.exp(-1j * t * plan.rho**2) * spec.values))


def _aliasing_check(spec: np.ndarray, plan: HankelPlan, t: float) -> None:
    # Phase increment between neighbouring dual nodes exceeds pi once
    # 2|t| rho > R: that content has travelled past the outer radius.
    e = plan.dual.weights * np.abs(spec) ** 2
    total = e.sum()
    if total <= 0:
        return
    cut = plan.grid.max_radius / (2 * abs(t))
    frac = e[plan.rho > cut].sum() / total
    if frac > RESOLUTION_FRACTION:
        warnings.warn(
            f"free flow over t={t:g} carries {frac:.2e} of the energy past r={plan.grid.max_radius:g}",
            AliasingWarning,
            stacklevel=3,
        )


def fd_weights(x0: float, x: np.ndarray, m: int) -> np.ndarray:
    """Finite-difference weights for the m-th derivative at x0 (Fornberg)."""
    npts = len(x)
    c = np.zeros((npts, m + 1))
    c1 = 1.0
    c4 = x[0] - x0
    c[0, 0] = 1.0
    for i in range(1, npts):
        mn = min(i, m)
        c2 = 1.0
        c5 = c4
        c4 = x[i] - x0
        for j in range(i):
            c3 = x[i] - x[j]
            c2 *= c3
            if j == i - 1:
                for k in range(mn, 0, -1):
                    c[i, k] = c1 * (k * c[i - 1, k - 1] - c5 * c[i - 1, k]) / c2
                c[i, 0] = -c1 * c5 * c[i - 1, 0] / c2
            for k in range(mn, 0, -1):
                c[j, k] = (c4 * c[j, k] - k * c[j, k - 1]) / c3
            c[j, 0] = c4 * c[j, 0] / c3
        c1 = c2
    return c[:, m]


@lru_cache(maxsize=16)
def _fd_matrix(grid: RadialGrid, width: int) -> np.ndarray:
    # Even extension across r = 0: f(-r) = f(r) for radial fields.
    r = grid.nodes
    J = len(r)
    ext = np.concatenate([-r[::-1], r])
    D = np.zeros((J, J))
    half = width // 2
    for i in range(J):
        c = J + i
        lo = max(0, min(c - half, 2 * J - width))
        idx = np.arange(lo, lo + width)
        w = fd_weights(r[i], ext[idx], 1)
        for k, wk in zip(idx, w):
            col = k - J if k >= J else J - 1 - k
            D[i, col] += wk
    D.flags.writeable = False
    return D


def gradient_radial(f: RadialField, method: str = "spectral", width: int = 9) -> RadialField:
    """d f / d r, spectrally or by width-point finite differences."""
    if method == "spectral":
        spec = f.spectrum
        return RadialField(f.grid, spec.plan.derivative(spec.values))
    if method == "fd":
        return RadialField(f.grid, _matvec(_fd_matrix(f.grid, width), f.values))
    raise ValueError(f"unknown method {method!r}")


def evaluate(f: RadialField, r) -> np.ndarray:
    """f at arbitrary radii through its band-limited spectral representation."""
    return plan_for(f.grid).evaluate(f.spectrum.values, np.asarray(r, dtype=float))


def panel_rule(a: float, b: float, panels: int, order: int = 16):
    """Composite Gauss-Legendre rule on [a, b]: (edges, nodes, weights)."""
    x, w = np.polynomial.legendre.leggauss(order)
    edges = np.linspace(a, b, panels + 1)
    lo, hi = edges[:-1, None], edges[1:, None]
    nodes = (0.5 * (hi - lo) * x[None, :] + 0.5 * (lo + hi)).ravel()
    wts = (0.5 * (hi - lo) * w[None, :]).ravel()
    return edges, nodes, wts


def _panel_count(extent: float, partner: float) -> int:
    # |f|^2 oscillates at most with frequency 2 * partner; 8 radians per
    # 16-point panel keeps the rule at round-off
    return int(math.ceil(2.0 * extent * partner / 8.0)) + 4


def spectral_mass_below(f: RadialField, rho_cut: float, panels: int | None = None) -> float:
    """(2 pi)^-n int_{|xi| <= rho_cut} |f^|^2 d xi by Gauss-Legendre panels."""
    n = f.grid.dimension
    if rho_cut <= 0:
        return 0.0
    plan = plan_for(f.grid)
    if panels is None:
        panels = _panel_count(rho_cut, f.grid.max_radius)
    _, nodes, wts = panel_rule(0.0, rho_cut, panels)
    vals = plan.spectrum_at(f.values, nodes)
    total = np.sum(wts * np.abs(vals) ** 2 * nodes ** (n - 1))
    return float(f.grid.surface_area * total / (2 * math.pi) ** n)


def spatial_mass_below(f: RadialField, r_cut: float, panels: int | None = None) -> float:
    """int_{|x| <= r_cut} |f|^2 dx using the band-limited interpolant of f."""
    n = f.grid.dimension
    if r_cut <= 0:
        return 0.0
    plan = plan_for(f.grid)
    if panels is None:
        panels = _panel_count(r_cut, plan.band)
    _, nodes, wts = panel_rule(0.0, r_cut, panels)
    vals = plan.evaluate(f.spectrum.values, nodes)
    return float(f.grid.surface_area * np.sum(wts * np.abs(vals) ** 2 * nodes ** (n - 1)))


@lru_cache(maxsize=8)
def panel_matrices(grid: RadialGrid, domain: str):
    """Cached (edges, nodes, weights, matrix) for sampling on GL panels.

    ``domain='space'`` maps grid values to f on panels over [0, R] (through
    the spectrum); ``domain='frequency'`` maps grid values to f^ on panels
    over [0, band].
    """
    plan = plan_for(grid)
    n = grid.dimension
    R, band = grid.max_radius, plan.band
    if domain == "space":
        edges, nodes, wts = panel_rule(0.0, R, _panel_count(R, band))
        K = lam(plan.nu, np.outer(nodes, plan.rho)) * ((2 * math.pi) ** (-n / 2) * plan.dual.weights)[None, :]
        M = K @ plan.forward_matrix
    elif domain == "frequency":
        edges, nodes, wts = panel_rule(0.0, band, _panel_count(band, R))
        M = lam(plan.nu, np.outer(nodes, grid.nodes)) * ((2 * math.pi) ** (n / 2) * grid.weights)[None, :]
    else:
        raise ValueError(f"unknown domain {domain!r}")
    M.flags.writeable = False
    return edges, nodes, wts, M
