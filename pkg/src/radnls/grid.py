"""Radial discretisation of R^n: grids, quadrature, fields and Lebesgue norms.

A radial function f(|x|) on R^n is stored by its samples on nodes
0 < r_1 < ... < r_J <= R.  Quadrature weights absorb the Jacobian r^(n-1),
so that ``sum(w * f(r))`` approximates the radial integral and
``surface_area * sum(w * f(r))`` approximates the integral over R^n.
"""
from __future__ import annotations

import math
import warnings
from dataclasses import dataclass
from functools import cached_property, lru_cache
from typing import Callable

import numpy as np
from scipy.optimize import brentq
from scipy.special import jv

SCHEMES = ("bessel_zeros", "uniform")


class GridError(ValueError):
    pass


class TruncationWarning(UserWarning):
    """A field does not decay to the truncation floor at the outer radius."""


def surface_area(n: int) -> float:
    """Area of the unit sphere S^(n-1) in R^n."""
    return 2.0 * math.pi ** (n / 2) / math.gamma(n / 2)


@lru_cache(maxsize=64)
def bessel_zeros(order: float, count: int) -> np.ndarray:
    """First ``count`` positive zeros of J_order, for real order >= 0.

    Sign changes are bracketed on a fine sampling of J_order and each zero is
    polished with Brent's method.
    """
    if count < 1:
        raise ValueError("count must be positive")
    # j_{order,k} < (k + order/2 + 1) * pi for all k >= 1
    zmax = (count + order / 2 + 2.0) * math.pi
    x = np.linspace(1e-8, zmax, int(zmax * 32) + 64)
    y = jv(order, x)
    brackets = np.nonzero(np.signbit(y[:-1]) != np.signbit(y[1:]))[0]
    if len(brackets) < count:
        raise RuntimeError("failed to bracket enough Bessel zeros")
    roots = [
        brentq(lambda t: jv(order, t), x[i], x[i + 1], xtol=1e-14, rtol=1e-15)
        for i in brackets[:count]
    ]
    out = np.array(roots)
    out.flags.writeable = False
    return out


@dataclass(frozen=True, eq=False)
class RadialGrid:
    dimension: int
    max_radius: float
    node_count: int
    scheme: str
    nodes: np.ndarray
    weights: np.ndarray

    @property
    def n(self) -> int:
        return self.dimension

    @property
    def surface_area(self) -> float:
        return surface_area(self.dimension)

    @property
    def key(self) -> tuple:
        return (self.dimension, float(self.max_radius), self.node_count, self.scheme)

    def __eq__(self, other):
        return isinstance(other, RadialGrid) and self.key == other.key

    def __hash__(self):
        return hash(self.key)

    def __repr__(self):
        return (
            f"RadialGrid(n={self.dimension}, R={self.max_radius}, "
            f"J={self.node_count}, scheme={self.scheme!r})"
        )

    def measure(self) -> np.ndarray:
        """Weights for integrals over R^n (surface area folded in)."""
        return self.surface_area * self.weights

    def sample(self, func: Callable[[np.ndarray], np.ndarray]) -> "RadialField":
        return RadialField(self, np.asarray(func(self.nodes), dtype=complex))

    def zeros(self) -> "RadialField":
        return RadialField(self, np.zeros(self.node_count, dtype=complex))


def _uniform_weights(n: int, R: float, J: int) -> tuple[np.ndarray, np.ndarray]:
    # Cell-wise weights exact for quadratics times r^(n-1), built from a
    # 3-node Lagrange stencil around each midpoint.  Near the origin, cells
    # whose stencil would drive a global weight negative fall back to the
    # product midpoint rule.
    h = R / J
    r = (np.arange(J) + 0.5) * h
    gx, gw = np.polynomial.legendre.leggauss(n // 2 + 3)
    local = []
    for j in range(J):
        i0 = min(max(j - 1, 0), J - 3)
        idx = np.arange(i0, i0 + 3)
        x = r[j] + 0.5 * h * gx
        moments = np.array(
            [np.sum(0.5 * h * gw * ((x - r[j]) / h) ** k * x ** (n - 1)) for k in range(3)]
        )
        vander = np.array([((r[idx] - r[j]) / h) ** k for k in range(3)])
        local.append((idx, np.linalg.solve(vander, moments), moments[0]))
    for fallback in range(J):
        w = np.zeros(J)
        for j, (idx, wl, m0) in enumerate(local):
            if j < fallback:
                w[j] += m0
            else:
                w[idx] += wl
        if np.all(w > 0):
            return r, w
    raise GridError("could not build positive uniform weights")  # pragma: no cover


def _bessel_weights(n: int, R: float, J: int) -> tuple[np.ndarray, np.ndarray]:
    nu = n / 2 - 1
    z = bessel_zeros(nu, J + 1)
    S = z[-1]
    jk = z[:-1]
    r = jk * R / S
    w = 2.0 * R**2 / (S**2 * jv(nu + 1, jk) ** 2) * r ** (n - 2)
    return r, w


def build_grid(n: int, R: float, J: int, scheme: str = "bessel_zeros") -> RadialGrid:
    """Build a radial grid on (0, R] in dimension ``n``.

    ``bessel_zeros`` places nodes at R * j_k / j_{J+1}, j_k the zeros of
    J_{n/2-1}; these pair with the quasi-discrete Hankel transform.
    ``uniform`` uses cell midpoints with composite weights and serves as the
    slow, independent quadrature route.
    """
    if int(n) != n or n < 3:
        raise GridError(f"dimension must be an integer n >= 3, got {n}")
    if not R > 0:
        raise GridError(f"max_radius must be positive, got {R}")
    if int(J) != J or J < 8:
        raise GridError(f"node_count must be an integer >= 8, got {J}")
    n, J, R = int(n), int(J), float(R)
    if scheme == "bessel_zeros":
        r, w = _bessel_weights(n, R, J)
    elif scheme == "uniform":
        r, w = _uniform_weights(n, R, J)
    else:
        raise GridError(f"unknown scheme {scheme!r}; expected one of {SCHEMES}")
    r.flags.writeable = False
    w.flags.writeable = False
    return RadialGrid(n, R, J, scheme, r, w)


@dataclass(frozen=True, eq=False)
class RadialField:
    grid: RadialGrid
    values: np.ndarray

    def __post_init__(self):
        values = np.asarray(self.values, dtype=complex)
        if values.shape != (self.grid.node_count,):
            raise GridError(
                f"field has shape {values.shape}, grid has {self.grid.node_count} nodes"
            )
        object.__setattr__(self, "values", values)

    @cached_property
    def spectrum(self):
        from .spectral import hankel_forward

        return hankel_forward(self)

    def with_values(self, values) -> "RadialField":
        return RadialField(self.grid, values)

    def abs2(self) -> np.ndarray:
        return self.values.real**2 + self.values.imag**2

    def __add__(self, other):
        return self.with_values(self.values + _vals(other))

    def __sub__(self, other):
        return self.with_values(self.values - _vals(other))

    def __mul__(self, other):
        return self.with_values(self.values * _vals(other))

    __rmul__ = __mul__

    def __neg__(self):
        return self.with_values(-self.values)

    def conj(self) -> "RadialField":
        return self.with_values(np.conj(self.values))


def _vals(x):
    return x.values if isinstance(x, RadialField) else x


def integrate(f: RadialField) -> complex:
    """Integral of a radial field over R^n."""
    return complex(np.sum(f.grid.measure() * f.values))


def weighted_lp_norm(f: RadialField, p: float, gamma: float = 0.0) -> float:
    """|| |x|^gamma f ||_{L^p(R^n)} by grid quadrature (p may be inf)."""
    n = f.grid.dimension
    r = f.grid.nodes
    if p < 1:
        raise ValueError(f"p must be >= 1, got {p}")
    amp = np.abs(f.values)
    if math.isinf(p):
        return float(np.max(r**gamma * amp)) if amp.size else 0.0
    if not gamma * p + n - 1 > -1:
        raise ValueError(
            f"|x|^{gamma * p} is not locally integrable in dimension {n} (p={p})"
        )
    total = np.sum(f.grid.measure() * r ** (gamma * p) * amp**p)
    return float(total ** (1.0 / p))


def check_decay(f: RadialField, floor: float = 1e-12, what: str = "field") -> bool:
    """Warn when |f| at the outermost node exceeds ``floor`` times its peak."""
    amp = np.abs(f.values)
    peak = amp.max() if amp.size else 0.0
    if peak > 0 and amp[-1] > floor * max(peak, 1.0):
        warnings.warn(
            f"{what} is {amp[-1]:.3e} at r={f.grid.max_radius}; truncation floor is {floor:g}",
            TruncationWarning,
            stacklevel=2,
        )
        return False
    return True
