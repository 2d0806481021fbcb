"""Radial test functions with closed forms where they exist, and seeded families."""
from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
from scipy.special import hyp1f1

from .grid import GridError, RadialField, RadialGrid
from .spectral import bump, custom, plan_for

KINDS = ("gaussian_mix", "radial_bumps", "band_limited", "dilation_orbit")
DECAY_FLOOR = 1e-12


@dataclass(frozen=True)
class GaussianMixture:
    """f(r) = sum_i a_i exp(-r^2 / (2 sigma_i^2)) in dimension n."""

    dimension: int
    amplitudes: tuple
    widths: tuple

    @classmethod
    def single(cls, n: int, amplitude: complex = 1.0, width: float = 1.0):
        return cls(n, (complex(amplitude),), (float(width),))

    @property
    def scale(self) -> float:
        return max(self.widths)

    def __call__(self, r) -> np.ndarray:
        r = np.asarray(r, dtype=float)
        out = np.zeros(r.shape, dtype=complex)
        for a, sg in zip(self.amplitudes, self.widths):
            out += a * np.exp(-(r**2) / (2 * sg**2))
        return out

    def dilate(self, lam: float) -> "GaussianMixture":
        """lam^(-n/2) f(x / lam)."""
        c = lam ** (-self.dimension / 2)
        return GaussianMixture(
            self.dimension,
            tuple(c * a for a in self.amplitudes),
            tuple(lam * sg for sg in self.widths),
        )

    def spectrum(self, rho) -> np.ndarray:
        rho = np.asarray(rho, dtype=float)
        n = self.dimension
        out = np.zeros(rho.shape, dtype=complex)
        for a, sg in zip(self.amplitudes, self.widths):
            out += a * (2 * math.pi * sg**2) ** (n / 2) * np.exp(-(sg**2) * rho**2 / 2)
        return out

    def frac_derivative(self, s: float, r) -> np.ndarray:
        """|grad|^s f in closed form (valid for s > -n)."""
        n = self.dimension
        if not s > -n:
            raise ValueError(f"|grad|^s of a Gaussian needs s > -n, got {s}")
        r = np.asarray(r, dtype=float)
        out = np.zeros(r.shape, dtype=complex)
        g = math.gamma((n + s) / 2) / math.gamma(n / 2)
        for a, sg in zip(self.amplitudes, self.widths):
            p = 1.0 / (2 * sg**2)
            out += a * (4 * p) ** (s / 2) * g * hyp1f1((n + s) / 2, n / 2, -p * r**2)
        return out

    def frac_derivative_tail(self, s: float) -> tuple[float, float]:
        """(A, e) with |grad|^s f ~ A r^e as r -> inf; A = 0 if faster decay."""
        n = self.dimension
        if s == 0 or (s > 0 and s % 2 == 0):
            return 0.0, 0.0
        g = math.gamma((n + s) / 2) / math.gamma(n / 2) * math.gamma(n / 2) / math.gamma(-s / 2)
        A = 0.0
        for a, sg in zip(self.amplitudes, self.widths):
            p = 1.0 / (2 * sg**2)
            A += a * (4 * p) ** (s / 2) * g * p ** (-(n + s) / 2)
        return complex(A), -(n + s)

    def mass(self) -> float:
        n = self.dimension
        tot = 0.0
        for a, s1 in zip(self.amplitudes, self.widths):
            for b, s2 in zip(self.amplitudes, self.widths):
                v = 2 * s1**2 * s2**2 / (s1**2 + s2**2)
                tot += (a * np.conj(b)).real * (math.pi * v) ** (n / 2)
        return float(tot)

    def sample(self, grid: RadialGrid) -> RadialField:
        return RadialField(grid, self(grid.nodes))


@dataclass(frozen=True)
class RingBump:
    """a exp(-(r - r0)^2 / (2 w^2)): mass concentrated on a shell."""

    dimension: int
    center: float
    width: float
    amplitude: complex = 1.0

    @property
    def scale(self) -> float:
        return self.center + self.width

    def __call__(self, r) -> np.ndarray:
        r = np.asarray(r, dtype=float)
        return self.amplitude * np.exp(-((r - self.center) ** 2) / (2 * self.width**2)) + 0j

    def dilate(self, lam: float) -> "RingBump":
        return RingBump(self.dimension, lam * self.center, lam * self.width,
                        self.amplitude * lam ** (-self.dimension / 2))

    def sample(self, grid: RadialGrid) -> RadialField:
        return RadialField(grid, self(grid.nodes))


def band_window(lo: float, hi: float):
    """Smooth window supported in [lo, hi]: (1 - phi(rho/lo)) phi(2 rho/hi)."""
    if not 0 < 2 * lo <= hi:
        raise ValueError(f"band needs 0 < 2*lo <= hi, got ({lo}, {hi})")

    def ev(rho):
        rho = np.asarray(rho, dtype=float)
        return (1.0 - bump(rho / lo)) * bump(2.0 * rho / hi)

    return custom(ev, regularity_tag=True, name=f"band[{lo:g},{hi:g}]")


@dataclass(frozen=True)
class BandLimited:
    """Spectrum sum_i c_i exp(-(rho - mu_i)^2 / (2 tau^2)) with centres at
    least 5 tau inside the declared band, so that under 1e-10 of the spectral
    mass falls outside it.  Gaussian shells rather than a compactly supported
    cutoff keep the spatial tails Gaussian as well.
    """

    dimension: int
    band: tuple
    centers: tuple
    coefficients: tuple
    tau: float = 0.4

    @property
    def scale(self) -> float:
        return 1.0 / self.band[0]

    def spectrum(self, rho) -> np.ndarray:
        rho = np.asarray(rho, dtype=float)
        out = np.zeros(rho.shape, dtype=complex)
        for c, mu in zip(self.coefficients, self.centers):
            out += c * np.exp(-((rho - mu) ** 2) / (2 * self.tau**2))
        return out

    def sample(self, grid: RadialGrid) -> RadialField:
        plan = plan_for(grid)
        return RadialField(grid, plan.inverse(self.spectrum(plan.rho)))


def dilation_orbit(base, lams=(0.25, 1.0, 4.0)) -> list:
    return [base.dilate(lam) for lam in lams]


@dataclass(frozen=True, eq=False)
class TestFamily:
    seed: int
    count: int
    kind: str
    members: tuple
    metadata: tuple
    grid: RadialGrid | None = None
    fields: tuple | None = field(default=None, repr=False)

    __test__ = False  # not a pytest class

    def __len__(self):
        return len(self.members)


def _gaussian_mix(rng, n: int) -> tuple[GaussianMixture, dict]:
    k = int(rng.integers(1, 4))
    widths = tuple(float(w) for w in rng.uniform(0.5, 1.5, k))
    amps = tuple(complex(a, b) for a, b in rng.normal(size=(k, 2)))
    return GaussianMixture(n, amps, widths), {"components": k, "widths": widths}


def random_radial_family(seed: int, count: int, kind: str, n: int = 3,
                         grid: RadialGrid | None = None,
                         band: tuple = (1.0, 6.0), tau: float = 0.4) -> TestFamily:
    """Deterministic family from (seed, kind, count).

    With a grid, members are sampled and each must decay below 1e-12 of its
    peak at the outer radius, otherwise GridError is raised.
    """
    if count < 1:
        raise ValueError("count must be >= 1")
    if kind not in KINDS:
        raise ValueError(f"unknown family kind {kind!r}; expected one of {KINDS}")
    if grid is not None and grid.dimension != n:
        n = grid.dimension
    rng = np.random.default_rng(seed)
    members, meta = [], []
    if kind == "gaussian_mix":
        for _ in range(count):
            m, d = _gaussian_mix(rng, n)
            members.append(m)
            meta.append(d)
    elif kind == "radial_bumps":
        for _ in range(count):
            r0, w = float(rng.uniform(1.0, 4.0)), float(rng.uniform(0.3, 0.8))
            a = complex(*rng.normal(size=2))
            members.append(RingBump(n, r0, w, a))
            meta.append({"center": r0, "width": w})
    elif kind == "band_limited":
        if grid is None:
            raise ValueError("band_limited families are defined on a grid")
        lo, hi = band
        if hi - lo < 10 * tau:
            raise ValueError(f"band {band} is narrower than 10 tau = {10 * tau:g}")
        for _ in range(count):
            k = int(rng.integers(1, 4))
            centers = tuple(float(c) for c in rng.uniform(lo + 5 * tau, hi - 5 * tau, k))
            coefs = tuple(complex(a, b) for a, b in rng.normal(size=(k, 2)))
            members.append(BandLimited(n, (lo, hi), centers, coefs, tau))
            meta.append({"band": (lo, hi), "centers": centers})
    else:
        for i in range(count):
            base, d = _gaussian_mix(rng, n)
            for lam in (0.25, 1.0, 4.0):
                members.append(base.dilate(lam))
                meta.append(dict(d, orbit=i, lam=lam))
    fields = None
    if grid is not None:
        fields = tuple(m.sample(grid) for m in members)
        for i, f in enumerate(fields):
            amp = np.abs(f.values)
            if amp[-1] > DECAY_FLOOR * amp.max():
                raise GridError(
                    f"member {i} of the {kind} family is {amp[-1]:.2e} at r={grid.max_radius:g} "
                    f"(peak {amp.max():.2e}); enlarge the grid"
                )
    return TestFamily(seed, count, kind, tuple(members), tuple(meta), grid, fields)
