"""Empirical constants for the weighted Sobolev, Strichartz and nonlinear estimates.

Every checker returns a RatioReport of LHS / RHS over its samples.  Profiles
are analytic radial functions (GaussianMixture, RingBump, ...) or sampled
RadialFields; radial integrals of profiles use one fixed set of log-spaced
Gauss-Legendre panels in absolute r, so dilating a profile moves it across
the panels and the dilation-invariance checks are genuine.
"""
from __future__ import annotations

import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from functools import lru_cache

import numpy as np

from .diagnostics import (
    DEFAULT_EPSILON,
    _spectral_sq,
    field_interpolant,
    n_norm,
    riesz_weighted_sq,
    s_norm_terms,
    time_integral,
    weighted_norm,
    weighted_power_sum,
)
from .grid import RadialField, RadialGrid, build_grid, surface_area
from .kernels import RadialConvolution, log_panel_rule
from .profiles import GaussianMixture
from .report import format_rows, _jsonable
from .solver import Trajectory, free_trajectory
from .spectral import MultiplierSymbol, apply_multiplier, dyadic_lt, fractional_derivative, plan_for

SCALING_TOL = 1e-12
RULE_LO, RULE_HI = 1e-8, 1e4
SELF_CONVERGENCE_TOL = 0.01


class HypothesisError(ValueError):
    """Parameters outside the hypotheses of the estimate being checked."""


# --- reports -----------------------------------------------------------------------

@dataclass
class RatioReport:
    check: str
    params: dict
    samples: list = field(default_factory=list)
    hypothesis: dict = field(default_factory=dict)
    flags: dict = field(default_factory=dict)
    scaling_residual: float | None = None

    def add(self, lhs: float, rhs: float, **extra) -> dict:
        lhs, rhs = float(lhs), float(rhs)
        if lhs == 0.0:
            ratio = 0.0
        elif rhs > 0:
            ratio = lhs / rhs
        else:
            ratio = math.inf
        if not (math.isfinite(ratio) and ratio >= 0):
            raise ValueError(f"{self.check}: invalid ratio lhs={lhs}, rhs={rhs}")
        row = dict(sample_id=len(self.samples), **extra, lhs=lhs, rhs=rhs, ratio=ratio)
        self.samples.append(row)
        return row

    @property
    def ratios(self) -> np.ndarray:
        return np.array([s["ratio"] for s in self.samples])

    @property
    def sup_ratio(self) -> float:
        return float(self.ratios.max()) if self.samples else 0.0

    def orbit_residuals(self, labels) -> float:
        """Largest relative spread of the ratio within each group of labels."""
        labels = list(labels)
        if len(labels) != len(self.samples):
            raise ValueError("one orbit label per sample is required")
        r = self.ratios
        worst = 0.0
        for lab in dict.fromkeys(labels):
            grp = r[[i for i, x in enumerate(labels) if x == lab]]
            ref = np.max(np.abs(grp))
            if ref > 0:
                worst = max(worst, float((grp.max() - grp.min()) / ref))
        self.scaling_residual = worst
        return worst

    def rows(self) -> list[dict]:
        out = []
        for s in self.samples:
            row = {"check": self.check}
            row.update(self.params)
            row.update(s)
            out.append(row)
        summ = {"check": self.check, "sample_id": "summary"}
        summ.update(self.params)
        summ["ratio"] = self.sup_ratio
        if self.scaling_residual is not None:
            summ["scaling_residual"] = self.scaling_residual
        out.append(summ)
        return out

    def to_csv(self) -> str:
        return format_rows(self.rows())

    def to_json(self) -> dict:
        return _jsonable({
            "check": self.check, "params": self.params, "hypothesis": self.hypothesis,
            "flags": self.flags, "sup_ratio": self.sup_ratio,
            "scaling_residual": self.scaling_residual, "samples": len(self.samples),
        })


def run_samples(func, items, workers: int = 1) -> list:
    """Map func over items, in parallel when workers > 1; order is preserved."""
    items = list(items)
    if workers <= 1 or len(items) < 2:
        return [func(x) for x in items]
    with ThreadPoolExecutor(max_workers=workers) as ex:
        return list(ex.map(func, items))


# --- profiles and quadrature ---------------------------------------------------------

def _dual(p: float) -> float:
    if p == 1:
        return math.inf
    if math.isinf(p):
        return 1.0
    return p / (p - 1)


def _inv(p: float) -> float:
    return 0.0 if math.isinf(p) else 1.0 / p


def _as_profile(x, n: int | None = None):
    """(callable, dimension) for a profile, a RadialField or a bare callable."""
    if isinstance(x, RadialField):
        return field_interpolant(x), x.grid.dimension
    if callable(x):
        d = getattr(x, "dimension", n)
        if d is None:
            raise ValueError("a bare callable profile needs the dimension n")
        return x, d
    raise TypeError(f"cannot use {type(x).__name__} as a radial profile")


def _many(x) -> list:
    return list(x) if isinstance(x, (list, tuple)) else [x]


@lru_cache(maxsize=8)
def radial_rule(lo: float = RULE_LO, hi: float = RULE_HI, per_decade: int = 16):
    r, w = log_panel_rule(lo, hi, per_decade)
    r.flags.writeable = False
    w.flags.writeable = False
    return r, w


def _lp_profile(func, n: int, p: float, gamma: float = 0.0) -> float:
    """|| |x|^gamma f ||_p on the absolute rule."""
    r, w = radial_rule()
    v = np.abs(func(r))
    if math.isinf(p):
        return float(np.max(r**gamma * v))
    e = gamma * p + n
    if e <= 0:
        raise HypothesisError(f"|x|^{gamma * p:g} is not locally integrable in dimension {n}")
    tot = np.sum(w * r ** (e - 1) * v**p)
    tot += v[0] ** p * r[0] ** e / e
    return float(surface_area(n) * tot) ** (1 / p)


def _check_scaling(lhs: float, rhs: float, what: str) -> None:
    if abs(lhs - rhs) > SCALING_TOL * max(1.0, abs(lhs), abs(rhs)):
        raise HypothesisError(f"scaling condition fails: {what} ({lhs:g} != {rhs:g})")


# --- bilinear form estimate ------------------------------------------------------------

def bilinear_hypotheses(n: int, p: float, q: float, alpha: float, beta: float, regime: str) -> dict:
    if n < 1:
        raise HypothesisError("n >= 1 is required")
    for name, v in (("p", p), ("q", q)):
        if not 1 <= v <= math.inf:
            raise HypothesisError(f"1 <= {name} <= inf is required, got {name}={v}")
    if _inv(p) + _inv(q) < 1:
        raise HypothesisError(f"1/p + 1/q >= 1 is required, got {_inv(p) + _inv(q):g}")
    np_, nq = n * (1 - _inv(p)), n * (1 - _inv(q))
    _check_scaling(alpha + beta, -np_ - nq, "alpha + beta = -n/p' - n/q'")
    if regime == "x_small":
        if not alpha > -np_:
            raise HypothesisError(f"regime x_small needs alpha > -n/p' = {-np_:g}, got {alpha:g}")
    elif regime == "y_small":
        if not alpha < -np_:
            raise HypothesisError(f"regime y_small needs alpha < -n/p' = {-np_:g}, got {alpha:g}")
    else:
        raise ValueError(f"unknown regime {regime!r}")
    return {"n": n, "p": p, "q": q, "alpha": alpha, "beta": beta, "regime": regime}


def _cumulative(func, exponent: float, t: np.ndarray, per_decade: int = 8) -> np.ndarray:
    """int_0^t r^(exponent-1) |func(r)| dr for each t, by r = t u with log panels in u."""
    u, wu = log_panel_rule(1e-16, 1.0, per_decade)
    vals = np.abs(func(np.outer(t, u)))
    body = np.sum(wu * u ** (exponent - 1) * vals, axis=1)
    head = np.abs(func(t * 1e-16)) * 1e-16**exponent / exponent
    return t**exponent * (body + head)


def bilinear_lhs(f, g, n: int, alpha: float, beta: float, regime: str = "x_small",
                 cutoff: float = 1.0) -> float:
    """int int over {|x| <= C|y|} (or {|y| <= C|x|}) of |x|^alpha |y|^beta |f(x)| |g(y)|."""
    r, w = radial_rule()
    om = surface_area(n)
    if regime == "x_small":
        outer, oe, inner, ie = g, beta, f, alpha
    else:
        outer, oe, inner, ie = f, alpha, g, beta
    if ie + n <= 0:
        raise HypothesisError("the inner power weight is not integrable at the origin")
    F = _cumulative(inner, ie + n, cutoff * r)
    return float(om**2 * np.sum(w * r ** (oe + n - 1) * np.abs(outer(r)) * F))


def check_bilinear(f, g, p: float, q: float, alpha: float, beta: float,
                   regime: str = "x_small", cutoff: float = 1.0, n: int | None = None,
                   orbit=None, workers: int = 1) -> RatioReport:
    """Ratio of the restricted bilinear form to ||f||_p ||g||_q."""
    fs, gs = _many(f), _many(g)
    if len(fs) != len(gs):
        raise ValueError("f and g must have the same number of samples")
    n = _as_profile(fs[0], n)[1]
    hyp = bilinear_hypotheses(n, p, q, alpha, beta, regime)
    rep = RatioReport("bilinear", dict(hyp, cutoff=cutoff), hypothesis=hyp)

    def one(pair):
        (fc, _), (gc, _) = _as_profile(pair[0], n), _as_profile(pair[1], n)
        lhs = bilinear_lhs(fc, gc, n, alpha, beta, regime, cutoff)
        return lhs, _lp_profile(fc, n, p) * _lp_profile(gc, n, q)

    for lhs, rhs in run_samples(one, zip(fs, gs), workers):
        rep.add(lhs, rhs)
    if orbit is not None:
        rep.orbit_residuals(orbit)
    return rep


# --- Hardy-Littlewood-Sobolev ----------------------------------------------------------

def hls_hypotheses(n: int, p: float, q: float, s: float, alpha: float, beta: float) -> dict:
    """Checks every hypothesis; returns metadata including the boundary equalities."""
    if n < 1:
        raise HypothesisError("n >= 1 is required")
    if not 0 < s < n:
        raise HypothesisError(f"0 < s < n is required, got s={s:g}")
    for name, v in (("p", p), ("q", q)):
        if not 1 <= v <= math.inf:
            raise HypothesisError(f"1 <= {name} <= inf is required, got {name}={v}")
    np_, nq = n * (1 - _inv(p)), n * (1 - _inv(q))
    if not alpha > -np_:
        raise HypothesisError(f"alpha > -n/p' = {-np_:g} is required, got {alpha:g}")
    if not beta > -nq:
        raise HypothesisError(f"beta > -n/q' = {-nq:g} is required, got {beta:g}")
    tot = _inv(p) + _inv(q)
    if not 1 - 1e-12 <= tot <= 1 + s + 1e-12:
        raise HypothesisError(f"1 <= 1/p + 1/q <= 1 + s is required, got {tot:g}")
    _check_scaling(alpha + beta - n + s, -np_ - nq, "alpha + beta - n + s = -n/p' - n/q'")
    eq = [name for name, hit in (("p=1", p == 1), ("p=inf", math.isinf(p)), ("q=1", q == 1),
                                 ("q=inf", math.isinf(q)),
                                 ("1/p+1/q=1+s", abs(tot - 1 - s) < 1e-12)) if hit]
    if len(eq) > 1:
        raise HypothesisError(f"at most one boundary equality may hold, got {', '.join(eq)}")
    return {"n": n, "p": p, "q": q, "s": s, "alpha": alpha, "beta": beta,
            "boundary": eq[0] if eq else None}


def hls_breakpoints(per_octave: int = 4, lo: float = RULE_LO, hi: float = 1e3) -> np.ndarray:
    k = int(math.ceil(per_octave * math.log2(hi / lo)))
    return np.concatenate([[0.0], lo * 2.0 ** (np.arange(k + 1) / per_octave)])


@lru_cache(maxsize=4)
def _hls_rule(n: int, s: float, refined: bool = False):
    per_decade, per_octave, order = (12, 8, 16) if refined else (8, 4, 12)
    r, w = log_panel_rule(1e-6, 1e3, per_decade)
    conv = RadialConvolution(n, (n - s) / 2, r, hls_breakpoints(per_octave), order=order)
    return r, w, conv


def hls_lhs(f, g, n: int, s: float, alpha: float, beta: float, refined: bool = False) -> float:
    """int int |x|^alpha |y|^beta |x - y|^(s - n) |f(x)| |g(y)| dx dy for radial f, g.

    The angular integral is done in closed form (the sphere kernel), the
    remaining two radial integrals by quadrature graded toward r = s.
    """
    r, w, conv = _hls_rule(n, s, refined)
    h = conv(lambda y: np.abs(g(y)) * np.where(y > 0, y, 1.0) ** beta)
    return float(surface_area(n) * np.sum(w * r ** (alpha + n - 1) * np.abs(f(r)) * h))


def check_hls(f, g, p: float, q: float, s: float, alpha: float = 0.0, beta: float = 0.0,
              n: int | None = None, orbit=None, self_check: bool = True,
              workers: int = 1) -> RatioReport:
    fs, gs = _many(f), _many(g)
    if len(fs) != len(gs):
        raise ValueError("f and g must have the same number of samples")
    n = _as_profile(fs[0], n)[1]
    hyp = hls_hypotheses(n, p, q, s, alpha, beta)
    rep = RatioReport("hls", {k: v for k, v in hyp.items() if k != "boundary"}, hypothesis=hyp)
    if hyp["boundary"]:
        rep.flags["boundary_case"] = hyp["boundary"]

    def one(pair):
        fc, gc = _as_profile(pair[0], n)[0], _as_profile(pair[1], n)[0]
        lhs = hls_lhs(fc, gc, n, s, alpha, beta)
        change = None
        if self_check and lhs > 0:
            change = abs(hls_lhs(fc, gc, n, s, alpha, beta, refined=True) - lhs) / lhs
        return lhs, _lp_profile(fc, n, p) * _lp_profile(gc, n, q), change

    worst = 0.0
    for lhs, rhs, change in run_samples(one, zip(fs, gs), workers):
        rep.add(lhs, rhs, refinement_change=change)
        worst = max(worst, change or 0.0)
    rep.flags["refinement_change"] = worst
    rep.flags["refinement_failed"] = worst > SELF_CONVERGENCE_TOL
    if orbit is not None:
        rep.orbit_residuals(orbit)
    return rep


# --- radial Sobolev ----------------------------------------------------------------------

def sobolev_preset(name: str, n: int, eps: float = DEFAULT_EPSILON) -> dict:
    """Named parameter tuples (s, alpha, beta, p, q) for the radial embeddings.

    "first":  || u ||_{2n/(n-2)} <~ || |x|^-(1+eps)/2 |grad|^(1-eps)/2 u ||_2
    "dual":   || |x|^(1+eps)/2 |grad|^-(1-eps)/2 G ||_2 <~ || G ||_{2n/(n+2)}
    """
    s = (1 - eps) / 2
    if name == "first":
        return {"s": s, "alpha": (1 + eps) / 2, "beta": 0.0, "p": 2.0, "q": 2 * n / (n + 2)}
    if name == "dual":
        return {"s": s, "alpha": 0.0, "beta": (1 + eps) / 2, "p": 2 * n / (n + 2), "q": 2.0}
    raise ValueError(f"unknown preset {name!r}; expected 'first' or 'dual'")


def _frac_weighted_lp(u: GaussianMixture, s: float, p: float, gamma: float) -> float:
    """|| |x|^gamma |grad|^s u ||_p from the closed form, with the algebraic tail."""
    n = u.dimension
    r, w = radial_rule()
    v = np.abs(u.frac_derivative(s, r))
    if math.isinf(p):
        return float(np.max(r**gamma * v))
    e = gamma * p + n
    tot = np.sum(w * r ** (e - 1) * v**p) + v[0] ** p * r[0] ** e / e
    A, k = u.frac_derivative_tail(s)
    if abs(A) > 0:
        te = e + k * p
        if te >= 0:
            return math.inf
        tot += abs(A) ** p * r[-1] ** te / (-te)
    return float(surface_area(n) * tot) ** (1 / p)


def radial_sobolev_sides(u, s: float, alpha: float, beta: float, p: float, q: float,
                         potential: bool = False) -> tuple[float, float]:
    """(|| |x|^beta u ||_{q'}, || |x|^-alpha |grad|^s u ||_p).

    With potential=True the argument is G and u = |grad|^-s G (q' = 2 only).
    """
    qd = _dual(q)
    if potential:
        if qd != 2:
            raise ValueError("the potential form is implemented for q' = 2")
        g, n = _as_profile(u)
        scale, extent = (1.0, u.grid.max_radius) if isinstance(u, RadialField) else (getattr(u, "scale", 1.0), 40.0)
        lhs = math.sqrt(float(riesz_weighted_sq([g], n, s, beta, scale, extent)[0]))
        rhs = _lp_profile(g, n, p, -alpha)
        return lhs, rhs
    if isinstance(u, RadialField):
        return weighted_norm(u, qd, beta), weighted_norm(fractional_derivative(u, s), p, -alpha)
    if isinstance(u, GaussianMixture):
        return _lp_profile(u, u.dimension, qd, beta), _frac_weighted_lp(u, s, p, -alpha)
    raise TypeError("radial Sobolev needs a RadialField or a GaussianMixture (closed-form |grad|^s)")


def check_radial_sobolev(u, s: float | None = None, alpha: float | None = None,
                         beta: float | None = None, p: float | None = None,
                         q: float | None = None, preset: str | None = None,
                         eps: float = DEFAULT_EPSILON, orbit=None, workers: int = 1) -> RatioReport:
    us = _many(u)
    n = us[0].grid.dimension if isinstance(us[0], RadialField) else us[0].dimension
    prm = {"s": s, "alpha": alpha, "beta": beta, "p": p, "q": q}
    if preset is not None:
        prm = dict(sobolev_preset(preset, n, eps), **{k: v for k, v in prm.items() if v is not None})
    if any(v is None for v in prm.values()):
        raise ValueError("s, alpha, beta, p, q are required without a preset")
    hyp = hls_hypotheses(n, prm["p"], prm["q"], prm["s"], prm["alpha"], prm["beta"])
    rep = RatioReport("radial_sobolev", dict(prm, n=n, preset=preset or ""), hypothesis=hyp)
    pot = preset == "dual"
    for lhs, rhs in run_samples(lambda x: radial_sobolev_sides(x, potential=pot, **prm), us, workers):
        rep.add(lhs, rhs)
    if orbit is not None:
        rep.orbit_residuals(orbit)
    return rep


# --- uncertainty principle ----------------------------------------------------------------

def uncertainty_grid(n: int = 3) -> RadialGrid:
    """Large enough for P_{<N} of unit-scale data down to N = 2^-4."""
    return build_grid(n, 400.0, 1280)


def check_uncertainty(f: RadialField, alpha: float, p: float, N) -> RatioReport:
    """|| |x|^-alpha P_{<N} f ||_p / (<N>^alpha || <x>^-alpha f ||_p) over N.

    Each sample row also carries the normalised form
    || |N x|^-alpha P_{<N} f ||_p / || <N x>^-alpha f ||_p.
    """
    n = f.grid.dimension
    if not 1 < p < math.inf:
        raise HypothesisError(f"1 < p < inf is required, got p={p}")
    if not 0 < alpha < n / p:
        raise HypothesisError(f"0 < alpha < n/p = {n / p:g} is required, got alpha={alpha}")
    Ns = [float(x) for x in np.atleast_1d(N)]
    if any(x <= 0 for x in Ns):
        raise HypothesisError("N > 0 is required")
    rep = RatioReport("uncertainty", {"n": n, "alpha": alpha, "p": p})
    r = f.grid.nodes
    mu = f.grid.measure()
    base = float(np.sum(mu * (1 + r**2) ** (-alpha * p / 2) * np.abs(f.values) ** p)) ** (1 / p)
    for Nv in Ns:
        lo = apply_multiplier(f, dyadic_lt(Nv))
        lhs = weighted_norm(lo, p, -alpha)
        bracket = math.sqrt(1 + Nv**2) ** alpha
        scaled = float(np.sum(mu * (1 + (Nv * r) ** 2) ** (-alpha * p / 2) * np.abs(f.values) ** p)) ** (1 / p)
        norm_ratio = Nv**-alpha * lhs / scaled if scaled > 0 else 0.0
        rep.add(lhs, bracket * base, N=Nv, normalized_ratio=norm_ratio)
    return rep


def top_decade_slope(report: RatioReport) -> float:
    """Least-squares slope of log ratio against log N over the top decade of N."""
    N = np.array([s["N"] for s in report.samples])
    R = report.ratios
    sel = N >= N.max() / 10
    if sel.sum() < 2:
        return 0.0
    return float(np.polyfit(np.log(N[sel]), np.log(R[sel]), 1)[0])


# --- weighted Strichartz -------------------------------------------------------------------

def strichartz_grid(n: int = 3) -> RadialGrid:
    """Wide enough to hold unit-scale data freely dispersed up to t = 100."""
    return build_grid(n, 1200.0, 2300)


def strichartz_times(T: float, linear: int = 41, per_decade: int = 60) -> np.ndarray:
    """Linear on [0, min(T, 1)], geometric beyond."""
    t = np.linspace(0.0, min(T, 1.0), linear)
    if T > 1:
        k = int(math.ceil(per_decade * math.log10(T)))
        t = np.concatenate([t, np.geomspace(1.0, T, k + 1)[1:]])
    return t


def sin2_duhamel(rho: np.ndarray, t: float, T0: float) -> np.ndarray:
    """int_0^min(t,T0) exp(-i (t - tau) rho^2) sin^2(pi tau / T0) dtau."""
    w = rho**2
    k = 2 * math.pi / T0
    tau = min(t, T0)

    def E(x):
        # (exp(i x tau) - 1) / (i x), with its limit tau at x = 0
        small = np.abs(x * tau) < 1e-8
        xs = np.where(small, 1.0, x)
        return np.where(small, tau + 0.5j * x * tau**2, np.expm1(1j * xs * tau) / (1j * xs))

    inner = 0.5 * E(w) - 0.25 * (E(w + k) + E(w - k))
    return np.exp(-1j * t * w) * inner


def forced_trajectory(g: RadialField, T0: float, times) -> tuple[Trajectory, Trajectory]:
    """(u, G) for i u_t + Lap u = G, u(0) = 0, G = sin^2(pi t / T0) g on [0, T0]."""
    plan = plan_for(g.grid)
    gh = plan.forward(g.values)
    times = np.asarray(times, dtype=float)
    U, Gv = [], []
    for t in times:
        U.append(plan.inverse(-1j * gh * sin2_duhamel(plan.rho, t, T0)))
        c = math.sin(math.pi * t / T0) ** 2 if t <= T0 else 0.0
        Gv.append(c * g.values)
    prov = {"forcing": "sin2", "T0": T0}
    return (Trajectory.from_values(g.grid, times, np.array(U), prov),
            Trajectory.from_values(g.grid, times, np.array(Gv), prov))


def check_weighted_strichartz(u0=None, G=None, interval=(1.0, 10.0, 100.0),
                              eps: float = DEFAULT_EPSILON, T0: float = 1.0,
                              times=None) -> RatioReport:
    """s_norm(u) / (||u(0)||_2 + n_norm(G)).

    Free case (G None): u0 is a sequence-or-single RadialField, one sample per
    (u0, T) with T from ``interval``.  Forced case: u(0) = 0 and G is a
    sequence-or-single spatial profile switched on by sin^2(pi t / T0); one
    sample per profile over [0, interval[0]].
    """
    rep = RatioReport("weighted_strichartz", {"eps": eps, "forced": G is not None})
    if G is None:
        for k, f in enumerate(_many(u0)):
            m0 = math.sqrt(float(weighted_power_sum(f.grid, f.values, 2.0, 0.0)))
            for T in np.atleast_1d(interval):
                ts = strichartz_times(float(T)) if times is None else np.asarray(times)
                if m0 == 0:
                    rep.add(0.0, 0.0, profile=k, T=float(T))
                    continue
                traj = free_trajectory(f, ts)
                rep.add(s_norm_terms(traj, eps).total, m0, profile=k, T=float(T))
        return rep
    T = float(np.atleast_1d(interval)[0])
    ts = np.linspace(0.0, T, 201) if times is None else np.asarray(times)
    for k, g in enumerate(_many(G)):
        u, Gt = forced_trajectory(g, T0, ts)
        lhs = s_norm_terms(u, eps).total
        rep.add(lhs, n_norm(Gt, eps), profile=k, T=T)
    rep.params.update(T0=T0)
    return rep


def saturation_growth(report: RatioReport, t_lo: float = 10.0, t_hi: float = 100.0) -> float:
    """Largest relative ratio growth from T = t_lo to T = t_hi over profiles."""
    by = {}
    for srow in report.samples:
        by.setdefault(srow["profile"], {})[srow["T"]] = srow["ratio"]
    worst = 0.0
    for d in by.values():
        if t_lo in d and t_hi in d and d[t_lo] > 0:
            worst = max(worst, d[t_hi] / d[t_lo] - 1)
    return worst


# --- nonlinear estimates --------------------------------------------------------------------

VARIANTS = ("basic", "refined_1", "refined_2")


def _linf_power(traj: Trajectory, power: float) -> float:
    spec = plan_for(traj.grid).forward(traj.values)
    return float(np.sqrt(np.max(_spectral_sq(traj.grid, spec, power))))


def nonlinear_sides(u: Trajectory, v: Trajectory, variant: str,
                    eps: float = DEFAULT_EPSILON) -> tuple[float, float]:
    """(LHS, RHS) of the nonlinear estimate with O(|u|^(4/n)|v|) = |u|^(4/n) v.

    basic:     || O ||_N  vs  ||u||_{L^inf L^2}^(4/n) ||v||_S
    refined_1: || |grad|^((1-eps)/2) O ||_N
               vs || |grad|^(n(1-eps)/4) u ||_{L^inf L^2}^(4/n) || |grad|^-((1-eps)/2) v ||_S
    refined_2: same LHS
               vs || |grad|^(3(1-eps)/4) u ||_{L^inf L^2}^(4/n) || |grad|^((1-eps)(1/2-3/n)) v ||_S
    """
    if variant not in VARIANTS:
        raise ValueError(f"unknown variant {variant!r}; expected one of {VARIANTS}")
    if u.grid != v.grid or not np.array_equal(u.times, v.times):
        raise ValueError("u and v must share grid and recorded times")
    n = u.grid.dimension
    prod = np.abs(u.values) ** (4 / n) * v.values
    O = Trajectory.from_values(u.grid, u.times, prod)
    if variant == "basic":
        lhs = n_norm(O, eps, method="riesz") if np.any(prod) else 0.0
        rhs = _linf_power(u, 0.0) ** (4 / n) * s_norm_terms(v, eps).total
        return lhs, rhs
    # |grad|^((1-eps)/2) cancels the negative power inside the N-norm exactly
    lhs = math.sqrt(max(time_integral(O.times, weighted_power_sum(O.grid, prod, 2.0, (1 + eps) / 2)), 0.0))
    if variant == "refined_1":
        pu, pv = n * (1 - eps) / 4, -(1 - eps) / 2
    else:
        pu, pv = 3 * (1 - eps) / 4, (1 - eps) * (0.5 - 3 / n)
    rhs = _linf_power(u, pu) ** (4 / n) * s_norm_terms(v, eps, power=pv).total
    return lhs, rhs


def check_nonlinear_estimates(u_traj, v_traj, variant: str = "basic",
                              eps: float = DEFAULT_EPSILON, workers: int = 1, **tags) -> RatioReport:
    us, vs = _many(u_traj), _many(v_traj)
    if len(us) != len(vs):
        raise ValueError("u and v must have the same number of samples")
    rep = RatioReport("nonlinear_" + variant, {"variant": variant, "eps": eps,
                                               "n": us[0].grid.dimension})
    for lhs, rhs in run_samples(lambda uv: nonlinear_sides(uv[0], uv[1], variant, eps), zip(us, vs), workers):
        rep.add(lhs, rhs, **tags)
    return rep


# --- weighted multiplier bounds ---------------------------------------------------------------

def check_weighted_multiplier(f, symbol: MultiplierSymbol, alpha: float, p: float) -> RatioReport:
    """|| |x|^alpha T f ||_p / || |x|^alpha f ||_p for a Hormander-Mikhlin symbol."""
    fs = _many(f)
    n = fs[0].grid.dimension
    if not 1 < p < math.inf:
        raise HypothesisError(f"1 < p < inf is required, got p={p}")
    if not -n / p < alpha < n - n / p:
        raise HypothesisError(f"-n/p < alpha < n - n/p is required, got alpha={alpha}")
    if not symbol.regularity_tag:
        raise HypothesisError(f"symbol {symbol.kind}{symbol.params} is not tagged as a Hormander-Mikhlin multiplier")
    rep = RatioReport("weighted_multiplier", {"n": n, "alpha": alpha, "p": p, "symbol": f"{symbol.kind}{symbol.params}"})
    for x in fs:
        rep.add(weighted_norm(apply_multiplier(x, symbol), p, alpha), weighted_norm(x, p, alpha))
    return rep
