"""Morawetz weight a(x) = <x> - eps <x>^(1-eps), its functional and production.

With A(r) = 1/<r> - eps(1-eps)/<r>^(1+eps) and
B(r) = -1/<r>^3 + eps(1-eps)(1+eps)/<r>^(3+eps) the Hessian is
a_jk = A delta_jk + B x_j x_k, so its eigenvalues are A (tangential, n-1 fold)
and a'' = A + B r^2 (radial), and Lap a = n A + B r^2.
"""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .grid import RadialField
from .report import DiagnosticsReport, INFO
from .solver import Trajectory, nonlinearity
from .spectral import gradient_radial, plan_for

FD_TOLERANCE = 0.01
FD_FLAG = 0.05


@dataclass(frozen=True)
class WeightEvaluation:
    r: np.ndarray
    a: np.ndarray
    a_prime: np.ndarray
    a_double_prime: np.ndarray
    delta_a: np.ndarray
    neg_bilap_a: np.ndarray
    tangential_eigenvalue: np.ndarray
    radial_coefficient: np.ndarray


def weight_eval(r, eps: float, n: int) -> WeightEvaluation:
    if not 0 < eps < 1:
        raise ValueError(f"eps must lie in (0, 1), got {eps}")
    r = np.asarray(r, dtype=float)
    if np.any(r < 0):
        raise ValueError("r must be non-negative")
    b = np.sqrt(1.0 + r**2)
    k = eps * (1 - eps)
    k3 = k * (1 + eps)
    a = b - eps * b ** (1 - eps)
    ap = r / b - k * r / b ** (1 + eps)
    A = 1 / b - k / b ** (1 + eps)
    B = -1 / b**3 + k3 / b ** (3 + eps)
    app = A + B * r**2
    lap = n * A + B * r**2
    nb = (
        (n - 1) * (n - 3) / b**3
        - k3 * (n - 1 - eps) * (n - 3 - eps) / b ** (3 + eps)
        + 6 * (n - 3) / b**5
        - 2 * k3 * (3 + eps) * (n - 3 - eps) / b ** (5 + eps)
        + 15 / b**7
        - k3 * (3 + eps) * (5 + eps) / b ** (7 + eps)
    )
    return WeightEvaluation(r, a, ap, app, lap, nb, A, B)


def default_r_grid() -> np.ndarray:
    return np.concatenate([[0.0], np.logspace(-3, 3, 601)])


def verify_pointwise_bounds(eps: float, n: int, r_grid=None, floor: float = 0.0) -> DiagnosticsReport:
    """Normalised lower bounds of -Lap^2 a, the Hessian and Lap a on r_grid.

    Reports the three minima; a quantity passes when it exceeds ``floor`` at
    every node.  Failures name the first violating radius.
    """
    r = default_r_grid() if r_grid is None else np.asarray(r_grid, dtype=float)
    w = weight_eval(r, eps, n)
    b = np.sqrt(1 + r**2)
    quantities = {
        "neg_bilap": w.neg_bilap_a * b ** (3 + eps),
        "hessian": np.minimum(w.a_double_prime, w.tangential_eigenvalue) * b ** (1 + eps),
        "delta_a": w.delta_a * b ** (1 + eps),
    }
    bounds = {
        "neg_bilap": "-Lap^2 a <r>^(3+eps) > floor",
        "hessian": "min(a'', A) <r>^(1+eps) > floor",
        "delta_a": "Lap a <r>^(1+eps) > floor",
    }
    rep = DiagnosticsReport("verify-weights", {"n": n, "eps": eps, "floor": floor,
                                               "r_min": float(r.min()), "r_max": float(r.max()),
                                               "nodes": len(r)})
    for name, q in quantities.items():
        i = int(np.argmin(q))
        bad = np.nonzero(~(q > floor))[0]
        first = float(r[bad[0]]) if len(bad) else None
        rep.check(len(bad) == 0, bounds[name], float(q[i]), floor, n=n, eps=eps,
                  quantity=name, r_at_min=float(r[i]), first_violation_r=first)
        rep.summary[f"min_{name}"] = float(q[i])
    return rep


# --- functional and production -------------------------------------------------

def _profile(f: RadialField, eps: float) -> WeightEvaluation:
    return weight_eval(f.grid.nodes, eps, f.grid.dimension)


def morawetz_functional(f: RadialField, eps: float) -> float:
    """M_a = 2 int a'(r) Im(conj(f) d_r f) dx."""
    w = _profile(f, eps)
    df = gradient_radial(f).values
    return float(2 * np.sum(f.grid.measure() * w.a_prime * np.imag(np.conj(f.values) * df)))


@dataclass(frozen=True)
class ProductionBreakdown:
    bilap_term: float
    hessian_term: float
    nonlinear_term: float
    forcing_term: float
    total: float
    forcing_majorant: float = 0.0

    @classmethod
    def from_terms(cls, bilap, hessian, nonlinear, forcing=0.0, majorant=0.0):
        return cls(bilap, hessian, nonlinear, forcing, bilap + hessian + nonlinear + forcing, majorant)


def morawetz_production(f: RadialField, eps: float, G: RadialField | None = None,
                        nonlinear: bool = True) -> ProductionBreakdown:
    """Terms of d/dt M_a for i phi_t + Lap phi = F(phi) + G.

    forcing_term is the exact 2 int grad a . {G, phi}_p, written after one
    integration by parts as 4 int a' Re(G conj(d_r phi)) + 2 int Lap a Re(phi conj(G));
    forcing_majorant is int |G| |grad phi| + int |G| |phi| / <x>.
    """
    n = f.grid.dimension
    w = _profile(f, eps)
    mu = f.grid.measure()
    amp2 = f.abs2()
    df = gradient_radial(f).values
    bil = float(np.sum(mu * w.neg_bilap_a * amp2))
    hes = float(4 * np.sum(mu * w.a_double_prime * np.abs(df) ** 2))
    nl = 0.0
    if nonlinear:
        nl = float(4 / (n + 2) * np.sum(mu * w.delta_a * amp2 ** ((n + 2) / n)))
    forcing = majorant = 0.0
    if G is not None:
        g = G.values
        forcing = float(np.sum(mu * (4 * w.a_prime * np.real(g * np.conj(df))
                                     + 2 * w.delta_a * np.real(f.values * np.conj(g)))))
        b = np.sqrt(1 + f.grid.nodes**2)
        majorant = float(np.sum(mu * np.abs(g) * (np.abs(df) + np.sqrt(amp2) / b)))
    return ProductionBreakdown.from_terms(bil, hes, nl, forcing, majorant)


def bracket_identity(f: RadialField, eps: float) -> tuple[float, float]:
    """(2 int grad a . {F(f), f}_p,  4/(n+2) int Lap a |f|^(2(n+2)/n)).

    The left side is assembled from the bracket Re(F conj(f') - f conj(F'))
    with F' by the chain rule; the right side is the integrated identity.
    """
    n = f.grid.dimension
    w = _profile(f, eps)
    mu = f.grid.measure()
    u = f.values
    du = gradient_radial(f).values
    rho = f.abs2()
    F = nonlinearity(u, n)
    drho = 2 * np.real(np.conj(u) * du)
    with np.errstate(divide="ignore", invalid="ignore"):
        dF = np.where(rho > 0, (2.0 / n) * rho ** (2.0 / n - 1) * drho * u, 0.0) + rho ** (2.0 / n) * du
    bracket = np.real(F * np.conj(du) - u * np.conj(dF))
    lhs = float(2 * np.sum(mu * w.a_prime * bracket))
    rhs = float(4 / (n + 2) * np.sum(mu * w.delta_a * rho ** ((n + 2) / n)))
    return lhs, rhs


def _norm_grad(f: RadialField) -> tuple[float, float]:
    mu = f.grid.measure()
    df = gradient_radial(f).values
    return float(np.sqrt(np.sum(mu * f.abs2()))), float(np.sqrt(np.sum(mu * np.abs(df) ** 2)))


def morawetz_constant(eps: float, n: int, r_grid=None) -> float:
    """C with LHS <= C sup_t ||phi||_2 ||grad phi||_2 when G = 0.

    From d/dt M_a >= c (integrand of LHS) with c the smallest normalised
    floor, and |M_a| <= 2 ||phi|| ||grad phi||: C = 4 / c.  Returns inf when
    a floor is not positive.
    """
    r = default_r_grid() if r_grid is None else np.asarray(r_grid, dtype=float)
    w = weight_eval(r, eps, n)
    b = np.sqrt(1 + r**2)
    c = min(
        float(np.min(w.neg_bilap_a * b ** (3 + eps))),
        4 * float(np.min(np.minimum(w.a_double_prime, w.tangential_eigenvalue) * b ** (1 + eps))),
        4 / (n + 2) * float(np.min(w.delta_a * b)),
    )
    return 4.0 / c if c > 0 else math.inf


def verify_monotonicity(traj: Trajectory, eps: float, G_traj: Trajectory | None = None,
                        fd_tolerance: float = FD_TOLERANCE,
                        nonlinear: bool | None = None) -> DiagnosticsReport:
    """Centred differences of M_a against the production formula, and the
    time-integrated Morawetz bound."""
    if nonlinear is None:
        nonlinear = bool(traj.provenance.get("nonlinear", True))
    grid = traj.grid
    n = grid.dimension
    times = traj.times
    rep = DiagnosticsReport("verify-morawetz", {"eps": eps, "n": n, "fd_tolerance": fd_tolerance,
                                                "states": len(traj), "forced": G_traj is not None})
    M, prods, sup_rhs = [], [], 0.0
    w = weight_eval(grid.nodes, eps, n)
    b = np.sqrt(1 + grid.nodes**2)
    mu = grid.measure()
    lhs_density = []
    for i, f in enumerate(traj.fields):
        G = G_traj.fields[i] if G_traj is not None else None
        M.append(morawetz_functional(f, eps))
        prods.append(morawetz_production(f, eps, G, nonlinear))
        m2, g2 = _norm_grad(f)
        sup_rhs = max(sup_rhs, m2 * g2)
        df = gradient_radial(f).values
        amp2 = f.abs2()
        lhs_density.append(float(np.sum(mu * (amp2 / b ** (3 + eps) + amp2 ** ((n + 2) / n) / b
                                              + np.abs(df) ** 2 / b ** (1 + eps)))))
    M = np.array(M)
    total = np.array([p.total for p in prods])
    fd_ok, coarse = True, False
    worst = 0.0
    for i in range(len(times)):
        p = prods[i]
        fd = resid = None
        if 0 < i < len(times) - 1:
            fd = (M[i + 1] - M[i - 1]) / (times[i + 1] - times[i - 1])
            scale = max(abs(p.total), 1e-300)
            resid = abs(fd - p.total) / scale
            worst = max(worst, resid)
            fd_ok &= resid <= fd_tolerance
            coarse |= resid > FD_FLAG
        rep.add(INFO, t=float(times[i]), M_a=float(M[i]), bilap_term=p.bilap_term,
                hessian_term=p.hessian_term, nonlinear_term=p.nonlinear_term,
                forcing_term=p.forcing_term, forcing_majorant=p.forcing_majorant,
                total=p.total, fd_derivative=fd, fd_residual=resid)
    if len(traj) == 1:
        lhs = 0.0
    else:
        lhs = float(np.trapezoid(lhs_density, times))
    C = morawetz_constant(eps, n)
    forcing_int = 0.0
    if G_traj is not None and len(traj) > 1:
        forcing_int = float(np.trapezoid([abs(p.forcing_term) for p in prods], times))
    rhs = 4 * sup_rhs + forcing_int
    rep.check(fd_ok, f"|fd - production| / |production| <= {fd_tolerance:g}", worst, fd_tolerance,
              check="fd_match")
    rep.check(lhs <= C * rhs / 4 + 1e-300 or lhs == 0, "LHS <= C sup||phi|| ||grad phi|| (+ forcing)",
              lhs, C * rhs / 4, check="morawetz_bound")
    for i, f in enumerate(traj.fields):
        m2, g2 = _norm_grad(f)
        bound = 2 * m2 * g2
        if abs(M[i]) > bound * (1 + 1e-10) + 1e-300:
            rep.check(False, "|M_a| <= 2 ||phi|| ||grad phi||", abs(M[i]), bound, t=float(times[i]),
                      check="functional_bound")
    rep.summary.update({
        "lhs": lhs, "sup_mass_gradient": sup_rhs, "ratio": lhs / sup_rhs if sup_rhs > 0 else 0.0,
        "constant": C, "max_fd_residual": worst, "stride_too_coarse": coarse,
        "forcing_integral": forcing_int,
    })
    return rep


def frequency_localized(traj: Trajectory, N: float) -> tuple[Trajectory, Trajectory]:
    """(P_{<N} u, G) with G the nonlinear commutator, for the forced check."""
    from .diagnostics import commutator
    from .spectral import apply_multiplier, dyadic_lt

    lo = traj.map(lambda f: apply_multiplier(f, dyadic_lt(N)), localized_at=N)
    G = traj.map(lambda f: commutator(f, N), commutator_at=N)
    return lo, G
