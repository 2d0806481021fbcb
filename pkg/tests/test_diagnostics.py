import math

import numpy as np
import pytest
from scipy.special import gammainccinv

from radnls import build_grid
from radnls.diagnostics import (
    NormTable,
    commutator,
    concentration_profile,
    energy,
    frequency_scale,
    high_freq_s_decay,
    mass,
    n_norm,
    reference_epsilon,
    q_functional,
    s_norm,
    s_norm_terms,
    spacetime_norm,
    time_integral,
    weighted_norm,
    weighted_power_sum,
)
from radnls.profiles import GaussianMixture
from radnls.solver import Trajectory, free_trajectory
from radnls.spectral import SpectralPreconditionError, apply_multiplier, dyadic_ge

EPS = 0.01
# closed forms for f = e^{-r^2/2} in n = 3, eps = 0.01 (mpmath, 25 digits)
WEIGHTED_S_TERM = 2.81156787265705838965129060472   # || |x|^-(1+eps)/2 |grad|^(1-eps)/2 f ||_2
N_NORM_GAUSS = 3.046186267300733290984752           # || |x|^(1+eps)/2 |grad|^-(1-eps)/2 f ||_2
HARDY_TERM = 2.51027391916957229017693               # || |x|^-(1+eps)/2 f ||_2
FREQ_SCALE = 1.08765203175816719156881               # median of |xi| under |f^|^2
POTENTIAL = 0.7763774975261895779382591              # (3/10) int |f|^{10/3}
Q_AT_64 = 0.09397742366344121236163809               # int |grad f|^2 / |64 x|^(1+eps)


def test_reference_epsilon():
    assert reference_epsilon(3) == 3.0**-10


def test_mass_and_energy(gauss3):
    assert mass(gauss3) == pytest.approx(math.pi**1.5, rel=1e-14)
    e = energy(gauss3)
    assert e.kinetic == pytest.approx(0.75 * math.pi**1.5, rel=1e-13)
    assert e.potential == pytest.approx(POTENTIAL, rel=1e-12)
    assert energy(gauss3, nonlinear=False).potential == 0.0


def test_weighted_norm_non_integer_power(gauss3):
    # the |x|^-(1+eps) singularity sits below the first node; corrected to ~3e-8
    assert weighted_norm(gauss3, 2.0, -(1 + EPS) / 2) == pytest.approx(HARDY_TERM, rel=1e-7)


def test_weighted_power_sum_rejects_non_integrable(grid3, gauss3):
    with pytest.raises(ValueError):
        weighted_power_sum(grid3, gauss3.values, 2.0, -1.6)


def test_time_integral_single_state():
    assert time_integral(np.array([0.3]), np.array([2.5])) == 2.5
    assert time_integral(np.array([0.0, 1.0]), np.array([1.0, 3.0])) == 2.0


def test_s_norm_of_a_slice(gauss3):
    terms = s_norm_terms(gauss3, EPS)
    # the algebraic tail of |grad|^s f aliases through R = 20 at the 1e-5 level
    assert terms.weighted == pytest.approx(WEIGHTED_S_TERM, rel=5e-5)
    assert terms.mass_term == pytest.approx(math.pi**0.75, rel=1e-12)
    assert s_norm(gauss3, EPS) == pytest.approx(terms.total)


def test_s_norm_uniform_route_agrees(gauss3):
    g = build_grid(3, 20.0, 2048, "uniform")
    slow = s_norm(GaussianMixture.single(3).sample(g), EPS)
    assert abs(slow - s_norm(gauss3, EPS)) / slow <= 1e-4


def test_n_norm_riesz_closed_form(gauss3):
    assert n_norm(gauss3, EPS, method="riesz") == pytest.approx(N_NORM_GAUSS, rel=1e-6)


def test_n_norm_spectral_refuses_low_frequency(gauss3):
    with pytest.raises(SpectralPreconditionError, match="t=0"):
        n_norm(gauss3, EPS)


@pytest.mark.slow
def test_n_norm_routes_agree_on_high_frequency_forcing():
    g = build_grid(3, 80.0, 2048)
    G = apply_multiplier(GaussianMixture.single(3).sample(g), dyadic_ge(1.0))
    a, b = n_norm(G, EPS), n_norm(G, EPS, method="riesz")
    assert abs(a - b) / b <= 1e-4


def test_spacetime_norm_of_free_flow_l2_is_mass(gauss3):
    tr = free_trajectory(gauss3, np.linspace(0, 1, 5))
    # L^inf_t L^2_x
    assert spacetime_norm(tr, math.inf, 2) == pytest.approx(math.pi**0.75, rel=1e-10)
    # L^2_t L^2_x over [0, 1] is the mass
    assert spacetime_norm(tr, 2, 2) == pytest.approx(math.pi**0.75, rel=1e-10)


def test_frequency_scale(gauss3):
    assert frequency_scale(gauss3) == pytest.approx(FREQ_SCALE, rel=1e-9)


@pytest.mark.parametrize("lam", [0.5, 2.0])
def test_frequency_scale_dilates(grid3, lam):
    f = GaussianMixture.single(3).dilate(lam).sample(grid3)
    assert frequency_scale(f) == pytest.approx(FREQ_SCALE / lam, rel=1e-8)


def test_concentration_profile_closed_form(gauss3):
    etas = [0.1, 0.01, 0.001]
    prof = concentration_profile(gauss3, etas)
    # |f|^2 and (2 pi)^-3 |f^|^2 are the same radial law for e^{-r^2/2}
    r_eta = np.sqrt(gammainccinv(1.5, np.array(sorted(etas)) / math.pi**1.5))
    np.testing.assert_allclose(prof.C_of_eta, np.maximum(r_eta * FREQ_SCALE, r_eta / FREQ_SCALE), rtol=1e-7)
    assert prof.N_of_t[0] == pytest.approx(FREQ_SCALE, rel=1e-9)


def test_q_functional_high_n(gauss3):
    assert q_functional(gauss3, 64.0, EPS) == pytest.approx(Q_AT_64, rel=1e-6)


def test_commutator_vanishes_for_linear_maps(gauss3):
    c = commutator(gauss3, 1.0, F=lambda v: 2.0 * v)
    assert np.max(np.abs(c.values)) <= 1e-14


def test_s_decay_table(run1):
    table = high_freq_s_decay(run1, [1.0, 4.0, 16.0, 64.0], EPS)
    hi = table.values("s_norm_high")
    assert all(a >= b for a, b in zip(hi, hi[1:]))
    assert table.values("linf_l2_high")[-1] <= 1e-6
    assert {r["name"] for r in table.rows()} == {"s_norm_high", "linf_l2_high", "s_norm_low_gradient"}
    assert table.to_csv().splitlines()[0] == "name,N,value,tolerance"


@pytest.mark.parametrize("bad", [-1.0, float("nan"), float("inf")])
def test_norm_table_rejects(bad):
    with pytest.raises(ValueError):
        NormTable().add("x", bad)


def test_as_traj_type_error():
    with pytest.raises(TypeError):
        s_norm([1, 2, 3])


def test_trajectory_and_slice_agree(gauss3):
    tr = Trajectory(np.array([0.0]), (gauss3,))
    assert s_norm(tr, EPS) == s_norm(gauss3, EPS)
