import json
import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st
from scipy import integrate
from scipy.special import gamma, gammainc

from radnls import build_grid
from radnls.grid import surface_area
from radnls.inequality_lab import (
    HypothesisError,
    RatioReport,
    bilinear_hypotheses,
    check_bilinear,
    check_hls,
    check_nonlinear_estimates,
    check_radial_sobolev,
    check_uncertainty,
    check_weighted_multiplier,
    check_weighted_strichartz,
    forced_trajectory,
    hls_hypotheses,
    run_samples,
    saturation_growth,
    sin2_duhamel,
    sobolev_preset,
    strichartz_times,
    top_decade_slope,
    uncertainty_grid,
)
from radnls.profiles import GaussianMixture, RingBump
from radnls.solver import Trajectory, free_trajectory
from radnls.spectral import custom, dyadic_band, dyadic_lt, free_propagate

EPS = 0.01
# mpmath closed forms, 30 digits
BILINEAR_RATIO = 7.75633426330108633345963237332   # f = e^{-r^2/2}, g = e^{-r^2}, p=q=2, alpha=-1, beta=-2
HLS_RATIO = 6.64162205289117362493780312572        # widths 1 and 0.7, s=1, p=q=3/2
SOBOLEV_FIRST = 0.359797865391553782738313903926    # e^{-r^2/2}, eps = 0.01
DUAL_LHS = 3.046186267300733290984752


def gauss(w=1.0, a=1.0, n=3):
    return GaussianMixture.single(n, a, w)


# --- reports -------------------------------------------------------------------

def test_ratio_report_conventions():
    rep = RatioReport("x", {"p": 2})
    assert rep.add(0.0, 0.0)["ratio"] == 0.0
    assert rep.add(1.0, 4.0)["ratio"] == 0.25
    with pytest.raises(ValueError):
        rep.add(1.0, 0.0)
    with pytest.raises(ValueError):
        rep.add(float("nan"), 1.0)
    assert rep.sup_ratio == 0.25
    rows = rep.rows()
    assert rows[-1]["sample_id"] == "summary" and rows[-1]["ratio"] == 0.25
    json.dumps(rep.to_json())
    assert rep.to_csv().splitlines()[0].startswith("check,p,sample_id")


def test_orbit_residuals():
    rep = RatioReport("x", {})
    for v in (1.0, 1.1, 2.0, 2.0):
        rep.add(v, 1.0)
    assert rep.orbit_residuals([0, 0, 1, 1]) == pytest.approx(0.1 / 1.1)
    with pytest.raises(ValueError):
        rep.orbit_residuals([0])


def test_run_samples_preserves_order():
    assert run_samples(lambda x: x * x, range(7), workers=3) == [x * x for x in range(7)]


# --- hypotheses ----------------------------------------------------------------

@pytest.mark.parametrize("args", [
    (3, 2, 2, -1, -1.9, "x_small"),      # scaling fails
    (3, 4, 4, -1.25, -3.25, "x_small"),  # 1/p + 1/q < 1
    (3, 2, 2, -2, -1, "x_small"),        # alpha <= -n/p'
    (3, 2, 2, -1, -2, "y_small"),        # alpha >= -n/p'
    (3, 0.5, 2, -1, -2, "x_small"),      # p < 1
])
def test_bilinear_hypotheses_rejected(args):
    with pytest.raises(HypothesisError):
        bilinear_hypotheses(*args)


def test_bilinear_unknown_regime():
    with pytest.raises(ValueError):
        bilinear_hypotheses(3, 2, 2, -1, -2, "diagonal")


@pytest.mark.parametrize("args", [
    (3, 1.2, 1.2, 1.0, 0, 0),   # the 6/5 pair violates scaling
    (3, 1.5, 1.5, 3.0, 0, 0),   # s >= n
    (3, 1.5, 1.5, 1.0, -1.5, 1.5),  # alpha <= -n/p'
    (3, 4, 4, 1.0, 0.75, 0.75),     # 1/p + 1/q < 1
    (3, 1, 1, 1.0, 0.5, -0.5),      # p = 1 and q = 1 and 1/p + 1/q = 1 + s
])
def test_hls_hypotheses_rejected(args):
    with pytest.raises(HypothesisError):
        hls_hypotheses(*args)


def test_hls_boundary_flag():
    h = hls_hypotheses(3, 4 / 3, 4 / 3, 0.5, 0.5, 0.5)
    assert h["boundary"] == "1/p+1/q=1+s"
    assert hls_hypotheses(3, 1.5, 1.5, 1.0, 0, 0)["boundary"] is None


def test_sobolev_presets_satisfy_hypotheses():
    for name in ("first", "dual"):
        pr = sobolev_preset(name, 3, EPS)
        hls_hypotheses(3, pr["p"], pr["q"], pr["s"], pr["alpha"], pr["beta"])
    with pytest.raises(ValueError):
        sobolev_preset("third", 3)


# --- frozen oracles --------------------------------------------------------------

def test_bilinear_oracle():
    rep = check_bilinear(gauss(1.0), gauss(2**-0.5), 2, 2, -1, -2)
    assert rep.sup_ratio == pytest.approx(BILINEAR_RATIO, rel=1e-10)


def test_hls_oracle():
    rep = check_hls(gauss(1.0), gauss(0.7), 1.5, 1.5, 1.0)
    assert rep.sup_ratio == pytest.approx(HLS_RATIO, rel=1e-7)
    assert not rep.flags["refinement_failed"]


def test_sobolev_oracle():
    rep = check_radial_sobolev(gauss(), preset="first", eps=EPS)
    assert rep.sup_ratio == pytest.approx(SOBOLEV_FIRST, rel=1e-10)


def test_sobolev_dual_oracle():
    rep = check_radial_sobolev(gauss(), preset="dual", eps=EPS)
    assert rep.samples[0]["lhs"] == pytest.approx(DUAL_LHS, rel=1e-8)
    assert rep.samples[0]["rhs"] == pytest.approx((math.pi / 0.6) ** 1.25, rel=1e-10)


def test_sobolev_field_route_agrees():
    g = build_grid(3, 40.0, 1024)
    rep = check_radial_sobolev(gauss().sample(g), preset="first", eps=EPS)
    assert rep.sup_ratio == pytest.approx(SOBOLEV_FIRST, rel=1e-5)


# --- independent routes on seeded samples ------------------------------------------

def _bilinear_quad(sf, sg, alpha, beta, n=3):
    # inner |x| <= |y| integral in closed form via the incomplete gamma function
    om = surface_area(n)
    k = (alpha + n) / 2

    def inner(y):
        return om * (2 * sf**2) ** k / 2 * gamma(k) * gammainc(k, y**2 / (2 * sf**2))

    val, _ = integrate.quad(lambda y: y ** (beta + n - 1) * math.exp(-y**2 / (2 * sg**2)) * inner(y),
                            0, np.inf, epsabs=0, epsrel=1e-13, limit=200)
    return om * val


def test_bilinear_against_quad():
    rng = np.random.default_rng(11)
    for sf, sg in rng.uniform(0.3, 3.0, size=(10, 2)):
        rep = check_bilinear(gauss(sf), gauss(sg), 2, 2, -1, -2)
        assert rep.samples[0]["lhs"] == pytest.approx(_bilinear_quad(sf, sg, -1, -2), rel=1e-9)


def _hls_fourier(f, g, s, n=3):
    # |x|^(s-n) has Fourier transform c |xi|^-s; Gaussian spectra make the pairing a Gamma integral
    c = math.pi ** (n / 2) * 2**s * gamma(s / 2) / gamma((n - s) / 2)
    tot = 0.0
    for a, sa in zip(f.amplitudes, f.widths):
        for b, sb in zip(g.amplitudes, g.widths):
            k = (sa**2 + sb**2) / 2
            spec = (a * b).real * (2 * math.pi * sa**2) ** (n / 2) * (2 * math.pi * sb**2) ** (n / 2)
            tot += spec * surface_area(n) * gamma((n - s) / 2) / (2 * k ** ((n - s) / 2))
    return c * tot / (2 * math.pi) ** n


def test_hls_against_fourier_closed_form():
    rng = np.random.default_rng(12)
    fs, gs = [], []
    for _ in range(10):
        k = int(rng.integers(1, 3))
        fs.append(GaussianMixture(3, tuple(rng.uniform(0.2, 2.0, k) + 0j), tuple(rng.uniform(0.4, 2.0, k))))
        gs.append(GaussianMixture(3, tuple(rng.uniform(0.2, 2.0, 1) + 0j), tuple(rng.uniform(0.4, 2.0, 1))))
    rep = check_hls(fs, gs, 1.5, 1.5, 1.0, self_check=False)
    for f, g, row in zip(fs, gs, rep.samples):
        assert row["lhs"] == pytest.approx(_hls_fourier(f, g, 1.0), rel=1e-7)


# --- dilation invariance ---------------------------------------------------------

def test_dilation_invariance_all_three():
    base_f = GaussianMixture(3, (1 + 0.5j, -0.3), (0.8, 1.6))
    base_g = GaussianMixture(3, (0.7j,), (1.1,))
    lams = (0.25, 1.0, 4.0)
    fs = [base_f.dilate(l) for l in lams]
    gs = [base_g.dilate(l) for l in lams]
    b = check_bilinear(fs, gs, 2, 2, -1, -2, orbit=[0, 0, 0])
    h = check_hls(fs, gs, 1.5, 1.5, 1.0, orbit=[0, 0, 0], self_check=False)
    s = check_radial_sobolev(fs, preset="first", eps=EPS, orbit=[0, 0, 0])
    assert b.scaling_residual <= 1e-6
    assert h.scaling_residual <= 1e-4
    assert s.scaling_residual <= 1e-5


@settings(max_examples=15, deadline=None)
@given(lam=st.floats(0.25, 4.0), w=st.floats(0.5, 2.0))
def test_bilinear_ratio_scale_free(lam, w):
    f = gauss(w)
    r0 = check_bilinear(f, gauss(1.0), 2, 2, -1, -2).sup_ratio
    r1 = check_bilinear(f.dilate(lam), gauss(1.0).dilate(lam), 2, 2, -1, -2).sup_ratio
    assert r1 == pytest.approx(r0, rel=1e-6)


def test_zero_functions_give_zero_ratio():
    z = GaussianMixture(3, (0j,), (1.0,))
    assert check_bilinear(z, gauss(), 2, 2, -1, -2).sup_ratio == 0.0
    assert check_hls(z, gauss(), 1.5, 1.5, 1.0).sup_ratio == 0.0


def test_y_small_regime_and_ring_profiles():
    rep = check_bilinear(RingBump(3, 2.0, 0.5), gauss(), 2, 2, -2, -1, regime="y_small")
    assert 0 < rep.sup_ratio < math.inf


def test_hls_sharpness_probe():
    # concentrating both factors on the same dilation orbit keeps the ratio bounded
    ratios = [check_hls(gauss(w), gauss(w), 1.5, 1.5, 1.0, self_check=False).sup_ratio
              for w in (0.1, 1.0, 10.0)]
    assert max(ratios) / min(ratios) - 1 <= 1e-4


# --- uncertainty -------------------------------------------------------------------

@pytest.fixture(scope="module")
def uncertainty_report():
    g = uncertainty_grid(3)
    return check_uncertainty(gauss().sample(g), 0.5, 2.0, [2.0**k for k in range(-4, 11)])


def test_uncertainty_large_n_slope(uncertainty_report):
    # at large N the low-pass is the identity, so the ratio falls like N^-alpha
    assert top_decade_slope(uncertainty_report) == pytest.approx(-0.5, abs=1e-3)


def test_uncertainty_normalized_form_is_flat(uncertainty_report):
    # flat once N x resolves the data scale; at small N the low-pass removes the data
    nr = np.array([s["normalized_ratio"] for s in uncertainty_report.samples if s["N"] >= 4])
    assert nr.max() / nr.min() <= 1.05


def test_uncertainty_hypotheses(gauss3):
    with pytest.raises(HypothesisError):
        check_uncertainty(gauss3, 1.5, 2.0, [1.0])
    with pytest.raises(HypothesisError):
        check_uncertainty(gauss3, 0.5, 1.0, [1.0])
    with pytest.raises(HypothesisError):
        check_uncertainty(gauss3, 0.5, 2.0, [0.0])


# --- weighted Strichartz -------------------------------------------------------------

def test_strichartz_times_layout():
    t = strichartz_times(100.0)
    assert t[0] == 0 and t[-1] == pytest.approx(100.0) and np.all(np.diff(t) > 0)
    assert len(strichartz_times(0.5)) == 41


def test_sin2_duhamel_against_quadrature():
    rho = np.array([0.0, 0.3, 1.0, 2.5, math.sqrt(2 * math.pi)])
    for t in (0.4, 1.0, 1.7):
        want = [integrate.quad(lambda s: math.cos(-(t - s) * x**2) * math.sin(math.pi * s) ** 2, 0, min(t, 1))[0]
                + 1j * integrate.quad(lambda s: math.sin(-(t - s) * x**2) * math.sin(math.pi * s) ** 2, 0, min(t, 1))[0]
                for x in rho]
        np.testing.assert_allclose(sin2_duhamel(rho, t, 1.0), want, rtol=1e-10, atol=1e-13)


def test_forced_trajectory_matches_numerical_duhamel(grid3):
    g = gauss(0.8).sample(grid3)
    u, G = forced_trajectory(g, 1.0, [0.6])
    x, w = np.polynomial.legendre.leggauss(40)
    tau = 0.3 * (x + 1)
    acc = sum(wi * 0.3 * math.sin(math.pi * ti) ** 2 * free_propagate(g, 0.6 - ti).values
              for wi, ti in zip(w, tau))
    np.testing.assert_allclose(u.fields[0].values, -1j * acc, atol=1e-10)
    assert G.fields[0].values == pytest.approx(math.sin(0.6 * math.pi) ** 2 * g.values)


def test_forced_strichartz_ratio_bounded():
    g = build_grid(3, 64.0, 256)
    from radnls.spectral import apply_multiplier, dyadic_ge
    G = [apply_multiplier(GaussianMixture(3, (1.0,), (0.5,)).sample(g), dyadic_ge(2.0))]
    rep = check_weighted_strichartz(G=G, interval=(2.0,), eps=EPS, T0=1.0)
    assert 0 < rep.sup_ratio < 10


def test_free_strichartz_short_interval_growth(gauss3):
    rep = check_weighted_strichartz(gauss3, interval=(0.5, 1.0), eps=EPS)
    r = {s["T"]: s["ratio"] for s in rep.samples}
    assert 0 < r[0.5] < r[1.0]
    assert saturation_growth(rep, 0.5, 1.0) == pytest.approx(r[1.0] / r[0.5] - 1)


def test_zero_data_strichartz(gauss3):
    from radnls import RadialField
    z = RadialField(gauss3.grid, np.zeros_like(gauss3.values))
    assert check_weighted_strichartz(z, interval=(1.0,)).sup_ratio == 0.0


# --- nonlinear estimates ------------------------------------------------------------

@pytest.fixture(scope="module")
def short_runs():
    g = build_grid(3, 40.0, 512)
    u = free_trajectory(gauss(1.0, 1.5).sample(g), np.linspace(0, 0.5, 11))
    v = free_trajectory(GaussianMixture(3, (0.4j,), (0.7,)).sample(g), np.linspace(0, 0.5, 11))
    return u, v


@pytest.mark.parametrize("variant", ["basic", "refined_1", "refined_2"])
def test_nonlinear_ratios_finite(short_runs, variant):
    rep = check_nonlinear_estimates(*short_runs, variant=variant, eps=EPS, tag="x")
    assert 0 < rep.sup_ratio < math.inf and rep.samples[0]["tag"] == "x"


def test_nonlinear_zero_v(short_runs):
    u, v = short_runs
    z = Trajectory.from_values(v.grid, v.times, np.zeros_like(v.values))
    assert check_nonlinear_estimates(u, z, "basic").sup_ratio == 0.0


def test_nonlinear_unknown_variant(short_runs):
    with pytest.raises(ValueError):
        check_nonlinear_estimates(*short_runs, variant="refined_3")


# --- weighted multipliers -------------------------------------------------------------

def test_weighted_multiplier(gauss3):
    rep = check_weighted_multiplier(gauss3, dyadic_lt(2.0), 0.5, 2.0)
    # bounded, though not a contraction once the weight is switched on
    assert 0.5 < rep.sup_ratio < 2.0
    assert check_weighted_multiplier(gauss3, dyadic_lt(2.0), 0.0, 2.0).sup_ratio <= 1.0 + 1e-9
    assert "symbol" in rep.params


def test_weighted_multiplier_requires_regular_symbol(gauss3):
    with pytest.raises(HypothesisError):
        check_weighted_multiplier(gauss3, custom(lambda r: np.sign(r - 1.0)), 0.5, 2.0)
    with pytest.raises(HypothesisError):
        check_weighted_multiplier(gauss3, dyadic_band(1.0), 2.0, 2.0)
