import math
import warnings

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st
from scipy.special import jn_zeros

from radnls import RadialField, build_grid, integrate, weighted_lp_norm
from radnls.grid import GridError, TruncationWarning, bessel_zeros, check_decay, surface_area


@pytest.mark.parametrize("n,expected", [(3, 4 * math.pi), (4, 2 * math.pi**2), (5, 8 * math.pi**2 / 3)])
def test_surface_area(n, expected):
    assert surface_area(n) == pytest.approx(expected, rel=1e-14)


@pytest.mark.parametrize("order", [0, 1, 2])
def test_bessel_zeros_integer_orders_match_scipy(order):
    np.testing.assert_allclose(bessel_zeros(order, 200), jn_zeros(order, 200), rtol=1e-13)


def test_bessel_zeros_half_order_are_multiples_of_pi():
    # J_{1/2}(x) is proportional to sin(x) / sqrt(x)
    np.testing.assert_allclose(bessel_zeros(0.5, 50), np.pi * np.arange(1, 51), rtol=1e-13)


@pytest.mark.parametrize("scheme", ["bessel_zeros", "uniform"])
@pytest.mark.parametrize("n", [3, 4, 5])
def test_gaussian_mass(scheme, n):
    J = 512 if scheme == "bessel_zeros" else 4096
    g = build_grid(n, 20.0, J, scheme)
    f = g.sample(lambda r: np.exp(-(r**2) / 2))
    assert integrate(f * f.conj()).real == pytest.approx(math.pi ** (n / 2), rel=1e-9)


@pytest.mark.parametrize("bad", [dict(n=2, R=10.0, J=64), dict(n=3, R=-1.0, J=64),
                                 dict(n=3, R=10.0, J=4), dict(n=3, R=10.0, J=64, scheme="chebyshev")])
def test_build_grid_rejects(bad):
    with pytest.raises(GridError):
        build_grid(**bad)


def test_grid_equality_is_by_key():
    assert build_grid(3, 10.0, 64) == build_grid(3, 10.0, 64)
    assert build_grid(3, 10.0, 64) != build_grid(3, 10.0, 65)
    assert len({build_grid(3, 10.0, 64), build_grid(3, 10.0, 64)}) == 1


def test_field_rejects_wrong_shape(grid3):
    with pytest.raises(ValueError):
        RadialField(grid3, np.zeros(3))


def test_weighted_lp_norm_gaussian(grid3, gauss3):
    # || |x| f ||_2^2 = (3/2) pi^{3/2} for e^{-r^2/2}
    assert weighted_lp_norm(gauss3, 2, 1.0) ** 2 == pytest.approx(1.5 * math.pi**1.5, rel=1e-10)
    # sup over nodes: attained at the first node, not at r = 0
    r1 = grid3.nodes[0]
    assert weighted_lp_norm(gauss3, math.inf) == pytest.approx(math.exp(-(r1**2) / 2), rel=1e-14)


def test_check_decay_warns(grid3):
    f = grid3.sample(lambda r: np.exp(-r / 4))
    with pytest.warns(TruncationWarning):
        assert not check_decay(f)
    with warnings.catch_warnings():
        warnings.simplefilter("error")
        assert check_decay(grid3.sample(lambda r: np.exp(-(r**2))))


@settings(max_examples=25, deadline=None)
@given(a=st.complex_numbers(max_magnitude=5, allow_nan=False, allow_infinity=False),
       b=st.complex_numbers(max_magnitude=5, allow_nan=False, allow_infinity=False))
def test_integrate_is_linear(a, b):
    g = build_grid(3, 10.0, 64)
    f1 = g.sample(lambda r: np.exp(-(r**2)))
    f2 = g.sample(lambda r: np.exp(-2 * r**2))
    lhs = integrate(f1 * a + f2 * b)
    assert lhs == pytest.approx(a * integrate(f1) + b * integrate(f2), abs=1e-12 * (1 + abs(a) + abs(b)))
