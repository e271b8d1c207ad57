import math

import mpmath
import numpy as np
import pytest
import scipy.special as sc
from hypothesis import given, settings, strategies as st

from conebr.specfun import SpecfunError, bessel_j, bessel_j_scaled, gamma, hankel_coefficients, lgamma


def test_bessel_trivial_values():
    assert bessel_j(0.0, 0.0) == 1.0
    assert bessel_j(0.5, math.pi / 2) == pytest.approx(2.0 / math.pi, rel=1e-14)
    assert bessel_j(1.5, 0.0) == 0.0


def test_bessel_one_one_against_long_series():
    # 60 terms of the power series in 50-digit arithmetic
    mpmath.mp.dps = 50
    x = mpmath.mpf(1)
    s = sum((-1) ** m * (x / 2) ** (2 * m + 1) / (mpmath.factorial(m) * mpmath.factorial(m + 1)) for m in range(60))
    assert bessel_j(1.0, 1.0) == pytest.approx(float(s), rel=1e-15)


@pytest.mark.parametrize("nu", [0.0, 0.25, 0.5, 1.0, 1.1, 1.5, 2.0, 3.7, 10.0, 25.5])
def test_bessel_against_scipy(nu):
    x = np.concatenate([np.linspace(0, 5, 51), np.geomspace(5, 2000, 200)])
    got = bessel_j(nu, x)
    want = sc.jv(nu, x)
    # error measured against the local modulus scale
    scale = np.maximum(np.abs(want), np.minimum(1.0, np.sqrt(2 / (np.pi * np.maximum(x, 1e-300)))))
    assert np.max(np.abs(got - want) / scale) < 1e-12


def test_bessel_half_integer_closed_forms():
    x = np.linspace(0.1, 60, 300)
    assert np.allclose(bessel_j(0.5, x), np.sqrt(2 / (np.pi * x)) * np.sin(x), rtol=0, atol=1e-14)
    j32 = np.sqrt(2 / (np.pi * x)) * (np.sin(x) / x - np.cos(x))
    assert np.allclose(bessel_j(1.5, x), j32, rtol=0, atol=1e-13)


@settings(max_examples=200, deadline=None)
@given(st.floats(0.0, 30.0), st.floats(0.05, 200.0))
def test_three_term_recurrence(nu, x):
    # J_{nu-1} + J_{nu+1} = (2 nu / x) J_nu, with nu >= 1 so all orders are valid
    nu = nu + 1.0
    lhs = bessel_j(nu - 1, x) + bessel_j(nu + 1, x)
    rhs = 2 * nu / x * bessel_j(nu, x)
    scale = abs(bessel_j(nu - 1, x)) + abs(bessel_j(nu + 1, x)) + abs(rhs) + 1e-300
    assert abs(lhs - rhs) <= 1e-11 * scale + 1e-300


def test_scaled_matches_ratio():
    nu, x = 2.3, np.array([1e-8, 1e-3, 0.5, 4.0, 40.0])
    assert np.allclose(bessel_j_scaled(nu, x), sc.jv(nu, x) / (x / 2) ** nu, rtol=1e-12)
    assert bessel_j_scaled(nu, 0.0) == pytest.approx(1 / math.gamma(nu + 1), rel=1e-14)


def test_bessel_vectorises_and_broadcasts():
    out = bessel_j(np.array([[0.0], [1.0]]), np.array([0.5, 1.0, 2.0]))
    assert out.shape == (2, 3)
    assert np.allclose(out, sc.jv([[0.0], [1.0]], [0.5, 1.0, 2.0]), atol=1e-15)


@pytest.mark.parametrize("nu,x", [(-1.0, 1.0), (1.0, -0.5), (float("nan"), 1.0)])
def test_bessel_rejects_bad_input(nu, x):
    with pytest.raises(SpecfunError):
        bessel_j(nu, x)


def test_bessel_limit_at_infinity():
    assert bessel_j(1.0, math.inf) == 0.0


def test_gamma_values():
    assert gamma(1.0) == pytest.approx(1.0, rel=1e-15)
    assert gamma(0.5) == pytest.approx(math.sqrt(math.pi), rel=1e-15)
    assert gamma(4.0) == pytest.approx(6.0, rel=1e-15)
    for x in np.geomspace(1e-3, 150, 80):
        assert gamma(float(x)) == pytest.approx(math.gamma(x), rel=5e-14)
        assert lgamma(float(x)) == pytest.approx(math.lgamma(x), rel=1e-13, abs=1e-14)


@settings(max_examples=100, deadline=None)
@given(st.floats(0.01, 50.0))
def test_gamma_functional_equation(x):
    assert gamma(x + 1) == pytest.approx(x * gamma(x), rel=1e-13)


def test_gamma_rejects_nonpositive():
    with pytest.raises(SpecfunError):
        gamma(0.0)
    with pytest.raises(SpecfunError):
        gamma(-1.5)


def test_hankel_coefficients_first_terms():
    nu = 1.3
    a = hankel_coefficients(nu, 3)
    mu = 4 * nu * nu
    assert a[0] == 1.0
    assert a[1] == pytest.approx((mu - 1) / 8)
    assert a[2] == pytest.approx((mu - 1) * (mu - 9) / (2 * 64))
