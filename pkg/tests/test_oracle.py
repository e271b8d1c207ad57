import math

import numpy as np
import pytest
from scipy import integrate, special as sc

from conebr.euclid import BRParams, k_euclid_exact
from conebr.geometry import ConeParams, ConePoint
from conebr.oracle import (
    ModeSumConfig,
    TruncationError,
    br_gaussian_mode,
    gaussian_mode_profile,
    oracle_kernel,
    oracle_kernel_detail,
    radial_br_integral,
    truncation_kmax,
)


def test_radial_at_origin():
    br = BRParams(3.0, 0.7)
    assert radial_br_integral(0.0, 0.0, 0.0, br) == pytest.approx(9.0 / (2 * 1.7), rel=1e-13)


def test_radial_against_adaptive():
    br = BRParams(1.0, 1.0)
    ref, _ = integrate.quad(lambda p: (1 - p * p) * sc.j0(p) ** 2 * p, 0, 1, epsabs=1e-14, epsrel=1e-14)
    assert radial_br_integral(0.0, 1.0, 1.0, br) == pytest.approx(ref, abs=1e-10)


def test_radial_small_delta_endpoint():
    br = BRParams(2.0, 0.1)
    f = lambda p: (1 - p * p / 4) ** 0.1 * sc.jv(1.5, 0.7 * p) * sc.jv(1.5, 1.3 * p) * p
    ref, _ = integrate.quad(f, 0, 2, epsabs=1e-14, epsrel=1e-13, limit=200)
    assert radial_br_integral(1.5, 0.7, 1.3, br) == pytest.approx(ref, abs=1e-11)


def test_radial_high_order_negligible():
    br = BRParams(2.0, 0.5)
    nu = 2 * 2.0 * 1.5 + 30
    assert abs(radial_br_integral(nu, 1.5, 1.0, br)) <= 1e-15 * br.lam**2
    with pytest.raises(ValueError):
        radial_br_integral(-1.0, 1.0, 1.0, br)


@pytest.mark.parametrize("dth", [0.0, 1.0, math.pi / 2, 2.5])
def test_sigma_one_matches_euclidean(dth):
    br = BRParams(2.0, 0.5)
    x, y = ConePoint(1.0, dth), ConePoint(0.6, 0.0)
    d = math.sqrt(1 + 0.36 - 1.2 * math.cos(dth))
    assert oracle_kernel(x, y, ConeParams(1.0), br) == pytest.approx(k_euclid_exact(d, br), abs=1e-8)


def test_self_consistency_on_refinement():
    cone, br = ConeParams(2.0), BRParams(1.0, 1.0)
    x, y = ConePoint(1.0, 0.0), ConePoint(1.0, math.pi)
    base = oracle_kernel_detail(x, y, cone, br)
    fine = oracle_kernel(x, y, cone, br, ModeSumConfig(k_max=2 * base.k_max, radial_quad_points=2 * base.n_points))
    assert abs(base.value - fine) <= 1e-9


def test_truncation_detected():
    cone, br = ConeParams(2.0), BRParams(4.0, 0.5)
    with pytest.raises(TruncationError):
        oracle_kernel(ConePoint(2.0, 0.0), ConePoint(2.0, 0.0), cone, br, ModeSumConfig(k_max=6))
    assert truncation_kmax(2.0, 4.0, 2.0) == math.ceil(2.0 * (16 + 30))


def test_gaussian_mode_multiplier():
    # a wide Gaussian has almost all its spectrum well inside the cutoff
    nu, s = 0.5, 0.3
    br = BRParams(20.0, 1.0)
    r = np.linspace(0.1, 3, 7)
    out = br_gaussian_mode(r, nu, s, br)
    assert np.allclose(out, gaussian_mode_profile(r, nu, s), rtol=1e-3, atol=1e-4)


def test_gaussian_mode_against_quad():
    nu, s, br = 1.5, 2.0, BRParams(3.0, 0.4)

    def ref(r):
        f = lambda p: (1 - p * p / 9) ** 0.4 * s ** (-2 * nu - 2) * p**nu * np.exp(-p * p / (2 * s * s)) * sc.jv(nu, r * p) * p
        return integrate.quad(f, 0, 3, epsabs=1e-14, epsrel=1e-12, limit=200)[0]

    r = np.array([0.2, 0.9, 2.5])
    assert np.allclose(br_gaussian_mode(r, nu, s, br), [ref(v) for v in r], rtol=1e-9, atol=1e-12)
