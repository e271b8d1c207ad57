import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from conebr.cone_kernel import (
    REDUCTION_CONVENTIONS,
    ConeKernelConfig,
    diffraction_bound_ratio,
    kernel,
    kernel_components,
    kernel_dtheta,
    reduction_identity_residual,
)
from conebr.euclid import BRParams, k_euclid_exact
from conebr.geometry import ConeParams, ConePoint
from conebr.oracle import oracle_kernel
from conebr.quadrature import QuadratureConfig


def _cfg(sigma, lam=1.0, delta=1.0, tol=1e-10):
    return ConeKernelConfig(ConeParams(sigma), BRParams(lam, delta), QuadratureConfig(tol=tol))


@settings(max_examples=30, deadline=None)
@given(st.floats(0, 4), st.floats(0, 7), st.floats(0.01, 4), st.floats(0, 7))
def test_sigma_one_is_euclidean(r1, t1, r2, t2):
    cfg = _cfg(1.0, lam=2.0, delta=0.5)
    x, y = cfg.cone.point(r1, t1), cfg.cone.point(r2, t2)
    k = kernel(x, y, cfg)
    d = math.dist((r1 * math.cos(t1), r1 * math.sin(t1)), (r2 * math.cos(t2), r2 * math.sin(t2)))
    assert k.diffractive == 0.0
    assert k.total == pytest.approx(k_euclid_exact(d, cfg.br), abs=1e-12)


def test_diagonal_matches_mode_sum():
    cfg = _cfg(2.0)
    x = ConePoint(1.0, 0.0)
    assert kernel(x, x, cfg).total == pytest.approx(oracle_kernel(x, x, cfg.cone, cfg.br), rel=1e-6)


@pytest.mark.parametrize("sigma,dth", [(2.0, math.pi), (2.0, 0.3), (0.7, 1.0), (3.3, 5.0), (1.5, math.pi - 1e-7)])
def test_matches_mode_sum(sigma, dth):
    cfg = _cfg(sigma, lam=3.0, delta=0.4)
    x, y = cfg.cone.point(0.8, dth), ConePoint(0.5, 0.0)
    k = kernel(x, y, cfg).total
    o = oracle_kernel(x, y, cfg.cone, cfg.br)
    assert abs(k - o) <= 1e-7 * max(abs(o), 1e-2 * cfg.br.lam**2)


def test_error_estimate_within_contract():
    cfg = _cfg(2.5, lam=4.0, delta=0.3, tol=1e-8)
    k = kernel(ConePoint(1.0, 0.2), ConePoint(0.3, 4.0), cfg)
    assert k.err_est <= cfg.quad.tol * (1 + abs(k.total))


def test_symmetry():
    cfg = _cfg(2.3, lam=2.0, delta=0.6)
    x, y = ConePoint(1.2, 0.5), ConePoint(0.4, 6.0)
    assert kernel(x, y, cfg).total == pytest.approx(kernel(y, x, cfg).total, rel=1e-12, abs=1e-14)
    g, d, _ = kernel_dtheta(1.2, 0.4, np.array([1.1, -1.1, 1.1 + cfg.cone.period]), cfg)
    assert np.ptp(g + d) < 1e-12


def test_scaling_law():
    cfg1, cfg3 = _cfg(1.7, lam=1.0, delta=0.5, tol=1e-12), _cfg(1.7, lam=3.0, delta=0.5, tol=1e-12)
    x, y = ConePoint(0.9, 0.0), ConePoint(1.5, 2.5)
    xs, ys = ConePoint(0.3, 0.0), ConePoint(0.5, 2.5)
    assert kernel(xs, ys, cfg3).total == pytest.approx(9 * kernel(x, y, cfg1).total, rel=1e-9)


def test_components_sum_to_total():
    cfg = _cfg(2.0, delta=0.5)
    x, y = ConePoint(1.0, 0.0), ConePoint(2.0, 2.0)
    c = kernel_components(x, y, cfg)
    assert c.total() == pytest.approx(kernel(x, y, cfg).total, abs=1e-9)
    assert c.G_m_minus == c.G_m_plus.conjugate()


def test_components_sigma_one_have_no_diffraction():
    c = kernel_components(ConePoint(1.0, 0.0), ConePoint(2.0, 1.0), _cfg(1.0, delta=0.5))
    assert c.D_m_plus == 0 and c.D_m_minus == 0 and c.D_e == 0


def test_components_require_unit_lambda():
    with pytest.raises(ValueError):
        kernel_components(ConePoint(1.0, 0.0), ConePoint(2.0, 1.0), _cfg(2.0, lam=2.0))


@pytest.mark.parametrize("sigma", [3.0, 2.4])
def test_reduction_identity(sigma):
    cfg = _cfg(sigma, lam=2.0, delta=0.5, tol=1e-11)
    rng = np.random.default_rng(3)
    small = ConeParams(sigma / 2)
    for _ in range(4):
        x = small.point(rng.uniform(0.2, 2), rng.uniform(0, small.period))
        y = small.point(rng.uniform(0.2, 2), rng.uniform(0, small.period))
        assert reduction_identity_residual(x, y, cfg) <= 1e-8


def test_other_reduction_readings_fail():
    cfg = _cfg(2.0, lam=2.0, delta=0.5)
    x, y = ConePoint(1.0, 0.3), ConePoint(0.7, 2.0)
    res = {c: reduction_identity_residual(x, y, cfg, c) for c in REDUCTION_CONVENTIONS}
    assert min(res, key=res.get) == "one_half_circumference"
    assert sorted(res.values())[1] > 1e-4


def test_diffraction_bound_ratio():
    cfg = _cfg(2.0, delta=0.5, tol=1e-8)
    ratios = [diffraction_bound_ratio(0.5, 0.6, 1.0, k, cfg) for k in (1, 4, 8)]
    assert all(math.isfinite(r) and r >= 0 for r in ratios)
    assert diffraction_bound_ratio(0.5, 0.6, 1.0, 3, _cfg(1.0)) == 0.0
    with pytest.raises(ValueError):
        diffraction_bound_ratio(5.0, 5.0, 1.0, 1, cfg)
