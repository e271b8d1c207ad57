import math

import pytest

from conebr.bounds import BoundReport, check_de_decay, check_diffraction_halfpower, check_ge_decay
from conebr.cone_kernel import ConeKernelConfig
from conebr.euclid import BRParams
from conebr.geometry import ConeParams
from conebr.quadrature import QuadratureConfig


def _cfg(sigma, delta=0.5):
    return ConeKernelConfig(ConeParams(sigma), BRParams(1.0, delta), QuadratureConfig(tol=1e-8))


def test_sigma_one_diffraction_reports_are_zero():
    assert check_de_decay(_cfg(1.0), n_samples=5).max_ratio == 0.0
    assert check_diffraction_halfpower(_cfg(1.0), k_range=(1, 3), n_samples=3).max_ratio == 0.0


def test_ge_decay_finite_and_stable():
    a = check_ge_decay(_cfg(2.0), n_samples=40)
    b = check_ge_decay(_cfg(2.0), n_samples=80)
    assert math.isfinite(a.max_ratio) and a.max_ratio > 0
    assert b.max_ratio == pytest.approx(a.max_ratio, rel=0.25)
    assert a.samples == 40


def test_de_decay_large_sums_not_worse():
    cfg = _cfg(2.0)
    near = check_de_decay(cfg, n_samples=15, sum_range=(4.5, 5.5))
    far = check_de_decay(cfg, n_samples=15, sum_range=(45.0, 50.0))
    assert far.max_ratio <= near.max_ratio


def test_reports_are_reproducible():
    cfg = _cfg(2.0, 0.3)
    a = check_diffraction_halfpower(cfg, k_range=(1, 2), n_samples=3, seed=7)
    b = check_diffraction_halfpower(cfg, k_range=(1, 2), n_samples=3, seed=7)
    assert a == b
    assert a.config_digest != check_diffraction_halfpower(cfg, k_range=(1, 2), n_samples=3, seed=8).config_digest


def test_nonfinite_ratio_rejected():
    with pytest.raises(ValueError):
        BoundReport("x", 1, math.nan, "0" * 16, {})
