import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from conebr.geometry import (
    ConeParams,
    ConePoint,
    a_sigma,
    a_sigma_l1,
    diffraction_distance,
    diffraction_phase_derivs,
    geodesic_distance,
    image_terms,
    pole_offsets,
    weight_vanishes,
)


def test_cone_validation():
    for bad in (0.0, -1.0, math.inf, math.nan):
        with pytest.raises(ValueError):
            ConeParams(bad)
    with pytest.raises(ValueError):
        ConePoint(-1.0, 0.0)
    p = ConeParams(2.0).point(1.0, -math.pi)
    assert p.theta == pytest.approx(3 * math.pi)


def test_images_same_ray():
    cone = ConeParams(1.0)
    t = image_terms(ConePoint(2.0, 0.3), ConePoint(1.0, 0.3), cone)
    assert [(i.j, i.d_j) for i in t] == [(0, pytest.approx(1.0))]


def test_images_antipodal_counted_once():
    cone = ConeParams(1.0)
    t = image_terms(ConePoint(1.0, math.pi), ConePoint(1.0, 0.0), cone)
    assert len(t) == 1
    assert t[0].d_j == pytest.approx(2.0)


def _brute_images(dth, sigma):
    return [j for j in range(-5, 6) if -math.pi < dth + 2 * math.pi * sigma * j <= math.pi]


def test_images_sigma2_three_pi_matches_enumeration():
    # the brute-force window is the oracle: 3 pi + 4 pi j in (-pi, pi] gives j = -1 at exactly -pi, excluded
    x, y = ConePoint(1.0, 3 * math.pi), ConePoint(1.0, 0.0)
    got = [i.j for i in image_terms(x, y, ConeParams(2.0))]
    assert got == _brute_images(3 * math.pi, 2.0) == []


@settings(max_examples=300, deadline=None)
@given(st.floats(0.05, 5.0), st.floats(-40.0, 40.0))
def test_images_match_enumeration(sigma, dth):
    if abs(dth) > 10 * math.pi * sigma:
        return
    cone = ConeParams(sigma)
    got = [i.j for i in image_terms(ConePoint(1.0, dth), ConePoint(1.0, 0.0), cone)]
    brute = [j for j in range(-60, 61) if -math.pi < dth + 2 * math.pi * sigma * j <= math.pi]
    assert got == brute


def test_diffraction_distance_values():
    assert diffraction_distance(1, 1, 0) == 2.0
    assert diffraction_distance(1, 0, 5) == 1.0
    assert diffraction_distance(1, 2, 1) == pytest.approx(math.sqrt(5 + 4 * math.cosh(1)), rel=1e-15)
    assert diffraction_distance(1, 2, 1) == pytest.approx(3.3425, abs=1e-4)


def test_phase_derivs():
    assert diffraction_phase_derivs(1, 1, 0) == pytest.approx((2, 0, 0.5))
    assert diffraction_phase_derivs(1, 2, 0) == pytest.approx((3, 0, 2 / 3))
    h = 1e-5
    d, d1, d2 = diffraction_phase_derivs(1, 1, 2)
    f = lambda s: diffraction_distance(1, 1, s)
    assert d1 == pytest.approx((f(2 + h) - f(2 - h)) / (2 * h), abs=1e-6)
    assert d2 == pytest.approx((f(2 + h) - 2 * f(2) + f(2 - h)) / h**2, abs=1e-5)


def test_a_sigma_vanishes_for_integer_inverse():
    for sigma in (1.0, 0.5, 1 / 3):
        assert weight_vanishes(sigma)
        assert np.all(a_sigma(np.linspace(0.1, 5, 20), 0.7, ConeParams(sigma)) == 0.0)
    assert not weight_vanishes(2.0)


def test_a_sigma_examples():
    cone = ConeParams(2.0)
    assert a_sigma(2.0, 0.0, cone) == pytest.approx(1 / math.cosh(1), rel=1e-14)
    assert abs(a_sigma(1.0, math.pi, cone)) < 1e-15


def test_a_sigma_matches_direct_formula():
    # A = sum over signs of sin((pi -+ dth)/sigma) / (2 (cosh(s/sigma) - cos((pi -+ dth)/sigma)))
    cone = ConeParams(2.7)
    s = np.linspace(0.05, 6, 40)
    for dth in (0.0, 0.4, 2.0, -1.3):
        direct = sum(
            math.sin(e) / (2 * (np.cosh(s / 2.7) - math.cos(e))) for e in ((math.pi - dth) / 2.7, (math.pi + dth) / 2.7)
        )
        assert np.allclose(a_sigma(s, dth, cone), direct, rtol=1e-12, atol=1e-14)


def test_a_sigma_pole_markers():
    cone = ConeParams(2.0)
    em, ep = pole_offsets(math.pi, 2.0)
    assert float(em) == 0.0
    assert a_sigma(0.0, math.pi, cone) == math.inf
    with pytest.raises(ValueError):
        a_sigma(-1.0, 0.0, cone)


def test_a_sigma_l1_integrable_and_bounded():
    cone = ConeParams(2.0)
    vals = [a_sigma_l1(d, cone)[0] for d in (0.0, 1.0, math.pi - 1e-3, math.pi - 1e-6)]
    assert all(np.isfinite(vals))
    # the Lorentzian mass near a pole tends to 2 pi sigma / 2 as the pole reaches s = 0
    assert max(vals) < 4 * math.pi * 2.0
    assert a_sigma_l1(0.3, ConeParams(1.0)) == (0.0, 0.0)


def test_geodesic_examples():
    assert geodesic_distance(ConePoint(1, 0), ConePoint(1, 3 * math.pi), ConeParams(2.0)) == pytest.approx(2.0)
    assert geodesic_distance(ConePoint(1, 0), ConePoint(2, math.pi / 2), ConeParams(1.0)) == pytest.approx(math.sqrt(5))
    assert geodesic_distance(ConePoint(1, 0), ConePoint(1, 2 * math.pi), ConeParams(3.0)) == pytest.approx(2.0)


@settings(max_examples=200, deadline=None)
@given(st.floats(0.2, 4.0), st.floats(0, 3), st.floats(0, 30), st.floats(0, 3), st.floats(0, 30))
def test_geodesic_is_shortest_image(sigma, r1, t1, r2, t2):
    cone = ConeParams(sigma)
    x, y = cone.point(r1, t1), cone.point(r2, t2)
    imgs = image_terms(x, y, cone)
    d = geodesic_distance(x, y, cone)
    ref = min([i.d_j for i in imgs], default=r1 + r2)
    assert d == pytest.approx(ref, abs=1e-12)
    assert d == pytest.approx(geodesic_distance(y, x, cone), abs=1e-12)
