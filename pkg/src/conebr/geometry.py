"""
Flat cone geometry: points, image distances, the diffraction distance and
the diffraction weight ``A_sigma``.

The cone of radius ``sigma`` is ``(0, inf) x R / (2 pi sigma Z)`` with the
metric ``dr^2 + r^2 dtheta^2``; ``sigma = 1`` is the plane.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

__all__ = [
    "ConeParams",
    "ConePoint",
    "ImageTerm",
    "image_window",
    "image_terms",
    "diffraction_distance",
    "diffraction_phase_derivs",
    "a_sigma",
    "a_sigma_term",
    "pole_offsets",
    "fold_angle",
    "geodesic_distance",
    "weight_vanishes",
    "a_sigma_l1",
]

TWO_PI = 2.0 * math.pi


@dataclass(frozen=True)
class ConeParams:
    """Cone radius; the angular circle has circumference ``2 pi sigma``."""

    sigma: float

    def __post_init__(self):
        if not (math.isfinite(self.sigma) and self.sigma > 0):
            raise ValueError(f"sigma must be a positive finite number, got {self.sigma}")

    @property
    def period(self) -> float:
        return TWO_PI * self.sigma

    def point(self, r: float, theta: float) -> "ConePoint":
        """Build a point with ``theta`` reduced to ``[0, 2 pi sigma)``."""
        t = math.fmod(float(theta), self.period)
        if t < 0:
            t += self.period
        if t >= self.period:
            t = 0.0
        return ConePoint(float(r), t)


@dataclass(frozen=True)
class ConePoint:
    """Polar coordinates on a cone. Use :meth:`ConeParams.point` to reduce theta."""

    r: float
    theta: float

    def __post_init__(self):
        if not (self.r >= 0 and math.isfinite(self.r)):
            raise ValueError(f"r must be finite and >= 0, got {self.r}")
        if not math.isfinite(self.theta):
            raise ValueError("theta must be finite")


@dataclass(frozen=True)
class ImageTerm:
    j: int
    d_j: float
    delta_theta_j: float


def weight_vanishes(sigma: float) -> bool:
    """True when ``1/sigma`` is an integer, where ``A_sigma`` is identically zero."""
    inv = 1.0 / sigma
    return abs(inv - round(inv)) <= 1e-14 * inv


def image_window(dtheta, sigma: float):
    """Integer range ``j_lo..j_hi`` with ``-pi < dtheta + 2 pi sigma j <= pi``.

    Returns arrays ``(j_lo, j_hi)``; the window is empty when ``j_lo > j_hi``.
    """
    dtheta = np.asarray(dtheta, dtype=float)
    per = TWO_PI * sigma
    j_hi = np.floor((math.pi - dtheta) / per).astype(int)
    j_lo = np.floor((-math.pi - dtheta) / per).astype(int) + 1
    # floor() of a rounded quotient can land one off; settle it on the
    # actual shifted angle so every consumer sees the same set
    for _ in range(2):
        j_hi = np.where(dtheta + per * (j_hi + 1) <= math.pi, j_hi + 1, j_hi)
        j_hi = np.where(dtheta + per * j_hi > math.pi, j_hi - 1, j_hi)
        j_lo = np.where(dtheta + per * j_lo <= -math.pi, j_lo + 1, j_lo)
        j_lo = np.where(dtheta + per * (j_lo - 1) > -math.pi, j_lo - 1, j_lo)
    return j_lo, j_hi


def image_terms(x: ConePoint, y: ConePoint, cone: ConeParams) -> list:
    """All images ``j`` with ``-pi < theta1 - theta2 + 2 j sigma pi <= pi``."""
    dth = x.theta - y.theta
    j_lo, j_hi = image_window(dth, cone.sigma)
    out = []
    for j in range(int(j_lo), int(j_hi) + 1):
        a = dth + cone.period * j
        d2 = x.r * x.r + y.r * y.r - 2.0 * math.cos(a) * x.r * y.r
        out.append(ImageTerm(j, math.sqrt(max(d2, 0.0)), a))
    return out


def diffraction_distance(r1, r2, s):
    """``d_s = sqrt(r1^2 + r2^2 + 2 r1 r2 cosh s)``."""
    r1 = np.asarray(r1, dtype=float)
    r2 = np.asarray(r2, dtype=float)
    s = np.asarray(s, dtype=float)
    # (r1 + r2)^2 + 4 r1 r2 sinh^2(s/2) avoids cancellation near s = 0
    sh = np.sinh(0.5 * s)
    out = np.sqrt((r1 + r2) ** 2 + 4.0 * r1 * r2 * sh * sh)
    return out if out.ndim else float(out)


def diffraction_phase_derivs(r1, r2, s):
    """Return ``(d_s, d/ds d_s, d^2/ds^2 d_s)``."""
    r1 = np.asarray(r1, dtype=float)
    r2 = np.asarray(r2, dtype=float)
    s = np.asarray(s, dtype=float)
    d = np.asarray(diffraction_distance(r1, r2, s))
    p = r1 * r2
    with np.errstate(invalid="ignore", divide="ignore"):
        d1 = np.where(d > 0, p * np.sinh(s) / d, 0.0)
        d2 = np.where(d > 0, (p * np.cosh(s) - d1 * d1) / d, 0.0)
    if d.ndim == 0:
        return float(d), float(d1), float(d2)
    return d, d1, d2


def pole_offsets(dtheta, sigma: float):
    """Reduced angles ``(eps_minus, eps_plus)`` of the two ``A_sigma`` terms.

    ``eps_minus = (pi - dtheta_{j_hi}) / sigma`` lies in ``[0, 2 pi)`` and
    ``eps_plus = (pi + dtheta_{j_lo}) / sigma`` in ``(0, 2 pi]``, where
    ``j_lo..j_hi`` is the image window.  Each is congruent mod ``2 pi`` to
    ``(pi -+ dtheta) / sigma``, and a pole of the corresponding term sits at
    ``s = 0`` exactly when it equals ``0`` (resp. ``2 pi``).
    """
    dtheta = np.asarray(dtheta, dtype=float)
    j_lo, j_hi = image_window(dtheta, sigma)
    per = TWO_PI * sigma
    em = (math.pi - (dtheta + per * j_hi)) / sigma
    ep = (math.pi + (dtheta + per * j_lo)) / sigma
    return em, ep


def a_sigma_term(s, eps, sigma: float):
    """One term ``sin(eps) / (2 (cosh(s/sigma) - cos eps))``, no pole handling."""
    s = np.asarray(s, dtype=float)
    eps = np.asarray(eps, dtype=float)
    sh = np.sinh(0.5 * s / sigma)
    sn = np.sin(0.5 * eps)
    return 0.5 * np.sin(eps) / (2.0 * sh * sh + 2.0 * sn * sn)


def a_sigma(s, dtheta, cone: ConeParams):
    """Diffraction weight ``A_sigma(s, theta1, theta2)`` with ``dtheta = theta1 - theta2``.

    At ``s = 0`` on a pole of the first (second) term the value is ``+inf``
    (``-inf``), the sign of the adjacent Lorentzian peak; callers must not
    integrate through it.  For ``1/sigma`` an integer the weight is
    identically zero and exactly ``0.0`` is returned.
    """
    s = np.asarray(s, dtype=float)
    dtheta = np.asarray(dtheta, dtype=float)
    if np.any(s < 0):
        raise ValueError("a_sigma requires s >= 0")
    shape = np.broadcast(s, dtheta).shape
    if weight_vanishes(cone.sigma):
        out = np.zeros(shape)
        return out if out.ndim else float(out)
    s_b, d_b = np.broadcast_arrays(s, dtheta)
    em, ep = pole_offsets(d_b, cone.sigma)
    with np.errstate(divide="ignore", invalid="ignore"):
        tm = a_sigma_term(s_b, em, cone.sigma)
        tp = a_sigma_term(s_b, ep, cone.sigma)
    tm = np.where((s_b == 0) & (em == 0), np.inf, tm)
    tp = np.where((s_b == 0) & (ep == TWO_PI), -np.inf, tp)
    out = tm + tp
    return out if out.ndim else float(out)


def fold_angle(dtheta, sigma: float):
    """Representative of ``+-dtheta`` modulo ``2 pi sigma`` in ``[0, pi sigma]``."""
    per = TWO_PI * sigma
    d = np.mod(np.asarray(dtheta, dtype=float), per)
    d = np.minimum(d, per - d)
    return d if d.ndim else float(d)


def geodesic_distance(x: ConePoint, y: ConePoint, cone: ConeParams) -> float:
    """Distance on the cone: law of cosines within angle ``pi``, else ``r1 + r2``."""
    dth = fold_angle(x.theta - y.theta, cone.sigma)
    if dth <= math.pi:
        d2 = x.r * x.r + y.r * y.r - 2.0 * x.r * y.r * math.cos(dth)
        return math.sqrt(max(d2, 0.0))
    return x.r + y.r


def a_sigma_l1(dtheta: float, cone: ConeParams, tol: float = 1e-8):
    """``int_0^inf |A_sigma(s, dtheta)| ds`` and an error estimate.

    Panel edges cluster at ``s = 0`` on the scale of the Lorentzian widths
    ``sigma eps`` of the two terms; beyond ``2 sigma`` the weight decays like
    ``exp(-s / sigma)``.
    """
    from .quadrature import QuadratureConfig, integrate_adaptive, integrate_semi_infinite_decay

    if weight_vanishes(cone.sigma):
        return 0.0, 0.0
    sigma = cone.sigma
    em, ep = pole_offsets(np.array([dtheta]), sigma)
    em, ep = float(em[0]), float(ep[0])

    def f(s):
        s = np.asarray(s, dtype=float)
        with np.errstate(divide="ignore", invalid="ignore"):
            v = np.abs(a_sigma_term(s, em, sigma) + a_sigma_term(s, ep, sigma))
        return np.where(np.isfinite(v), v, 0.0)

    cfg = QuadratureConfig(tol=tol)
    widths = [w for w in (sigma * em, sigma * (TWO_PI - ep)) if w > 0]
    poles = [(0.0, w) for w in widths]
    # geometric grading towards the origin resolves peaks of any width
    grading = [2.0 * sigma * 4.0**-k for k in range(1, 20)]
    head, e1 = integrate_adaptive(f, 0.0, 2.0 * sigma, cfg, poles=poles, breakpoints=grading)
    tail, e2 = integrate_semi_infinite_decay(f, 2.0 * sigma, 1.0 / sigma, cfg)
    return head + tail, e1 + e2
