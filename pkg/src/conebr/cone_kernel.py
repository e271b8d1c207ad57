"""
Bochner-Riesz kernel on a cone as an image sum plus a diffraction integral.

    K(x, y) = sum_j K_e(d_j) - 1/(pi sigma) int_0^inf K_e(d_s) A_sigma(s, dtheta) ds

Internally everything runs at ``lam = 1`` (``r -> lam r``) and is scaled by
``lam^2`` on the way out.  For a batch of angle differences sharing
``(r1, r2)`` the radial function is sampled once on a common ``s`` grid and
only the cheap ``A_sigma`` factor is recomputed per angle.

Each term of ``A_sigma`` is ``T(s; e) = sin(e) / (2 (cosh(s/sigma) - cos e))``
with ``e`` reduced so that its pole sits at ``s = 0`` when the matching
image crosses ``|dtheta_j| = pi``.  Writing

    int f(d_s) T ds = f(d_0) int_0^{2 sigma} T ds
                    + int_0^{2 sigma} (f(d_s) - f(d_0)) T ds + int_{2 sigma}^inf f(d_s) T ds,

the first piece is elementary,
``int_0^S T ds = sigma * atan2(tanh(S / 2 sigma) cos(e/2), sin(e/2))``,
and the other two are bounded uniformly in ``e``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable

import numpy as np

from .euclid import (
    BRParams,
    k_euclid_exact,
    kernel_envelope,
    main_plus,
    remainder,
    remainder_constant,
)
from .geometry import (
    ConeParams,
    ConePoint,
    fold_angle,
    image_window,
    pole_offsets,
    weight_vanishes,
)
from .quadrature import QuadratureConfig, QuadratureError, integrate_panels_multi, oscillation_panel_hint

__all__ = [
    "ConeKernelConfig",
    "KernelBreakdown",
    "KernelComponents",
    "Radial",
    "exact_radial",
    "kernel",
    "kernel_dtheta",
    "kernel_components",
    "diffraction_integrals",
    "REDUCTION_CONVENTIONS",
    "reduction_identity_residual",
    "diffraction_bound_ratio",
]


@dataclass(frozen=True)
class ConeKernelConfig:
    cone: ConeParams
    br: BRParams
    quad: QuadratureConfig = field(default_factory=QuadratureConfig)


@dataclass(frozen=True)
class KernelBreakdown:
    """Image part, diffraction part and their sum (physical units)."""

    geometric: float
    diffractive: float
    total: float
    err_est: float = 0.0


@dataclass(frozen=True)
class KernelComponents:
    G_m_plus: complex
    G_m_minus: complex
    G_e: float
    D_m_plus: complex
    D_m_minus: complex
    D_e: float
    err_est: float = 0.0

    def total(self) -> float:
        return float(np.real(self.G_m_plus + self.G_m_minus + self.D_m_plus + self.D_m_minus) + self.G_e + self.D_e)


@dataclass(frozen=True)
class Radial:
    """A radial profile ``f(d)`` with an envelope used for tail truncation.

    ``freq`` is the wavenumber of the oscillation ``exp(+-i freq d)`` (zero
    for non-oscillatory profiles).
    """

    f: Callable
    env: Callable
    freq: float


def exact_radial(br: BRParams) -> Radial:
    lam, delta = br.lam, br.delta
    return Radial(
        lambda d: k_euclid_exact(d, br),
        lambda d: lam * lam * kernel_envelope(lam * d, delta),
        lam,
    )


def _main_radial(delta: float) -> Radial:
    return Radial(lambda d: main_plus(d, delta), lambda d: kernel_envelope(d, delta), 1.0)


def _remainder_radial(delta: float) -> Radial:
    c = remainder_constant(delta)
    return Radial(lambda d: remainder(d, delta), lambda d: c * (1.0 + d) ** -3, 0.0)


# geometric grading towards s = 0: edges at 2 sigma * 4^-k
_GRADING_LEVELS = 16
# initial panels span one oscillation period (8 hint widths)
_OSC_PANEL_FACTOR = 8.0
_HARD_SMAX_SIGMAS = 80.0


def _closed_T(S, eps, sigma):
    # int_0^S sin(e) / (2 (cosh(s/sigma) - cos e)) ds
    return sigma * np.arctan2(np.tanh(0.5 * S / sigma) * np.cos(0.5 * eps), np.sin(0.5 * eps))


def _tail_estimate(S, r1, r2, sigma, radial: Radial):
    """Bound on ``int_S^inf |f(d_s)| (|T_-| + |T_+|) ds`` (two-term weight)."""
    d = math.sqrt((r1 + r2) ** 2 + 4.0 * r1 * r2 * math.sinh(0.5 * S) ** 2)
    env = float(radial.env(d))
    u = S / sigma
    if u > 700:
        return 0.0
    absb = env * 2.0 * sigma * math.exp(-u) / (-math.expm1(-u))
    if radial.freq > 0 and radial.freq * d > 10.0:
        # one integration by parts: amplitude over phase speed, doubled
        phase_speed = radial.freq * r1 * r2 * math.sinh(S) / d
        if phase_speed > 0:
            amp = env / (math.cosh(u) - 1.0)
            return min(absb, 2.0 * amp / phase_speed)
    return absb


def _s_grid(r1, r2, sigma, radial: Radial, s_start, abs_target):
    """Initial panel edges on ``[s_start, S_max]`` and the tail estimate at ``S_max``.

    Panel widths are the smallest of: a geometric grading towards ``s = 0``
    (ratio 4, from ``2 sigma 4^-16``), one local oscillation period, and
    ``sigma / 2``.
    """
    two_sig = 2.0 * sigma
    if s_start == 0.0:
        edges = [0.0, two_sig * 4.0**-_GRADING_LEVELS]
    else:
        edges = [s_start]
    s = edges[-1]
    cap = 0.5 * sigma
    hard = s_start + _HARD_SMAX_SIGMAS * sigma + two_sig
    tail = math.inf
    while True:
        w = min(cap, 3.0 * s) if s_start == 0.0 else cap
        if radial.freq > 0 and r1 * r2 > 0:
            for _ in range(2):
                d = math.sqrt((r1 + r2) ** 2 + 4.0 * r1 * r2 * math.sinh(0.5 * (s + w)) ** 2)
                speed = radial.freq * r1 * r2 * math.sinh(s + w) / d
                w = min(w, _OSC_PANEL_FACTOR * oscillation_panel_hint(speed))
        nxt = s + w
        if s < two_sig < nxt:
            nxt = two_sig
        s = nxt
        edges.append(s)
        if s >= two_sig:
            tail = _tail_estimate(s, r1, r2, sigma, radial)
            if tail <= 0.05 * abs_target or s >= hard:
                break
    return np.array(edges), tail


def diffraction_integrals(r1: float, r2: float, eps_m, eps_p, sigma: float, radial: Radial,
                          target_fn: Callable, max_panels: int = 20000, s_start: float = 0.0,
                          abs_target: float = 1e-12):
    """``int_{s_start}^inf f(d_s) (T(s; eps_m) + T(s; eps_p)) ds`` for arrays of offsets.

    Parameters
    ----------
    r1, r2 : float
        Radii (already multiplied by the frequency scale of ``radial``).
    eps_m, eps_p : ndarray, shape (m,)
        Reduced angles from :func:`pole_offsets`.
    target_fn : callable
        Maps current integral values, shape ``(m,)``, to absolute targets.
    abs_target : float
        Smallest target, used to place the truncation point.

    Returns
    -------
    values, errs : ndarray, shape (m,)
    """
    eps_m = np.atleast_1d(np.asarray(eps_m, dtype=float))
    eps_p = np.atleast_1d(np.asarray(eps_p, dtype=float))
    d0 = r1 + r2
    f0 = radial.f(np.array([d0]))[0]
    closed_inf = 0.5 * sigma * ((math.pi - eps_m) + (math.pi - eps_p))
    if r1 == 0.0 or r2 == 0.0:
        # d_s is constant, only the elementary integral remains
        if s_start == 0.0:
            return f0 * closed_inf, np.zeros(eps_m.shape)
        c = closed_inf - _closed_T(s_start, eps_m, sigma) - _closed_T(s_start, eps_p, sigma)
        return f0 * c, np.zeros(eps_m.shape)
    two_sig = 2.0 * sigma
    sin_m, sin_p = np.sin(eps_m), np.sin(eps_p)
    h2_m, h2_p = 2.0 * np.sin(0.5 * eps_m) ** 2, 2.0 * np.sin(0.5 * eps_p) ** 2
    if s_start == 0.0:
        closed = f0 * (_closed_T(two_sig, eps_m, sigma) + _closed_T(two_sig, eps_p, sigma))
    else:
        closed = np.zeros(eps_m.shape)
    edges, tail = _s_grid(r1, r2, sigma, radial, s_start, abs_target)

    def g(s):
        sh = np.sinh(0.5 * s / sigma)
        den = 2.0 * sh * sh
        w = 0.5 * (sin_m / (den[:, None] + h2_m) + sin_p / (den[:, None] + h2_p))
        d = np.sqrt(d0 * d0 + 4.0 * r1 * r2 * np.sinh(0.5 * s) ** 2)
        fv = radial.f(d)
        fv = np.where(s < two_sig, fv - f0, fv) if s_start == 0.0 else fv
        return fv[:, None] * w

    vals, errs = integrate_panels_multi(g, edges, lambda v: target_fn(v + closed) - tail, max_panels)
    return vals + closed, errs + tail


def _images(r1, r2, dth, sigma, f):
    j_lo, j_hi = image_window(dth, sigma)
    n_img = int(np.max(j_hi - j_lo + 1, initial=0))
    out = np.zeros(dth.shape, dtype=complex if np.iscomplexobj(f(np.array([1.0]))) else float)
    per = 2.0 * math.pi * sigma
    for i in range(n_img):
        j = j_lo + i
        ok = j <= j_hi
        a = dth + per * j
        d = np.sqrt(np.maximum((r1 - r2) ** 2 + 4.0 * r1 * r2 * np.sin(0.5 * a) ** 2, 0.0))
        out = out + np.where(ok, f(d), 0.0)
    return out


def _kernel_unit(r1, r2, dth, sigma, radial: Radial, tol, base, max_panels, scale_err=1.0):
    """Geometric and diffractive parts at unit frequency for folded angles ``dth``."""
    geom = _images(r1, r2, dth, sigma, radial.f)
    if weight_vanishes(sigma):
        return geom, np.zeros(dth.shape), np.zeros(dth.shape)
    em, ep = pole_offsets(dth, sigma)
    ps = math.pi * sigma

    def target_fn(v):
        return 0.9 * ps * tol * (base + np.abs(geom - v / ps))

    vals, errs = diffraction_integrals(r1, r2, em, ep, sigma, radial, target_fn, max_panels,
                                       abs_target=0.9 * ps * tol * base)
    return geom, -vals / ps, errs / ps


def kernel_dtheta(r1: float, r2: float, dtheta, cfg: ConeKernelConfig, normalized: bool = True):
    """Kernel for one radius pair and an array of angle differences.

    Returns
    -------
    geometric, diffractive, err_est : ndarray
        Physical units; ``total = geometric + diffractive``.
    """
    sigma, br = cfg.cone.sigma, cfg.br
    if r1 < 0 or r2 < 0 or r1 + r2 <= 0:
        raise ValueError("need r1, r2 >= 0 with r1 + r2 > 0")
    dth = np.atleast_1d(fold_angle(dtheta, sigma))
    lam2 = br.lam * br.lam
    if normalized:
        radial = exact_radial(BRParams(1.0, br.delta))
        g, d, e = _kernel_unit(br.lam * r1, br.lam * r2, dth, sigma, radial, cfg.quad.tol,
                               1.0 / lam2, cfg.quad.max_panels)
        return lam2 * g, lam2 * d, lam2 * e
    # direct evaluation in physical units; used to check the scaling law
    radial = exact_radial(br)
    return _kernel_unit(r1, r2, dth, sigma, radial, cfg.quad.tol, 1.0, cfg.quad.max_panels)


def kernel(x: ConePoint, y: ConePoint, cfg: ConeKernelConfig, normalized: bool = True) -> KernelBreakdown:
    """Bochner-Riesz kernel ``S_lam^delta(x, y)`` on the cone.

    Raises
    ------
    QuadratureError
        If the diffraction integral misses its tolerance.
    """
    g, d, e = kernel_dtheta(x.r, y.r, x.theta - y.theta, cfg, normalized)
    g, d = float(g[0]), float(d[0])
    return KernelBreakdown(g, d, g + d, float(e[0]))


def kernel_components(x: ConePoint, y: ConePoint, cfg: ConeKernelConfig) -> KernelComponents:
    """Six-way split at ``lam = 1``: oscillatory (+/-) and remainder parts of
    the image sum (``G``) and of the diffraction integral (``D``).
    """
    if cfg.br.lam != 1.0:
        raise ValueError("kernel_components expects lam = 1; rescale points first")
    sigma, delta, tol = cfg.cone.sigma, cfg.br.delta, cfg.quad.tol
    dth = np.atleast_1d(fold_angle(x.theta - y.theta, sigma))
    r1, r2 = x.r, y.r
    if r1 + r2 <= 0:
        raise ValueError("need r1 + r2 > 0")
    gm, dm, em = _kernel_unit(r1, r2, dth, sigma, _main_radial(delta), tol, 1.0, cfg.quad.max_panels)
    ge, de, ee = _kernel_unit(r1, r2, dth, sigma, _remainder_radial(delta), tol, 1.0, cfg.quad.max_panels)
    gm, dm = complex(gm[0]), complex(dm[0])
    return KernelComponents(gm, gm.conjugate(), float(ge[0]), dm, dm.conjugate(), float(de[0]),
                            float(2.0 * em[0] + ee[0]))


# Candidate readings of the sigma -> sigma/2 reduction, evaluated as
#   K_{sigma/2}(dtheta) ?= factor * (K_sigma(dtheta + a1) + K_sigma(dtheta + a2))
# with the shifts (a1, a2) applied to dtheta = theta1 - theta2.
REDUCTION_CONVENTIONS = {
    # both angles shifted by pi*sigma, factor 1/2: the shifts cancel
    "both_half_circumference": (0.5, "both", "pi_sigma"),
    # both angles shifted by sigma/2, factor 1/2
    "both_sigma_half": (0.5, "both", "sigma_half"),
    # first angle shifted by pi*sigma (half the larger circle), factor 1
    "one_half_circumference": (1.0, "one", "pi_sigma"),
    # first angle shifted by sigma/2, factor 1
    "one_sigma_half": (1.0, "one", "sigma_half"),
}


def reduction_identity_residual(x: ConePoint, y: ConePoint, cfg: ConeKernelConfig,
                                convention: str = "one_half_circumference") -> float:
    """Residual of the reduction identity between the cones of radius ``sigma/2`` and ``sigma``.

    ``x`` and ``y`` are points on the smaller cone; ``cfg.cone`` is the larger
    one.  See :data:`REDUCTION_CONVENTIONS` for the candidate forms.
    """
    factor, mode, shift_kind = REDUCTION_CONVENTIONS[convention]
    sigma = cfg.cone.sigma
    shift = math.pi * sigma if shift_kind == "pi_sigma" else 0.5 * sigma
    small = ConeKernelConfig(ConeParams(0.5 * sigma), cfg.br, cfg.quad)
    lhs = kernel(x, y, small).total
    dth = x.theta - y.theta
    second = dth if mode == "both" else dth + shift
    g, d, _ = kernel_dtheta(x.r, y.r, np.array([dth, second]), cfg)
    rhs = factor * float(np.sum(g + d))
    return abs(lhs - rhs)


def diffraction_bound_ratio(r1: float, r2: float, dtheta: float, k: int, cfg: ConeKernelConfig) -> float:
    """Ratio of the dyadic diffraction piece on ``s >= 2 sigma`` to its predicted size.

    The numerator is ``|int_{2 sigma}^inf main_+(2^k d_s) sum_{+-} sin w / (cosh(s/sigma) - cos w) ds|``
    (unit frequency, cutoff ``psi = 1``), the denominator
    ``2^{-k(3/2 + delta)} (1 + 2^k r1 r2)^{-1/2}``.
    """
    if not (0.75 <= r1 + r2 <= 8.0 / 3.0):
        raise ValueError("r1 + r2 must lie in [3/4, 8/3]")
    if k < 1:
        raise ValueError("k must be >= 1")
    sigma, delta = cfg.cone.sigma, cfg.br.delta
    if weight_vanishes(sigma):
        return 0.0
    scale = 2.0**k
    radial = _main_radial(delta)
    em, ep = pole_offsets(np.array([fold_angle(dtheta, sigma)]), sigma)
    denom = scale ** -(1.5 + delta) * (1.0 + scale * r1 * r2) ** -0.5
    tgt = cfg.quad.tol * denom
    # the integral in s is scale free, so evaluate main_+ at (2^k r1, 2^k r2)
    vals, _ = diffraction_integrals(scale * r1, scale * r2, em, ep, sigma, radial,
                                    lambda v: np.full(v.shape, tgt), cfg.quad.max_panels,
                                    s_start=2.0 * sigma, abs_target=tgt)
    return float(abs(2.0 * vals[0]) / denom)
