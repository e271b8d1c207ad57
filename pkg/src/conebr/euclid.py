"""
The planar Bochner-Riesz kernel and its oscillatory decomposition.

``K(r) = lam^2 Gamma(delta+1) / (4 pi) * J_{1+delta}(lam r) / (lam r / 2)^{1+delta}``

is the inverse Fourier transform of ``(1 - |xi|^2 / lam^2)_+^delta`` in two
dimensions.  For the decomposition the Bessel factor is replaced at large
argument by its Hankel expansion, giving two conjugate oscillatory terms and
a rapidly decaying remainder.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from functools import lru_cache

import numpy as np

from .specfun import bessel_j_scaled, gamma, hankel_coefficients

__all__ = [
    "BRParams",
    "k_euclid_exact",
    "main_plus",
    "remainder",
    "remainder_constant",
    "k_euclid_asymptotic",
    "envelope_a",
    "kernel_envelope",
    "N_HANKEL_TERMS",
]

# Hankel terms kept in the oscillatory part; the remainder is then
# O(r^{-(1/2 + 1 + delta + N_HANKEL_TERMS)}).
N_HANKEL_TERMS = 3


@dataclass(frozen=True)
class BRParams:
    """Frequency cutoff ``lam`` and order ``delta`` of the mean."""

    lam: float
    delta: float

    def __post_init__(self):
        if not (self.lam > 0 and math.isfinite(self.lam)):
            raise ValueError(f"lambda must be positive, got {self.lam}")
        if not (self.delta > 0 and math.isfinite(self.delta)):
            raise ValueError(f"delta must be positive, got {self.delta}")


def _out(a):
    return a if np.ndim(a) else float(a)


# Piecewise Chebyshev table of J_nu(x) / (x/2)^nu on [0, _TAB_X]; beyond it
# the Hankel expansion is cheap, below it the recurrence is not.
_TAB_X = 32.0
_TAB_H = 0.5
_TAB_DEG = 20


@lru_cache(maxsize=64)
def _profile_table(nu: float) -> np.ndarray:
    n_pan = int(round(_TAB_X / _TAB_H))
    k = np.arange(_TAB_DEG + 1)
    t = np.cos(np.pi * (k + 0.5) / (_TAB_DEG + 1))
    lo = np.arange(n_pan)[:, None] * _TAB_H
    vals = bessel_j_scaled(nu, (lo + 0.5 * _TAB_H * (t[None, :] + 1.0)).ravel()).reshape(n_pan, -1)
    # discrete Chebyshev transform at first-kind nodes
    basis = np.cos(np.pi * np.outer(k, k + 0.5) / (_TAB_DEG + 1))
    coef = vals @ basis.T * (2.0 / (_TAB_DEG + 1))
    coef[:, 0] *= 0.5
    return coef


def _profile(nu: float, x: np.ndarray) -> np.ndarray:
    out = np.empty_like(x)
    near = x < _TAB_X
    if np.any(near):
        xn = x[near]
        idx = np.minimum((xn / _TAB_H).astype(int), int(round(_TAB_X / _TAB_H)) - 1)
        t = 2.0 * (xn - idx * _TAB_H) / _TAB_H - 1.0
        c = _profile_table(float(nu))[idx]
        b1 = np.zeros_like(xn)
        b2 = np.zeros_like(xn)
        for j in range(_TAB_DEG, 0, -1):
            b1, b2 = 2.0 * t * b1 - b2 + c[:, j], b1
        out[near] = t * b1 - b2 + c[:, 0]
    if not np.all(near):
        out[~near] = _profile_far(nu, x[~near])
    return out


_FAR_TERMS = 16


@lru_cache(maxsize=64)
def _far_coefficients(nu: float):
    a = np.asarray(hankel_coefficients(nu, _FAR_TERMS - 1), dtype=float)
    # i^k a_k split into the real (P) and imaginary (Q) series
    k = np.arange(_FAR_TERMS)
    sign = np.array([1.0, 0.0, -1.0, 0.0])[k % 4] + 1j * np.array([0.0, 1.0, 0.0, -1.0])[k % 4]
    return a * sign


def _profile_far(nu: float, x: np.ndarray) -> np.ndarray:
    # J_nu(x) = sqrt(2/(pi x)) Re(exp(i chi) sum_k i^k a_k x^-k) for x >= 32,
    # where 16 terms leave a truncation error below 1e-15 for nu <= 5
    c = _far_coefficients(float(nu))
    inv = 1.0 / x
    series = np.full(x.shape, c[-1])
    for ck in c[-2::-1]:
        series = series * inv + ck
    # angle addition keeps the phase exact for large x
    c0 = (0.5 * nu + 0.25) * math.pi
    cx, sx = np.cos(x), np.sin(x)
    cos_chi = cx * math.cos(c0) + sx * math.sin(c0)
    sin_chi = sx * math.cos(c0) - cx * math.sin(c0)
    j = np.sqrt(2.0 / (math.pi * x)) * (cos_chi * series.real - sin_chi * series.imag)
    return j / (0.5 * x) ** nu


def k_euclid_exact(dist, p: BRParams):
    """Radial profile of the planar kernel at distance ``dist >= 0``.

    Evaluated through ``J_nu(x) / (x/2)^nu``, so ``dist = 0`` gives the
    limit ``lam^2 / (4 pi (delta + 1))`` without special casing.
    """
    x = p.lam * np.asarray(dist, dtype=float)
    if np.any(x < 0):
        raise ValueError("distance must be nonnegative")
    if np.any(np.isnan(x)):
        raise ValueError("distance is NaN")
    c = p.lam * p.lam * gamma(p.delta + 1.0) / (4.0 * math.pi)
    return _out(c * _profile(1.0 + p.delta, np.atleast_1d(x).ravel()).reshape(x.shape))


def _cutoff_power(delta: float) -> int:
    # (1 - e^{-x})^M removes the x^{-(3/2 + delta + K - 1)} blow-up at 0
    return int(math.ceil(1.5 + delta + N_HANKEL_TERMS))


def main_plus(x, delta: float):
    """Outgoing oscillatory part at ``lam = 1`` as a function of ``x = lam r``.

    ``main_plus + conj(main_plus) + remainder = k_euclid_exact`` at
    ``lam = 1``.  A smooth cutoff ``(1 - exp(-x))^M`` keeps it finite at 0.
    """
    x = np.asarray(x, dtype=float)
    nu = 1.0 + delta
    a = hankel_coefficients(nu, N_HANKEL_TERMS - 1)
    c = gamma(delta + 1.0) * 2.0**delta / (2.0 * math.pi)
    m = _cutoff_power(delta)
    with np.errstate(divide="ignore", invalid="ignore"):
        inv = 1.0 / x
        series = np.zeros(x.shape, dtype=complex)
        ik = 1.0 + 0j
        for k in range(N_HANKEL_TERMS):
            series = series + ik * a[k] * inv**k
            ik *= 1j
        chi = x - (0.5 * nu + 0.25) * math.pi
        amp = 0.5 * math.sqrt(2.0 / math.pi) * c * x ** (-nu - 0.5)
        val = amp * np.exp(1j * chi) * series * (-np.expm1(-x)) ** m
    val = np.where(x == 0, 0.0, val)
    return val if val.ndim else complex(val)


def remainder(x, delta: float):
    """``k_euclid_exact - 2 Re main_plus`` at ``lam = 1``."""
    return _out(k_euclid_exact(x, BRParams(1.0, delta)) - 2.0 * np.real(main_plus(x, delta)))


@lru_cache(maxsize=64)
def remainder_constant(delta: float) -> float:
    """Fitted ``C`` with ``|remainder(x)| <= C (1 + x)^{-3}``.

    Sampled on a dense log grid over ``[0, 1e4]`` and inflated by 25 %.
    """
    x = np.concatenate([[0.0], np.geomspace(1e-3, 1e4, 4000)])
    ratio = np.abs(remainder(x, delta)) * (1.0 + x) ** 3
    return 1.25 * float(ratio.max())


def k_euclid_asymptotic(dist, p: BRParams):
    """Oscillatory split of the kernel at distance ``dist``.

    Returns
    -------
    main_plus, main_minus : complex or ndarray
        Conjugate oscillatory terms, in physical units (factor ``lam^2``).
    remainder_bound : float or ndarray
        ``C lam^2 (1 + lam dist)^{-3}``.
    """
    x = p.lam * np.asarray(dist, dtype=float)
    scale = p.lam * p.lam
    mp = scale * main_plus(x, p.delta)
    bound = scale * remainder_constant(p.delta) * (1.0 + x) ** -3
    return mp, np.conj(mp), _out(bound)


def envelope_a(r, delta: float):
    """Envelope ``a_+(r) = main_plus(r) (1 + r)^{3/2 + delta} e^{-i r}`` at ``lam = 1``."""
    r = np.asarray(r, dtype=float)
    val = main_plus(r, delta) * (1.0 + r) ** (1.5 + delta) * np.exp(-1j * r)
    return val if np.ndim(val) else complex(val)


@lru_cache(maxsize=64)
def _envelope_const(delta: float) -> float:
    return gamma(delta + 1.0) * 2.0**delta / (2.0 * math.pi)


def kernel_envelope(x, delta: float):
    """Upper envelope of ``|k_euclid_exact|`` at ``lam = 1`` for ``x >= 1``.

    Uses the Bessel modulus bound ``|J_nu(x)| <= sqrt(2/(pi x)) (1 + nu^2/x^2)``
    (a loose but safe form of the large-argument modulus expansion); for
    ``x < 1`` the value at the origin is returned.
    """
    nu = 1.0 + delta
    c = _envelope_const(delta)
    near = 1.0 / (4.0 * math.pi * (delta + 1.0))
    if isinstance(x, float):
        if x < 1.0:
            return near
        return min(near, c * x ** (-nu) * math.sqrt(2.0 / (math.pi * x)) * (1.0 + nu * nu / (x * x)))
    x = np.asarray(x, dtype=float)
    with np.errstate(divide="ignore"):
        far = c * x ** (-nu) * np.sqrt(2.0 / (math.pi * x)) * (1.0 + nu * nu / (x * x))
    return _out(np.where(x < 1.0, near, np.minimum(far, near)))
