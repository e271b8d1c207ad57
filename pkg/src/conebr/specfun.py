"""
Bessel functions of the first kind at real nonnegative order, and Gamma.

All routines work in double precision and accept numpy arrays (broadcast
against each other).  ``bessel_j`` switches between three regimes:

* ascending power series when ``x**2 <= 2 (nu + 1)`` (or ``x <= 2``),
* the Hankel large-argument expansion when ``x >= max(30, nu**2 / 2)``,
* Miller backward recurrence in the integer offsets ``mu + n`` of the
  fractional part ``mu`` of ``nu``, normalised with
  ``(x/2)**mu / Gamma(mu + 1) = sum_k e_k J_{mu+2k}(x)`` otherwise.
"""

from __future__ import annotations

import math

import numpy as np

__all__ = [
    "SpecfunError",
    "gamma",
    "lgamma",
    "bessel_j",
    "bessel_j_scaled",
    "hankel_coefficients",
]


class SpecfunError(ValueError):
    """Domain or convergence failure in a special function."""


# Lanczos g=7, n=9; used only on [1, 2) after argument reduction.
_LANCZOS_G = 7.0
_LANCZOS = (
    0.99999999999980993,
    676.5203681218851,
    -1259.1392167224028,
    771.32342877765313,
    -176.61502916214059,
    12.507343278686905,
    -0.13857109526572012,
    9.9843695780195716e-6,
    1.5056327351493116e-7,
)


def _lanczos(y: float) -> float:
    # Gamma(y) for y in [1, 2)
    z = y - 1.0
    acc = _LANCZOS[0]
    for i in range(1, 9):
        acc += _LANCZOS[i] / (z + i)
    t = z + _LANCZOS_G + 0.5
    return math.sqrt(2.0 * math.pi) * t ** (z + 0.5) * math.exp(-t) * acc


def gamma(x: float) -> float:
    """Gamma function for real ``x > 0``.

    The argument is shifted into ``[1, 2)`` by the functional equation and
    the Lanczos sum is applied there, which keeps the relative error at a
    few ulp for every representable result.
    """
    x = float(x)
    if not x > 0.0 or not math.isfinite(x):
        raise SpecfunError(f"gamma requires x > 0, got {x!r}")
    if x > 171.6:
        raise OverflowError("gamma(x) overflows double precision for x > 171.6")
    if x == math.floor(x) and x <= 171.0:
        return float(math.factorial(int(x) - 1))
    scale = 1.0
    y = x
    while y < 1.0:
        scale /= y
        y += 1.0
    while y >= 2.0:
        y -= 1.0
        scale *= y
    return scale * _lanczos(y)


_STIRLING = (
    1.0 / 12.0,
    -1.0 / 360.0,
    1.0 / 1260.0,
    -1.0 / 1680.0,
    1.0 / 1188.0,
    -691.0 / 360360.0,
)


def lgamma(x: float) -> float:
    """Natural log of Gamma for ``x > 0``."""
    x = float(x)
    if not x > 0.0:
        raise SpecfunError(f"lgamma requires x > 0, got {x!r}")
    if x < 20.0:
        return math.log(gamma(x))
    inv = 1.0 / x
    inv2 = inv * inv
    corr = 0.0
    p = inv
    for c in _STIRLING:
        corr += c * p
        p *= inv2
    return (x - 0.5) * math.log(x) - x + 0.5 * math.log(2.0 * math.pi) + corr


def hankel_coefficients(nu: float, kmax: int) -> np.ndarray:
    """Coefficients ``a_k(nu)`` of the Hankel expansion, ``k = 0..kmax``.

    ``H^(1)_nu(z) ~ sqrt(2/(pi z)) exp(i chi) sum_k i^k a_k(nu) / z^k``.
    """
    out = np.empty(kmax + 1)
    out[0] = 1.0
    mu4 = 4.0 * nu * nu
    for k in range(1, kmax + 1):
        out[k] = out[k - 1] * (mu4 - (2 * k - 1) ** 2) / (8.0 * k)
    return out


def _check(nu, x):
    nu = np.asarray(nu, dtype=float)
    x = np.asarray(x, dtype=float)
    if np.any(~np.isfinite(nu)) or np.any(nu < 0):
        raise SpecfunError("bessel_j requires finite order nu >= 0")
    if np.any(np.isnan(x)) or np.any(x < 0):
        raise SpecfunError("bessel_j requires argument x >= 0")
    return np.broadcast_arrays(nu, x)


def _series_scaled(nu: np.ndarray, x: np.ndarray) -> np.ndarray:
    """``J_nu(x) / (x/2)**nu`` by the ascending series (1-d inputs)."""
    y = 0.25 * x * x
    nu_u, inv = np.unique(nu, return_inverse=True)
    inv_g = np.array([1.0 / gamma(v + 1.0) if v < 170 else math.exp(-lgamma(v + 1.0)) for v in nu_u])
    term = inv_g[inv]
    total = term.copy()
    for m in range(1, 400):
        term = -term * y / (m * (nu + m))
        total += term
        if np.all(np.abs(term) <= 1e-17 * np.abs(total)):
            break
    else:
        raise SpecfunError("power series for J_nu did not converge")
    return total


def _series(nu: np.ndarray, x: np.ndarray) -> np.ndarray:
    # keep Gamma and power separate; ratio (x/2)^nu / Gamma(nu+1) built as a
    # product to avoid exp(large log) round-off
    h = 0.5 * x
    n_int = np.floor(nu).astype(int)
    mu = nu - n_int
    mu_u, inv = np.unique(mu, return_inverse=True)
    pref = h**mu / np.array([gamma(m + 1.0) for m in mu_u])[inv]
    for i in range(1, int(n_int.max(initial=0)) + 1):
        sel = n_int >= i
        pref[sel] *= h[sel] / (mu[sel] + i)
    y = 0.25 * x * x
    term = np.ones_like(x)
    total = np.ones_like(x)
    for m in range(1, 400):
        term = -term * y / (m * (nu + m))
        total += term
        if np.all(np.abs(term) <= 1e-17 * np.abs(total)):
            break
    else:
        raise SpecfunError("power series for J_nu did not converge")
    return pref * total


def _asymptotic(nu: np.ndarray, x: np.ndarray) -> np.ndarray:
    mu4 = 4.0 * nu * nu
    p = np.ones_like(x)
    q = np.zeros_like(x)
    term = np.ones_like(x)
    done = np.zeros(x.shape, dtype=bool)
    smallest = np.full_like(x, np.inf)
    for k in range(1, 200):
        term = np.where(done, 0.0, term * (mu4 - (2 * k - 1) ** 2) / (8.0 * k * x))
        mag = np.abs(term)
        # stop each element at the smallest term of the divergent series
        grew = ~done & (mag > smallest)
        term = np.where(grew, 0.0, term)
        smallest = np.where(done | grew, smallest, mag)
        done |= grew | (mag <= 1e-17)
        r = k % 4
        if r == 1:
            q += term
        elif r == 2:
            p -= term
        elif r == 3:
            q -= term
        else:
            p += term
        if np.all(done):
            break
    if np.any(smallest > 1e-15):
        raise SpecfunError("Hankel expansion did not reach tolerance")
    c = (0.5 * nu + 0.25) * np.pi
    cos_chi = np.cos(x) * np.cos(c) + np.sin(x) * np.sin(c)
    sin_chi = np.sin(x) * np.cos(c) - np.cos(x) * np.sin(c)
    return np.sqrt(2.0 / (np.pi * x)) * (p * cos_chi - q * sin_chi)


def _miller_start(nu: np.ndarray, x: np.ndarray) -> np.ndarray:
    top = np.maximum(x + 12.0 * np.cbrt(x), nu)
    return np.ceil(top + 30.0).astype(int)


def _miller(nu: np.ndarray, x: np.ndarray) -> np.ndarray:
    out = np.empty_like(x)
    start = _miller_start(nu, x)
    # bucket by start index so small arguments do not pay for large ones
    keys = np.ceil(np.log2(start + 1) * 4).astype(int)
    for key in np.unique(keys):
        sel = keys == key
        out[sel] = _miller_block(nu[sel], x[sel], int(start[sel].max()))
    return out


def _miller_block(nu: np.ndarray, x: np.ndarray, n_start: int) -> np.ndarray:
    n_target = np.floor(nu).astype(int)
    mu = nu - n_target
    if n_start % 2:
        n_start += 1
    # g_k = Gamma(mu + k) / Gamma(k + 1), descended from the top index
    k_top = n_start // 2
    mu_u, inv = np.unique(mu, return_inverse=True)
    g = np.array([math.exp(lgamma(m + k_top) - lgamma(k_top + 1.0)) for m in mu_u])[inv]
    inv_g1 = np.array([1.0 / gamma(m + 1.0) for m in mu_u])[inv]
    f_next = np.zeros_like(x)
    f_cur = np.full_like(x, 1e-30)
    norm = np.zeros_like(x)
    captured = np.zeros_like(x)
    inv_x = 1.0 / x
    for n in range(n_start, -1, -1):
        # f_cur holds the unnormalised J_{mu+n}
        if n % 2 == 0:
            k = n // 2
            if k == 0:
                norm += f_cur
            else:
                norm += (mu + 2 * k) * g * inv_g1 * f_cur
                g = g * k / (mu + k - 1.0) if k > 1 else g
        hit = n_target == n
        if np.any(hit):
            captured = np.where(hit, f_cur, captured)
        if n == 0:
            break
        f_prev = 2.0 * (mu + n) * inv_x * f_cur - f_next
        f_next, f_cur = f_cur, f_prev
        big = np.abs(f_cur) > 1e200
        if np.any(big):
            s = np.where(big, 1e-200, 1.0)
            f_cur = f_cur * s
            f_next = f_next * s
            norm = norm * s
            captured = captured * s
    return captured / norm * (0.5 * x) ** mu * inv_g1


def bessel_j(nu, x):
    """Bessel function of the first kind ``J_nu(x)``, ``nu >= 0``, ``x >= 0``.

    Parameters
    ----------
    nu, x : float or array_like
        Order and argument; broadcast against each other.

    Returns
    -------
    float or ndarray
        Values of ``J_nu(x)``.

    Raises
    ------
    SpecfunError
        Negative or non-finite order, negative argument, or a regime that
        failed to converge.
    """
    nu_b, x_b = _check(nu, x)
    scalar = nu_b.ndim == 0
    nu_f = np.atleast_1d(nu_b).ravel().astype(float)
    x_f = np.atleast_1d(x_b).ravel().astype(float)
    out = np.empty_like(x_f)

    zero = x_f == 0.0
    out[zero] = np.where(nu_f[zero] == 0.0, 1.0, 0.0)
    inf = np.isinf(x_f)
    out[inf] = 0.0
    rest = ~(zero | inf)
    series = rest & ((x_f <= 2.0) | (x_f * x_f <= 2.0 * (nu_f + 1.0)))
    asym = rest & ~series & (x_f >= np.maximum(30.0, 0.5 * nu_f * nu_f))
    miller = rest & ~series & ~asym
    if np.any(series):
        out[series] = _series(nu_f[series], x_f[series])
    if np.any(asym):
        out[asym] = _asymptotic(nu_f[asym], x_f[asym])
    if np.any(miller):
        out[miller] = _miller(nu_f[miller], x_f[miller])
    out = out.reshape(np.shape(x_b))
    return float(out) if scalar else out


def bessel_j_scaled(nu, x):
    """``J_nu(x) / (x/2)**nu``, regular at ``x = 0`` where it equals ``1/Gamma(nu+1)``."""
    nu_b, x_b = _check(nu, x)
    scalar = nu_b.ndim == 0
    nu_f = np.atleast_1d(nu_b).ravel().astype(float)
    x_f = np.atleast_1d(x_b).ravel().astype(float)
    out = np.empty_like(x_f)
    small = x_f * x_f <= 2.0 * (nu_f + 1.0)
    if np.any(small):
        out[small] = _series_scaled(nu_f[small], x_f[small])
    big = ~small
    if np.any(big):
        out[big] = bessel_j(nu_f[big], x_f[big]) / (0.5 * x_f[big]) ** nu_f[big]
    out = out.reshape(np.shape(x_b))
    return float(out) if scalar else out
