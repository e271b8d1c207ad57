"""
Discretised Bochner-Riesz operator on a cone.

Functions live on tensor grids: Gauss-Legendre in ``r`` (weights include the
factor ``r``) times a uniform grid on the circle of length ``2 pi sigma``.
Because the kernel depends on ``theta1 - theta2`` only, the operator is a
circular convolution in ``theta`` for every pair of radii and is applied with
FFTs.  Kernel tensors are the expensive part; :class:`BROperator` builds one
and reuses it.
"""

from __future__ import annotations

import math
import os
import warnings
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field, replace
from enum import Enum
from functools import lru_cache

import numpy as np

from .cone_kernel import ConeKernelConfig, kernel_dtheta
from .euclid import BRParams
from .geometry import ConeParams, ConePoint
from .quadrature import QuadratureConfig

__all__ = [
    "ConeGrid",
    "SampledFunction",
    "BoundaryCondition",
    "SectorParams",
    "BROperator",
    "kernel_tensor",
    "apply_br",
    "lp_norm",
    "smooth_bump",
    "bump_family",
    "randomized_family",
    "operator_norm_probe",
    "sector_kernel",
    "critical_delta",
    "convergence_experiment",
    "kernel_l1_sup",
    "probe_grids",
    "convergence_grid",
    "default_workers",
]


def default_workers() -> int:
    """Worker count from ``CONEBR_WORKERS`` (default 1)."""
    try:
        return max(1, int(os.environ.get("CONEBR_WORKERS", "1")))
    except ValueError:
        return 1


@lru_cache(maxsize=64)
def _gl(n: int):
    return np.polynomial.legendre.leggauss(n)


@dataclass(frozen=True, eq=False)
class ConeGrid:
    """Tensor grid on the cone.

    Attributes
    ----------
    cone : ConeParams
    r_nodes, r_weights : ndarray
        Radial nodes in ``(0, R]`` and weights that already include ``r``.
    n_theta : int
        Uniform angular nodes ``2 pi sigma k / n_theta``.
    """

    cone: ConeParams
    r_nodes: np.ndarray
    r_weights: np.ndarray
    n_theta: int

    def __post_init__(self):
        if len(self.r_nodes) != len(self.r_weights):
            raise ValueError("r_nodes and r_weights differ in length")
        if self.n_theta < 1:
            raise ValueError("n_theta must be positive")

    @classmethod
    def gauss(cls, cone: ConeParams, R: float, n_r: int, n_theta: int, breaks=None) -> "ConeGrid":
        """Composite Gauss-Legendre in ``r``.

        ``breaks`` are panel boundaries in ``[0, R]`` (default ``[0, R]``);
        each panel gets ``n_r`` nodes.
        """
        edges = np.unique(np.concatenate([[0.0, R], np.asarray(breaks if breaks is not None else [], float)]))
        edges = edges[(edges >= 0) & (edges <= R)]
        x, w = _gl(int(n_r))
        nodes, weights = [], []
        for a, b in zip(edges[:-1], edges[1:]):
            r = 0.5 * (b - a) * x + 0.5 * (a + b)
            nodes.append(r)
            weights.append(0.5 * (b - a) * w * r)
        return cls(cone, np.concatenate(nodes), np.concatenate(weights), int(n_theta))

    @property
    def dtheta(self) -> float:
        return 2.0 * math.pi * self.cone.sigma / self.n_theta

    @property
    def theta_nodes(self) -> np.ndarray:
        return np.arange(self.n_theta) * self.dtheta

    @property
    def weights(self) -> np.ndarray:
        """Area weights ``r dr dtheta`` on the full grid."""
        return self.r_weights[:, None] * np.full(self.n_theta, self.dtheta)[None, :]

    @property
    def shape(self):
        return (len(self.r_nodes), self.n_theta)

    def measure(self) -> float:
        return float(self.weights.sum())

    def sample(self, func) -> "SampledFunction":
        """Evaluate ``func(r, theta)`` (broadcasting arrays) on the grid."""
        r = self.r_nodes[:, None]
        t = self.theta_nodes[None, :]
        return SampledFunction(self, np.broadcast_to(func(r, t), self.shape).astype(complex))

    def rows(self, mask) -> "ConeGrid":
        return ConeGrid(self.cone, self.r_nodes[mask], self.r_weights[mask], self.n_theta)


@dataclass(eq=False)
class SampledFunction:
    grid: ConeGrid
    values: np.ndarray

    def __post_init__(self):
        self.values = np.asarray(self.values, dtype=complex)
        if self.values.shape != self.grid.shape:
            raise ValueError(f"values shape {self.values.shape} does not match grid {self.grid.shape}")

    def _check(self, other):
        if other.grid is not self.grid:
            raise ValueError("functions live on different grids")

    def __add__(self, other):
        self._check(other)
        return SampledFunction(self.grid, self.values + other.values)

    def __sub__(self, other):
        self._check(other)
        return SampledFunction(self.grid, self.values - other.values)

    def __rmul__(self, c):
        return SampledFunction(self.grid, c * self.values)

    def inner(self, other) -> complex:
        """``int f conj(g) dx``."""
        self._check(other)
        return complex(np.sum(self.values * np.conj(other.values) * self.grid.weights))


class BoundaryCondition(str, Enum):
    DIRICHLET = "dirichlet"
    NEUMANN = "neumann"


@dataclass(frozen=True)
class SectorParams:
    """Sector of opening ``alpha``; its doubled cone has ``sigma = alpha / pi``."""

    alpha: float
    bc: BoundaryCondition = BoundaryCondition.DIRICHLET

    def __post_init__(self):
        if not (0 < self.alpha < 2 * math.pi):
            raise ValueError("alpha must lie in (0, 2 pi)")
        object.__setattr__(self, "bc", BoundaryCondition(self.bc))

    @property
    def cone(self) -> ConeParams:
        return ConeParams(self.alpha / math.pi)


def lp_norm(f: SampledFunction, p: float) -> float:
    """Discrete ``L^p`` norm with weights ``r dr dtheta``; ``p = inf`` gives ``max |f|``."""
    a = np.abs(f.values)
    if math.isinf(p):
        return float(a.max(initial=0.0))
    if p < 1:
        raise ValueError("p must be >= 1")
    return float(np.sum(a**p * f.grid.weights) ** (1.0 / p))


def _tensor_rows(args):
    out_r, in_r, n_theta, cfg = args
    m = np.arange(n_theta // 2 + 1)
    dth = m * (2.0 * math.pi * cfg.cone.sigma / n_theta)
    rows = np.empty((len(out_r), len(in_r), n_theta))
    err = 0.0
    for i, r1 in enumerate(out_r):
        for k, r2 in enumerate(in_r):
            if r1 + r2 == 0:
                raise ValueError("both radii at the tip")
            g, d, e = kernel_dtheta(float(r1), float(r2), dth, cfg)
            half = g + d
            rows[i, k, : len(m)] = half
            # K(-dtheta) = K(dtheta)
            rows[i, k, len(m):] = half[1 : n_theta - len(m) + 1][::-1]
            err = max(err, float(np.max(e)))
    return rows, err


def kernel_tensor(out_r, in_r, n_theta: int, cfg: ConeKernelConfig, workers: int | None = None):
    """``K[i, k, m] = K(r_out_i, r_in_k, 2 pi sigma m / n_theta)`` and the worst error estimate.

    Rows are split across ``workers`` processes; the assembly order is fixed,
    so the result does not depend on the worker count.
    """
    out_r = np.asarray(out_r, dtype=float)
    in_r = np.asarray(in_r, dtype=float)
    workers = workers or default_workers()
    if workers <= 1 or len(out_r) < 2:
        return _tensor_rows((out_r, in_r, n_theta, cfg))
    chunks = np.array_split(np.arange(len(out_r)), min(workers, len(out_r)))
    with ProcessPoolExecutor(max_workers=workers) as ex:
        parts = list(ex.map(_tensor_rows, [(out_r[c], in_r, n_theta, cfg) for c in chunks]))
    return np.concatenate([p[0] for p in parts], axis=0), max(p[1] for p in parts)


class BROperator:
    """``S_lam^delta`` from functions on ``in_grid`` to values on ``out_grid``.

    Both grids must share the cone and the angular grid.
    """

    def __init__(self, in_grid: ConeGrid, out_grid: ConeGrid, cfg: ConeKernelConfig, workers: int | None = None):
        if in_grid.n_theta != out_grid.n_theta or in_grid.cone != out_grid.cone:
            raise ValueError("input and output grids must share the cone and the angular grid")
        if cfg.cone != in_grid.cone:
            raise ValueError("kernel config is for a different cone")
        self.in_grid, self.out_grid, self.cfg = in_grid, out_grid, cfg
        tensor, self.err_est = kernel_tensor(out_grid.r_nodes, in_grid.r_nodes, in_grid.n_theta, cfg, workers)
        # the tensor is even in m, so its DFT is real
        self._khat = np.fft.fft(tensor, axis=2).real
        self._abs_rowsum = np.einsum("ikm,k->i", np.abs(tensor), in_grid.r_weights) * in_grid.dtheta

    def __call__(self, f: SampledFunction) -> SampledFunction:
        if f.grid is not self.in_grid:
            raise ValueError("function is not sampled on the operator's input grid")
        fw = f.values * (self.in_grid.r_weights[:, None] * self.in_grid.dtheta)
        out_hat = np.einsum("ikm,km->im", self._khat, np.fft.fft(fw, axis=1))
        return SampledFunction(self.out_grid, np.fft.ifft(out_hat, axis=1))

    def linf_norm(self) -> float:
        """Exact ``L^inf -> L^inf`` norm of the discrete operator: ``max_i sum |K| w``."""
        return float(self._abs_rowsum.max())


def _support_rows(f: SampledFunction):
    return np.any(f.values != 0, axis=1)


def apply_br(f: SampledFunction, br: BRParams, cfg: ConeKernelConfig, out_grid: ConeGrid | None = None,
             workers: int | None = None) -> SampledFunction:
    """Apply ``S_lam^delta`` to sampled ``f``.

    Only radial rows where ``f`` is nonzero enter the quadrature.  The output
    grid should extend about ``50 / lam`` beyond the support of ``f`` for the
    kernel tail to be negligible; a warning is issued when it does not.
    """
    out_grid = out_grid or f.grid
    rows = _support_rows(f)
    if not np.any(rows):
        return SampledFunction(out_grid, np.zeros(out_grid.shape))
    sub = f.grid.rows(rows)
    if out_grid.r_nodes.max() < sub.r_nodes.max() + 50.0 / br.lam:
        warnings.warn("output grid ends within 50/lambda of the support; tails are truncated", stacklevel=2)
    op = BROperator(sub, out_grid, replace(cfg, br=br), workers)
    return op(SampledFunction(sub, f.values[rows]))


def smooth_bump(t):
    """``exp(1 - 1/(1 - t^2))`` on ``|t| < 1``, zero outside; equals 1 at 0."""
    t = np.asarray(t, dtype=float)
    out = np.zeros(t.shape)
    inside = np.abs(t) < 1
    out[inside] = np.exp(1.0 - 1.0 / (1.0 - t[inside] ** 2))
    return out


def _bump(grid: ConeGrid, rc, tc, rad):
    # geodesic distance to the centre, valid because rad < rc keeps the
    # support away from the tip and within an angle pi of the centre
    def func(r, t):
        per = 2.0 * math.pi * grid.cone.sigma
        dt = np.abs(np.mod(t - tc + 0.5 * per, per) - 0.5 * per)
        d2 = r * r + rc * rc - 2.0 * r * rc * np.cos(np.minimum(dt, math.pi))
        return smooth_bump(np.sqrt(np.maximum(d2, 0.0)) / rad)

    return grid.sample(func)


def bump_family(grid: ConeGrid, n: int, r_range, seed: int = 0):
    """``n`` smooth bumps with random centres ``rc`` in ``r_range`` and radii below ``rc``."""
    rng = np.random.default_rng(seed)
    out = []
    for _ in range(n):
        rc = rng.uniform(*r_range)
        rad = rng.uniform(0.3, 0.9) * min(rc, r_range[1] - rc + 1e-12, rc)
        tc = rng.uniform(0, 2.0 * math.pi * grid.cone.sigma)
        out.append(_bump(grid, rc, tc, max(rad, 1e-3)))
    return out


def randomized_family(grid: ConeGrid, n: int, cell=(4, 4), seed: int = 0):
    """``n`` functions equal to random signs on blocks of ``cell`` grid nodes."""
    rng = np.random.default_rng(seed)
    nr, nt = grid.shape
    out = []
    for _ in range(n):
        signs = rng.choice([-1.0, 1.0], size=(-(-nr // cell[0]), -(-nt // cell[1])))
        vals = np.kron(signs, np.ones(cell))[:nr, :nt]
        out.append(SampledFunction(grid, vals))
    return out


@dataclass
class ProbeResult:
    max_ratio: float
    ratios: list = field(default_factory=list)
    err_est: float = 0.0


def operator_norm_probe(br: BRParams, cfg: ConeKernelConfig, p: float, family: str, in_grid: ConeGrid,
                        out_grid: ConeGrid, n_samples: int = 8, seed: int = 0, operator: BROperator | None = None,
                        workers: int | None = None) -> ProbeResult:
    """Lower-bound witness ``max_f ||S f||_p / ||f||_p`` over a test family.

    ``family`` is ``"bumps"`` (smooth bumps centred inside the radial range of
    ``in_grid``) or ``"randomized"`` (random signs on cells of ``in_grid``).
    For ``p = inf`` the discrete operator norm ``max_x sum_y |K(x, y)| w_y`` is
    returned instead, which dominates every member of any family.
    """
    op = operator or BROperator(in_grid, out_grid, replace(cfg, br=br), workers)
    if math.isinf(p):
        v = op.linf_norm()
        return ProbeResult(v, [v], op.err_est)
    r = in_grid.r_nodes
    if family == "bumps":
        fs = bump_family(in_grid, n_samples, (float(r.min()), float(r.max())), seed)
    elif family == "randomized":
        fs = randomized_family(in_grid, n_samples, seed=seed)
    else:
        raise ValueError(f"unknown family {family!r}")
    ratios = []
    for f in fs:
        nf = lp_norm(f, p)
        if nf > 0:
            ratios.append(lp_norm(op(f), p) / nf)
    return ProbeResult(max(ratios), ratios, op.err_est)


def sector_kernel(x: ConePoint, y: ConePoint, sp: SectorParams, br: BRParams,
                  quad: QuadratureConfig = QuadratureConfig()) -> float:
    """Kernel on the sector ``0 <= theta <= alpha`` by reflection on the doubled cone.

    ``K(x, y) = K_cone(theta1 - theta2) + eps K_cone(theta1 + theta2)`` with
    ``eps = -1`` (Dirichlet) or ``+1`` (Neumann), ``sigma = alpha / pi``.
    """
    for pt in (x, y):
        if not (0.0 <= pt.theta <= sp.alpha):
            raise ValueError(f"theta={pt.theta} outside the sector [0, {sp.alpha}]")
    cfg = ConeKernelConfig(sp.cone, br, quad)
    g, d, _ = kernel_dtheta(x.r, y.r, np.array([x.theta - y.theta, x.theta + y.theta]), cfg)
    k = g + d
    eps = -1.0 if sp.bc == BoundaryCondition.DIRICHLET else 1.0
    return float(k[0] + eps * k[1])


def critical_delta(p: float) -> float:
    """``max(0, 2 |1/2 - 1/p| - 1/2)`` in two dimensions."""
    inv = 0.0 if math.isinf(p) else 1.0 / p
    return max(0.0, 2.0 * abs(0.5 - inv) - 0.5)


def convergence_experiment(f: SampledFunction, p, delta: float, lambdas,
                           quad: QuadratureConfig = QuadratureConfig(tol=1e-6), workers: int | None = None):
    """Rows ``(lam, ||S_lam^delta f - f||_p / ||f||_p)``.

    ``f`` is sampled on the output grid; the rows where it vanishes are
    skipped in the quadrature.  The grid must resolve the largest ``lam``.
    ``p`` may also be a sequence, in which case each row carries one ratio
    per exponent and a single operator is built per ``lam``.  The output
    grid is taken as given: the tail beyond it is dropped without warning.
    """
    ps = list(p) if np.ndim(p) else [p]
    norms = [lp_norm(f, q) for q in ps]
    table = []
    for lam in lambdas:
        if max(norms) == 0:
            ratios = [0.0] * len(ps)
        else:
            br = BRParams(float(lam), float(delta))
            cfg = ConeKernelConfig(f.grid.cone, br, quad)
            with warnings.catch_warnings():
                warnings.simplefilter("ignore")
                diff = apply_br(f, br, cfg, workers=workers) - f
            ratios = [lp_norm(diff, q) / nf for q, nf in zip(ps, norms)]
        table.append((float(lam), *ratios) if np.ndim(p) else (float(lam), ratios[0]))
    return table


def kernel_l1_sup(cone: ConeParams, br: BRParams, R: float, x_radii=(0.0, 1.0), n_theta: int = 64,
                  nodes_per_unit: float = 1.5, quad: QuadratureConfig = QuadratureConfig(tol=1e-7)):
    """``max_x int_{|y| <= R} |K(x, y)| dy`` over sample points ``x``.

    ``x_radii`` are in units of ``1/lam`` (so the samples approach the tip as
    ``lam`` grows).  Returns ``(sup, per_x)``.  The ``y`` integral uses
    composite Gauss-Legendre in ``r`` with about ``nodes_per_unit`` nodes per
    unit of ``lam r`` and the trapezoidal rule in ``theta``.
    """
    lam = br.lam
    # six Gauss nodes per panel of 6 / nodes_per_unit normalised units
    n_panels = max(1, int(math.ceil(lam * R * nodes_per_unit / 6.0)))
    g = ConeGrid.gauss(cone, R, 6, n_theta, breaks=np.linspace(0.0, R, n_panels + 1))
    r2, wr = g.r_nodes, g.r_weights
    cfg = ConeKernelConfig(cone, br, quad)
    m = np.arange(n_theta // 2 + 1)
    per = 2.0 * math.pi * cone.sigma
    dth = m * per / n_theta
    # trapezoid over the full circle folded onto [0, pi sigma]
    mult = np.where((m == 0) | (2 * m == n_theta), 1.0, 2.0) * (per / n_theta)
    results = []
    for xr in x_radii:
        r1 = xr / lam
        total = 0.0
        for rr, ww in zip(r2, wr):
            g_, d_, _ = kernel_dtheta(r1, float(rr), dth, cfg)
            total += ww * float(np.sum(np.abs(g_ + d_) * mult))
        results.append(total)
    return max(results), results


def convergence_grid(cone: ConeParams, lam_max: float, out_radius: float) -> ConeGrid:
    """Grid on ``r <= out_radius`` resolving frequencies up to ``lam_max``.

    Six Gauss nodes per radial panel of width ``min(1/2, 6/lam_max)`` and
    about ``1.6 sigma (lam_max out_radius + 10)`` angles.
    """
    h = min(0.5, 6.0 / lam_max)
    n_pan = int(math.ceil(out_radius / h))
    n_theta = 8 * int(math.ceil(1.6 * cone.sigma * (lam_max * out_radius + 10.0) / 8.0))
    return ConeGrid.gauss(cone, out_radius, 6, n_theta, breaks=np.linspace(0.0, out_radius, n_pan + 1))


def probe_grids(cone: ConeParams, lam: float, r_in=(0.5, 1.5), out_radius: float = 2.5):
    """Input grid on the annulus ``r_in`` and output grid on ``r <= out_radius`` sharing angles."""
    out = convergence_grid(cone, lam, out_radius)
    h = min(0.5, 6.0 / lam)
    n_pan = max(1, int(math.ceil((r_in[1] - r_in[0]) / h)))
    x, w = _gl(6)
    edges = np.linspace(r_in[0], r_in[1], n_pan + 1)
    r = np.concatenate([0.5 * (b - a) * x + 0.5 * (a + b) for a, b in zip(edges[:-1], edges[1:])])
    wr = np.concatenate([0.5 * (b - a) * w for a, b in zip(edges[:-1], edges[1:])]) * r
    return ConeGrid(cone, r, wr, out.n_theta), out
