"""
Sampled checks of the kernel decay estimates.

The estimates hold with unspecified constants, so each check reports the
largest observed ratio ``|quantity| / predicted size`` over a deterministic
sample.  Samples are drawn one at a time from a seeded generator, so a run
with ``2n`` samples contains the ``n``-sample run as a prefix.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .cone_kernel import ConeKernelConfig, _images, _kernel_unit, _remainder_radial, diffraction_bound_ratio
from .euclid import remainder_constant
from .geometry import weight_vanishes
from .util import config_digest

__all__ = ["BoundReport", "check_ge_decay", "check_de_decay", "check_diffraction_halfpower"]


@dataclass
class BoundReport:
    bound_name: str
    samples: int
    max_ratio: float
    config_digest: str
    details: dict = field(default_factory=dict)

    def __post_init__(self):
        if not math.isfinite(self.max_ratio):
            raise ValueError(f"{self.bound_name}: non-finite max_ratio")


def _digest(cfg, **extra):
    return config_digest({"cfg": cfg, **extra})


def check_ge_decay(cfg: ConeKernelConfig, n_samples: int = 200, seed: int = 0, d_range=(0.1, 100.0)) -> BoundReport:
    """``max |G_e| (1 + d_0)^3`` with ``d_0`` log-spaced over ``d_range`` (unit frequency).

    ``G_e`` is the image sum of the non-oscillatory remainder and ``d_0`` the
    smallest image distance.  Pairs have ``r1 = r2`` and a random angle in
    ``[pi/3, pi]`` fixed by the seed.
    """
    rng = np.random.default_rng(seed)
    sigma, delta = cfg.cone.sigma, cfg.br.delta
    radial = _remainder_radial(delta)
    d0s = np.geomspace(d_range[0], d_range[1], n_samples)
    best = 0.0
    for d0 in d0s:
        a = rng.uniform(math.pi / 3.0, math.pi)
        rr = d0 / (2.0 * math.sin(0.5 * a))
        dth = np.array([min(a, math.pi * sigma)])
        ge = float(_images(rr, rr, dth, sigma, radial.f)[0])
        dist = 2.0 * rr * math.sin(0.5 * float(dth[0]))
        best = max(best, abs(ge) * (1.0 + dist) ** 3)
    return BoundReport("ge_decay", int(n_samples), best, _digest(cfg, n=n_samples, seed=seed),
                       {"remainder_constant": remainder_constant(delta)})


def check_de_decay(cfg: ConeKernelConfig, n_samples: int = 100, seed: int = 0, sum_range=(0.1, 50.0)) -> BoundReport:
    """``max |D_e| (1 + r1 + r2)^3`` over random pairs (unit frequency).

    ``D_e`` is the diffraction integral of the remainder.  ``r1 + r2`` is
    log-uniform over ``sum_range``; the split and ``dtheta`` are uniform.
    """
    rng = np.random.default_rng(seed)
    sigma, delta = cfg.cone.sigma, cfg.br.delta
    if weight_vanishes(sigma):
        return BoundReport("de_decay", int(n_samples), 0.0, _digest(cfg, n=n_samples, seed=seed))
    radial = _remainder_radial(delta)
    lo, hi = math.log(sum_range[0]), math.log(sum_range[1])
    best = 0.0
    for _ in range(n_samples):
        u, t, a = rng.random(3)
        total = math.exp(lo + (hi - lo) * u)
        r1, r2 = t * total, (1.0 - t) * total
        _, de, _ = _kernel_unit(r1, r2, np.array([a * math.pi * sigma]), sigma, radial, cfg.quad.tol, 1.0,
                                cfg.quad.max_panels)
        best = max(best, abs(float(de[0])) * (1.0 + total) ** 3)
    return BoundReport("de_decay", int(n_samples), best, _digest(cfg, n=n_samples, seed=seed))


def check_diffraction_halfpower(cfg: ConeKernelConfig, k_range=(1, 8), n_samples: int = 20, seed: int = 0) -> BoundReport:
    """Maximum of :func:`diffraction_bound_ratio` over ``k`` in ``k_range`` (inclusive) and random pairs.

    The same ``n_samples`` pairs are used for every ``k``: ``r1 + r2``
    uniform in ``[3/4, 8/3]``, the smaller radius a log-uniform fraction in
    ``[1e-4, 1/2]`` of the sum (so ``2^k r1 r2`` spans both sides of 1) and a
    uniform angle.  ``details["per_k"]`` holds the maximum for each ``k``.
    """
    rng = np.random.default_rng(seed)
    sigma = cfg.cone.sigma
    pairs = []
    lo, hi = math.log(1e-4), math.log(0.5)
    for _ in range(n_samples):
        u, t, a, flip = rng.random(4)
        total = 0.75 + (8.0 / 3.0 - 0.75) * u
        small = math.exp(lo + (hi - lo) * t) * total
        r1, r2 = (small, total - small) if flip < 0.5 else (total - small, small)
        pairs.append((r1, r2, a * math.pi * sigma))
    per_k = {}
    for k in range(int(k_range[0]), int(k_range[1]) + 1):
        per_k[k] = max((diffraction_bound_ratio(r1, r2, dth, k, cfg) for r1, r2, dth in pairs), default=0.0)
    best = max(per_k.values(), default=0.0)
    return BoundReport("diffraction_halfpower", int(n_samples), best,
                       _digest(cfg, n=n_samples, seed=seed, k_range=list(k_range)), {"per_k": per_k})
