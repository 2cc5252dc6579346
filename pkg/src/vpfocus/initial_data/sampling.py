"""Deterministic phase-space sampling of f0 into weighted radial particles.

The support of f0 is a sheared box in (r, w, l): with u = r/alpha + beta w it
becomes r in [r_lo, r_hi], u in [-delta, delta], 0 <= l < (delta^2 - u^2) r^2 / beta^2.
Sampling uses a midpoint tensor grid in (r, u, l / l_max(r, u)); each node
carries weight 4 pi^2 f0 dr dw dl, which is the charge it represents.
"""
from __future__ import annotations

from dataclasses import dataclass
from typing import Callable, Iterator, Optional

import numpy as np

from ..certify import Check
from ..errors import SamplingError
from ..radial_kinetics import RadialPhasePoint
from .density import f0_sheared, shear_constants
from .plans import RvpPlan, VpPlan


@dataclass(frozen=True)
class WeightedParticle:
    state: RadialPhasePoint
    weight: float


@dataclass
class ParticleSet:
    """Struct-of-arrays particle container; iterates as :class:`WeightedParticle`."""

    r: np.ndarray
    w: np.ndarray
    l: np.ndarray
    weight: np.ndarray
    u: Optional[np.ndarray] = None

    def __post_init__(self):
        self.r = np.asarray(self.r, dtype=float)
        self.w = np.asarray(self.w, dtype=float)
        self.l = np.asarray(self.l, dtype=float)
        self.weight = np.asarray(self.weight, dtype=float)

    def __len__(self):
        return int(self.r.size)

    def __iter__(self) -> Iterator[WeightedParticle]:
        for i in range(len(self)):
            yield self[i]

    def __getitem__(self, i):
        return WeightedParticle(RadialPhasePoint(float(self.r[i]), float(self.w[i]), float(self.l[i])),
                                float(self.weight[i]))

    @property
    def M(self) -> float:
        return float(np.sum(self.weight))

    @classmethod
    def empty(cls):
        z = np.zeros(0)
        return cls(z, z, z, z)


@dataclass(frozen=True)
class SupportBox:
    """Sheared support box; w = (u - r/alpha) / beta, l_max = (delta^2 - u^2) r^2 / beta^2."""

    r_lo: float
    r_hi: float
    alpha: float
    beta: float
    delta: float

    @classmethod
    def for_plan(cls, plan):
        alpha, beta, delta = shear_constants(plan)
        if isinstance(plan, VpPlan):
            return cls(0.5 * plan.b, 1.5 * plan.b, alpha, beta, delta)
        e3 = float(plan.eps) ** 3
        b = float(plan.b)
        if not (b - e3 < b < b + e3):
            raise SamplingError("shell width below float64 resolution; strict RVP plans are certified arithmetically")
        return cls(b - e3, b + e3, alpha, beta, delta)

    def w_of(self, r, u):
        return (u - r / self.alpha) / self.beta

    def l_max(self, r, u):
        return np.clip(self.delta**2 - u * u, 0.0, None) * (r / self.beta) ** 2


def sample_support(f0: Callable, box: SupportBox, resolution=(2000, 10, 5)) -> ParticleSet:
    """Tensor midpoint sampling of ``f0(r, u, l)`` over ``box``.

    Nodes where f0 vanishes are dropped, so an identically zero density gives
    an empty set with M = 0.
    """
    n_r, n_u, n_l = (int(x) for x in resolution)
    if min(n_r, n_u, n_l) < 1:
        raise SamplingError("resolution entries must be positive")
    dr = (box.r_hi - box.r_lo) / n_r
    du = 2.0 * box.delta / n_u
    r = box.r_lo + (np.arange(n_r) + 0.5) * dr
    u = -box.delta + (np.arange(n_u) + 0.5) * du
    t = (np.arange(n_l) + 0.5) / n_l
    R, U, Tl = np.meshgrid(r, u, t, indexing="ij")
    lmax = box.l_max(R, U)
    L = Tl * lmax
    f = np.asarray(f0(R, U, L), dtype=float)
    weight = 4.0 * np.pi**2 * f * dr * (du / box.beta) * (lmax / n_l)
    keep = weight > 0.0
    if not np.any(keep):
        return ParticleSet.empty()
    R, U, L, weight = R[keep], U[keep], L[keep], weight[keep]
    return ParticleSet(r=R, w=box.w_of(R, U), l=L, weight=weight, u=U)


def sample_plan(plan, profile, chi=None, resolution=(2000, 10, 5)) -> ParticleSet:
    """Sample the construction's f0; raises :class:`SamplingError` on empty support."""
    chi = plan.chi() if chi is None else chi
    box = SupportBox.for_plan(plan)
    ps = sample_support(lambda r, u, l: f0_sheared(r, u, l, plan, profile, chi), box, resolution)
    if len(ps) == 0:
        raise SamplingError("the sampled support is empty")
    return ps


@dataclass(frozen=True)
class SupportReport:
    checks: tuple
    violations: tuple  # (particle index, bound name) pairs, at most ``max_listed``

    @property
    def ok(self) -> bool:
        return all(c.passed for c in self.checks)


def _report(tests, max_listed):
    checks, violations = [], []
    for name, slack in tests:
        bad = np.flatnonzero(~(slack > 0))
        checks.append(Check(name, name, float("nan"), float("nan"), float(np.min(slack)), bool(bad.size == 0)))
        violations += [(int(i), name) for i in bad[: max(0, max_listed - len(violations))]]
    return SupportReport(tuple(checks), tuple(violations))


def certify_support(particles: ParticleSet, plan, max_listed: int = 100) -> SupportReport:
    """Check every particle lies in the certified support box; violations are listed, not raised.

    VP: r in (b/2, 3b/2), w in (-3/2 eps^-2, -1/2 b/a0 eps^-2 + eps/a0),
    l < (3b/(2 a0))^2 eps^2 and r/|w| >= a0 eps^2 - eps^3 (evaluated through
    the sheared variable when available). RVP: r in (b - eps^3, b + eps^3),
    w in (-2 eps^-35/8, -eps^-35/8 / 2) and l < 1.
    """
    if len(particles) == 0:
        raise SamplingError("certification needs a nonempty particle set")
    r, w, l = particles.r, particles.w, particles.l
    if isinstance(plan, VpPlan):
        a0, eps, b = plan.a0, plan.eps, plan.b
        if particles.u is not None:
            # r/|w| = a0 eps^2 r / (r - u eps^2), exact in the sheared variable
            ratio = a0 * eps**2 * r / (r - particles.u * eps**2)
        else:
            ratio = np.where(w < 0, r / np.abs(np.where(w == 0, 1.0, w)), 0.0)
        w_hi = -0.5 * b / a0 / eps**2 + eps / a0
        floor = a0 * eps**2 - eps**3
        tests = [
            ("radius in shell", np.minimum(r - 0.5 * b, 1.5 * b - r)),
            ("radial momentum window", np.minimum(w + 1.5 / eps**2, w_hi - w)),
            ("angular momentum cap", (1.5 * b / a0) ** 2 * eps**2 - l),
            # nonstrict bound: shift by the smallest positive slack
            ("focus time floor", ratio - floor + np.finfo(float).tiny),
        ]
        return _report(tests, max_listed)
    e = float(plan.eps)
    b = float(plan.b)
    e3, s = e**3, e ** (-35.0 / 8.0)
    tests = [
        ("radius in shell", np.minimum(r - (b - e3), (b + e3) - r)),
        ("radial momentum window", np.minimum(w + 2.0 * s, -0.5 * s - w)),
        ("angular momentum cap", 1.0 - l),
    ]
    return _report(tests, max_listed)
