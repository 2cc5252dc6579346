"""Characteristics of spherically symmetric VP / RVP in (r, w, l) variables.

A phase-space point (x, v) reduces to the radius r = |x|, the radial
momentum w = x.v / r and the squared angular momentum l = |x cross v|^2.
Along a characteristic l is constant and (r, w) obey

    VP :  r' = w,        w' = l / r^3 + m(t, r) / r^2
    RVP:  r' = w / g,    w' = l / (r^3 g) + m(t, r) / r^2,   g = sqrt(1 + w^2 + l / r^2)

where m(t, r) is the charge enclosed by the sphere of radius r.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from enum import Enum
from typing import Callable, Optional

import numpy as np

from .errors import DomainError, IntegrationError, LemmaHypothesisError

MassProvider = Callable[[float, float], float]


class System(str, Enum):
    VP = "vp"
    RVP = "rvp"


@dataclass(frozen=True)
class RadialPhasePoint:
    r: float
    w: float
    l: float

    def speed_squared(self) -> float:
        """|v|^2 = w^2 + l / r^2."""
        return self.w * self.w + self.l / (self.r * self.r)


def to_radial(x, v) -> RadialPhasePoint:
    x = np.asarray(x, dtype=float)
    v = np.asarray(v, dtype=float)
    r = float(np.linalg.norm(x))
    if r == 0.0:
        raise DomainError("position must be nonzero")
    w = float(x @ v) / r
    c = np.cross(x, v)
    return RadialPhasePoint(r, w, float(c @ c))


def _check_radius(r):
    if not r > 0.0:
        raise DomainError(f"radius must be positive, got {r!r}")


def vp_rhs(state: RadialPhasePoint, m_enclosed: float):
    _check_radius(state.r)
    r = state.r
    return (state.w, state.l / r**3 + m_enclosed / r**2, 0.0)


def rvp_rhs(state: RadialPhasePoint, m_enclosed: float):
    _check_radius(state.r)
    r, w, l = state.r, state.w, state.l
    g = math.sqrt(1.0 + w * w + l / (r * r))
    return (w / g, l / (r**3 * g) + m_enclosed / r**2, 0.0)


# ---------------------------------------------------------------- integration


@dataclass(frozen=True)
class StepControl:
    """Error-control settings for :func:`integrate_trajectory`.

    ``rtol``/``atol`` bound the local error estimated by step doubling.
    Inside ``barrier_scale`` impact parameters of the origin the step is
    additionally capped at ``barrier_fraction * r / |v|``.
    """

    rtol: float = 1e-11
    atol: float = 1e-13
    h_init: Optional[float] = None
    h_max: Optional[float] = None
    barrier_scale: float = 4.0
    barrier_fraction: float = 0.05
    guard_factor: float = 1e-12
    max_steps: int = 2_000_000


@dataclass
class TrajectoryRecord:
    system: System
    l0: float
    t: list = field(default_factory=list)
    r: list = field(default_factory=list)
    w: list = field(default_factory=list)
    l: list = field(default_factory=list)
    turning_time: Optional[float] = None
    steps: int = 0
    max_step: float = 0.0

    @property
    def samples(self):
        return [(t, RadialPhasePoint(r, w, l)) for t, r, w, l in zip(self.t, self.r, self.w, self.l)]

    def arrays(self):
        return np.asarray(self.t), np.asarray(self.r), np.asarray(self.w), np.asarray(self.l)

    def turning_index(self) -> Optional[int]:
        """Index of the first sample with w >= 0 following a sample with w < 0."""
        for i in range(1, len(self.w)):
            if self.w[i - 1] < 0.0 <= self.w[i]:
                return i
        return None

    def step_near(self, t: float) -> float:
        """Width of the sampled step bracketing time t."""
        i = int(np.searchsorted(self.t, t))
        i = min(max(i, 1), len(self.t) - 1)
        return self.t[i] - self.t[i - 1]


def _deriv(system, t, r, w, l, field):
    m = 0.0 if field is None else field(t, r)
    if system is System.VP:
        return w, l / (r * r * r) + m / (r * r)
    g = math.sqrt(1.0 + w * w + l / (r * r))
    return w / g, l / (r * r * r * g) + m / (r * r)


def _rk4(system, t, r, w, l, h, field):
    k1r, k1w = _deriv(system, t, r, w, l, field)
    h2 = 0.5 * h
    r2, w2 = r + h2 * k1r, w + h2 * k1w
    if r2 <= 0.0:
        return None
    k2r, k2w = _deriv(system, t + h2, r2, w2, l, field)
    r3, w3 = r + h2 * k2r, w + h2 * k2w
    if r3 <= 0.0:
        return None
    k3r, k3w = _deriv(system, t + h2, r3, w3, l, field)
    r4, w4 = r + h * k3r, w + h * k3w
    if r4 <= 0.0:
        return None
    k4r, k4w = _deriv(system, t + h, r4, w4, l, field)
    rn = r + h / 6.0 * (k1r + 2.0 * k2r + 2.0 * k3r + k4r)
    wn = w + h / 6.0 * (k1w + 2.0 * k2w + 2.0 * k3w + k4w)
    if rn <= 0.0:
        return None
    return rn, wn


def integrate_trajectory(system, init: RadialPhasePoint, field: Optional[MassProvider],
                         t_end: float, step_control: StepControl = StepControl()) -> TrajectoryRecord:
    """Integrate one characteristic on [0, t_end] with adaptive classical RK4.

    The local error is estimated by comparing one step of size h with two
    steps of size h/2; the accepted value is the Richardson-extrapolated
    two-half-step result. ``field(t, r)`` returns the enclosed charge and may
    be ``None`` for free streaming.
    """
    system = System(system)
    _check_radius(init.r)
    if not t_end > 0.0:
        raise DomainError("t_end must be positive")
    sc = step_control
    r, w, l = float(init.r), float(init.w), float(init.l)
    rec = TrajectoryRecord(system=system, l0=l, t=[0.0], r=[r], w=[w], l=[l])
    guard = sc.guard_factor * r
    v0 = math.sqrt(w * w + l / (r * r))
    scale_t = r / v0 if v0 > 0 else t_end
    h = sc.h_init if sc.h_init is not None else min(t_end, 1e-3 * scale_t)
    h_max = sc.h_max if sc.h_max is not None else t_end
    t = 0.0
    b_imp = math.sqrt(l) / v0 if (l > 0 and v0 > 0) else 0.0

    while t < t_end:
        if rec.steps >= sc.max_steps:
            raise IntegrationError("step budget exhausted", rec)
        h = min(h, h_max, t_end - t)
        if b_imp > 0.0 and r < sc.barrier_scale * b_imp:
            v = math.sqrt(w * w + l / (r * r))
            h = min(h, sc.barrier_fraction * r / v)
        full = _rk4(system, t, r, w, l, h, field)
        half = _rk4(system, t, r, w, l, 0.5 * h, field)
        two = None if half is None else _rk4(system, t + 0.5 * h, half[0], half[1], l, 0.5 * h, field)
        if full is None or two is None:
            h *= 0.25
            if h < 1e-15 * max(t, scale_t):
                raise IntegrationError(f"trajectory collapsed towards r=0 at t={t:.6g}", rec)
            continue
        er = (two[0] - full[0]) / 15.0
        ew = (two[1] - full[1]) / 15.0
        sr = sc.atol + sc.rtol * max(abs(r), abs(two[0]))
        sw = sc.atol + sc.rtol * max(abs(w), abs(two[1]))
        err = max(abs(er) / sr, abs(ew) / sw)
        if err <= 1.0:
            t += h
            r, w = two[0] + er, two[1] + ew
            rec.t.append(t)
            rec.r.append(r)
            rec.w.append(w)
            rec.l.append(l)
            rec.steps += 1
            rec.max_step = max(rec.max_step, h)
            if r < guard:
                raise IntegrationError(f"radius fell below guard {guard:.3g} at t={t:.6g}", rec)
        fac = 5.0 if err == 0.0 else min(5.0, max(0.2, 0.9 * err ** -0.2))
        h *= fac
        if h < 1e-15 * max(t, scale_t):
            raise IntegrationError(f"step size underflow at t={t:.6g}", rec)

    rec.turning_time = turning_time(rec)
    return rec


def turning_time(rec: TrajectoryRecord) -> Optional[float]:
    """First negative-to-positive sign change of w, linearly interpolated."""
    i = rec.turning_index()
    if i is None:
        return None
    w0, w1 = rec.w[i - 1], rec.w[i]
    t0, t1 = rec.t[i - 1], rec.t[i]
    if w1 == 0.0:
        return t1
    return t0 + (t1 - t0) * (-w0) / (w1 - w0)


def sign_changes(w) -> int:
    s = np.sign(np.asarray(w))
    s = s[s != 0]
    return int(np.count_nonzero(np.diff(s)))


# ------------------------------------------------------------- lemma bounds


@dataclass(frozen=True)
class BoundReport:
    t0_lower: float
    r_sq_envelope: Callable[[float], float]
    d_value: Optional[float] = None
    r_minus: Optional[float] = None
    r_plus: Optional[float] = None


def _check_hypotheses(r, w, l, M):
    _check_radius(r)
    if not w < 0.0:
        raise LemmaHypothesisError(f"bounds require w < 0, got {w!r}")
    if not l > 0.0:
        raise LemmaHypothesisError(f"bounds require l > 0, got {l!r}")
    if M < 0.0:
        raise LemmaHypothesisError("total charge must be nonnegative")


def vp_bounds(r, w, l, M) -> BoundReport:
    """Turning-time lower bound and R(t)^2 envelope for the classical system."""
    _check_hypotheses(r, w, l, M)
    q = l + M * r
    t0 = r / abs(w) * (1.0 - math.sqrt(q / (r * r * w * w + q)))
    c = l / r**2 + M / r

    def envelope(t):
        return (r + w * t) ** 2 + c * t * t

    return BoundReport(t0_lower=t0, r_sq_envelope=envelope)


def rvp_bounds(r, w, l, M) -> BoundReport:
    """Relativistic counterpart: adds D and the turning-radius bracket."""
    _check_hypotheses(r, w, l, M)
    g2 = 1.0 + w * w + l / r**2
    g = math.sqrt(g2)
    D = l + M * r * g
    rw2 = r * r * w * w
    r_minus = r * math.sqrt(l / (rw2 + l))
    r_plus = r * math.sqrt(D / (rw2 + D))
    speed = abs(w) / g
    c = D / (r * r * g2)

    def envelope(t):
        return (r - speed * t) ** 2 + c * t * t

    return BoundReport(t0_lower=r - r_plus, r_sq_envelope=envelope,
                       d_value=D, r_minus=r_minus, r_plus=r_plus)


def free_radius(r, w, l, t):
    """Exact classical free-streaming radius sqrt((r + w t)^2 + l t^2 / r^2)."""
    t = np.asarray(t, dtype=float)
    return np.sqrt((r + w * t) ** 2 + l * t * t / (r * r))
