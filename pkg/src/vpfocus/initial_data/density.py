"""Initial distribution functions f0 for the two focusing constructions.

Both have the form H_delta((r/alpha + beta w)^2 + l (beta/r)^2) chi(r) Gamma(w)
with (alpha, beta, delta) = (eps^2, a0, eps) for VP and (A, B, eps^3) for
RVP. Writing u = r/alpha + beta w, the argument is u^2 + l beta^2 / r^2.
Evaluating through u avoids the cancellation r/alpha + beta w, which for
strict plans exceeds float64 resolution.
"""
from __future__ import annotations

import math

import numpy as np

from ..radial_kinetics import RadialPhasePoint
from .plans import RvpPlan, VpPlan
from .profile import CutoffChi, ProfileH


def shear_constants(plan):
    """(alpha, beta, delta) of the sheared coordinate u = r/alpha + beta w."""
    if isinstance(plan, VpPlan):
        return plan.eps**2, plan.a0, plan.eps
    if isinstance(plan, RvpPlan):
        e = float(plan.eps)
        return e**5, e**-1.5, e**3
    raise TypeError(f"unsupported plan type {type(plan).__name__}")


def f0_sheared(r, u, l, plan, profile: ProfileH, chi: CutoffChi):
    """f0 as a function of (r, u, l); Gamma is 1 exactly when u < r/alpha."""
    alpha, beta, delta = shear_constants(plan)
    r = np.asarray(r, dtype=float)
    u = np.asarray(u, dtype=float)
    l = np.asarray(l, dtype=float)
    s = u * u + l * (beta / r) ** 2
    val = profile.rescaled(s, delta) * chi(r) * (u < r / alpha)
    return val if np.ndim(val) else float(val)


def _direct(state: RadialPhasePoint, plan, profile, chi):
    alpha, beta, delta = shear_constants(plan)
    if state.w >= 0.0:
        return 0.0
    u = state.r / alpha + beta * state.w
    s = u * u + state.l * (beta / state.r) ** 2
    return float(profile.rescaled(s, delta)) * float(chi(state.r))


def f0_vp(state: RadialPhasePoint, plan: VpPlan, profile: ProfileH, chi: CutoffChi) -> float:
    """Classical initial density at a radial phase point."""
    return _direct(state, plan, profile, chi)


def f0_rvp(state: RadialPhasePoint, plan: RvpPlan, profile: ProfileH, chi: CutoffChi) -> float:
    """Relativistic initial density; only meaningful where b +- eps^3 is float-resolvable."""
    return _direct(state, plan, profile, chi)


def velocity_integral(beta: float) -> float:
    """pi/r^2 int int H_delta dw dl over the whole (w, l) support: 3/(4 pi beta^3).

    Independent of r and delta; the density is this times chi(r) because
    Gamma never vanishes on the support.
    """
    return 3.0 / (4.0 * math.pi * beta**3)


def inner_quadrature(profile: ProfileH, n_u: int, n_l: int) -> float:
    """Midpoint estimate of J = int_{-1}^{1} du int_0^{1-u^2} dl H(u^2 + l); exact value 3/(4 pi^2).

    The scaled phase-space integral of H_delta over (w, l) equals (r^2/beta^3) J.
    """
    u = -1.0 + (np.arange(n_u) + 0.5) * (2.0 / n_u)
    span = 1.0 - u * u
    t = (np.arange(n_l) + 0.5) / n_l
    vals = profile(u[:, None] ** 2 + span[:, None] * t[None, :])
    return float(np.sum(vals.mean(axis=1) * span) * (2.0 / n_u))


def shell_moment(chi_ref, center: float, width: float, n: int = 4001) -> float:
    """int chi_{0,1}(s) (1 + (width/center) s)^2 ds by composite Simpson on [-1, 1]."""
    from scipy.integrate import simpson

    s = np.linspace(-1.0, 1.0, n)
    return float(simpson(chi_ref(s) * (1.0 + (width / center) * s) ** 2, x=s))


def mass_ratio(plan, profile: ProfileH, chi_ref, n_u: int = 64, n_l: int = 64) -> float:
    """M / (beta^-3 width center^2) from quadrature in scale-free variables.

    M = 4 pi^2 int chi r^2 dr * J / beta^3, with r = center + width s. For the
    VP shell width = b/2; for RVP width = eps^3 (so the ratio compares
    directly with the stated M ~ B^-3 eps^3 b^2 bounds).
    """
    if isinstance(plan, VpPlan):
        center, width = plan.b, 0.5 * plan.b
    else:
        center, width = float(plan.b), float(plan.eps) ** 3
    J = inner_quadrature(profile, n_u, n_l)
    return 4.0 * math.pi**2 * J * shell_moment(chi_ref, center, width)
