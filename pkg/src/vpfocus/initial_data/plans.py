"""Parameter planning for the focusing constructions.

``plan_vp`` picks the shift scale a0 and concentration scale eps for the
classical system, ``plan_rvp`` the master scale eps and the derived
A, B, b, T for the relativistic one. Every inequality the construction needs
is re-checked in interval arithmetic (see :mod:`vpfocus.certify`) and kept
on the plan together with its margin.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field, replace
from typing import Optional

import mpmath
import numpy as np

from ..certify import Check, check, evaluate, failed
from ..errors import DomainError, PlanningError
from .profile import CutoffChi, alpha_table

SAFETY = 1e-6


class UnsupportedRegimeError(DomainError):
    pass


def default_vp_C0(k: int) -> float:
    """Field-derivative constant: 32 for k <= 1, 100 for k = 2, 100**(k-1) above."""
    if k <= 1:
        return 32.0
    if k == 2:
        return 100.0
    return 100.0 ** (k - 1)


def default_rvp_C0(k: int) -> float:
    if k <= 1:
        return 32.0 + 1500.0 * math.pi
    return (32.0 + 13500.0 * math.pi) * 10.0 ** (k - 2)


def cutoff_constants(b: float, k: int, alpha):
    """c_j = (2/b)^j alpha_j for j = 0..k, with c_{-1} = b/2 prepended."""
    return [0.5 * b] + [(2.0 / b) ** j * alpha[j] for j in range(k + 1)]


def d_constant(b: float, k: int, alpha) -> float:
    """d_k = sum_{j=-1}^{k} c_j."""
    return math.fsum(cutoff_constants(b, k, alpha))


# --------------------------------------------------------------------- VP

BETA0_TERMS = {
    "shell/shift": "b/(60*a0)",
    "cube-root shift": "a0**(-1/3)*b**(1/3)/60",
    "field-energy": "(b**(-2) + 4*a0**(-3)*b**2)**(-1/2)/60",
    "density target": "b/(100*a0*N**(1/3))",
    "field target": "a0**(-3/2)*b**(3/2)/(60*N**(1/2))",
    "focus radius": "eps0/4",
}


@dataclass(frozen=True)
class VpPlan:
    b: float
    k: int
    a0: float
    eps: float
    eps0: float
    eta: Optional[float] = None
    N: Optional[float] = None
    C0: float = 32.0
    alpha: tuple = (1.0, 4.0)
    mode: str = "strict"
    binding_term: Optional[str] = None
    checks: tuple = field(default=(), compare=False)

    @property
    def T(self) -> float:
        a0, eps, b = self.a0, self.eps, self.b
        return a0 * eps**2 - eps**3 - 100.0 * a0**2 * eps**4 / b**2

    @property
    def c(self):
        return cutoff_constants(self.b, self.k, self.alpha)

    @property
    def d_k(self) -> float:
        return d_constant(self.b, self.k, self.alpha)

    @property
    def d_km1(self) -> float:
        return d_constant(self.b, self.k - 1, self.alpha)

    @property
    def certified(self) -> bool:
        return bool(self.checks) and not failed(self.checks)

    def chi(self) -> CutoffChi:
        return CutoffChi(center=self.b, width=0.5 * self.b, alpha=tuple(self.alpha))

    def mass_bounds(self):
        """Stated enclosure (3/8) b^3/a0^3 <= M <= 4 b^3/a0^3."""
        s = self.b**3 / self.a0**3
        return 0.375 * s, 4.0 * s

    def mass_upper(self) -> float:
        """Rigorous M bound from rho(0) <= 3/(4 pi a0^3) on the shell b/2 < r < 3b/2."""
        return ((1.5 * self.b) ** 3 - (0.5 * self.b) ** 3) / self.a0**3

    def env(self) -> dict:
        c = self.c
        return dict(eta=self.eta, N=self.N, b=self.b, eps0=self.eps0, a0=self.a0, eps=self.eps,
                    C0=self.C0, d_k=self.d_k, d_km1=self.d_km1, c_sum=math.fsum(c[1:]),
                    M_lo=0.375 * self.b**3 / self.a0**3)

    def summary(self) -> dict:
        return dict(system="vp", mode=self.mode, b=self.b, k=self.k, eta=self.eta, N=self.N,
                    eps0=self.eps0, a0=self.a0, eps=self.eps, T=self.T, d_k=self.d_k,
                    C0=self.C0, alpha=[float(a) for a in self.alpha], binding_term=self.binding_term)


def beta0_values(a0, b, N, eps0):
    env = dict(a0=a0, b=b, N=N, eps0=eps0)
    out = {}
    for name, expr in BETA0_TERMS.items():
        lo, hi = evaluate(expr, env)
        out[name] = float(lo)
    return out


def _vp_geometry_checks(env):
    return [
        check("shift exceeds shell radius", "a0 > b", env),
        check("inner radial momentum below -1", "-b/(2*a0)*eps**(-2) + eps/a0 < -1", env),
        check("outer radial momentum ordering", "-3/2*eps**(-2) < -3*b/(2*a0)*eps**(-2) - eps/a0", env),
        check("angular momentum below 1", "(3*b/(2*a0))**2*eps**2 < 1", env),
        check("focusing time positive", "a0*eps**2 - eps**3 - 100*a0**2*eps**4/b**2 > 0", env),
    ]


def vp_checks(plan: VpPlan):
    env = plan.env()
    checks = _vp_geometry_checks(env)
    checks += [
        check("density sup scale", "a0 >= eta**(-1/3)", env),
        check("field sup scale", "a0 >= 4*eta**(-1/3)*b**(1/3)", env),
        check("density C^k scale", "a0 >= 8*pi/3*d_k**(1/3)*eta**(-1/3)", env),
        check("field C^k scale", "a0 >= 2*C0**(1/3)*eta**(-1/3)*d_km1", env),
        check("combined shift constraint", "a0 >= 20*d_k*eta**(-1/3)*C0**(1/3)", env),
    ]
    for name, expr in BETA0_TERMS.items():
        checks.append(check(f"eps bound: {name}", f"eps <= {expr}", env))
    checks += [
        check("initial density C^k below eta", "3/(8*pi*a0**3)*c_sum <= eta", env),
        check("initial field C^k below eta", "C0*d_km1*a0**(-3) <= eta", env),
        check("initial field sup below eta/2", "16*b/a0**3 <= eta/2", env),
        check("focus radius inside eps0", "4*eps <= eps0", env),
        check("final density reaches N", "3/(4*pi)*M_lo/(64*eps**3) >= N", env),
        check("final field reaches N", "M_lo/(16*eps**2) >= N", env),
    ]
    return tuple(checks)


def plan_vp(eta, N, b, eps0, k: int, alpha=None, C0=None, monotone=False, law=None,
            safety: float = SAFETY) -> VpPlan:
    """Strict-mode plan: smallest admissible a0, then eps at the beta0 cap.

    With ``monotone`` the shift is raised to n*b from the focusing-time law so
    that T(b) is the increasing branch; ``law`` may be passed to reuse one.
    Raises :class:`PlanningError` listing every failed inequality.
    """
    if not (0 < eta < 1):
        raise DomainError("eta must lie in (0, 1)")
    if not N > 1:
        raise DomainError("N must exceed 1")
    if not (b > 0 and eps0 > 0):
        raise DomainError("b and eps0 must be positive")
    if k < 1:
        raise DomainError("k must be a positive integer")
    alpha = tuple(float(a) for a in (alpha if alpha is not None else alpha_table(k)))
    if len(alpha) <= k:
        raise DomainError(f"need alpha_0..alpha_{k}")
    C0 = default_vp_C0(k) if C0 is None else float(C0)
    d_k = d_constant(b, k, alpha)
    a0 = 20.0 * d_k * eta ** (-1.0 / 3.0) * C0 ** (1.0 / 3.0) * (1.0 + safety)
    if monotone:
        if law is None:
            law = FocusingTimeLaw.from_constants(eta, N, eps0, k, alpha=alpha, C0=C0)
        a0 = max(a0, law.a0(b))
    a0 = max(a0, b * (1.0 + safety))
    betas = beta0_values(a0, b, N, eps0)
    binding = min(betas, key=betas.get)
    eps = betas[binding] * (1.0 - safety)
    plan = VpPlan(b=float(b), k=int(k), a0=a0, eps=eps, eps0=float(eps0), eta=float(eta), N=float(N),
                  C0=C0, alpha=alpha, mode="strict", binding_term=binding)
    plan = replace(plan, checks=vp_checks(plan))
    bad = failed(plan.checks)
    if bad:
        raise PlanningError("plan fails: " + "; ".join(c.name for c in bad), bad)
    return plan


def relaxed_vp_plan(b=1.0, a0=2.0, eps=0.01, k=1, eps0=None, alpha=None) -> VpPlan:
    """Desk-scale plan with user-chosen a0, eps (no eta/N certification).

    Only the support geometry and T > 0 are checked; the focusing targets are
    taken from the concentration bounds of the plan itself.
    """
    alpha = tuple(float(a) for a in (alpha if alpha is not None else alpha_table(k)))
    plan = VpPlan(b=float(b), k=int(k), a0=float(a0), eps=float(eps),
                  eps0=float(4 * eps if eps0 is None else eps0), C0=default_vp_C0(k),
                  alpha=alpha, mode="relaxed")
    env = plan.env()
    checks = _vp_geometry_checks(env) + [check("focus radius inside eps0", "4*eps <= eps0", env)]
    plan = replace(plan, checks=tuple(checks))
    bad = failed(plan.checks)
    if bad:
        raise PlanningError("relaxed plan fails: " + "; ".join(c.name for c in bad), bad)
    return plan


# ------------------------------------------------------ focusing-time law


@dataclass(frozen=True)
class FocusingTimeLaw:
    """T(b) with a0 = n b, eps = C for b >= 1 and a0 = n~ b^-k, eps = C~ b^3 below."""

    k: int
    n: float
    C: float
    n_tilde: float
    C_tilde: float
    eta: Optional[float] = None
    N: Optional[float] = None
    eps0: Optional[float] = None
    C0: Optional[float] = None
    alpha: Optional[tuple] = None

    @classmethod
    def from_constants(cls, eta, N, eps0, k, alpha=None, C0=None, safety=SAFETY):
        """Choose n = n~ and C = C~ from the constraints evaluated at b = 1.

        For b > 1 the shift bound 20 d_k(b) eta^-1/3 C0^1/3 / b and every
        beta0 term with a0 = n b are largest/smallest at b = 1, and the same
        holds for b^k d_k(b) on (0, 1), so the b = 1 values serve both ranges.
        """
        alpha = tuple(float(a) for a in (alpha if alpha is not None else alpha_table(k)))
        C0 = default_vp_C0(k) if C0 is None else float(C0)
        n = 20.0 * d_constant(1.0, k, alpha) * eta ** (-1 / 3) * C0 ** (1 / 3) * (1 + safety)
        C = min(beta0_values(n, 1.0, N, eps0).values()) * (1 - safety)
        C_t = C
        while not n * C_t**2 > 9 * C_t**3 + 1000 * n**2 * C_t**4:
            C_t *= 0.5
        return cls(k=k, n=n, C=C, n_tilde=n, C_tilde=C_t, eta=eta, N=N, eps0=eps0, C0=C0, alpha=alpha)

    def a0(self, b):
        return self.n * b if b >= 1 else self.n_tilde * b ** (-self.k)

    def eps(self, b):
        return self.C if b >= 1 else self.C_tilde * b**3

    def __call__(self, b):
        return t_of_b(b, self)

    def junction_checks(self):
        env = dict(n=self.n, C=self.C, nt=self.n_tilde, Ct=self.C_tilde)
        dominance = check("small-b dominance", "nt*Ct**2 > 9*Ct**3 + 1000*nt**2*Ct**4", env)
        if self.n == self.n_tilde and self.C == self.C_tilde:
            # both branches share one formula at b = 1; enclosures of equal values never order
            return (dominance, check("junction ordering", "Ct <= C", env))
        return (dominance,
                check("junction ordering", "n*C**2 - C**3 - 100*C**4*n**2 >= nt*Ct**2 - Ct**3 - 100*Ct**4*nt**2", env))

    def certify(self, b) -> tuple:
        """Does (a0(b), eps(b)) satisfy the shift and eps constraints at this b?"""
        if self.eta is None:
            raise DomainError("law built without eta/N/eps0 cannot be certified")
        a0, eps = self.a0(b), self.eps(b)
        d_k = d_constant(b, self.k, self.alpha)
        env = dict(a0=a0, eps=eps, b=b, N=self.N, eps0=self.eps0, eta=self.eta, C0=self.C0, d_k=d_k)
        out = [check("combined shift constraint", "a0 >= 20*d_k*eta**(-1/3)*C0**(1/3)", env)]
        out += [check(f"eps bound: {name}", f"eps <= {expr}", env) for name, expr in BETA0_TERMS.items()]
        return tuple(out)


def t_of_b(b, law: FocusingTimeLaw):
    if not b > 0:
        raise DomainError("b must be positive")
    k = law.k
    if b >= 1:
        n, C = law.n, law.C
        return n * C**2 * b - C**3 - 100.0 * C**4 * n**2
    if not 1 <= k <= 5:
        raise UnsupportedRegimeError(f"the b < 1 branch is only constructed for 1 <= k <= 5 (k={k})")
    n, C = law.n_tilde, law.C_tilde
    return n * C**2 * b ** (6 - k) - C**3 * b**9 - 100.0 * C**4 * n**2 * b ** (10 - 2 * k)


# -------------------------------------------------------------------- RVP

RVP_EPS_TERMS = {
    "absolute cap": "1/1000",
    "focus radius": "(eps0/110)**(1/3)",
    "sup norms": "eta/32",
    "field C^k": "(eta/(C0*(1 + c_k)))**(8/15)/4",
    "targets": "10**(-16)*N**(-4)",
}
RVP_DPS = 160


@dataclass(frozen=True)
class RvpPlan:
    """Relativistic plan; scales are mpmath numbers since b +- eps^3 underflows float64."""

    k: int
    eps: mpmath.mpf
    eps0: float
    eta: Optional[float] = None
    N: Optional[float] = None
    c_k: float = 5.0
    C0: float = 32.0 + 1500.0 * math.pi
    alpha: tuple = (1.0, 4.0)
    mode: str = "strict"
    binding_term: Optional[str] = None
    checks: tuple = field(default=(), compare=False)

    def _mp(self, expr):
        with mpmath.workdps(RVP_DPS):
            e = mpmath.mpf(self.eps)
            return expr(e)

    @property
    def A(self):
        return self._mp(lambda e: e**5)

    @property
    def B(self):
        return self._mp(lambda e: e ** mpmath.mpf(-1.5))

    @property
    def b(self):
        return self._mp(lambda e: e ** (-mpmath.mpf(7) / 8))

    @property
    def T(self):
        return self._mp(lambda e: e ** (-mpmath.mpf(7) / 8) - 10 * e ** (mpmath.mpf(35) / 8))

    @property
    def certified(self) -> bool:
        return bool(self.checks) and not failed(self.checks)

    def chi(self) -> CutoffChi:
        """Cutoff in float64; only usable when b +- eps^3 is representable (relaxed scales)."""
        return CutoffChi(center=float(self.b), width=float(self.eps) ** 3, alpha=tuple(self.alpha))

    def env(self) -> dict:
        return dict(eta=self.eta, N=self.N, eps0=self.eps0, eps=self.eps, c_k=self.c_k, C0=self.C0,
                    k=self.k)

    def summary(self) -> dict:
        s = lambda x: mpmath.nstr(x, 17)
        return dict(system="rvp", mode=self.mode, k=self.k, eta=self.eta, N=self.N, eps0=self.eps0,
                    eps=s(self.eps), A=s(self.A), B=s(self.B), b=s(self.b), T=s(self.T),
                    c_k=self.c_k, C0=self.C0, binding_term=self.binding_term)


def rvp_checks(plan: RvpPlan):
    env = plan.env()
    d = RVP_DPS
    out = [check(f"eps bound: {name}", f"eps <= {expr}", env, d) for name, expr in RVP_EPS_TERMS.items()]
    b, B = "(eps**(-7/8))", "(eps**(-3/2))"
    out += [
        check("focusing time positive", f"{b} - 10*eps**(35/8) > 0", env, d),
        check("radius lower bound", f"1/2*{b} < {b} - eps**3", env, d),
        check("radius upper bound", f"{b} + eps**3 < 3/2*{b}", env, d),
        check("radial momentum lower bound", f"-2*eps**(-35/8) < -eps**(9/2) - ({b} + eps**3)/eps**(7/2)", env, d),
        check("radial momentum upper bound", f"-({b} - eps**3)/eps**(7/2) + eps**(9/2) < -1/2*eps**(-35/8)", env, d),
        check("angular momentum below 1", f"(({b} + eps**3)/{B})**2*eps**6 < 1", env, d),
        check("initial density sup below eta", f"3/(8*pi*{B}**3) <= eta", env, d),
        check("initial density sup below eta (full velocity integral)", f"3/(4*pi*{B}**3) <= eta", env, d),
        check("initial field sup below eta", f"16*{B}**(-3)*eps**3 <= eta", env, d),
        check("initial density C^k below eta", f"k*3*{B}**(-3)/(8*pi)*c_k <= eta", env, d),
        check("initial field C^k below eta", f"2*C0*(1 + c_k)*(1 + {b}**3)*{B}**(-3) <= eta", env, d),
        check("D below 4", f"1 + 8*{B}**(-3)*eps**3*{b}**2*2*{b}*sqrt(1 + 4*eps**(-35/4) + 4*eps**(7/4)) <= 4",
              env, d),
        check("focus radius inside eps0", "110*eps**3 <= eps0", env, d),
        check("final density reaches N", f"3/(4*pi)*3/2*{B}**(-3)*eps**3*{b}**2/(1331000*eps**9) >= N", env, d),
        check("final field reaches N", f"3/2*{B}**(-3)*eps**3*{b}**2/(12100*eps**6) >= N", env, d),
    ]
    return tuple(out)


def plan_rvp(eta, N, eps0, k: int, c_k=None, C0=None, alpha=None) -> RvpPlan:
    """eps is the five-way minimum; A = eps^5, B = eps^-3/2, b = eps^-7/8, T = b - 10 eps^35/8.

    ``c_k`` defaults to sum_{j<=k} alpha_j, so that the cutoff's j-th
    derivative is at most c_k eps^{-3j}.
    """
    if not (0 < eta < 1):
        raise DomainError("eta must lie in (0, 1)")
    if not N > 1:
        raise DomainError("N must exceed 1")
    if k < 1:
        raise DomainError("k must be a positive integer")
    alpha = tuple(float(a) for a in (alpha if alpha is not None else alpha_table(k)))
    c_k = math.fsum(alpha[: k + 1]) if c_k is None else float(c_k)
    C0 = default_rvp_C0(k) if C0 is None else float(C0)
    env = dict(eta=eta, N=N, eps0=eps0, c_k=c_k, C0=C0)
    terms = {}
    with mpmath.workdps(RVP_DPS):
        for name, expr in RVP_EPS_TERMS.items():
            lo, _ = evaluate(expr, env, RVP_DPS)
            terms[name] = lo
        binding = min(terms, key=terms.get)
        eps = terms[binding]
    plan = RvpPlan(k=k, eps=eps, eps0=float(eps0), eta=float(eta), N=float(N), c_k=c_k, C0=C0,
                   alpha=alpha, binding_term=binding)
    return replace(plan, checks=rvp_checks(plan))


def relaxed_rvp_plan(eps=0.1, k=1, eps0=None, alpha=None) -> RvpPlan:
    alpha = tuple(float(a) for a in (alpha if alpha is not None else alpha_table(k)))
    with mpmath.workdps(RVP_DPS):
        e = mpmath.mpf(eps)
    return RvpPlan(k=k, eps=e, eps0=float(110 * eps**3 if eps0 is None else eps0),
                   c_k=math.fsum(alpha[: k + 1]), alpha=alpha, mode="relaxed")


# --------------------------------------------------- strict confinement


def _corner_grid(n):
    return np.linspace(0.0, 1.0, n) if n > 1 else np.array([0.0, 1.0])


def vp_confinement_checks(plan: VpPlan, dense: int = 0):
    """Lemma-envelope confinement at t = T over the certified support.

    The support is parametrised by (r, u, l) with u = r/eps^2 + a0 w, so that
    r in [b/2, 3b/2], u in [-eps, eps], l in [0, (3b/(2 a0))^2 eps^2]; w is then
    (u - r/eps^2)/a0. The envelope is evaluated at the 8 corners (or on a
    ``dense``^3 grid) with the rigorous charge bound, together with the
    turning-time floor T0 >= T.
    """
    a0, eps, b = plan.a0, plan.eps, plan.b
    env0 = dict(a0=a0, eps=eps, b=b, M=plan.mass_upper())
    T_expr = "(a0*eps**2 - eps**3 - 100*a0**2*eps**4/b**2)"
    l_hi = "(3*b/(2*a0))**2*eps**2"
    pts = _corner_grid(dense) if dense else np.array([0.0, 1.0])
    worst_env, worst_t0 = None, None
    for sr in pts:
        for su in pts:
            for sl in pts:
                env = dict(env0, sr=float(sr), su=float(su), sl=float(sl))
                r = "(b/2 + b*sr)"
                u = "(-eps + 2*eps*su)"
                l = f"({l_hi}*sl)"
                w = f"(({u} - {r}/eps**2)/a0)"
                R2 = f"({r} + {w}*{T_expr})**2 + ({l}/{r}**2 + M/{r})*{T_expr}**2"
                c_env = check("envelope at T within (4 eps)^2", f"{R2} <= 16*eps**2", env)
                if worst_env is None or c_env.margin < worst_env.margin:
                    worst_env = c_env
                if sl > 0:
                    q = f"({l} + M*{r})"
                    t0 = f"{r}/(-{w})*(1 - sqrt({q}/({r}**2*{w}**2 + {q})))"
                    c_t0 = check("turning-time floor exceeds T", f"{t0} >= {T_expr}", env)
                    if worst_t0 is None or c_t0.margin < worst_t0.margin:
                        worst_t0 = c_t0
    return (worst_env, worst_t0)


def rvp_confinement_checks(plan: RvpPlan, dense: int = 0):
    """Relativistic envelope R(T) <= 110 eps^3 and T0 >= T over the sheared support box.

    u = r/A + B w ranges over [-eps^3, eps^3], r over [b - eps^3, b + eps^3],
    l over [0, ((b + eps^3)/B)^2 eps^6].
    """
    env0 = dict(eps=plan.eps)
    b, A, B = "(eps**(-7/8))", "(eps**5)", "(eps**(-3/2))"
    T = f"({b} - 10*eps**(35/8))"
    # rigorous charge bound from rho(0) <= 3/(4 pi B^3) on the shell
    M = f"({B}**(-3)*(({b} + eps**3)**3 - ({b} - eps**3)**3))"
    l_hi = f"((({b} + eps**3)/{B})**2*eps**6)"
    pts = _corner_grid(dense) if dense else np.array([0.0, 1.0])
    worst_env, worst_t0 = None, None
    for sr in pts:
        for su in pts:
            for sl in pts:
                env = dict(env0, sr=float(sr), su=float(su), sl=float(sl))
                r = f"({b} - eps**3 + 2*eps**3*sr)"
                u = "(-eps**3 + 2*eps**3*su)"
                l = f"({l_hi}*sl)"
                w = f"(({u} - {r}/{A})/{B})"
                g2 = f"(1 + {w}**2 + {l}/{r}**2)"
                D = f"({l} + {M}*{r}*sqrt({g2}))"
                R2 = f"({r} - (-{w})/sqrt({g2})*{T})**2 + {D}/({r}**2*{g2})*{T}**2"
                c_env = check("envelope at T within 110 eps^3", f"{R2} <= (110*eps**3)**2", env, RVP_DPS)
                if worst_env is None or c_env.margin < worst_env.margin:
                    worst_env = c_env
                t0 = f"{r}*(1 - sqrt({D}/({r}**2*{w}**2 + {D})))"
                c_t0 = check("turning-time floor exceeds T", f"{t0} >= {T}", env, RVP_DPS)
                if worst_t0 is None or c_t0.margin < worst_t0.margin:
                    worst_t0 = c_t0
    return (worst_env, worst_t0)
