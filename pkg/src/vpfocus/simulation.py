"""Self-consistent particle dynamics, concentration checks and focusing experiments.

Each particle is a spherical shell, so it moves in its own orbital plane.
In plane coordinates q = (R, 0), p = (w, sqrt(l)/R) at t = 0, and the force
is radial with magnitude m(t, R^-)/R^2, where m(t, R^-) is the charge of all
particles strictly inside R. The push is kick-drift-kick leapfrog; radial
kicks leave q x p, hence l, unchanged up to rounding.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field, replace
from typing import Optional, Sequence

import numpy as np

from .certify import Check, check, failed
from .errors import DomainError, IntegrationError, PlanningError
from .field_solver import (RadialField, RadialGrid, analytic_rho0_vp, cartesian_ck_norm, ck_norm,
                           profile_interpolant, sup_norm)
from .initial_data.density import mass_ratio, velocity_integral
from .initial_data.plans import (FocusingTimeLaw, RvpPlan, VpPlan, rvp_confinement_checks, t_of_b,
                                 vp_confinement_checks)
from .initial_data.profile import make_profile, reference_cutoff
from .initial_data.sampling import ParticleSet, certify_support, sample_plan
from .radial_kinetics import System, rvp_bounds, vp_bounds


def enclosed_interior(R, weight):
    """Charge strictly inside each radius; equal radii do not see each other."""
    order = np.argsort(R, kind="stable")
    Rs = R[order]
    csum = np.concatenate([[0.0], np.cumsum(weight[order])])
    return csum[np.searchsorted(Rs, R, side="left")]


@dataclass(frozen=True)
class SimState:
    t: float
    q: np.ndarray  # (n, 2) orbital-plane positions
    p: np.ndarray  # (n, 2) orbital-plane momenta
    weight: np.ndarray
    grid: RadialGrid
    system: System = System.VP
    field: Optional[RadialField] = None
    m_inner: Optional[np.ndarray] = None

    @classmethod
    def from_particles(cls, particles: ParticleSet, grid: RadialGrid, system=System.VP, t: float = 0.0):
        r, w, l = particles.r, particles.w, particles.l
        q = np.stack([r, np.zeros_like(r)], axis=1)
        p = np.stack([w, np.sqrt(l) / np.where(r > 0, r, 1.0)], axis=1)
        wt = np.array(particles.weight, dtype=float, copy=True)
        st = cls(t=t, q=q, p=p, weight=wt, grid=grid, system=System(system))
        return st.refreshed()

    def refreshed(self) -> "SimState":
        R = self.radius
        fld = RadialField.from_particles(self.particles, self.grid)
        return replace(self, field=fld, m_inner=enclosed_interior(R, self.weight))

    @property
    def n(self) -> int:
        return int(self.weight.size)

    @property
    def M(self) -> float:
        return float(np.sum(self.weight))

    @property
    def radius(self) -> np.ndarray:
        return np.hypot(self.q[:, 0], self.q[:, 1])

    @property
    def angular(self) -> np.ndarray:
        """l = (q x p)^2."""
        return (self.q[:, 0] * self.p[:, 1] - self.q[:, 1] * self.p[:, 0]) ** 2

    @property
    def radial_momentum(self) -> np.ndarray:
        R = self.radius
        return (self.q[:, 0] * self.p[:, 0] + self.q[:, 1] * self.p[:, 1]) / np.where(R > 0, R, 1.0)

    @property
    def particles(self) -> ParticleSet:
        return ParticleSet(self.radius, self.radial_momentum, self.angular, self.weight)

    def kinetic(self) -> float:
        p2 = np.sum(self.p * self.p, axis=1)
        if self.system is System.VP:
            return float(np.sum(self.weight * 0.5 * p2))
        return float(np.sum(self.weight * p2 / (np.sqrt(1.0 + p2) + 1.0)))

    def potential(self) -> float:
        """Pair energy sum_{i<j} q_i q_j / max(R_i, R_j), positive for like charges.

        Tied radii count each pair once, which keeps the energy continuous
        when coincident shells separate (the force convention ignores ties).
        """
        R = self.radius
        order = np.argsort(R, kind="stable")
        Rs, qs = R[order], self.weight[order]
        before = np.concatenate([[0.0], np.cumsum(qs)[:-1]])
        ok = Rs > 0
        return float(np.sum(qs[ok] * before[ok] / Rs[ok]))

    def energy(self) -> float:
        return self.kinetic() + self.potential()


def _velocity(p, system):
    if system is System.VP:
        return p
    return p / np.sqrt(1.0 + np.sum(p * p, axis=1))[:, None]


def _kick(q, p, m_inner, h):
    R = np.hypot(q[:, 0], q[:, 1])
    return p + (h * m_inner / R**3)[:, None] * q


def step(state: SimState, dt: float, system=None, substeps: int = 1, deposit: bool = True) -> SimState:
    """Advance by ``dt`` with ``substeps`` kick-drift-kick sub-steps, then redeposit."""
    if not dt > 0:
        raise DomainError("dt must be positive")
    system = state.system if system is None else System(system)
    if state.n == 0:
        return replace(state, t=state.t + dt)
    h = dt / substeps
    q, p = state.q, state.p
    m = state.m_inner if state.m_inner is not None else enclosed_interior(state.radius, state.weight)
    for _ in range(substeps):
        p = _kick(q, p, m, 0.5 * h)
        q = q + h * _velocity(p, system)
        R = np.hypot(q[:, 0], q[:, 1])
        bad = np.flatnonzero(~(np.isfinite(R) & (R > 0)))
        if bad.size:
            raise IntegrationError(f"particle {int(bad[0])} reached the origin", index=int(bad[0]))
        m = enclosed_interior(R, state.weight)
        p = _kick(q, p, m, 0.5 * h)
    new = replace(state, t=state.t + dt, q=q, p=p, m_inner=m, system=system)
    if deposit:
        new = replace(new, field=RadialField.from_particles(new.particles, new.grid))
    return new


# ------------------------------------------------------------------ runs


@dataclass(frozen=True)
class RunConfig:
    t_end: float
    dt: float
    snapshot_times: tuple = ()
    system: System = System.VP
    substeps: int = 1
    track: Optional[Sequence[int]] = None
    trace_region: Optional[float] = None  # radius of the rho sup region in the trace


@dataclass
class RunResult:
    snapshots: list
    trace: dict
    tracked: Optional[dict] = None


def _schedule(t_end, dt, snapshot_times):
    targets = sorted({0.0, float(t_end), *[float(s) for s in snapshot_times if 0.0 <= s <= t_end]})
    plan = []
    for a, b in zip(targets[:-1], targets[1:]):
        n = max(1, math.ceil((b - a) / dt - 1e-9))
        plan.append((b, n, (b - a) / n))
    return targets, plan


def run(config: RunConfig, init, grid: RadialGrid) -> RunResult:
    """Integrate from ``init`` (ParticleSet or SimState) and collect snapshots at t=0, t_end and requested times."""
    state = init if isinstance(init, SimState) else SimState.from_particles(init, grid, config.system)
    M0 = state.M
    region = config.trace_region if config.trace_region is not None else grid.r_max
    trace = {"t": [], "sup_R": [], "rho_sup": [], "E_sup": []}
    track = None
    if config.track is not None:
        idx = np.asarray(config.track, dtype=int)
        track = {"index": idx, "t": [], "R": [], "W": [], "L": []}

    def record(s):
        R = s.radius
        trace["t"].append(s.t)
        trace["sup_R"].append(float(R.max()) if s.n else 0.0)
        trace["rho_sup"].append(sup_norm(s.field.rho, (0.0, region), grid))
        trace["E_sup"].append(float(np.max(np.abs(s.field.E))))
        if track is not None:
            track["t"].append(s.t)
            track["R"].append(R[track["index"]].copy())
            track["W"].append(s.radial_momentum[track["index"]].copy())
            track["L"].append(s.angular[track["index"]].copy())

    snapshots = [state]
    record(state)
    if config.t_end > 0:
        _, schedule = _schedule(config.t_end, config.dt, config.snapshot_times)
        for target, n, h in schedule:
            for i in range(n):
                state = step(state, h, config.system, config.substeps)
                if i == n - 1:
                    state = replace(state, t=target)
                record(state)
            snapshots.append(state)
    if any(s.M != M0 for s in snapshots):
        raise IntegrationError("total charge changed")
    trace = {k: np.asarray(v) for k, v in trace.items()}
    if track is not None:
        for key in ("t", "R", "W", "L"):
            track[key] = np.asarray(track[key])
    return RunResult(snapshots, trace, track)


def conservation_report(series) -> dict:
    """Charge, angular-momentum and energy drifts over a snapshot series."""
    if len(series) < 2:
        raise DomainError("need at least two snapshots")
    s0 = series[0]
    l0 = s0.angular
    E0 = s0.energy()
    ok = l0 > 0
    dl = 0.0
    dE = 0.0
    dM = 0.0
    for s in series[1:]:
        dM = max(dM, abs(s.M - s0.M))
        if ok.any():
            dl = max(dl, float(np.max(np.abs(s.angular[ok] - l0[ok]) / l0[ok])))
        dE = max(dE, abs(s.energy() - E0))
    return {"mass_drift": dM, "l_drift_rel": dl, "energy_drift_abs": dE,
            "energy_drift_rel": dE / abs(E0) if E0 else dE, "energy0": E0}


# ------------------------------------------------------- concentration


@dataclass(frozen=True)
class ConcentrationCheck:
    confined: bool
    rho_bound: float
    e_bound: float
    rho_measured: Optional[float] = None
    e_measured: Optional[float] = None
    rho_ok: Optional[bool] = None
    e_ok: Optional[bool] = None

    def __iter__(self):
        return iter((self.confined, self.rho_bound, self.e_bound))


def concentration_bounds(M: float, K: float):
    """Lower bounds 3M/(4 pi K^3) and M/K^2 for charge M confined to |x| <= K."""
    if not K > 0:
        raise DomainError("K must be positive")
    return 3.0 * M / (4.0 * math.pi * K**3), M / K**2


def check_concentration(state, K: float, tol: float = 0.1) -> ConcentrationCheck:
    """Concentration bounds for ``state`` (a SimState, or a total charge M)."""
    if not isinstance(state, SimState):
        rb, eb = concentration_bounds(float(state), K)
        return ConcentrationCheck(True, rb, eb)
    rb, eb = concentration_bounds(state.M, K)
    confined = bool(state.n == 0 or state.radius.max() <= K)
    if not confined or state.M == 0:
        return ConcentrationCheck(confined, rb, eb)
    rho_m = sup_norm(state.field.rho, (0.0, K), state.grid)
    e_m = float(np.max(np.abs(state.field.E)))
    return ConcentrationCheck(confined, rb, eb, rho_m, e_m, rho_m >= rb * (1 - tol), e_m >= eb * (1 - tol))


# ----------------------------------------------------------- experiments


@dataclass
class FocusReport:
    system: str
    mode: str
    plan: dict
    checks: list
    norms_t0: dict = field(default_factory=dict)
    norms_T: dict = field(default_factory=dict)
    K: Optional[float] = None
    lemma: dict = field(default_factory=dict)
    targets: dict = field(default_factory=dict)
    conservation: dict = field(default_factory=dict)
    notes: list = field(default_factory=list)
    series: Optional[RunResult] = field(default=None, repr=False)

    @property
    def passed(self) -> bool:
        return not failed(self.checks)

    def as_dict(self) -> dict:
        return {"system": self.system, "mode": self.mode, "passed": self.passed, "plan": self.plan,
                "checks": [c.as_dict() for c in self.checks], "norms_t0": self.norms_t0,
                "norms_T": self.norms_T, "K": self.K, "lemma": self.lemma, "targets": self.targets,
                "conservation": self.conservation, "notes": self.notes}


def _measured(name, value, bound):
    m = (bound - value) / abs(bound) if bound else -value
    return Check(name, f"{name} <= {bound!r}", float(value), float(bound), float(m), bool(value <= bound))


def _at_least(name, value, bound):
    m = (value - bound) / abs(bound) if bound else value
    return Check(name, f"{name} >= {bound!r}", float(value), float(bound), float(m), bool(value >= bound))


def initial_norms(particles: ParticleSet, grid: RadialGrid, k: int, cartesian_radii=None) -> dict:
    """Radial C^k norms of the deposited rho(0) and E(0), plus Cartesian cross-checks for k <= 2."""
    fld = RadialField.from_particles(particles, grid)
    out = {"rho_Ck_radial": ck_norm(fld.rho, k, grid), "E_Ck_radial": ck_norm(fld.E, k, grid, "edges"),
           "rho_sup": float(fld.rho.max()), "E_sup": float(fld.E.max())}
    if k <= 2 and cartesian_radii is not None:
        h = float(np.min(grid.widths))
        rc = cartesian_ck_norm(profile_interpolant(fld.rho, grid.centers), k, cartesian_radii, "scalar", h)
        ec = cartesian_ck_norm(profile_interpolant(fld.E, grid.edges), k, cartesian_radii, "vector", h)
        out.update(rho_Ck_cartesian=rc, E_Ck_cartesian=ec,
                   rho_cartesian_factor=rc / out["rho_Ck_radial"] if out["rho_Ck_radial"] else 1.0,
                   E_cartesian_factor=ec / out["E_Ck_radial"] if out["E_Ck_radial"] else 1.0)
    out["rho_Ck"] = max(out["rho_Ck_radial"], out.get("rho_Ck_cartesian", 0.0))
    out["E_Ck"] = max(out["E_Ck_radial"], out.get("E_Ck_cartesian", 0.0))
    return out, fld


def _strict_vp(plan: VpPlan, profile, resolution, n_cells, dense):
    checks = list(plan.checks)
    checks += [c for c in vp_confinement_checks(plan, dense=dense)]
    ps = sample_plan(plan, profile, resolution=resolution)
    checks += list(certify_support(ps, plan).checks)
    grid = RadialGrid.uniform(2.0 * plan.b, n_cells)
    radii = np.linspace(0.3 * plan.b, 1.7 * plan.b, 57)
    norms, fld = initial_norms(ps, grid, plan.k, radii)
    checks.append(_measured("measured density C^k at t=0", norms["rho_Ck"], plan.eta))
    checks.append(_measured("measured field C^k at t=0", norms["E_Ck"], plan.eta))
    chi = plan.chi()
    a_half = analytic_rho0_vp(grid.centers, plan, chi)
    a_full = analytic_rho0_vp(grid.centers, plan, chi, full_velocity_integral=True)
    norms["rho0_error_vs_half_integral"] = float(np.max(np.abs(fld.rho - a_half)) / a_half.max())
    norms["rho0_error_vs_full_integral"] = float(np.max(np.abs(fld.rho - a_full)) / a_full.max())
    norms["M"] = ps.M
    K = 4.0 * plan.eps
    lo, _ = plan.mass_bounds()
    rb, eb = concentration_bounds(lo, K)
    targets = {"eta": plan.eta, "N": plan.N, "rho_T_lower": rb, "E_T_lower": eb}
    notes = ["sampled w < 0 on the whole support, so the deposited density equals the full velocity integral"]
    return checks, norms, K, targets, notes


def _strict_rvp(plan: RvpPlan, profile):
    checks = list(plan.checks)
    checks += list(rvp_confinement_checks(plan))
    ratio = mass_ratio(plan, profile, reference_cutoff)
    checks.append(_at_least("quadrature mass over B^-3 eps^3 b^2 (lower bound 3/2)", ratio, 1.5 * 0.99))
    checks.append(_measured("quadrature mass over B^-3 eps^3 b^2 (upper bound 4)", ratio, 4.0 * 1.01))
    import mpmath

    with mpmath.workdps(40):
        e = mpmath.mpf(plan.eps)
        B = e ** mpmath.mpf(-1.5)
        b = e ** (-mpmath.mpf(7) / 8)
        M = ratio * B**-3 * e**3 * b**2
        K = 110 * e**3
        norms = {"M": float(M), "rho_sup_t0": float(3 / (4 * mpmath.pi * B**3)),
                 "rho_Ck_t0": float(3 / (4 * mpmath.pi * B**3) * sum(plan.alpha[j] * e ** (-3 * j)
                                                                     for j in range(plan.k + 1)))}
        targets = {"eta": plan.eta, "N": plan.N, "rho_T_lower": float(3 * M / (4 * mpmath.pi * K**3)),
                   "E_T_lower": float(M / K**2)}
    # the cutoff's j-th derivative is alpha_j eps^(-3j), not an eps-free constant
    checks.append(_measured("closed-form density C^k at t=0", norms["rho_Ck_t0"], plan.eta))
    notes = ["t=0 norms are closed-form: the shell width eps^3 is below float64 resolution at radius b"]
    return checks, norms, float(K), targets, notes


def _lemma_margins(tracked: dict, system: System, M: float, t_stop: float) -> dict:
    """Envelope and turning-time diagnostics for the tracked particles."""
    t = tracked["t"]
    R, W = tracked["R"], tracked["W"]
    r0, w0, l0 = R[0], W[0], tracked["L"][0]
    worst_env = math.inf
    worst_turn = math.inf
    bounds = vp_bounds if system is System.VP else rvp_bounds
    dt = float(np.max(np.diff(t))) if t.size > 1 else 0.0
    n_turned = 0
    for i in range(R.shape[1]):
        if not (w0[i] < 0 and l0[i] > 0):
            continue
        rep = bounds(float(r0[i]), float(w0[i]), float(l0[i]), M)
        turned = np.flatnonzero((W[:-1, i] < 0) & (W[1:, i] >= 0))
        t_turn = float(t[turned[0] + 1]) if turned.size else math.inf
        if turned.size:
            n_turned += 1
            worst_turn = min(worst_turn, (t_turn + dt - rep.t0_lower) / max(rep.t0_lower, 1e-300))
        sel = (t < min(t_turn, t_stop + 0.5 * dt))
        env = np.array([rep.r_sq_envelope(float(tt)) for tt in t[sel]])
        marg = (env - R[sel, i] ** 2) / env
        worst_env = min(worst_env, float(np.min(marg)))
    return {"tracked": int(R.shape[1]), "turned_before_end": n_turned, "min_envelope_margin": worst_env,
            "min_turning_margin": worst_turn if math.isfinite(worst_turn) else None}


def _relaxed(plan, profile, resolution, n_cells, ratio, n_steps, t_factor, growth, n_track, substeps):
    system = System.VP if isinstance(plan, VpPlan) else System.RVP
    ps = sample_plan(plan, profile, resolution=resolution)
    b = plan.b if system is System.VP else float(plan.b)
    grid = RadialGrid.geometric(2.0 * b, n_cells, ratio)
    T = plan.T if system is System.VP else float(plan.T)
    k = plan.k
    norms0, fld0 = initial_norms(ps, grid, k)
    if system is System.RVP:
        # the shell (width 2 eps^3) is far below the grid spacing at r = b
        e = float(plan.eps)
        closed = velocity_integral(e**-1.5) * sum(plan.alpha[j] * e ** (-3 * j) for j in range(k + 1))
        norms0["rho_Ck_closed_form"] = closed
        norms0["rho_Ck"] = max(norms0["rho_Ck"], closed)
    track = np.unique(np.linspace(0, len(ps) - 1, n_track).astype(int))
    t_end = T * t_factor
    # a run stopped before T is measured at its end (the focusing checks then fail)
    t_meas = min(T, t_end)
    cfg = RunConfig(t_end=t_end, dt=T / n_steps, snapshot_times=(t_meas,), system=system, substeps=substeps,
                    track=track, trace_region=plan.eps0)
    res = run(cfg, ps, grid)
    sT = next(s for s in res.snapshots if s.t == t_meas)
    M = sT.M
    K = float(sT.radius.max())
    rb, eb = concentration_bounds(M, K)
    rho_T = sup_norm(sT.field.rho, (0.0, plan.eps0), grid)
    E_T = float(np.max(np.abs(sT.field.E)))
    norms_T = {"rho_sup_focus_region": rho_T, "E_sup": E_T, "growth_ratio": rho_T / norms0["rho_Ck"]}
    lemma = _lemma_margins(res.tracked, system, M, t_meas)
    i_min = int(np.argmin(res.trace["sup_R"]))
    lemma["t_min_sup_R"] = float(res.trace["t"][i_min])
    lemma["min_sup_R"] = float(res.trace["sup_R"][i_min])
    checks = list(plan.checks) + [
        _at_least("focused density over 3M/(4 pi K^3)", rho_T / rb, 0.9),
        _at_least("focused field over M/K^2", E_T / eb, 0.9),
        _at_least("density growth ratio", norms_T["growth_ratio"], growth),
        _at_least("min envelope margin of tracked particles", lemma["min_envelope_margin"], -1e-6),
    ]
    if lemma["min_turning_margin"] is not None:
        checks.append(_at_least("turning time over the lower bound (one step slack)", lemma["min_turning_margin"], 0.0))
    targets = {"rho_T_lower": rb, "E_T_lower": eb, "growth": growth}
    cons = conservation_report(res.snapshots)
    notes = [f"grid: geometric, {n_cells} cells, ratio {ratio}", f"steps to T: {n_steps}", f"particles: {len(ps)}"]
    if t_meas < T:
        notes.append(f"run ends at t={t_meas!r} before T={T!r}; norms_T are measured there")
    return checks, norms0, norms_T, K, lemma, targets, cons, notes, res


def focusing_experiment(plan, mode: str = "strict", targets=None, profile=None, *, resolution=None,
                        n_cells=None, ratio=1.005, n_steps=400, t_factor=1.0, growth=10.0, n_track=256,
                        substeps=1, dense=0) -> FocusReport:
    """Certify (strict) or simulate (relaxed) a focusing construction.

    ``targets`` may override (eta, N) for reporting; strict plans carry their own.
    """
    profile = make_profile() if profile is None else profile
    system = "vp" if isinstance(plan, VpPlan) else "rvp"
    if mode == "strict":
        if plan.mode != "strict" or failed(plan.checks):
            raise PlanningError("strict experiments need a certified strict plan", failed(plan.checks))
        if system == "vp":
            checks, norms, K, tg, notes = _strict_vp(plan, profile, resolution or (2000, 16, 8), n_cells or 400, dense)
        else:
            checks, norms, K, tg, notes = _strict_rvp(plan, profile)
        if targets:
            tg.update(eta=targets[0], N=targets[1])
        return FocusReport(system, mode, plan.summary(), checks, norms, {}, K, {}, tg, {}, notes)
    if mode != "relaxed":
        raise DomainError(f"unknown mode {mode!r}")
    out = _relaxed(plan, profile, resolution or (2000, 10, 5), n_cells or 2000, ratio, n_steps, t_factor,
                   growth, n_track, substeps)
    checks, norms0, norms_T, K, lemma, tg, cons, notes, res = out
    if targets:
        tg.update(eta=targets[0], N=targets[1])
    return FocusReport(system, mode, plan.summary(), checks, norms0, norms_T, K, lemma, tg, cons, notes, res)


# -------------------------------------------------------------- sweeps


@dataclass
class SweepTable:
    k: int
    rows: list  # (b, T, certified or None)
    decreases: list

    @property
    def monotone(self) -> bool:
        return not self.decreases


def monotonicity_sweep(b_grid, k: int, law: Optional[FocusingTimeLaw] = None, certify: bool = False,
                       eta=0.5, N=2.0, eps0=1.0) -> SweepTable:
    """T(b) over an ascending grid, flagging adjacent decreases."""
    b_grid = [float(b) for b in b_grid]
    if any(b1 <= b0 for b0, b1 in zip(b_grid, b_grid[1:])):
        raise DomainError("b_grid must be strictly ascending")
    law = FocusingTimeLaw.from_constants(eta, N, eps0, k) if law is None else law
    rows = []
    for b in b_grid:
        T = t_of_b(b, law)
        cert = (not failed(law.certify(b))) if certify else None
        rows.append((b, T, cert))
    dec = [(rows[i][0], rows[i + 1][0]) for i in range(len(rows) - 1) if rows[i + 1][1] < rows[i][1]]
    return SweepTable(k, rows, dec)
