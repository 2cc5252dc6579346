"""Acceptance criteria 1-10, one PASS/FAIL line each in the terminal summary."""
import math
import sys
import time

import numpy as np
import pytest

from conftest import ACCEPTANCE_LINES
from oracles import ball_mass, exp_mass, free_radius
from vpfocus.initial_data import plan_rvp, plan_vp, relaxed_vp_plan
from vpfocus.initial_data.plans import rvp_confinement_checks, vp_confinement_checks
from vpfocus.initial_data.profile import alpha_table
from vpfocus.radial_kinetics import RadialPhasePoint, System, integrate_trajectory, rvp_bounds, vp_bounds
from vpfocus.simulation import check_concentration, conservation_report, focusing_experiment, monotonicity_sweep
from vpfocus.initial_data import FocusingTimeLaw


def record(n, ok, detail):
    line = f"criterion {n:2d}: {'PASS' if ok else 'FAIL'}  {detail}"
    ACCEPTANCE_LINES[n] = line
    print(line, file=sys.stderr)
    return ok


@pytest.fixture(scope="module", autouse=True)
def warm_alpha_table():
    # cutoff constants are measured once per process; criteria time only the planning itself
    alpha_table(8)


def _tuples(seed, n=200):
    rng = np.random.default_rng(seed)
    out = []
    for i in range(n):
        r = rng.uniform(0.3, 3.0)
        w = -rng.uniform(0.1, 3.0)
        l = rng.uniform(1e-2, 1.0)
        M = rng.uniform(0.0, 2.0)
        kind = i % 3
        field = None if M == 0 else (ball_mass(M, rng.uniform(0.2, 2.0)) if kind == 0 else
                                     exp_mass(M, rng.uniform(0.2, 2.0)) if kind == 1 else None)
        out.append((r, w, l, M if field is not None else 0.0, field))
    return out


def _suite(system, seed):
    t0 = time.perf_counter()
    worst_env, worst_turn, worst_bracket, worst_speed = math.inf, math.inf, math.inf, math.inf
    for r, w, l, M, field in _tuples(seed):
        g = math.sqrt(1 + w * w + l / r**2) if system is System.RVP else 1.0
        rec = integrate_trajectory(system, RadialPhasePoint(r, w, l), field, 1.2 * r / abs(w) * g + 0.1)
        t, R, W, L = rec.arrays()
        rep = (vp_bounds if system is System.VP else rvp_bounds)(r, w, l, M)
        t_turn = rec.turning_time if rec.turning_time is not None else math.inf
        sel = t < t_turn
        env = np.array([rep.r_sq_envelope(x) for x in t[sel]])
        worst_env = min(worst_env, float(np.min((env - R[sel] ** 2) / env)))
        if rec.turning_time is not None:
            worst_turn = min(worst_turn, rec.turning_time - (rep.t0_lower - rec.step_near(rec.turning_time)))
        if system is System.RVP:
            R_T0 = float(np.interp(t_turn, t, R)) if math.isfinite(t_turn) else float(R.min())
            worst_bracket = min(worst_bracket, R_T0 - (rep.r_minus - 1e-4), (rep.r_plus + 1e-4) - R_T0)
            speed = W[sel] ** 2 + L[sel] / R[sel] ** 2
            worst_speed = min(worst_speed, float(np.min(-(np.diff(speed)) / speed[1:] + 1e-6)) if speed.size > 1
                              else math.inf)
    return worst_env, worst_turn, worst_bracket, worst_speed, time.perf_counter() - t0


def test_criterion_1_vp_envelope_suite():
    env, turn, _, _, dt = _suite(System.VP, 1)
    ok = env >= -1e-6 and turn >= 0 and dt < 60
    record(1, ok, f"200 VP tuples: min envelope margin {env:.3g}, min turning slack {turn:.3g}, {dt:.1f} s")
    assert ok


def test_criterion_2_rvp_envelope_suite():
    env, turn, bracket, speed, dt = _suite(System.RVP, 2)
    ok = env >= -1e-6 and turn >= 0 and bracket >= 0 and speed >= 0 and dt < 60
    record(2, ok, f"200 RVP tuples: envelope {env:.3g}, turning {turn:.3g}, R(T0) bracket slack {bracket:.3g}, "
                  f"speed monotonicity slack {speed:.3g}, {dt:.1f} s")
    assert ok


def test_criterion_3_free_streaming():
    worst = 0.0
    for r, w, l, _, _ in _tuples(3, 50):
        rec = integrate_trajectory(System.VP, RadialPhasePoint(r, w, l), None, 10.0)
        t, R, _, _ = rec.arrays()
        ref = free_radius(r, w, l, t)
        worst = max(worst, float(np.max(np.abs(R - ref) / ref)))
    ok = worst <= 1e-8
    record(3, ok, f"max relative error over t in [0, 10]: {worst:.3g}")
    assert ok


CRIT4 = [(0.5, 2, 1, 1, 1), (0.5, 2, 5, 0.5, 2)]


def test_criterion_4_strict_vp_certification():
    t0 = time.perf_counter()
    details, ok = [], True
    for args in CRIT4:
        plan = plan_vp(*args)
        env, turn = vp_confinement_checks(plan)
        margins = [c.margin for c in plan.checks] + [env.margin]
        ok &= all(c.passed for c in plan.checks) and env.passed and min(margins) > 0
        details.append(f"{args}: a0={plan.a0:.6g} eps={plan.eps:.4g} T={plan.T:.4g} min margin {min(margins):.2g}")
    dt = time.perf_counter() - t0
    ok &= dt < 1.0
    record(4, ok, "; ".join(details) + f"; {dt:.2f} s")
    assert ok


def test_criterion_5_strict_rvp_certification():
    t0 = time.perf_counter()
    plan = plan_rvp(0.5, 2, 110, 1)
    env, _ = rvp_confinement_checks(plan)
    rep = focusing_experiment(plan, "strict")
    dt = time.perf_counter() - t0
    mass = [c for c in rep.checks if c.name.startswith("quadrature mass")]
    plan_ok = all(c.passed for c in plan.checks)
    mass_ok = all(c.passed for c in mass)
    ok = plan_ok and mass_ok and env.passed and dt < 1.0
    ratio = mass[0].lhs
    record(5, ok, f"plan checks {'pass' if plan_ok else 'fail'}; envelope {'pass' if env.passed else 'fail'} "
                  f"(margin {env.margin:.3g}); mass ratio M/(B^-3 eps^3 b^2) = {ratio:.4f} against [1.5, 4] "
                  f"{'pass' if mass_ok else 'fail'}; {dt:.2f} s")
    assert ok


@pytest.fixture(scope="module")
def relaxed_run():
    plan = relaxed_vp_plan()
    t0 = time.perf_counter()
    rep = focusing_experiment(plan, "relaxed", n_steps=400)
    return plan, rep, time.perf_counter() - t0


def test_criterion_6_relaxed_vp_focusing(relaxed_run):
    plan, rep, dt = relaxed_run
    n_particles = int(rep.notes[2].split(":")[1])
    by = {c.name: c for c in rep.checks}
    dens = by["focused density over 3M/(4 pi K^3)"].lhs
    fld = by["focused field over M/K^2"].lhs
    growth = rep.norms_T["growth_ratio"]
    ok = dens >= 0.9 and fld >= 0.9 and growth >= 10 and dt < 300 and n_particles >= 5e4
    record(6, ok, f"{n_particles} particles, K={rep.K:.4g}: rho ratio {dens:.3f}, E ratio {fld:.3f}, "
                  f"growth {growth:.4g}, {dt:.1f} s")
    assert ok


def test_criterion_7_initial_norms():
    details, ok = [], True
    for args in CRIT4:
        plan = plan_vp(*args)
        rep = focusing_experiment(plan, "strict")
        err = rep.norms_t0["rho0_error_vs_half_integral"]
        full = rep.norms_t0["rho0_error_vs_full_integral"]
        norms_ok = rep.norms_t0["rho_Ck"] <= plan.eta and rep.norms_t0["E_Ck"] <= plan.eta
        ok &= err <= 0.02 and norms_ok
        details.append(f"{args}: sup error vs 3/(8 pi a0^3) chi {err:.3g} (vs 3/(4 pi a0^3) chi {full:.3g}), "
                       f"rho C^k {rep.norms_t0['rho_Ck']:.3g}, E C^k {rep.norms_t0['E_Ck']:.3g}")
    record(7, ok, "; ".join(details))
    assert ok


def test_criterion_8_monotonicity():
    t0 = time.perf_counter()
    small = [round(0.1 * i, 1) for i in range(1, 10)]
    large = [1.5, 2.0, 4.0, 8.0, 16.0]
    ok, decreases = True, 0
    for k in range(1, 9):
        law = FocusingTimeLaw.from_constants(0.5, 2.0, 1.0, k)
        grid = (small + large) if k <= 5 else large
        tab = monotonicity_sweep(grid, k, law)
        T1 = law(1.0)
        decreases += len(tab.decreases)
        ok &= tab.monotone and all(T >= T1 for b, T, _ in tab.rows if b > 1)
    dt = time.perf_counter() - t0
    ok &= dt < 1.0
    record(8, ok, f"k=1..8: {decreases} adjacent decreases, T(b) >= T(1) for b > 1: {ok}, {dt:.3f} s")
    assert ok


def test_criterion_9_conservation(relaxed_run):
    plan, rep, _ = relaxed_run
    fine = focusing_experiment(plan, "relaxed", n_steps=800)
    l_drift = rep.conservation["l_drift_rel"]
    e1 = rep.conservation["energy_drift_abs"]
    e2 = fine.conservation["energy_drift_abs"]
    ok = l_drift <= 1e-6 and e2 <= 0.5 * e1
    record(9, ok, f"l drift {l_drift:.3g}; energy drift {e1:.4g} (400 steps) -> {e2:.4g} (800 steps), "
                  f"factor {e1 / e2:.3g}")
    assert ok


def test_criterion_10_concentration_arithmetic():
    confined, rb, eb = check_concentration(1.0, 1.0)
    ok = (float(f"{rb:.12g}") == float(f"{3 / (4 * math.pi):.12g}") and float(f"{eb:.12g}") == 1.0)
    record(10, ok, f"bounds ({rb:.12g}, {eb:.12g})")
    assert ok
