import math

import mpmath
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from oracles import beta0_min, shift_floor
from vpfocus.errors import DomainError, PlanningError
from vpfocus.initial_data import FocusingTimeLaw, plan_rvp, plan_vp, relaxed_rvp_plan, relaxed_vp_plan, t_of_b
from vpfocus.initial_data.plans import (UnsupportedRegimeError, default_rvp_C0, default_vp_C0, d_constant,
                                        rvp_confinement_checks, vp_confinement_checks)
from vpfocus.initial_data.profile import alpha_table


def test_default_constants():
    assert [default_vp_C0(k) for k in (1, 2, 3)] == [32.0, 100.0, 1e4]
    assert default_rvp_C0(1) == pytest.approx(32 + 1500 * math.pi)
    assert default_rvp_C0(3) == pytest.approx((32 + 13500 * math.pi) * 10)


def test_d_constant_k1():
    assert d_constant(1.0, 1, alpha_table(1)) == pytest.approx(0.5 + 1 + 8)


@pytest.mark.parametrize("eta, N, b, eps0, k", [(0.5, 2, 1, 1, 1), (0.5, 2, 5, 0.5, 2)])
def test_vp_plan_against_plain_formulas(eta, N, b, eps0, k):
    plan = plan_vp(eta, N, b, eps0, k)
    a_ref = shift_floor(eta, b, k, alpha_table(k), default_vp_C0(k))
    assert plan.a0 == pytest.approx(a_ref, rel=2e-6) and plan.a0 >= a_ref
    assert plan.eps == pytest.approx(beta0_min(plan.a0, b, N, eps0), rel=2e-6)
    assert plan.eps <= beta0_min(plan.a0, b, N, eps0)
    assert plan.T > 0 and plan.certified


def test_vp_plan_first_example_values():
    plan = plan_vp(0.5, 2, 1, 1, 1)
    assert plan.a0 == pytest.approx(760.0, rel=2e-6)
    assert plan.binding_term == "field target"
    T_ref = plan.a0 * plan.eps**2 - plan.eps**3 - 100 * plan.a0**2 * plan.eps**4
    assert plan.T == pytest.approx(T_ref, rel=1e-12)


@settings(max_examples=25)
@given(st.floats(0.05, 0.9), st.floats(0.05, 0.9))
def test_smaller_eta_needs_larger_shift(e1, e2):
    lo, hi = sorted((e1, e2))
    if hi - lo < 1e-3:
        return
    assert plan_vp(lo, 2, 1, 1, 1).a0 > plan_vp(hi, 2, 1, 1, 1).a0


@settings(max_examples=25)
@given(st.floats(0.05, 0.95), st.floats(1.5, 1e4), st.floats(0.1, 20), st.floats(1e-3, 10), st.integers(1, 3))
def test_vp_plan_always_certified(eta, N, b, eps0, k):
    plan = plan_vp(eta, N, b, eps0, k)
    assert plan.T > 0 and plan.a0 > b
    assert all(c.passed for c in plan.checks)


@pytest.mark.parametrize("args", [(0.0, 2, 1, 1, 1), (1.0, 2, 1, 1, 1), (0.5, 1.0, 1, 1, 1), (0.5, 2, -1, 1, 1),
                                  (0.5, 2, 1, 1, 0)])
def test_vp_plan_rejects_bad_inputs(args):
    with pytest.raises(DomainError):
        plan_vp(*args)


def test_vp_plan_raises_when_inequality_fails():
    # a tiny C0 makes the field-sup scale bind below what the combined shift gives
    with pytest.raises(PlanningError) as exc:
        plan_vp(0.5, 2, 1, 1, 1, C0=1e-9)
    assert exc.value.failed and all(not c.passed for c in exc.value.failed)


def test_vp_confinement_holds_for_strict_plan():
    env, t0 = vp_confinement_checks(plan_vp(0.5, 2, 1, 1, 1))
    assert env.passed and t0.passed


def test_relaxed_vp_plan():
    plan = relaxed_vp_plan()
    assert plan.mode == "relaxed" and plan.certified
    assert plan.T == pytest.approx(2e-4 - 1e-6 - 400 * 1e-8)
    with pytest.raises(PlanningError):
        relaxed_vp_plan(b=1, a0=0.5)


# ------------------------------------------------------------------ RVP


def test_rvp_plan_example():
    plan = plan_rvp(0.5, 2, 110, 1)
    assert float(plan.eps) == pytest.approx(1e-16 / 16, rel=1e-12)
    assert plan.binding_term == "targets"
    assert plan.c_k == pytest.approx(5.0, rel=1e-9)
    with mpmath.workdps(60):
        assert float(plan.B) == pytest.approx(6.4e25, rel=1e-12)
        assert float(plan.b) == pytest.approx(float(mpmath.mpf("6.25e-18") ** (-mpmath.mpf(7) / 8)), rel=1e-12)
        assert 3 / (8 * math.pi * float(plan.B) ** 3) <= 0.5
    assert plan.certified


def test_rvp_plan_eps_is_minimum_of_caps():
    plan = plan_rvp(0.9, 1.5, 1e-60, 1)
    assert plan.binding_term == "focus radius"
    assert float(plan.eps) == pytest.approx((1e-60 / 110) ** (1 / 3), rel=1e-12)


def test_rvp_envelope_corner_check_passes():
    env, _ = rvp_confinement_checks(plan_rvp(0.5, 2, 110, 1))
    assert env.passed


def test_relaxed_rvp_plan_scales():
    plan = relaxed_rvp_plan(0.1)
    assert float(plan.b) == pytest.approx(0.1 ** (-7 / 8))
    assert float(plan.T) == pytest.approx(0.1 ** (-7 / 8) - 10 * 0.1 ** (35 / 8))
    assert plan.eps0 == pytest.approx(0.11)


# ------------------------------------------------------- focusing-time law


def test_t_of_b_example():
    law = FocusingTimeLaw(k=1, n=2, C=1e-2, n_tilde=2, C_tilde=1e-2)
    assert t_of_b(3, law) == pytest.approx(2 * 1e-4 * 3 - 1e-6 - 100 * 1e-8 * 4)
    assert t_of_b(3, law) == pytest.approx(5.95e-4)


def test_t_of_b_small_b_branch_and_regime():
    law = FocusingTimeLaw(k=2, n=2, C=1e-2, n_tilde=2, C_tilde=1e-3)
    b = 0.5
    ref = 2 * 1e-6 * b**4 - 1e-9 * b**9 - 100 * 1e-12 * 4 * b**6
    assert t_of_b(b, law) == pytest.approx(ref)
    with pytest.raises(UnsupportedRegimeError):
        t_of_b(0.5, FocusingTimeLaw(k=6, n=2, C=1e-2, n_tilde=2, C_tilde=1e-3))
    with pytest.raises(DomainError):
        t_of_b(0.0, law)


@pytest.mark.parametrize("k", [1, 2, 5])
def test_law_from_constants_is_monotone(k):
    law = FocusingTimeLaw.from_constants(0.5, 2, 1, k)
    assert all(c.passed for c in law.junction_checks())
    bs = [10 ** (x / 10) for x in range(-20, 21)]
    T = [law(b) for b in bs]
    assert all(t > 0 for t in T)
    assert all(b2 > b1 for b1, b2 in zip(T, T[1:]))


def test_law_certifies_for_k1():
    law = FocusingTimeLaw.from_constants(0.5, 2, 1, 1)
    for b in (0.1, 0.5, 1.0, 3.0, 50.0):
        assert all(c.passed for c in law.certify(b)), b


def test_monotone_plan_uses_law_shift():
    law = FocusingTimeLaw.from_constants(0.5, 2, 1, 1)
    plan = plan_vp(0.5, 2, 3.0, 1, 1, monotone=True, law=law)
    assert plan.a0 >= law.a0(3.0)
