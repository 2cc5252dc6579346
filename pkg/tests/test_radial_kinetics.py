import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from oracles import ball_mass, exp_mass, free_radius, free_turning_time
from vpfocus.errors import DomainError, IntegrationError, LemmaHypothesisError
from vpfocus.radial_kinetics import (RadialPhasePoint, System, integrate_trajectory, rvp_bounds,
                                     rvp_rhs, sign_changes, to_radial, vp_bounds, vp_rhs)


@pytest.mark.parametrize("x, v, expected", [
    ((1, 0, 0), (0, 1, 0), (1.0, 0.0, 1.0)),
    ((0, 2, 0), (0, -1, 0), (2.0, -1.0, 0.0)),
    ((3, 4, 0), (1, 1, 0), (5.0, 7 / 5, 1.0)),
])
def test_to_radial_examples(x, v, expected):
    p = to_radial(x, v)
    assert (p.r, p.w, p.l) == pytest.approx(expected, abs=1e-15)


def test_to_radial_rejects_origin():
    with pytest.raises(DomainError):
        to_radial((0, 0, 0), (1, 0, 0))


vec = st.lists(st.floats(-10, 10, allow_nan=False), min_size=3, max_size=3)


@given(vec, vec)
def test_speed_identity(x, v):
    x = np.array(x)
    if np.linalg.norm(x) < 1e-3:
        return
    p = to_radial(x, v)
    v = np.array(v)
    assert p.speed_squared() == pytest.approx(float(v @ v), rel=1e-12, abs=1e-12)


@pytest.mark.parametrize("state, m, expected", [
    ((1, 0, 1), 0, (0, 1, 0)),
    ((2, -1, 0), 4, (-1, 1, 0)),
    ((1, 3, 2), 1, (3, 3, 0)),
])
def test_vp_rhs_examples(state, m, expected):
    assert vp_rhs(RadialPhasePoint(*state), m) == pytest.approx(expected)


@pytest.mark.parametrize("state, expected", [
    ((1, 0, 0), (0, 0, 0)),
    ((1, 0, 3), (0, 1.5, 0)),
    ((2, -2, 0), (-2 / math.sqrt(5), 0, 0)),
])
def test_rvp_rhs_examples(state, expected):
    assert rvp_rhs(RadialPhasePoint(*state), 0.0) == pytest.approx(expected)


@pytest.mark.parametrize("rhs", [vp_rhs, rvp_rhs])
def test_rhs_rejects_nonpositive_radius(rhs):
    with pytest.raises(DomainError):
        rhs(RadialPhasePoint(0.0, 1.0, 1.0), 0.0)


def test_free_streaming_sqrt2():
    rec = integrate_trajectory(System.VP, RadialPhasePoint(1.0, 0.0, 1.0), None, 1.0)
    assert rec.r[-1] == pytest.approx(math.sqrt(2.0), rel=1e-10)
    assert rec.t[-1] == pytest.approx(1.0)


def test_free_turning_time_matches_geometry():
    init = RadialPhasePoint(1.0, -1.0, 0.01)
    rec = integrate_trajectory(System.VP, init, None, 2.0)
    t_ref = free_turning_time(1.0, -1.0, 0.01)
    assert rec.turning_time == pytest.approx(t_ref, abs=rec.step_near(t_ref))


def test_pure_outward_radial_motion_is_linear():
    rec = integrate_trajectory(System.VP, RadialPhasePoint(0.5, 2.0, 0.0), None, 3.0)
    t, r, _, _ = rec.arrays()
    assert np.max(np.abs(r - (0.5 + 2.0 * t))) < 1e-12


def test_sample_times_strictly_increasing():
    rec = integrate_trajectory(System.RVP, RadialPhasePoint(1.0, -1.0, 0.2), ball_mass(0.5, 1.0), 3.0)
    assert np.all(np.diff(rec.t) > 0)


def test_guard_raises_with_partial_record():
    # l = 0 inward motion reaches the origin; the guard must surface it
    with pytest.raises(IntegrationError) as exc:
        integrate_trajectory(System.VP, RadialPhasePoint(1.0, -1.0, 0.0), None, 2.0)
    assert exc.value.record is not None and len(exc.value.record.t) > 1


@given(st.floats(0.2, 3.0), st.floats(-3.0, -0.05), st.floats(1e-3, 1.0))
def test_free_streaming_property(r, w, l):
    rec = integrate_trajectory(System.VP, RadialPhasePoint(r, w, l), None, 5.0)
    t, R, _, L = rec.arrays()
    assert np.max(np.abs(R - free_radius(r, w, l, t)) / free_radius(r, w, l, t)) < 1e-8
    assert np.max(np.abs(L - l)) <= 1e-12 * (1 + l)


@pytest.mark.parametrize("system", [System.VP, System.RVP])
@given(r=st.floats(0.3, 3.0), w=st.floats(-3.0, -0.1), l=st.floats(1e-2, 1.0), M=st.floats(0.0, 2.0))
def test_single_sign_change_and_envelope(system, r, w, l, M):
    field = ball_mass(M, 0.7)
    g = math.sqrt(1 + w * w + l / r**2) if system is System.RVP else 1.0
    rec = integrate_trajectory(system, RadialPhasePoint(r, w, l), field, 1.2 * r / abs(w) * g + 0.1)
    t, R, W, _ = rec.arrays()
    assert sign_changes(W) <= 1
    bounds = (vp_bounds if system is System.VP else rvp_bounds)(r, w, l, M)
    t_turn = rec.turning_time if rec.turning_time is not None else math.inf
    before = t < t_turn
    env = np.array([bounds.r_sq_envelope(x) for x in t[before]])
    assert np.all(R[before] ** 2 <= env * (1 + 1e-6) + 1e-12)
    if rec.turning_time is not None:
        assert rec.turning_time >= bounds.t0_lower - rec.step_near(rec.turning_time)


def test_time_reversal_in_frozen_field():
    field = exp_mass(0.8, 0.5)
    init = RadialPhasePoint(2.0, -0.7, 0.3)
    fwd = integrate_trajectory(System.VP, init, field, 1.5)
    back = integrate_trajectory(System.VP, RadialPhasePoint(fwd.r[-1], -fwd.w[-1], fwd.l[-1]), field, 1.5)
    assert back.r[-1] == pytest.approx(2.0, rel=1e-8)
    assert -back.w[-1] == pytest.approx(-0.7, rel=1e-8)


def test_vp_bounds_examples():
    rep = vp_bounds(1.0, -1.0, 1.0, 0.0)
    assert rep.t0_lower == pytest.approx(1 - math.sqrt(0.5))
    ts = np.linspace(0, 1, 1001)
    env = np.array([rep.r_sq_envelope(t) for t in ts])
    assert env == pytest.approx((1 - ts) ** 2 + ts**2)
    assert env.min() == pytest.approx(0.5) and ts[env.argmin()] == pytest.approx(0.5)
    assert vp_bounds(2.0, -1.0, 1.0, 2.0).t0_lower == pytest.approx(2 * (1 - math.sqrt(5 / 9)))


def test_rvp_bounds_examples():
    rep = rvp_bounds(1.0, -1.0, 1.0, 0.0)
    assert rep.d_value == pytest.approx(1.0)
    assert rep.r_minus == pytest.approx(math.sqrt(0.5)) and rep.r_plus == pytest.approx(math.sqrt(0.5))
    assert rep.t0_lower == pytest.approx(1 - math.sqrt(0.5))
    rep = rvp_bounds(1.0, -2.0, 1.0, 1.0)
    assert rep.d_value == pytest.approx(1 + math.sqrt(6))
    assert rep.r_plus == pytest.approx(math.sqrt((1 + math.sqrt(6)) / (5 + math.sqrt(6))), rel=1e-12)
    assert rep.r_plus == pytest.approx(0.6805, abs=5e-4)


@pytest.mark.parametrize("bounds", [vp_bounds, rvp_bounds])
@pytest.mark.parametrize("args", [(1.0, 0.0, 1.0, 0.0), (1.0, 1.0, 1.0, 0.0), (1.0, -1.0, 0.0, 0.0)])
def test_bounds_hypotheses(bounds, args):
    with pytest.raises(LemmaHypothesisError):
        bounds(*args)


@given(st.floats(0.1, 5), st.floats(-5, -0.01), st.floats(1e-4, 2), st.floats(0, 5))
def test_bound_report_invariants(r, w, l, M):
    rep = rvp_bounds(r, w, l, M)
    assert rep.t0_lower >= 0 and rep.r_minus <= rep.r_plus
    assert vp_bounds(r, w, l, M).t0_lower >= 0
