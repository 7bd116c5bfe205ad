import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from maneuver_planner.errors import DuplicatePoint, NonpositiveDuration, OutOfPathExtent, TooFewPoints
from maneuver_planner.geometry import (
    CartesianState, build_reference_path, cartesian_to_frenet, densify, frenet_to_cartesian, normalize_angle,
    solve_quartic, solve_quintic,
)


def circle(radius=30.0, sweep=math.pi):
    a = np.linspace(0.0, sweep, 800)
    return build_reference_path(np.column_stack([radius * np.sin(a), radius - radius * np.cos(a)]))


def test_normalize_angle_range():
    for th in np.linspace(-20, 20, 101):
        n = normalize_angle(th)
        assert -math.pi <= n < math.pi
        assert math.isclose(math.cos(n), math.cos(th), abs_tol=1e-12)


def test_path_construction_errors():
    with pytest.raises(TooFewPoints):
        build_reference_path([[0.0, 0.0]])
    with pytest.raises(DuplicatePoint):
        build_reference_path([[0.0, 0.0], [0.0, 0.0], [1.0, 0.0]])


def test_straight_path_arclength_and_heading():
    p = build_reference_path(densify([[0, 0], [30, 40]], 0.5))
    assert p.length == pytest.approx(50.0)
    fr = p.interpolate(25.0)
    assert float(fr.x) == pytest.approx(15.0) and float(fr.y) == pytest.approx(20.0)
    assert float(fr.theta) == pytest.approx(math.atan2(4, 3))
    assert abs(float(fr.kappa)) < 1e-9


def test_circle_curvature():
    p = circle(30.0)
    k = p.interpolate(np.linspace(5, p.length - 5, 50)).kappa
    assert np.allclose(k, 1 / 30.0, rtol=2e-3)


def test_project_outside_extent_raises():
    p = build_reference_path(densify([[0, 0], [10, 0]]))
    with pytest.raises(OutOfPathExtent):
        p.project(-5.0, 1.0)
    s, l = p.project(5.0, 2.0)
    assert float(s[0]) == pytest.approx(5.0) and float(l[0]) == pytest.approx(2.0)


def test_projection_sign_left_positive():
    p = circle()
    s, l = p.project(0.0, 1.0, check_extent=False)
    assert float(l[0]) > 0


def test_polynomial_nonpositive_duration():
    with pytest.raises(NonpositiveDuration):
        solve_quintic(0, 0, 0, 1, 0, 0, 0.0)
    with pytest.raises(NonpositiveDuration):
        solve_quartic(0, 0, 0, 1, 0, -1.0)


@settings(max_examples=200, deadline=None)
@given(st.lists(st.floats(-10, 10), min_size=6, max_size=6), st.floats(0.5, 10.0))
def test_quintic_boundaries_property(b, T):
    q = solve_quintic(*b, T)
    got = [q.eval(0.0, 0), q.eval(0.0, 1), q.eval(0.0, 2), q.eval(T, 0), q.eval(T, 1), q.eval(T, 2)]
    assert np.allclose(got, b, atol=1e-8)


def test_quartic_constant_speed_has_zero_jerk():
    q = solve_quartic(3.0, 10.0, 0.0, 10.0, 0.0, 5.0)
    t = np.linspace(0, 5, 11)
    assert np.allclose(q.eval(t, 3), 0.0, atol=1e-12)
    assert np.allclose(q.eval(t, 0), 3.0 + 10.0 * t)


@settings(max_examples=100, deadline=None)
@given(st.floats(5.0, 90.0), st.floats(-3.0, 3.0), st.floats(-1.0, 1.0), st.floats(0.5, 20.0))
def test_frenet_roundtrip_on_arc(s, l, dth, v):
    p = circle(40.0)
    fr = p.interpolate(s)
    th = float(fr.theta)
    x, y = float(fr.x) - l * math.sin(th), float(fr.y) + l * math.cos(th)
    state = CartesianState(x, y, th + dth, v, 0.5, 0.0)
    f = cartesian_to_frenet(p, state)
    assert f.s == pytest.approx(s, abs=1e-6) and f.l == pytest.approx(l, abs=1e-6)
    c = frenet_to_cartesian(p, f.s, f.s_d, f.s_dd, f.l, f.l_d, f.l_dd)
    assert math.hypot(float(c.x) - x, float(c.y) - y) < 1e-6
    assert abs(normalize_angle(float(c.theta) - state.theta)) < 1e-6
    assert float(c.v) == pytest.approx(v, rel=1e-6)


def test_cartesian_state_rejects_negative_speed():
    with pytest.raises(ValueError):
        CartesianState(0, 0, 0, -1.0)
