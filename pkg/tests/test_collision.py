import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from maneuver_planner import kernels
from maneuver_planner.collision import (
    Footprint, ObstacleHypotheses, OrientedBox, check_trajectory, first_overlap, obb_overlap,
)
from maneuver_planner.prediction import PredictedTrajectory


def box(x, y, th=0.0, L=4.0, W=2.0):
    return OrientedBox(x, y, th, L / 2, W / 2)


def test_obb_basic_cases():
    assert obb_overlap(box(0, 0), box(3.9, 0))
    assert not obb_overlap(box(0, 0), box(4.1, 0))
    assert obb_overlap(box(0, 0), box(4.0, 0))  # touching counts
    # rotated box whose corner pokes in
    assert obb_overlap(box(0, 0), box(3.3, 0, math.pi / 4))
    assert not obb_overlap(box(0, 0), box(3.3, 2.6, math.pi / 4))


def test_footprint_validation():
    with pytest.raises(ValueError):
        Footprint(0.0, 1.8)


def _line_traj(x0, v, prob=0.5, y=0.0, n=26):
    t = np.arange(n) * 0.2
    return PredictedTrajectory(t, x0 + v * t, np.full(n, y), np.zeros(n), np.full(n, v), np.zeros(n), prob)


def test_margin_inflates_boxes():
    ego = _line_traj(0.0, 0.0)
    other = _line_traj(4.5 + 0.3, 0.0)
    fp = Footprint()
    assert first_overlap(ego, fp, other, fp, 0.0) is None
    assert first_overlap(ego, fp, other, fp, 0.2) == 0


def test_check_reports_earliest_step_and_hypothesis():
    ego = _line_traj(0.0, 10.0)
    safe = _line_traj(0.0, 10.0, y=10.0)
    hit = _line_traj(40.0, 0.0)
    rep = check_trajectory(ego, Footprint(), [ObstacleHypotheses("a", Footprint(), (safe, hit))], 0.2)
    assert not rep.collision_free and rep.hypothesis == 1 and rep.obstacle_id == "a"
    assert rep.step == int(np.flatnonzero(ego.x + 2.25 + 0.2 >= 40 - 2.25 - 0.2)[0])
    assert check_trajectory(ego, Footprint(), [ObstacleHypotheses("a", Footprint(), (safe, safe))]).collision_free


rows = st.tuples(st.floats(-10, 10), st.floats(-10, 10), st.floats(-4, 4), st.floats(0.1, 4), st.floats(0.1, 2))


@settings(max_examples=150, deadline=None)
@given(st.lists(st.tuples(rows, rows), min_size=1, max_size=20))
def test_backends_agree_on_obb(pairs):
    if kernels.numba_backend is None:
        pytest.skip("numba missing")
    a = np.array([p[0] for p in pairs], float)
    b = np.array([p[1] for p in pairs], float)
    assert np.array_equal(kernels.numpy_backend.obb_overlap_steps(a, b),
                          kernels.numba_backend.obb_overlap_steps(a, b))


@settings(max_examples=100, deadline=None)
@given(st.lists(st.tuples(st.floats(-50, 50), st.floats(-50, 50)), min_size=1, max_size=10))
def test_backends_agree_on_nearest_segment(points):
    if kernels.numba_backend is None:
        pytest.skip("numba missing")
    line = np.column_stack([np.linspace(0, 40, 30), np.sin(np.linspace(0, 3, 30)) * 5])
    x0, y0 = line[:-1, 0], line[:-1, 1]
    dx, dy = np.diff(line[:, 0]), np.diff(line[:, 1])
    px = np.array([p[0] for p in points])
    py = np.array([p[1] for p in points])
    i1, t1 = kernels.numpy_backend.nearest_segment(px, py, x0, y0, dx, dy)
    i2, t2 = kernels.numba_backend.nearest_segment(px, py, x0, y0, dx, dy)
    assert np.array_equal(i1, i2)
    assert np.allclose(t1, t2, atol=1e-12)


def test_backend_env_var(monkeypatch):
    import importlib
    monkeypatch.setenv("MANEUVER_PLANNER_BACKEND", "numpy")
    mod = importlib.reload(kernels)
    assert mod.BACKEND == "numpy"
    monkeypatch.setenv("MANEUVER_PLANNER_BACKEND", "fortran")
    with pytest.raises(ValueError):
        importlib.reload(kernels)
    monkeypatch.delenv("MANEUVER_PLANNER_BACKEND")
    importlib.reload(kernels)
