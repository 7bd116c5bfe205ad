import math

import numpy as np
import pytest

from maneuver_planner.errors import NonuniformSampling
from maneuver_planner.geometry import FrenetState, build_reference_path, densify
from maneuver_planner.optimizer import (
    ManeuverKind, OptimizationParams, generate_candidates, generate_overtake_candidates, optimal_trajectory,
    speed_offsets, terminal_speeds, trajectory_cost,
)

P = OptimizationParams()
PATH = build_reference_path(densify([[0, 0], [500, 0]]))


def test_params_validation():
    with pytest.raises(ValueError):
        OptimizationParams(T=5.1, dt=0.2)
    with pytest.raises(ValueError):
        OptimizationParams(w_j=-1)
    assert P.n_steps == 25 and len(P.times()) == 26


def test_speed_grid_widens_with_level():
    assert sorted(speed_offsets(0)) == [-2, -1, 0, 1, 2]
    for k in range(1, 4):
        assert set(speed_offsets(k - 1)) < set(speed_offsets(k))
    assert min(terminal_speeds(0.5, 0)) == 0.0


def test_candidates_sampled_on_grid():
    cands = generate_candidates(PATH, FrenetState(0, 10, 0, 0, 0, 0), 10, 3.5, P)
    for c in cands:
        assert len(c) == 26
        assert np.allclose(np.diff(c.t), 0.2)
        assert c.l[-1] == pytest.approx(3.5)
        assert c.maneuver is ManeuverKind.KEEP_SPEED


def test_cost_rejects_nonuniform_sampling():
    c = generate_candidates(PATH, FrenetState(0, 10, 0, 0, 0, 0), 10, 0.0, P)[0]
    t = c.t.copy()
    t[3] += 0.05
    from dataclasses import replace
    with pytest.raises(NonuniformSampling):
        trajectory_cost(replace(c, t=t), 10, 0, P)


def test_lane_change_cost_matches_quadrature():
    cands = generate_candidates(PATH, FrenetState(0, 12, 0, 0, 0, 0), 12, 3.5, P)
    for c in cands:
        tf = np.arange(0, 5.0005, 1e-3)
        fine = (0.1 * np.trapezoid(c.lon.eval(tf, 3) ** 2 + c.lat.eval(tf, 3) ** 2, tf) + 0.5
                + (c.l[-1] - 3.5) ** 2 + (c.s_d[-1] - 12) ** 2)
        assert trajectory_cost(c, 12, 3.5, P) == pytest.approx(fine, rel=0.02)


def test_quadrature_converges_when_halving_dt():
    c = generate_candidates(PATH, FrenetState(0, 12, 0, 0, 0, 0), 14, 3.5, P)[0]

    def riemann(dt):
        t = np.arange(0, 5.0 - 1e-9, dt)
        return float(np.sum(c.lon.eval(t, 3) ** 2 + c.lat.eval(t, 3) ** 2) * dt)

    assert abs(riemann(0.1) - riemann(0.2)) / riemann(0.1) < 0.05


def test_optimal_prefers_desired_speed():
    best = optimal_trajectory(PATH, FrenetState(0, 10, 0, 0, 0, 0), 10, 0.0, P)
    assert best.s_d[-1] == pytest.approx(10.0)
    assert best.feasible and best.cost == pytest.approx(0.5)


def test_overtake_returns_to_lane():
    c = generate_overtake_candidates(PATH, FrenetState(0, 10, 0, 0, 0, 0), 10, 3.5, P)[0]
    assert c.l[10] == pytest.approx(3.5)
    assert c.l[-1] == pytest.approx(0.0, abs=1e-9)
    assert c.maneuver is ManeuverKind.OVERTAKE


def test_rejects_bad_inputs():
    with pytest.raises(ValueError):
        generate_candidates(PATH, FrenetState(0, math.nan, 0, 0, 0, 0), 10, 0, P)
    with pytest.raises(ValueError):
        generate_candidates(PATH, FrenetState(0, 10, 0, 0, 0, 0), -1, 0, P)


def test_shifted_resets_time():
    c = generate_candidates(PATH, FrenetState(0, 10, 0, 0, 0, 0), 10, 0.0, P)[0]
    s = c.shifted(5)
    assert s.t[0] == 0.0 and len(s) == 21 and s.x[0] == c.x[5]
