from dataclasses import replace

import numpy as np
import pytest

from maneuver_planner.collision import Footprint
from maneuver_planner.errors import MalformedBaseProblem
from maneuver_planner.geometry import CartesianState
from maneuver_planner.optimizer import ManeuverKind
from maneuver_planner.pddl import Atom, Literal
from maneuver_planner.prediction import ObstacleHistory
from maneuver_planner.streams import (
    NoPlan, PlannerConfig, PlanningSnapshot, analyze, applicable_streams, build_base_problem,
    default_streams, desired_speed, plan_with_streams,
)
from maneuver_planner.world import Lane, LaneMap


def highway():
    xs = np.arange(0.0, 801.0, 2.0)
    return LaneMap([Lane("R", np.column_stack([xs, np.zeros_like(xs)]), left="L"),
                    Lane("L", np.column_stack([xs, np.full_like(xs, 3.5)]), right="R")])


def hist(id_, x, y, v):
    return ObstacleHistory(id_, Footprint(), np.array([-0.2, 0.0]),
                           (CartesianState(x - 0.2 * v, y, 0.0, v), CartesianState(x, y, 0.0, v)))


def snap(obstacles=(), ego=None, route=("R",), target=13.0, level=0):
    ego = ego or CartesianState(30.0, 0.0, 0.0, 13.0)
    return PlanningSnapshot(0.0, ego, highway(), tuple(obstacles), route, target, level=level)


def test_snapshot_level_validation():
    with pytest.raises(ValueError):
        snap(level=-1)


def test_front_obstacle_detection():
    assert analyze(snap([hist("a", 60.0, 0.0, 4.0)])).front_obstacle == "a"
    assert analyze(snap([hist("a", 60.0, 3.5, 4.0)])).front_obstacle is None
    assert analyze(snap([hist("a", 10.0, 0.0, 4.0)])).front_obstacle is None
    assert analyze(snap([hist("a", 200.0, 0.0, 4.0)])).front_obstacle is None


def test_stream_gating():
    names = lambda s: {x.name for x in applicable_streams(s)}
    free = names(snap())
    assert "left_change_stream" not in free and "right_change_stream" not in free
    assert {"keep_speed_stream", "yield_stream"} <= free
    assert "left_change_stream" in names(snap([hist("a", 60.0, 0.0, 4.0)]))
    on_left = snap(ego=CartesianState(30.0, 3.5, 0.0, 13.0))  # route stays on R
    assert "right_change_stream" in names(on_left)


def test_base_problem_contents():
    p = build_base_problem(snap([hist("a", 60.0, 0.0, 4.0)]))
    assert p.objects == {"q0": "conf", "obs_a": "obstacles"}
    assert Atom("there_is_front_obs") in p.init and Atom("idle") in p.init
    assert p.goal == (Literal(Atom("moved_forward")),)


def test_base_problem_without_ego_conf_rejected():
    p = build_base_problem(snap())
    bad = replace(p, init=tuple(a for a in p.init if a.predicate != "ego_at"))
    with pytest.raises(MalformedBaseProblem):
        plan_with_streams(snap(), base_problem=bad)


def test_yield_speed_drops_with_level():
    s = snap()
    sch = {x.name: x for x in default_streams()}["yield_stream"]
    ctx = analyze(s)
    cfg = PlannerConfig()
    speeds = [desired_speed(sch, s, ctx.path, ctx.s, cfg, k) for k in range(4)]
    assert speeds == [10.0, 8.5, 7.0, 5.5]


def test_empty_road_keeps_speed():
    res = plan_with_streams(snap())
    assert res and res.decision is ManeuverKind.KEEP_SPEED and res.level == 0
    assert res.plan.cost == 5
    assert res.first_trajectory.x[0] == pytest.approx(30.0)


def test_slow_leader_triggers_left_change():
    res = plan_with_streams(snap([hist("a", 60.0, 0.0, 3.96)]))
    assert res and res.decision is ManeuverKind.LEFT_CHANGE


def test_wall_gives_noplan_after_all_levels():
    wall = [hist("w0", 36.0, 0.0, 0.0), hist("w1", 36.0, 3.5, 0.0)]
    res = plan_with_streams(snap(wall), config=PlannerConfig(max_level=2))
    assert isinstance(res, NoPlan) and not res
    assert res.levels == 2


def test_instances_name_objects_uniquely():
    s = snap([hist("a", 60.0, 0.0, 3.96)])
    res = plan_with_streams(s)
    objs = [o for inst in res.instances for o in inst.objects]
    assert len(objs) == len(set(objs))
    for inst in res.instances:
        assert len(inst.objects) == 25
