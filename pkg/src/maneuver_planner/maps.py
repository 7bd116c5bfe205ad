"""Shipped maps, regression fixtures and randomized scenario families.

Everything here produces plain JSON-ready dicts which go through the same
validating loader as scenario files. Run ``python3 -m maneuver_planner.maps``
to rewrite the fixture files under ``data/scenarios``.
"""

from __future__ import annotations

import enum
import json
import math
from dataclasses import dataclass, field
from importlib import resources
from pathlib import Path

import numpy as np

from .world import Scenario, load_scenario, scenario_from_dict

LANE_WIDTH = 3.5
JUNCTION = 20.0  # half-size of the square junction box
TURN_CLOTHOID = 12.0
SAMPLE = 0.5
CAR = {"length": 4.5, "width": 1.8}


def _line(p0, p1, step=SAMPLE):
    p0, p1 = np.asarray(p0, float), np.asarray(p1, float)
    n = max(1, int(math.ceil(np.hypot(*(p1 - p0)) / step)))
    return p0 + (p1 - p0) * np.linspace(0.0, 1.0, n + 1)[:, None]


def _turn_profile(radius, angle, clothoid, ds=0.005):
    arc = (abs(angle) - clothoid / radius) * radius
    total = 2 * clothoid + arc
    s = np.linspace(0.0, total, int(total / ds) + 1)
    k = np.where(s < clothoid, s / clothoid,
                 np.where(s < clothoid + arc, 1.0, (total - s) / clothoid)) * math.copysign(1.0 / radius, angle)
    mid = lambda a: 0.5 * (a[1:] + a[:-1])
    th = np.concatenate([[0.0], np.cumsum(mid(k) * np.diff(s))])
    x = np.concatenate([[0.0], np.cumsum(np.cos(mid(th)) * np.diff(s))])
    y = np.concatenate([[0.0], np.cumsum(np.sin(mid(th)) * np.diff(s))])
    return s, x, y


def turn_connector(start, heading, angle, displacement, clothoid=TURN_CLOTHOID, step=SAMPLE):
    """Clothoid-arc-clothoid turn whose endpoint lies ``displacement`` ahead and to the side.

    The radius is found by bisection so the symmetric curve spans the
    requested offset exactly.
    """
    lo, hi = clothoid / abs(angle) + 1e-6, 200.0
    for _ in range(60):
        r = 0.5 * (lo + hi)
        _, x, _ = _turn_profile(r, angle, clothoid)
        if x[-1] < displacement:
            lo = r
        else:
            hi = r
    s, x, y = _turn_profile(0.5 * (lo + hi), angle, clothoid)
    grid = np.linspace(0.0, s[-1], int(math.ceil(s[-1] / step)) + 1)
    x, y = np.interp(grid, s, x), np.interp(grid, s, y)
    c, sn = math.cos(heading), math.sin(heading)
    pts = np.column_stack([start[0] + c * x - sn * y, start[1] + sn * x + c * y])
    return pts


def _lane(id_, pts, successors=(), left=None, right=None):
    return {"id": id_, "centerline": np.round(pts, 6).tolist(), "width": LANE_WIDTH,
            "successors": list(successors), "left": left, "right": right}


def intersection_map() -> dict:
    """Four-arm junction with right-hand traffic.

    Ego routes come from the south arm and go straight or turn left; the
    oncoming traffic from the east turns left towards the south.
    """
    h, J = LANE_WIDTH / 2, JUNCTION
    lanes = [
        _lane("S_nb", _line((h, -140.0), (h, -J))),
        _lane("N_nb", _line((h, J), (h, 160.0))),
        _lane("W_wb", _line((-J, h), (-160.0, h))),
        _lane("E_wb", _line((140.0, h), (J, h))),
        _lane("S_sb", _line((-h, -J), (-h, -160.0))),
    ]
    d = J + h
    routes = [
        {"from": "S_nb", "to": "N_nb", "centerline": np.round(_line((h, -J), (h, J)), 6).tolist()},
        {"from": "S_nb", "to": "W_wb",
         "centerline": np.round(turn_connector((h, -J), math.pi / 2, math.pi / 2, d), 6).tolist()},
        {"from": "E_wb", "to": "S_sb",
         "centerline": np.round(turn_connector((J, h), math.pi, math.pi / 2, d), 6).tolist()},
    ]
    return {"lanes": lanes, "junction_routes": routes}


def highway_map(length: float = 800.0) -> dict:
    return {"lanes": [
        _lane("R", _line((0.0, 0.0), (length, 0.0), 2.0), left="L"),
        _lane("L", _line((0.0, LANE_WIDTH), (length, LANE_WIDTH), 2.0), right="R"),
    ], "junction_routes": []}


def single_lane_map(length: float = 500.0) -> dict:
    return {"lanes": [_lane("A", _line((0.0, 0.0), (length, 0.0), 2.0))], "junction_routes": []}


def _box(x0, x1, y0, y1):
    return [[x0, y0], [x1, y0], [x1, y1], [x0, y1]]


def _ego(x, y, theta, v, route, target):
    return {"state": {"x": x, "y": y, "theta": theta, "v": v, "a": 0.0},
            "footprint": dict(CAR), "route": list(route), "target_speed": target}


def _kinematic(id_, route, s0, v0, accel=((0.0, 0.0),), offset=0.0):
    return {"id": id_, "footprint": dict(CAR),
            "kinematic": {"route": list(route), "s0": s0, "v0": v0,
                          "accel": [list(p) for p in accel], "offset": offset}}


TURN_GOAL = _box(-60.0, -40.0, 0.0, LANE_WIDTH)
STRAIGHT_GOAL = _box(0.0, LANE_WIDTH, 40.0, 60.0)


def intersection_scenario(kind: str, ego_y: float, ego_speed: float, target: float,
                          obs_s0: float, obs_speed: float, obs_accel, seed: int = 0, name: str = "") -> dict:
    route = ["S_nb", "W_wb"] if kind == "left_turn" else ["S_nb", "N_nb"]
    goal = TURN_GOAL if kind == "left_turn" else STRAIGHT_GOAL
    return {
        "name": name or kind,
        "map": intersection_map(),
        "ego": _ego(LANE_WIDTH / 2, ego_y, math.pi / 2, ego_speed, route, target),
        "obstacles": [_kinematic("oncoming", ["E_wb", "S_sb"], obs_s0, obs_speed, obs_accel)],
        "goal_region": goal,
        "duration": 40.0,
        "seed": seed,
    }


def overtake_scenario(ego_speed: float, target: float, front_gap: float, rear_gap: float,
                      rear_speed: float, ahead: tuple, seed: int = 0, name: str = "overtake",
                      front_speed: float = 3.96) -> dict:
    x0 = 100.0
    obstacles = [
        _kinematic("front", ["R"], x0 + front_gap, front_speed),
        _kinematic("rear_left", ["L"], x0 - rear_gap, rear_speed),
    ]
    for k, (gap, speed) in enumerate(ahead, start=1):
        obstacles.append(_kinematic(f"ahead_left_{k}", ["L"], x0 + gap, speed))
    return {
        "name": name,
        "map": highway_map(),
        "ego": _ego(x0, 0.0, 0.0, ego_speed, ["R"], target),
        "obstacles": obstacles,
        "goal_region": _box(x0 + 230.0, x0 + 260.0, -LANE_WIDTH / 2, 1.5 * LANE_WIDTH),
        "duration": 45.0,
        "seed": seed,
    }


# regression fixtures --------------------------------------------------------

def left_turn_fixture() -> dict:
    return intersection_scenario("left_turn", -45.0, 7.0, 7.0, 100.0, 12.0, ((0.0, -3.0),), name="left_turn")


def go_straight_fixture() -> dict:
    return intersection_scenario("go_straight", -45.0, 7.0, 9.0, 100.0, 12.0, ((0.0, -3.0),), name="go_straight")


def overtake_fixture() -> dict:
    return overtake_scenario(13.0, 13.0, 40.0, 35.0, 12.0, ((90.0, 13.0), (150.0, 13.0)))


def empty_road_fixture() -> dict:
    return {"name": "empty_road", "map": single_lane_map(),
            "ego": _ego(10.0, 0.0, 0.0, 10.0, ["A"], 10.0), "obstacles": [],
            "goal_region": _box(120.0, 140.0, -2.0, 2.0), "duration": 30.0, "seed": 0}


def blocked_fixture() -> dict:
    d = empty_road_fixture()
    d.update(name="blocked", obstacles=[_kinematic("stopped", ["A"], 18.0, 0.0)])
    return d


def head_on_fixture() -> dict:
    d = empty_road_fixture()
    rows = [[t, 80.0 - 10.0 * t, 0.0, math.pi, 10.0, 0.0] for t in (0.0, 10.0)]
    d.update(name="head_on", obstacles=[{"id": "wrong_way", "footprint": dict(CAR), "trajectory": rows}],
             planner={"enabled": False})
    return d


def zero_duration_fixture() -> dict:
    d = empty_road_fixture()
    d.update(name="zero_duration", duration=0.0)
    return d


FIXTURES = {
    "left_turn": left_turn_fixture,
    "go_straight": go_straight_fixture,
    "overtake": overtake_fixture,
    "empty_road": empty_road_fixture,
    "blocked": blocked_fixture,
    "head_on": head_on_fixture,
    "zero_duration": zero_duration_fixture,
}


def fixture_path(name: str) -> Path:
    return Path(str(resources.files("maneuver_planner") / "data" / "scenarios" / f"{name}.json"))


def load_fixture(name: str) -> Scenario:
    return load_scenario(fixture_path(name))


def write_fixtures(directory=None) -> list:
    directory = Path(directory) if directory else fixture_path("x").parent
    directory.mkdir(parents=True, exist_ok=True)
    out = []
    for name, build in FIXTURES.items():
        p = directory / f"{name}.json"
        p.write_text(json.dumps(build(), indent=1) + "\n", encoding="utf-8")
        out.append(p)
    return out


# randomized families --------------------------------------------------------

class FamilyKind(enum.Enum):
    LEFT_TURN = "left_turn"
    GO_STRAIGHT = "go_straight"
    HIGHWAY_OVERTAKE = "overtake"


_DEFAULT_RANGES = {
    FamilyKind.LEFT_TURN: {
        "ego_speed": (3.5, 11.5), "ego_target": (6.0, 9.0), "ego_start": (40.0, 60.0),
        "obs_start": (40.0, 90.0), "obs_speed": (8.0, 13.0), "obs_accel": (-3.0, 0.0), "obs_accel_time": (2.0, 6.0),
    },
    FamilyKind.HIGHWAY_OVERTAKE: {
        "ego_speed": (12.0, 14.0), "ego_target": (12.0, 14.0), "front_gap": (35.0, 50.0),
        "rear_gap": (25.0, 50.0), "rear_speed": (10.0, 14.0),
        "ahead_gap_1": (80.0, 110.0), "ahead_gap_2": (140.0, 180.0), "ahead_speed": (12.0, 14.0),
    },
}
_DEFAULT_RANGES[FamilyKind.GO_STRAIGHT] = dict(_DEFAULT_RANGES[FamilyKind.LEFT_TURN])


@dataclass(frozen=True)
class ScenarioFamily:
    kind: FamilyKind
    ranges: dict = field(default_factory=dict)

    def __post_init__(self):
        merged = dict(_DEFAULT_RANGES[self.kind])
        merged.update(self.ranges)
        for k, (lo, hi) in merged.items():
            if not lo <= hi:
                raise ValueError(f"empty range for {k}: {(lo, hi)}")
        object.__setattr__(self, "ranges", merged)

    @classmethod
    def named(cls, name: str) -> "ScenarioFamily":
        return cls(FamilyKind(name))


def scenario_dict(family: ScenarioFamily, seed: int) -> dict:
    rng = np.random.default_rng(seed)
    r = family.ranges

    def draw(key):
        lo, hi = r[key]
        return round(float(rng.uniform(lo, hi)), 3)

    if family.kind is FamilyKind.HIGHWAY_OVERTAKE:
        ego_speed, target = draw("ego_speed"), draw("ego_target")
        front, rear, rear_v = draw("front_gap"), draw("rear_gap"), draw("rear_speed")
        ahead = ((draw("ahead_gap_1"), draw("ahead_speed")), (draw("ahead_gap_2"), draw("ahead_speed")))
        return overtake_scenario(ego_speed, target, front, rear, rear_v, ahead, seed,
                                 name=f"overtake_{seed}")
    kind = family.kind.value
    ego_speed, target, start = draw("ego_speed"), draw("ego_target"), draw("ego_start")
    s0, v0, acc, t_acc = draw("obs_start"), draw("obs_speed"), draw("obs_accel"), draw("obs_accel_time")
    t_acc = round(t_acc / 0.2) * 0.2
    return intersection_scenario(kind, -JUNCTION - start, ego_speed, target, s0, v0,
                                 ((0.0, acc), (round(t_acc, 1), 0.0)), seed, name=f"{kind}_{seed}")


def generate_scenario(family: ScenarioFamily, seed: int) -> Scenario:
    """Deterministic draw from a family: the same seed gives an identical scenario."""
    return scenario_from_dict(scenario_dict(family, seed))


if __name__ == "__main__":
    for p in write_fixtures():
        print(p)
