"""Lane maps, scenarios and their JSON representation.

Lanes are centerline + width; junction routes are connector centerlines
between a lane end and a lane start. Element ids are lane ids for lanes and
``"<from>-><to>"`` for junction routes.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from functools import cached_property
from pathlib import Path
from typing import Optional, Sequence

import jsonschema
import numpy as np

from .collision import Footprint
from .errors import GeometryError, SchemaError, ValidationError
from .geometry import CartesianState, ReferencePath, build_reference_path, densify, normalize_angle

PATH_SPACING = 0.5
# straight-line extension appended to obstacle routes so scripts never run off the map
_ROUTE_TAIL = 500.0


@dataclass(frozen=True)
class Lane:
    id: str
    centerline: np.ndarray
    width: float = 3.5
    successors: tuple = ()
    left: Optional[str] = None
    right: Optional[str] = None


@dataclass(frozen=True)
class JunctionRoute:
    from_lane: str
    to_lane: str
    centerline: np.ndarray

    @property
    def id(self) -> str:
        return f"{self.from_lane}->{self.to_lane}"


def _join(chunks):
    pts = [np.asarray(chunks[0], dtype=float)]
    for c in chunks[1:]:
        c = np.asarray(c, dtype=float)
        if np.hypot(*(c[0] - pts[-1][-1])) < 1e-3:
            c = c[1:]
        pts.append(c)
    return np.concatenate(pts)


class LaneMap:
    def __init__(self, lanes: Sequence[Lane], routes: Sequence[JunctionRoute] = ()):
        self.lanes = {ln.id: ln for ln in lanes}
        self.routes = {r.id: r for r in routes}
        self._paths = {}
        self._validate()

    def _validate(self):
        for ln in self.lanes.values():
            if not ln.width > 0:
                raise ValidationError("lane_width", f"lane {ln.id} has width {ln.width}")
            for side, other in (("left", "right"), ("right", "left")):
                nb = getattr(ln, side)
                if nb is None:
                    continue
                if nb not in self.lanes or getattr(self.lanes[nb], other) != ln.id:
                    raise ValidationError("neighbors", f"{ln.id}.{side}={nb} is not mirrored")
            for succ in ln.successors:
                if succ not in self.lanes:
                    raise ValidationError("successors", f"{ln.id} -> unknown lane {succ}")
        for r in self.routes.values():
            if r.from_lane not in self.lanes or r.to_lane not in self.lanes:
                raise ValidationError("junction_routes", f"route {r.id} references unknown lanes")
        try:
            for eid in list(self.lanes) + list(self.routes):
                self.element_path(eid)
        except GeometryError as exc:
            raise ValidationError("centerline", str(exc)) from exc

    @property
    def element_ids(self) -> list:
        return list(self.lanes) + list(self.routes)

    def centerline(self, eid: str) -> np.ndarray:
        if eid in self.lanes:
            return self.lanes[eid].centerline
        return self.routes[eid].centerline

    def element_path(self, eid: str) -> ReferencePath:
        return self.chain_path((eid,))

    def chain_path(self, chain: Sequence[str], tail: float = 0.0) -> ReferencePath:
        """Reference path through consecutive map elements, densified."""
        key = (tuple(chain), tail)
        if key not in self._paths:
            pts = _join([self.centerline(e) for e in chain])
            if tail > 0:
                d = pts[-1] - pts[-2]
                pts = np.vstack([pts, pts[-1] + d / np.hypot(*d) * tail])
            self._paths[key] = build_reference_path(densify(pts, PATH_SPACING))
        return self._paths[key]

    def connected(self, a: str, b: str) -> Optional[str]:
        """Element id linking lane ``a`` to lane ``b`` ("" for a direct successor)."""
        rid = f"{a}->{b}"
        if rid in self.routes:
            return rid
        if a in self.lanes and b in self.lanes[a].successors:
            return ""
        return None

    def route_chain(self, lanes: Sequence[str]) -> list:
        chain = [lanes[0]]
        for a, b in zip(lanes[:-1], lanes[1:]):
            link = self.connected(a, b)
            if link is None:
                raise ValidationError("route", f"lane {a} does not connect to {b}")
            if link:
                chain.append(link)
            chain.append(b)
        return chain

    def route_path(self, lanes: Sequence[str], tail: float = 0.0) -> ReferencePath:
        return self.chain_path(self.route_chain(lanes), tail)

    def next_element(self, eid: str) -> Optional[str]:
        if eid in self.routes:
            return self.routes[eid].to_lane
        for r in self.routes.values():
            if r.from_lane == eid:
                return r.id
        succ = self.lanes[eid].successors
        return succ[0] if succ else None

    def forward_chain(self, eid: str, max_links: int = 4) -> list:
        chain = [eid]
        while len(chain) <= max_links:
            nxt = self.next_element(chain[-1])
            if nxt is None or nxt in chain:
                break
            chain.append(nxt)
        return chain

    def locate(self, x: float, y: float, theta: Optional[float] = None,
               elements: Optional[Sequence[str]] = None, max_dheading: float = math.pi / 2):
        """Nearest map element to a pose.

        Returns ``(element_id, s, l, distance, dheading)`` or ``None`` when no
        element lies within ``max_dheading`` of ``theta``.
        """
        best = None
        for eid in elements if elements is not None else self.element_ids:
            path = self.element_path(eid)
            s, l = path.project(x, y, check_extent=False)
            s, l = float(s[0]), float(l[0])
            fr = path.interpolate(s)
            dist = math.hypot(float(fr.x) - x, float(fr.y) - y)
            dh = 0.0 if theta is None else abs(normalize_angle(theta - float(fr.theta)))
            if dh > max_dheading:
                continue
            # points beyond an element's ends do not belong to it
            if (s <= 1e-9 or s >= path.length - 1e-9) and dist > abs(l) + 1e-6:
                continue
            if best is None or dist < best[3] - 1e-9:
                best = (eid, s, l, dist, dh)
        return best

    def lane_of(self, eid: str) -> Optional[Lane]:
        """The lane an element belongs to; junction routes map to their target lane."""
        if eid in self.lanes:
            return self.lanes[eid]
        return None


# obstacle scripts ---------------------------------------------------------

@dataclass(frozen=True)
class TimedScript:
    """Obstacle replaying time-stamped states, linearly interpolated."""

    times: np.ndarray
    states: tuple

    def state_at(self, t: float, lane_map: LaneMap = None) -> CartesianState:
        times = self.times
        if t <= times[0]:
            return self.states[0]
        if t >= times[-1]:
            last = self.states[-1]
            dt = t - times[-1]
            return CartesianState(last.x + last.v * dt * math.cos(last.theta),
                                  last.y + last.v * dt * math.sin(last.theta), last.theta, last.v, 0.0)
        k = int(np.searchsorted(times, t, side="right") - 1)
        a, b = self.states[k], self.states[k + 1]
        f = (t - times[k]) / (times[k + 1] - times[k])
        th = a.theta + f * normalize_angle(b.theta - a.theta)
        return CartesianState(a.x + f * (b.x - a.x), a.y + f * (b.y - a.y), th,
                              a.v + f * (b.v - a.v), a.a + f * (b.a - a.a))


@dataclass(frozen=True)
class KinematicScript:
    """Obstacle driving along a lane route with a piecewise-constant acceleration.

    ``accel`` is a list of ``(t_start, a)`` pieces; speed is floored at 0.
    """

    route: tuple
    s0: float
    v0: float
    accel: tuple = ((0.0, 0.0),)
    offset: float = 0.0

    def longitudinal(self, t: float):
        s, v, tc = self.s0, self.v0, 0.0
        pieces = list(self.accel) + [(math.inf, 0.0)]
        a_now = 0.0
        for (ts, a), (tn, _) in zip(pieces[:-1], pieces[1:]):
            if t <= ts:
                break
            if tc < ts:
                s += v * (ts - tc)
                tc = ts
            end = min(t, tn)
            dt = end - tc
            if a < 0 and v + a * dt < 0:
                t_stop = -v / a
                s += v * t_stop + 0.5 * a * t_stop ** 2
                v = 0.0
                a_now = 0.0
            else:
                s += v * dt + 0.5 * a * dt ** 2
                v += a * dt
                a_now = a if (v > 0 or a > 0) else 0.0
            tc = end
            if tc >= t:
                break
        if tc < t:
            s += v * (t - tc)
        return s, v, a_now

    def state_at(self, t: float, lane_map: LaneMap) -> CartesianState:
        path = lane_map.route_path(self.route, tail=_ROUTE_TAIL)
        s, v, a = self.longitudinal(t)
        fr = path.interpolate(min(max(s, 0.0), path.length))
        th = float(fr.theta)
        x = float(fr.x) - self.offset * math.sin(th)
        y = float(fr.y) + self.offset * math.cos(th)
        return CartesianState(x, y, th, v, a, float(fr.kappa))


@dataclass(frozen=True)
class ObstacleSpec:
    id: str
    footprint: Footprint
    script: object

    def state_at(self, t: float, lane_map: LaneMap) -> CartesianState:
        return self.script.state_at(t, lane_map)


@dataclass(frozen=True)
class EgoSpec:
    state: CartesianState
    footprint: Footprint
    route: tuple
    target_speed: float


@dataclass(frozen=True)
class Scenario:
    map: LaneMap
    ego: EgoSpec
    obstacles: tuple
    goal_region: Optional[np.ndarray]
    duration: float
    seed: int = 0
    name: str = ""
    planner: dict = field(default_factory=dict)
    source: dict = field(default_factory=dict, repr=False, compare=False)

    def in_goal(self, x: float, y: float) -> bool:
        if self.goal_region is None:
            return False
        return point_in_convex_polygon(self.goal_region, x, y)

    @cached_property
    def ego_route_path(self) -> ReferencePath:
        return self.map.route_path(self.ego.route)


def _cross(o, a, b):
    return (a[0] - o[0]) * (b[1] - o[1]) - (a[1] - o[1]) * (b[0] - o[0])


def is_convex(poly) -> bool:
    poly = np.asarray(poly, dtype=float)
    n = len(poly)
    if n < 3:
        return False
    signs = [_cross(poly[i], poly[(i + 1) % n], poly[(i + 2) % n]) for i in range(n)]
    return all(s > 0 for s in signs) or all(s < 0 for s in signs)


def point_in_convex_polygon(poly, x: float, y: float) -> bool:
    poly = np.asarray(poly, dtype=float)
    n = len(poly)
    signs = [_cross(poly[i], poly[(i + 1) % n], (x, y)) for i in range(n)]
    return all(s >= 0 for s in signs) or all(s <= 0 for s in signs)


# JSON ---------------------------------------------------------------------

_POINT = {"type": "array", "items": {"type": "number"}, "minItems": 2, "maxItems": 2}
_POLYLINE = {"type": "array", "items": _POINT, "minItems": 2}
_STATE = {
    "type": "object",
    "required": ["x", "y", "theta", "v"],
    "properties": {k: {"type": "number"} for k in ("x", "y", "theta", "v", "a", "kappa")},
    "additionalProperties": False,
}
_FOOTPRINT = {
    "type": "object",
    "required": ["length", "width"],
    "properties": {"length": {"type": "number", "exclusiveMinimum": 0},
                   "width": {"type": "number", "exclusiveMinimum": 0}},
    "additionalProperties": False,
}

SCENARIO_SCHEMA = {
    "$schema": "http://json-schema.org/draft-07/schema#",
    "title": "maneuver planner scenario",
    "type": "object",
    "required": ["map", "ego", "obstacles", "goal_region", "duration", "seed"],
    "properties": {
        "name": {"type": "string"},
        "map": {
            "type": "object",
            "required": ["lanes"],
            "properties": {
                "lanes": {"type": "array", "minItems": 1, "items": {
                    "type": "object",
                    "required": ["id", "centerline", "width"],
                    "properties": {
                        "id": {"type": "string"},
                        "centerline": _POLYLINE,
                        "width": {"type": "number"},
                        "successors": {"type": "array", "items": {"type": "string"}},
                        "left": {"type": ["string", "null"]},
                        "right": {"type": ["string", "null"]},
                    },
                    "additionalProperties": False,
                }},
                "junction_routes": {"type": "array", "items": {
                    "type": "object",
                    "required": ["from", "to", "centerline"],
                    "properties": {"from": {"type": "string"}, "to": {"type": "string"},
                                   "centerline": _POLYLINE},
                    "additionalProperties": False,
                }},
            },
            "additionalProperties": False,
        },
        "ego": {
            "type": "object",
            "required": ["state", "footprint", "route", "target_speed"],
            "properties": {
                "state": _STATE,
                "footprint": _FOOTPRINT,
                "route": {"type": "array", "items": {"type": "string"}, "minItems": 1},
                "target_speed": {"type": "number", "minimum": 0},
            },
            "additionalProperties": False,
        },
        "obstacles": {"type": "array", "items": {
            "type": "object",
            "required": ["id", "footprint"],
            "properties": {
                "id": {"type": "string"},
                "footprint": _FOOTPRINT,
                "trajectory": {"type": "array", "minItems": 1, "items": {
                    "type": "array", "items": {"type": "number"}, "minItems": 6, "maxItems": 6}},
                "kinematic": {
                    "type": "object",
                    "required": ["route", "s0", "v0"],
                    "properties": {
                        "route": {"type": "array", "items": {"type": "string"}, "minItems": 1},
                        "s0": {"type": "number"},
                        "v0": {"type": "number", "minimum": 0},
                        "accel": {"type": "array", "items": {
                            "type": "array", "items": {"type": "number"}, "minItems": 2, "maxItems": 2}},
                        "offset": {"type": "number"},
                    },
                    "additionalProperties": False,
                },
            },
            "oneOf": [{"required": ["trajectory"]}, {"required": ["kinematic"]}],
            "additionalProperties": False,
        }},
        "goal_region": {"oneOf": [{"type": "null"}, {"type": "array", "items": _POINT, "minItems": 3}]},
        "duration": {"type": "number", "minimum": 0},
        "seed": {"type": "integer"},
        "planner": {"type": "object"},
    },
    "additionalProperties": False,
}


def _state(d) -> CartesianState:
    return CartesianState(d["x"], d["y"], d["theta"], d["v"], d.get("a", 0.0), d.get("kappa", 0.0))


def scenario_from_dict(data: dict) -> Scenario:
    """Validate and build a :class:`Scenario` from its JSON object."""
    validator = jsonschema.Draft7Validator(SCENARIO_SCHEMA)
    errors = sorted(validator.iter_errors(data), key=lambda e: list(e.absolute_path))
    if errors:
        err = errors[0]
        raise SchemaError(err.message, "/" + "/".join(str(p) for p in err.absolute_path))
    m = data["map"]
    lanes = [Lane(ln["id"], np.asarray(ln["centerline"], dtype=float), float(ln["width"]),
                  tuple(ln.get("successors", ())), ln.get("left"), ln.get("right")) for ln in m["lanes"]]
    routes = [JunctionRoute(r["from"], r["to"], np.asarray(r["centerline"], dtype=float))
              for r in m.get("junction_routes", [])]
    lane_map = LaneMap(lanes, routes)
    e = data["ego"]
    try:
        ego_state = _state(e["state"])
    except ValueError as exc:
        raise ValidationError("ego_state", str(exc)) from exc
    ego = EgoSpec(ego_state, Footprint(**e["footprint"]), tuple(e["route"]), float(e["target_speed"]))
    for lid in ego.route:
        if lid not in lane_map.lanes:
            raise ValidationError("route", f"unknown lane {lid}")
    lane_map.route_chain(ego.route)
    obstacles = []
    for o in data["obstacles"]:
        fp = Footprint(**o["footprint"])
        if "trajectory" in o:
            rows = np.asarray(o["trajectory"], dtype=float)
            if np.any(np.diff(rows[:, 0]) <= 0):
                raise ValidationError("obstacle_times", f"obstacle {o['id']} script is not time-sorted")
            states = tuple(CartesianState(*r[1:]) for r in rows)
            script = TimedScript(rows[:, 0], states)
        else:
            k = o["kinematic"]
            lane_map.route_chain(k["route"])
            accel = tuple(tuple(p) for p in k.get("accel", [[0.0, 0.0]]))
            if any(b[0] <= a[0] for a, b in zip(accel[:-1], accel[1:])):
                raise ValidationError("obstacle_times", f"obstacle {o['id']} accel profile is not time-sorted")
            script = KinematicScript(tuple(k["route"]), float(k["s0"]), float(k["v0"]), accel,
                                     float(k.get("offset", 0.0)))
        obstacles.append(ObstacleSpec(o["id"], fp, script))
    ids = [o.id for o in obstacles]
    if len(set(ids)) != len(ids):
        raise ValidationError("obstacle_ids", "obstacle ids must be unique")
    goal = data["goal_region"]
    if goal is not None:
        goal = np.asarray(goal, dtype=float)
        if not is_convex(goal):
            raise ValidationError("goal_region", "goal region must be a convex polygon")
    return Scenario(lane_map, ego, tuple(obstacles), goal, float(data["duration"]), int(data["seed"]),
                    data.get("name", ""), dict(data.get("planner", {})), data)


def load_scenario(file) -> Scenario:
    """Load a scenario JSON file (path or open file)."""
    if hasattr(file, "read"):
        text = file.read()
    else:
        text = Path(file).read_text(encoding="utf-8")
    try:
        data = json.loads(text)
    except json.JSONDecodeError as exc:
        raise SchemaError(f"invalid JSON: {exc}") from exc
    return scenario_from_dict(data)


def scenario_to_json(scenario: Scenario) -> str:
    return json.dumps(scenario.source, sort_keys=True, indent=1)
