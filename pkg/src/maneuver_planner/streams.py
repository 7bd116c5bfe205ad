"""Maneuver trajectory streams and the iterative plan-with-streams loop.

Each stream takes the ego configuration ``q1``, synthesizes the optimal
trajectory for its maneuver, and returns new configuration objects plus the
facts certified for them. Collision checking against the predicted obstacle
hypotheses happens here too: ``traj`` is asserted for every produced
trajectory and ``checked_traj`` for every obstacle it avoids.

The planning loop widens the candidate grids level by level, adds all new
facts to the problem, grounds it and searches until a plan appears.
"""

from __future__ import annotations

import logging
import math
import time
from dataclasses import dataclass, field, replace
from functools import lru_cache
from importlib import resources
from typing import Optional, Sequence

import numpy as np

from . import ff
from .collision import DEFAULT_MARGIN, Footprint, check_trajectory
from .errors import EmptyCandidateSet, GeometryError, MalformedBaseProblem
from .geometry import CartesianState, cartesian_to_frenet, normalize_angle
from .optimizer import (
    ManeuverKind,
    OptimizationParams,
    filter_feasible,
    generate_candidates,
    generate_overtake_candidates,
    select_optimal,
)
from .pddl import Atom, FluentTerm, Literal, Plan, Problem, ground, parse_domain
from .prediction import BaselinePredictor, PredictionSet

log = logging.getLogger(__name__)

# lateral acceleration budget used to derive curve speed limits
CURVE_LAT_ACCEL = 1.2
FRONT_HEADING_TOL = math.radians(45.0)


@lru_cache(maxsize=1)
def load_domain():
    text = (resources.files("maneuver_planner") / "data" / "maneuver_domain.pddl").read_text(encoding="utf-8")
    return parse_domain(text)


# schemas ------------------------------------------------------------------

def intermediate_names(n: int) -> tuple:
    return tuple(f"?q1_2_{k}" for k in range(1, n + 1))


def trajectory_templates(fact: str, n: int) -> tuple:
    """Certified templates: maneuver fact, duration, endpoint coordinates, next chain."""
    mids = intermediate_names(n)
    chain = ("?q1",) + mids
    out = [("atom", fact, ("?q1", "?q2")),
           ("fluent", "time_of_traj", ("?q1", "?q2")),
           ("fluent", "at_x", ("?q2",)),
           ("fluent", "at_y", ("?q2",)),
           ("fluent", "at_time", ("?q2",))]
    out += [("atom", "next", (a, b, "?q2")) for a, b in zip(chain[:-1], chain[1:])]
    return tuple(out)


@dataclass(frozen=True)
class StreamSchema:
    name: str
    maneuver: ManeuverKind
    fact: str  # maneuver predicate certified for (q1, q2)
    target_lane: str = "current"  # current | left | right
    speed_rule: str = "target"  # target | yield
    requires: tuple = ()  # snapshot conditions beyond the domain facts
    n_intermediate: int = 24
    inputs: tuple = ("?q1",)
    domain: tuple = (("fluent", "at_x", ("?q1",)), ("fluent", "at_y", ("?q1",)), ("fluent", "at_time", ("?q1",)))

    @property
    def outputs(self) -> tuple:
        return ("?q2",) + intermediate_names(self.n_intermediate)

    @property
    def certified(self) -> tuple:
        return trajectory_templates(self.fact, self.n_intermediate)


def default_streams(n_intermediate: int = 24) -> tuple:
    dom = StreamSchema.domain
    front = dom + (("atom", "there_is_front_obs", ()),)
    return (
        StreamSchema("keep_speed_stream", ManeuverKind.KEEP_SPEED, "keep_speed_traj",
                     n_intermediate=n_intermediate, domain=dom),
        StreamSchema("yield_stream", ManeuverKind.YIELD, "yield_traj", speed_rule="yield",
                     n_intermediate=n_intermediate, domain=dom),
        StreamSchema("left_change_stream", ManeuverKind.LEFT_CHANGE, "left_traj", target_lane="left",
                     requires=("left_neighbor", "front_obstacle"), n_intermediate=n_intermediate, domain=front),
        StreamSchema("right_change_stream", ManeuverKind.RIGHT_CHANGE, "right_traj", target_lane="right",
                     requires=("right_neighbor", "off_home_lane", "right_lane_clear"),
                     n_intermediate=n_intermediate, domain=dom),
        StreamSchema("overtake_stream", ManeuverKind.OVERTAKE, "overtake_traj",
                     requires=("left_neighbor", "front_obstacle"), n_intermediate=n_intermediate, domain=front),
    )


MANEUVER_OF_ACTION = {
    "keep_speed": ManeuverKind.KEEP_SPEED,
    "keep_lane_yield": ManeuverKind.YIELD,
    "left_change": ManeuverKind.LEFT_CHANGE,
    "right_change": ManeuverKind.RIGHT_CHANGE,
    "overtake": ManeuverKind.OVERTAKE,
}


# configuration and snapshot -------------------------------------------------

@dataclass(frozen=True)
class PlannerConfig:
    params: OptimizationParams = OptimizationParams()
    weight: float = ff.DEFAULT_WEIGHT
    max_level: int = 3
    margin: float = DEFAULT_MARGIN
    node_budget: int = 20_000
    yield_decrement: float = 3.0
    yield_step: float = 1.5
    curve_lat_accel: float = CURVE_LAT_ACCEL
    enabled: bool = True

    def __post_init__(self):
        if self.weight < 1:
            raise ValueError("search weight must be >= 1")
        if self.max_level < 0:
            raise ValueError("max_level must be >= 0")
        if self.margin < 0:
            raise ValueError("margin must be >= 0")


@dataclass(frozen=True)
class PlanningSnapshot:
    time: float
    ego: CartesianState
    lane_map: object
    histories: tuple
    route: tuple
    target_speed: float
    ego_footprint: Footprint = Footprint()
    goal_region: Optional[np.ndarray] = None
    level: int = 0

    def __post_init__(self):
        if self.level < 0:
            raise ValueError("level must be >= 0")


@dataclass
class LaneContext:
    element: str
    on_route: bool
    path: object
    s: float
    l: float
    lane: object  # Lane or None on junction connectors
    left_path: object = None
    right_path: object = None
    front_obstacle: Optional[str] = None
    right_lane_clear: bool = True


def _reach(snapshot: PlanningSnapshot, params: OptimizationParams) -> float:
    return max(snapshot.ego.v, snapshot.target_speed) * params.T + 10.0


def _obstacle_ahead(path, s_ego, reach, half_width, histories, exclude_behind=0.0):
    best = None
    for h in histories:
        st = h.last
        s, l = path.project(st.x, st.y, check_extent=False)
        s, l = float(s[0]), float(l[0])
        ds = s - s_ego
        if not (exclude_behind < ds <= reach) or abs(l) > half_width:
            continue
        th = float(path.interpolate(s).theta)
        if abs(normalize_angle(st.theta - th)) > FRONT_HEADING_TOL:
            continue
        if best is None or ds < best[0]:
            best = (ds, h.id)
    return None if best is None else best[1]


def analyze(snapshot: PlanningSnapshot, params: OptimizationParams = OptimizationParams()) -> LaneContext:
    """Where the ego is: current element, reference path, neighbors, front obstacle."""
    m = snapshot.lane_map
    ego = snapshot.ego
    chain = m.route_chain(snapshot.route)
    hit = m.locate(ego.x, ego.y, ego.theta, elements=chain)
    on_route = hit is not None and abs(hit[2]) <= m.lanes[snapshot.route[0]].width / 2 + 1e-9 and hit[3] <= abs(hit[2]) + 1e-6
    if on_route:
        eid = hit[0]
        path = m.route_path(snapshot.route)
    else:
        hit = m.locate(ego.x, ego.y, ego.theta)
        if hit is None:
            raise MalformedBaseProblem("ego is not on any map element")
        eid = hit[0]
        path = m.chain_path(m.forward_chain(eid))
    s, l = path.project(ego.x, ego.y, check_extent=False)
    s, l = float(s[0]), float(l[0])
    lane = m.lanes.get(eid)
    ctx = LaneContext(eid, on_route, path, s, l, lane)
    if lane is not None:
        if lane.left:
            ctx.left_path = m.chain_path(m.forward_chain(lane.left))
        if lane.right:
            ctx.right_path = m.chain_path(m.forward_chain(lane.right))
    width = lane.width if lane is not None else m.lanes[snapshot.route[0]].width
    reach = _reach(snapshot, params)
    ctx.front_obstacle = _obstacle_ahead(path, s, reach, width / 2, snapshot.histories)
    if ctx.right_path is not None:
        sr, _ = ctx.right_path.project(ego.x, ego.y, check_extent=False)
        ctx.right_lane_clear = _obstacle_ahead(ctx.right_path, float(sr[0]), reach, width / 2,
                                               snapshot.histories) is None
    return ctx


def _condition(name: str, snapshot: PlanningSnapshot, ctx: LaneContext) -> bool:
    if name == "left_neighbor":
        return ctx.left_path is not None
    if name == "right_neighbor":
        return ctx.right_path is not None
    if name == "front_obstacle":
        return ctx.front_obstacle is not None
    if name == "off_home_lane":
        return ctx.element not in snapshot.lane_map.route_chain(snapshot.route)
    if name == "right_lane_clear":
        return ctx.right_lane_clear
    raise KeyError(name)


def applicable_streams(snapshot: PlanningSnapshot, streams: Sequence[StreamSchema] = None,
                       ctx: LaneContext = None, params: OptimizationParams = OptimizationParams()) -> list:
    streams = default_streams(params.n_steps - 1) if streams is None else streams
    ctx = analyze(snapshot, params) if ctx is None else ctx
    facts = {"there_is_front_obs"} if ctx.front_obstacle is not None else set()
    out = []
    for sc in streams:
        if any(kind == "atom" and name not in facts for kind, name, _ in sc.domain):
            continue
        if all(_condition(c, snapshot, ctx) for c in sc.requires):
            out.append(sc)
    return out


# base problem -----------------------------------------------------------------

def pddl_name(raw: str) -> str:
    out = "".join(ch if ch.isalnum() or ch in "_-" else "_" for ch in str(raw).lower())
    return out if out and out[0].isalpha() else "o_" + out


def obstacle_objects(histories) -> dict:
    """PDDL object name for every obstacle id, in history order."""
    names = {}
    for h in histories:
        base = "obs_" + pddl_name(h.id)
        name, k = base, 1
        while name in names.values():
            k += 1
            name = f"{base}_{k}"
        names[h.id] = name
    return names


def build_base_problem(snapshot: PlanningSnapshot, ctx: LaneContext = None) -> Problem:
    ctx = analyze(snapshot) if ctx is None else ctx
    objects = {"q0": "conf"}
    for name in obstacle_objects(snapshot.histories).values():
        objects[name] = "obstacles"
    init = [Atom("ego_at", ("q0",)), Atom("idle"), Atom("on_init_lane")]
    if ctx.front_obstacle is not None:
        init.append(Atom("there_is_front_obs"))
    fl = {FluentTerm("cost"): 0.0, FluentTerm("curr_time"): float(snapshot.time),
          FluentTerm("at_x", ("q0",)): float(snapshot.ego.x), FluentTerm("at_y", ("q0",)): float(snapshot.ego.y),
          FluentTerm("at_time", ("q0",)): float(snapshot.time)}
    return Problem("maneuver_cycle", "maneuver", objects, tuple(init), fl,
                   (Literal(Atom("moved_forward")),), ("minimize", FluentTerm("cost")))


def _ego_conf(problem: Problem) -> str:
    at = [a.args[0] for a in problem.init if a.predicate == "ego_at"]
    if len(at) != 1:
        raise MalformedBaseProblem(f"expected exactly one ego_at fact, found {len(at)}")
    q = at[0]
    if problem.objects.get(q) != "conf":
        raise MalformedBaseProblem(f"ego configuration {q} is not a conf object")
    for f in ("at_x", "at_y", "at_time"):
        if FluentTerm(f, (q,)) not in problem.init_fluents:
            raise MalformedBaseProblem(f"missing ({f} {q})")
    if problem.metric is None:
        raise MalformedBaseProblem("problem has no metric")
    return q


# stream application -------------------------------------------------------------

@dataclass(eq=False)
class StreamInstance:
    schema: StreamSchema
    bindings: dict  # template variable -> object
    objects: tuple  # new conf objects: endpoint first, then intermediates
    certified_atoms: tuple
    certified_fluents: dict
    check_atoms: tuple  # traj plus checked_traj per collision-free obstacle
    trajectory: object
    collisions: dict = field(default_factory=dict)  # obstacle id -> CollisionReport
    level: int = 0

    @property
    def q1(self) -> str:
        return self.bindings["?q1"]

    @property
    def q2(self) -> str:
        return self.bindings["?q2"]

    @property
    def collision_free(self) -> bool:
        return all(r.collision_free for r in self.collisions.values())

    def atoms(self) -> tuple:
        return self.certified_atoms + self.check_atoms


def curve_speed_limit(path, s0: float, lookahead: float, lat_accel: float) -> float:
    s = np.linspace(s0, min(path.length, s0 + lookahead), 64)
    k = float(np.max(np.abs(path.interpolate(s).kappa)))
    return math.inf if k < 1e-9 else math.sqrt(lat_accel / k)


def desired_speed(schema: StreamSchema, snapshot: PlanningSnapshot, path, s0: float,
                  config: PlannerConfig, level: int) -> float:
    v0 = snapshot.ego.v
    if schema.speed_rule == "yield":
        return max(0.0, v0 - config.yield_decrement - config.yield_step * level)
    look = max(v0, snapshot.target_speed) * config.params.T + 10.0
    return min(snapshot.target_speed, curve_speed_limit(path, s0, look, config.curve_lat_accel))


def _lateral_offset(base_path, other_path, x, y) -> float:
    s, _ = other_path.project(x, y, check_extent=False)
    fr = other_path.interpolate(s)
    _, l = base_path.project(fr.x, fr.y, check_extent=False)
    return float(l[0])


class NameSource:
    """Fresh configuration names across the streams of one planning call."""

    def __init__(self, used=()):
        self.k = 0
        self.used = set(used)

    def endpoint(self) -> str:
        while True:
            self.k += 1
            name = f"q{self.k}"
            if name not in self.used:
                self.used.add(name)
                return name


def apply_stream(schema: StreamSchema, snapshot: PlanningSnapshot, config: PlannerConfig,
                 predictions: Sequence[PredictionSet], level: int = 0, q1: str = "q0",
                 names: NameSource = None, ctx: LaneContext = None,
                 obstacle_names: dict = None) -> Optional[StreamInstance]:
    """Run one stream; ``None`` when the maneuver has no feasible trajectory."""
    params = config.params
    ctx = analyze(snapshot, params) if ctx is None else ctx
    names = NameSource() if names is None else names
    obstacle_names = obstacle_objects(snapshot.histories) if obstacle_names is None else obstacle_names
    ego = snapshot.ego
    if schema.target_lane == "left":
        path = ctx.left_path
    elif schema.target_lane == "right":
        path = ctx.right_path
    else:
        path = ctx.path
    if path is None:
        return None
    try:
        init = cartesian_to_frenet(path, ego)
    except GeometryError:
        return None
    v_des = desired_speed(schema, snapshot, path, init.s, config, level)
    try:
        if schema.maneuver is ManeuverKind.OVERTAKE:
            if ctx.left_path is None:
                return None
            offset = _lateral_offset(path, ctx.left_path, ego.x, ego.y)
            cands = generate_overtake_candidates(path, init, v_des, offset, params, level)
        else:
            cands = generate_candidates(path, init, v_des, 0.0, params, level, schema.maneuver)
    except (GeometryError, EmptyCandidateSet):
        return None
    best = select_optimal(filter_feasible(cands, params), v_des, 0.0, params)
    if best is None:
        return None
    q2 = names.endpoint()
    mids = tuple(f"{q1}_{q2[1:]}_{k}" for k in range(1, schema.n_intermediate + 1))
    if len(best.t) != schema.n_intermediate + 2:
        raise ValueError(f"trajectory has {len(best.t)} samples, stream expects {schema.n_intermediate + 2}")
    binding = {"?q1": q1, "?q2": q2}
    binding.update(zip(intermediate_names(schema.n_intermediate), mids))
    best = replace(best, id=f"{schema.name}:{q1}->{q2}", meta={"level": level, "v_desired": v_des})
    values = {"time_of_traj": float(best.t[-1] - best.t[0]), "at_x": float(best.x[-1]),
              "at_y": float(best.y[-1]), "at_time": float(snapshot.time + best.t[-1])}
    atoms, fluents = [], {}
    for kind, name, args in schema.certified:
        args = tuple(binding[a] for a in args)
        if kind == "atom":
            atoms.append(Atom(name, args))
        else:
            fluents[FluentTerm(name, args)] = values[name]
    checks = [Atom("traj", (q1, q2))]
    collisions = {}
    for ps in predictions:
        report = check_trajectory(best, snapshot.ego_footprint, [ps.hypotheses(2)], config.margin)
        collisions[ps.obstacle_id] = report
        if report.collision_free:
            checks.append(Atom("checked_traj", (q1, q2, obstacle_names[ps.obstacle_id])))
    return StreamInstance(schema, binding, (q2,) + mids, tuple(atoms), fluents, tuple(checks), best,
                          collisions, level)


def augment(problem: Problem, instances: Sequence[StreamInstance]) -> Problem:
    objects, atoms, fluents = {}, [], {}
    for inst in instances:
        for o in inst.objects:
            objects[o] = "conf"
        atoms += inst.atoms()
        fluents.update(inst.certified_fluents)
    return problem.with_additions(objects, atoms, fluents)


# planning loop ------------------------------------------------------------------

@dataclass
class PlanResult:
    plan: Plan
    trajectories: list = field(repr=False)
    level: int
    instances: list = field(repr=False)
    problem: Problem = field(repr=False)
    task: object = field(repr=False)
    search_ms: float = 0.0

    @property
    def decision(self) -> ManeuverKind:
        return MANEUVER_OF_ACTION[self.plan.actions[0].name]

    @property
    def first_trajectory(self):
        return self.trajectories[0]

    def __bool__(self):
        return True


@dataclass
class NoPlan:
    levels: int
    instances: list = field(repr=False)
    problem: Optional[Problem] = field(default=None, repr=False)
    reason: str = ""

    def __bool__(self):
        return False


def _same_trajectory(a, b) -> bool:
    return (a.maneuver == b.maneuver and len(a.t) == len(b.t)
            and np.array_equal(a.x, b.x) and np.array_equal(a.y, b.y) and np.array_equal(a.v, b.v))


def plan_with_streams(snapshot: PlanningSnapshot, base_problem: Problem = None, max_level: Optional[int] = None,
                      config: PlannerConfig = PlannerConfig(), predictions: Sequence[PredictionSet] = None,
                      predictor=None, domain=None, streams: Sequence[StreamSchema] = None):
    """Stream, ground and search level by level; :class:`PlanResult` or :class:`NoPlan`."""
    domain = load_domain() if domain is None else domain
    max_level = config.max_level if max_level is None else max_level
    ctx = analyze(snapshot, config.params)
    problem = build_base_problem(snapshot, ctx) if base_problem is None else base_problem
    q1 = _ego_conf(problem)
    if predictions is None:
        predictor = BaselinePredictor() if predictor is None else predictor
        predictions = predictor(snapshot.histories, snapshot.lane_map, config.params.T, config.params.dt)
    obstacle_names = obstacle_objects(snapshot.histories)
    missing = [n for n in obstacle_names.values() if n not in problem.objects]
    if missing:
        raise MalformedBaseProblem(f"obstacle objects missing from the problem: {missing}")
    names = NameSource(problem.objects)
    active = applicable_streams(snapshot, streams, ctx, config.params)
    instances = []
    search_ms = 0.0
    for level in range(max_level + 1):
        new = []
        for sc in active:
            inst = apply_stream(sc, snapshot, config, predictions, level, q1, names, ctx, obstacle_names)
            if inst is None:
                continue
            if any(old.schema is sc and _same_trajectory(old.trajectory, inst.trajectory) for old in instances):
                continue
            new.append(inst)
        instances += new
        if not new and level > 0:
            continue
        problem = augment(problem, new)
        t0 = time.perf_counter()
        task = ground(domain, problem)
        result = ff.search(task, config.weight, config.node_budget)
        search_ms += (time.perf_counter() - t0) * 1e3
        if isinstance(result, Plan):
            by_end = {(i.q1, i.q2): i for i in instances}
            trajs = [by_end[a.args].trajectory for a in result.actions]
            log.debug("level %d plan %s", level, [str(a) for a in result.actions])
            return PlanResult(result, trajs, level, instances, problem, task, search_ms)
        log.debug("level %d: no plan (%s)", level, type(result).__name__)
    return NoPlan(max_level, instances, problem, "no collision-free maneuver at any level")
