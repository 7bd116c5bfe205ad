"""Closed-loop simulation, comfort classification and batch experiments."""

from __future__ import annotations

import csv
import enum
import io
import json
import logging
import math
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict, dataclass, field, fields, replace
from pathlib import Path
from typing import Optional

import numpy as np

from .collision import OrientedBox, obb_overlap
from .errors import TraceTooShort
from .geometry import CartesianState
from .maps import FamilyKind, ScenarioFamily, generate_scenario
from .prediction import BaselinePredictor, ObstacleHistory
from .streams import PlannerConfig, PlanningSnapshot, plan_with_streams

log = logging.getLogger(__name__)

HISTORY_WINDOW = 1.0
DEADLOCK_CYCLES = 25
NO_PLAN = "NoPlan"
DISABLED = "Scripted"


class Outcome(enum.Enum):
    GOAL_REACHED = "GoalReached"
    COLLISION = "Collision"
    TIMEOUT = "Timeout"
    NO_PLAN_DEADLOCK = "NoPlanDeadlock"


def planner_config(overrides: Optional[dict] = None, base: PlannerConfig = PlannerConfig()) -> PlannerConfig:
    """Planner config with ``overrides`` (flat keys, optional nested ``params``) applied."""
    overrides = dict(overrides or {})
    params = overrides.pop("params", None)
    known = {f.name for f in fields(PlannerConfig)} - {"params"}
    unknown = set(overrides) - known
    if unknown:
        raise ValueError(f"unknown planner settings: {sorted(unknown)}")
    cfg = replace(base, **overrides)
    if params:
        cfg = replace(cfg, params=replace(cfg.params, **params))
    return cfg


def config_to_dict(cfg: PlannerConfig) -> dict:
    return asdict(cfg)


# traces --------------------------------------------------------------------

@dataclass(frozen=True)
class StepRecord:
    t: float
    ego: CartesianState
    decision: str
    trajectory_id: str = ""
    planner_ms: float = 0.0  # streams + search, prediction excluded
    cycle_ms: float = 0.0  # whole cycle including prediction
    level: int = -1
    obstacles: dict = field(default_factory=dict)  # id -> CartesianState


@dataclass
class SimTrace:
    scenario: str
    dt: float
    records: list
    outcome: Outcome
    collision: Optional[dict] = None

    def __len__(self):
        return len(self.records)

    @property
    def times(self) -> np.ndarray:
        return np.array([r.t for r in self.records])

    @property
    def decisions(self) -> list:
        return [r.decision for r in self.records]

    def channels(self) -> dict:
        """Per-step arrays: pose, speed, accelerations and finite-difference jerks."""
        recs = self.records
        out = {k: np.array([getattr(r.ego, k) for r in recs], dtype=float)
               for k in ("x", "y", "theta", "v", "a", "kappa")}
        out["t"] = self.times
        out["a_lon"] = out.pop("a")
        out["a_lat"] = out["v"] ** 2 * out["kappa"]
        for src, dst in (("a_lon", "jerk_lon"), ("a_lat", "jerk_lat")):
            j = np.zeros(len(recs))
            if len(recs) > 1:
                j[1:] = np.diff(out[src]) / self.dt
            out[dst] = j
        return out

    def planner_times(self) -> np.ndarray:
        return np.array([r.planner_ms for r in self.records if r.planner_ms > 0.0])

    def to_json(self, timing: bool = True) -> dict:
        def state(s):
            return [float(s.x), float(s.y), float(s.theta), float(s.v), float(s.a), float(s.kappa)]
        steps = []
        for r in self.records:
            d = {"t": round(r.t, 9), "ego": state(r.ego), "decision": r.decision,
                 "trajectory_id": r.trajectory_id, "level": r.level,
                 "obstacles": {k: state(v) for k, v in sorted(r.obstacles.items())}}
            if timing:
                d["planner_ms"] = r.planner_ms
                d["cycle_ms"] = r.cycle_ms
            steps.append(d)
        return {"scenario": self.scenario, "dt": self.dt, "outcome": self.outcome.value,
                "collision": self.collision, "state_fields": ["x", "y", "theta", "v", "a", "kappa"],
                "steps": steps}

    def to_csv(self, timing: bool = True) -> str:
        ch = self.channels()
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        cols = ["t", "x", "y", "theta", "v", "a_lon", "a_lat", "jerk_lon", "jerk_lat"]
        w.writerow(cols + ["decision", "planner_ms"])
        for i, r in enumerate(self.records):
            ms = f"{r.planner_ms:.3f}" if timing else "0"
            w.writerow([f"{ch[c][i]:.6f}" for c in cols] + [r.decision, ms])
        return buf.getvalue()


def trace_from_json(obj: dict) -> SimTrace:
    recs = []
    for d in obj["steps"]:
        recs.append(StepRecord(d["t"], CartesianState(*d["ego"]), d["decision"], d.get("trajectory_id", ""),
                               d.get("planner_ms", 0.0), d.get("cycle_ms", 0.0), d.get("level", -1),
                               {k: CartesianState(*v) for k, v in d.get("obstacles", {}).items()}))
    return SimTrace(obj.get("scenario", ""), obj["dt"], recs, Outcome(obj["outcome"]), obj.get("collision"))


# closed loop ------------------------------------------------------------------

def _ground_truth_collision(ego, ego_fp, obstacles, specs) -> Optional[str]:
    eb = OrientedBox.from_footprint(ego.x, ego.y, ego.theta, ego_fp)
    for o in specs:
        st = obstacles[o.id]
        if obb_overlap(eb, OrientedBox.from_footprint(st.x, st.y, st.theta, o.footprint)):
            return o.id
    return None


def _advance_along(path, ego: CartesianState, v_next: float, a: float, dt: float) -> CartesianState:
    s, l = path.project(ego.x, ego.y, check_extent=False)
    s = float(s[0]) + 0.5 * (ego.v + v_next) * dt
    fr = path.interpolate(min(s, path.length))
    th = float(fr.theta)
    return CartesianState(float(fr.x) - float(l[0]) * math.sin(th), float(fr.y) + float(l[0]) * math.cos(th),
                          th, v_next, a, float(fr.kappa))


def _stop_step(path, ego: CartesianState, a_max: float, dt: float) -> CartesianState:
    v = max(0.0, ego.v - a_max * dt)
    a = (v - ego.v) / dt
    return _advance_along(path, ego, v, a, dt)


def run_closed_loop(scenario, config: Optional[PlannerConfig] = None, predictor=None,
                    history_window: float = HISTORY_WINDOW, deadlock_cycles: int = DEADLOCK_CYCLES,
                    clock=time.perf_counter) -> SimTrace:
    """Replan every ``dt``, execute the first segment exactly, check ground truth.

    Without an explicit ``config`` the scenario's ``planner`` settings apply
    on top of the defaults.
    """
    config = planner_config(scenario.planner) if config is None else config
    predictor = BaselinePredictor() if predictor is None else predictor
    params = config.params
    dt = params.dt
    lane_map = scenario.map
    ego = scenario.ego.state
    ego_fp = scenario.ego.footprint
    route_path = scenario.ego_route_path
    specs = scenario.obstacles
    keep = max(1, int(round(history_window / dt)) + 1)
    seen = {o.id: [] for o in specs}
    remaining = None
    no_plan = 0
    records = []
    k = 0
    while True:
        t = k * dt
        obstacles = {o.id: o.state_at(t, lane_map) for o in specs}
        for o in specs:
            seen[o.id] = (seen[o.id] + [(t, obstacles[o.id])])[-keep:]
        hit = _ground_truth_collision(ego, ego_fp, obstacles, specs)
        if hit is not None:
            records.append(StepRecord(t, ego, "Collision", obstacles=obstacles))
            st = obstacles[hit]
            return SimTrace(scenario.name, dt, records, Outcome.COLLISION,
                            {"time": t, "obstacle": hit, "ego": [ego.x, ego.y], "obstacle_at": [st.x, st.y]})
        if scenario.in_goal(ego.x, ego.y):
            records.append(StepRecord(t, ego, "Goal", obstacles=obstacles))
            return SimTrace(scenario.name, dt, records, Outcome.GOAL_REACHED)
        if t >= scenario.duration - 1e-9:
            records.append(StepRecord(t, ego, "Timeout", obstacles=obstacles))
            return SimTrace(scenario.name, dt, records, Outcome.TIMEOUT)

        if not config.enabled:
            nxt = _advance_along(route_path, ego, ego.v, 0.0, dt)
            records.append(StepRecord(t, ego, DISABLED, obstacles=obstacles))
            ego, k = nxt, k + 1
            continue

        c0 = clock()
        histories = tuple(ObstacleHistory(o.id, o.footprint, np.array([p[0] for p in seen[o.id]]),
                                           tuple(p[1] for p in seen[o.id])) for o in specs)
        predictions = predictor(histories, lane_map, params.T, dt)
        snap = PlanningSnapshot(t, ego, lane_map, histories, scenario.ego.route, scenario.ego.target_speed,
                                ego_fp, scenario.goal_region)
        p0 = clock()
        result = plan_with_streams(snap, config=config, predictions=predictions)
        p1 = clock()
        planner_ms = (p1 - p0) * 1e3
        cycle_ms = (p1 - c0) * 1e3
        if result:
            no_plan = 0
            traj = result.first_trajectory
            decision = result.decision.value
            remaining = traj.shifted(1)
            nxt = CartesianState(*(float(getattr(traj, c)[1]) for c in ("x", "y", "theta", "v", "a", "kappa")))
            records.append(StepRecord(t, ego, decision, traj.id, planner_ms, cycle_ms, result.level, obstacles))
        else:
            no_plan += 1
            if no_plan >= deadlock_cycles:
                records.append(StepRecord(t, ego, NO_PLAN, "", planner_ms, cycle_ms, -1, obstacles))
                return SimTrace(scenario.name, dt, records, Outcome.NO_PLAN_DEADLOCK)
            if remaining is not None and len(remaining.t) > 1:
                nxt = CartesianState(*(float(getattr(remaining, c)[1])
                                       for c in ("x", "y", "theta", "v", "a", "kappa")))
                tid = remaining.id
                remaining = remaining.shifted(1)
            else:
                nxt = _stop_step(route_path, ego, params.a_max, dt)
                tid = "stop"
                remaining = None
            records.append(StepRecord(t, ego, NO_PLAN, tid, planner_ms, cycle_ms, -1, obstacles))
        ego, k = nxt, k + 1


# comfort ------------------------------------------------------------------------

class Comfort(enum.Enum):
    COMFORTABLE = "Comfortable"
    NORMAL = "Normal"
    AGGRESSIVE = "Aggressive"


@dataclass(frozen=True)
class OPMThresholds:
    """Comfort bounds; defaults are working values, not calibrated ones."""

    comfortable_accel: float = 0.9
    comfortable_jerk: float = 0.6
    normal_accel: float = 2.0
    normal_jerk: float = 0.9

    def __post_init__(self):
        if not (0 <= self.comfortable_accel <= self.normal_accel and 0 <= self.comfortable_jerk <= self.normal_jerk):
            raise ValueError("comfortable bounds must not exceed normal bounds")

    @classmethod
    def from_file(cls, path) -> "OPMThresholds":
        with open(path, encoding="utf-8") as fh:
            return cls(**json.load(fh))


@dataclass(frozen=True)
class OPMReport:
    max_a_lat: float
    max_a_lon: float
    max_jerk_lat: float
    max_jerk_lon: float
    classification: Comfort

    def to_json(self) -> dict:
        d = asdict(self)
        d["classification"] = self.classification.value
        return d


def classify(a_lat, a_lon, j_lat, j_lon, thresholds: OPMThresholds = OPMThresholds()) -> Comfort:
    acc, jerk = max(a_lat, a_lon), max(j_lat, j_lon)
    if acc <= thresholds.comfortable_accel and jerk <= thresholds.comfortable_jerk:
        return Comfort.COMFORTABLE
    if acc <= thresholds.normal_accel and jerk <= thresholds.normal_jerk:
        return Comfort.NORMAL
    return Comfort.AGGRESSIVE


def evaluate_opm(trace: SimTrace, thresholds: OPMThresholds = OPMThresholds()) -> OPMReport:
    if len(trace.records) < 2:
        raise TraceTooShort(f"trace has {len(trace.records)} steps, need at least 2")
    ch = trace.channels()
    m = {k: float(np.max(np.abs(ch[k]))) for k in ("a_lat", "a_lon", "jerk_lat", "jerk_lon")}
    return OPMReport(m["a_lat"], m["a_lon"], m["jerk_lat"], m["jerk_lon"],
                     classify(m["a_lat"], m["a_lon"], m["jerk_lat"], m["jerk_lon"], thresholds))


# batches -------------------------------------------------------------------------

def run_seed(seed: int, index: int) -> int:
    """Independent scenario seed for run ``index`` of a batch seeded with ``seed``."""
    return int(np.random.SeedSequence([seed, index]).generate_state(1)[0])


def timing_stats(ms) -> dict:
    ms = np.asarray(ms, float)
    if ms.size == 0:
        return {"count": 0, "p50": None, "p95": None, "max": None}
    return {"count": int(ms.size), "p50": float(np.percentile(ms, 50)), "p95": float(np.percentile(ms, 95)),
            "max": float(ms.max())}


@dataclass
class RunResult:
    index: int
    seed: int
    scenario: str
    outcome: Outcome
    steps: int
    comfort: Optional[Comfort]
    trace: SimTrace = field(repr=False, default=None)


@dataclass
class BatchSummary:
    family: str
    n: int
    seed: int
    runs: list
    timing: dict

    def counts(self) -> dict:
        return {o.value: sum(r.outcome is o for r in self.runs) for o in Outcome}

    def opm_histogram(self) -> dict:
        return {c.value: sum(r.comfort is c for r in self.runs) for c in Comfort}

    def to_json(self) -> dict:
        counts = self.counts()
        n = len(self.runs)
        rate = (lambda c: c / n) if n else (lambda c: 0.0)
        return {
            "family": self.family, "n": n, "seed": self.seed,
            "counts": counts,
            "success_rate": rate(counts[Outcome.GOAL_REACHED.value]),
            "collision_rate": rate(counts[Outcome.COLLISION.value]),
            "no_plan_rate": rate(counts[Outcome.NO_PLAN_DEADLOCK.value]),
            "timeout_rate": rate(counts[Outcome.TIMEOUT.value]),
            "opm": self.opm_histogram(),
            "runs": [{"index": r.index, "seed": r.seed, "scenario": r.scenario, "outcome": r.outcome.value,
                      "steps": r.steps, "opm": r.comfort.value if r.comfort else None} for r in self.runs],
        }

    def dumps(self) -> str:
        return json.dumps(self.to_json(), indent=2, sort_keys=True) + "\n"


def _one_run(args):
    family, seed, index, config, thresholds = args
    rs = run_seed(seed, index)
    scenario = generate_scenario(family, rs)
    trace = run_closed_loop(scenario, config)
    comfort = evaluate_opm(trace, thresholds).classification if len(trace) >= 2 else None
    return RunResult(index, rs, scenario.name, trace.outcome, len(trace), comfort, trace)


def run_batch(family, n: int, seed: int, config: PlannerConfig = PlannerConfig(),
              thresholds: OPMThresholds = OPMThresholds(), out_dir=None, workers: int = 1,
              timing: bool = True) -> BatchSummary:
    """Run ``n`` generated scenarios; write ``summary.json``, ``timing.json`` and traces to ``out_dir``.

    ``summary.json`` holds only deterministic content. Planner timings go to
    ``timing.json`` and :attr:`BatchSummary.timing`.
    """
    if isinstance(family, (str, FamilyKind)):
        family = ScenarioFamily(FamilyKind(family))
    if n < 0:
        raise ValueError("n must be >= 0")
    jobs = [(family, seed, i, config, thresholds) for i in range(n)]
    if workers > 1 and n > 1:
        with ProcessPoolExecutor(workers) as ex:
            runs = list(ex.map(_one_run, jobs))
    else:
        runs = [_one_run(j) for j in jobs]
    runs.sort(key=lambda r: r.index)
    ms = np.concatenate([r.trace.planner_times() for r in runs]) if runs else np.array([])
    summary = BatchSummary(family.kind.value, n, seed, runs, timing_stats(ms))
    if out_dir is not None:
        out = Path(out_dir)
        (out / "traces").mkdir(parents=True, exist_ok=True)
        (out / "summary.json").write_text(summary.dumps(), encoding="utf-8")
        (out / "timing.json").write_text(json.dumps(summary.timing, indent=2) + "\n", encoding="utf-8")
        for r in runs:
            body = json.dumps(r.trace.to_json(timing=timing), sort_keys=True) + "\n"
            (out / "traces" / f"run_{r.index:04d}.json").write_text(body, encoding="utf-8")
    return summary
