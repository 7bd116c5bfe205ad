"""Multi-hypothesis obstacle prediction.

The baseline predictor emits two hypotheses per obstacle: constant velocity
(probability 0.6) and constant acceleration (0.4). Obstacles close to a lane
centerline and roughly aligned with it follow the lane; everything else
continues along its current heading.

Any other model can be plugged in through :class:`ExternalPredictor`, which
exchanges one JSON object per planning cycle with a subprocess.
"""

from __future__ import annotations

import json
import math
import subprocess
from dataclasses import dataclass
from typing import Optional, Sequence

import numpy as np

from .collision import Footprint, ObstacleHypotheses
from .errors import EmptyHistory, EmptySet
from .geometry import CartesianState, TrajectorySample

CV_PROBABILITY = 0.6
CA_PROBABILITY = 0.4
ACCEL_CLAMP = 4.0
SNAP_DISTANCE = 1.5
SNAP_HEADING = math.radians(30.0)
DEFAULT_HORIZON = 5.0
# straight extension past the end of the last lane in a followed chain
_CHAIN_TAIL = 300.0


@dataclass(frozen=True)
class ObstacleHistory:
    id: str
    footprint: Footprint
    times: np.ndarray
    states: tuple

    def __post_init__(self):
        if len(self.states) == 0:
            raise EmptyHistory(f"obstacle {self.id} has no observed states")
        t = np.asarray(self.times, dtype=float)
        if len(t) != len(self.states):
            raise ValueError("times and states differ in length")
        if np.any(np.diff(t) <= 0):
            raise ValueError("history times must be strictly increasing")
        object.__setattr__(self, "times", t)

    @property
    def last(self) -> CartesianState:
        return self.states[-1]


@dataclass(frozen=True, eq=False)
class PredictedTrajectory:
    t: np.ndarray
    x: np.ndarray
    y: np.ndarray
    theta: np.ndarray
    v: np.ndarray
    a: np.ndarray
    probability: float
    label: str = ""

    def __post_init__(self):
        if not 0.0 <= self.probability <= 1.0:
            raise ValueError(f"probability {self.probability} outside [0, 1]")

    def __len__(self):
        return len(self.t)

    @property
    def samples(self) -> list:
        # travelled distance stands in for the Frenet s channel
        s = np.concatenate([[0.0], np.cumsum(np.hypot(np.diff(self.x), np.diff(self.y)))])
        return [TrajectorySample(float(self.t[i]), float(self.x[i]), float(self.y[i]), float(self.theta[i]),
                                 float(self.v[i]), float(self.a[i]), 0.0, float(s[i]), float(self.v[i]),
                                 float(self.a[i]), 0.0, 0.0, 0.0, 0.0, 0.0)
                for i in range(len(self.t))]

    def to_json(self) -> dict:
        return {"probability": self.probability, "label": self.label,
                "states": [[float(v) for v in row] for row in
                           np.column_stack([self.t, self.x, self.y, self.theta, self.v, self.a])]}


@dataclass(frozen=True)
class PredictionSet:
    obstacle_id: str
    trajectories: tuple
    footprint: Footprint = Footprint()

    def __post_init__(self):
        if not self.trajectories:
            raise EmptySet(f"no hypotheses for obstacle {self.obstacle_id}")
        p = [tr.probability for tr in self.trajectories]
        if sum(p) > 1.0 + 1e-6:
            raise ValueError(f"probabilities sum to {sum(p)}")
        if any(b > a for a, b in zip(p[:-1], p[1:])):
            raise ValueError("hypotheses must be sorted by descending probability")

    @classmethod
    def sorted(cls, obstacle_id, trajectories, footprint=Footprint()):
        """Build a set from hypotheses in any order (stable sort)."""
        order = sorted(range(len(trajectories)), key=lambda i: -trajectories[i].probability)
        return cls(obstacle_id, tuple(trajectories[i] for i in order), footprint)

    def hypotheses(self, k: int = 2) -> ObstacleHypotheses:
        return ObstacleHypotheses(self.obstacle_id, self.footprint, select_top2(self) if k == 2
                                  else self.trajectories[:k])


def select_top2(pset: PredictionSet) -> tuple:
    """The two most probable hypotheses; a single hypothesis is returned twice."""
    if not pset.trajectories:
        raise EmptySet("empty prediction set")
    if len(pset.trajectories) == 1:
        return (pset.trajectories[0], pset.trajectories[0])
    return tuple(pset.trajectories[:2])


def estimate_acceleration(history: ObstacleHistory) -> float:
    if len(history.states) < 2:
        return 0.0
    a, b = history.states[-2], history.states[-1]
    acc = (b.v - a.v) / (history.times[-1] - history.times[-2])
    return float(np.clip(acc, -ACCEL_CLAMP, ACCEL_CLAMP))


def speed_profile(v0: float, a: float, t: np.ndarray):
    """Distance, speed and acceleration under constant ``a`` with the speed floored at 0."""
    v = np.maximum(v0 + a * t, 0.0)
    if a < 0:
        t_stop = v0 / -a
        tc = np.minimum(t, t_stop)
        s = v0 * tc + 0.5 * a * tc ** 2
        acc = np.where(t < t_stop, a, 0.0)
    else:
        s = v0 * t + 0.5 * a * t ** 2
        acc = np.full_like(t, a)
    return s, v, acc


def _snap(lane_map, state: CartesianState):
    if lane_map is None:
        return None
    hit = lane_map.locate(state.x, state.y, state.theta, max_dheading=SNAP_HEADING)
    if hit is None or hit[3] > SNAP_DISTANCE:
        return None
    return hit


def predict(history: ObstacleHistory, lane_map=None, horizon: float = DEFAULT_HORIZON,
            dt: float = 0.2) -> PredictionSet:
    """Baseline two-hypothesis prediction for one obstacle."""
    if not horizon > 0:
        raise ValueError("horizon must be positive")
    if len(history.states) == 0:
        raise EmptyHistory(history.id)
    n = int(round(horizon / dt))
    t = np.arange(n + 1) * dt
    st = history.last
    hit = _snap(lane_map, st)
    hyps = []
    for label, acc, prob in (("constant_velocity", 0.0, CV_PROBABILITY),
                             ("constant_acceleration", estimate_acceleration(history), CA_PROBABILITY)):
        ds, v, a = speed_profile(st.v, acc, t)
        if hit is None:
            x = st.x + ds * math.cos(st.theta)
            y = st.y + ds * math.sin(st.theta)
            theta = np.full_like(t, st.theta)
        else:
            eid, s0, l0 = hit[0], hit[1], hit[2]
            path = lane_map.chain_path(lane_map.forward_chain(eid), tail=_CHAIN_TAIL)
            fr = path.interpolate(np.clip(s0 + ds, 0.0, path.length))
            theta = fr.theta
            x = fr.x - l0 * np.sin(theta)
            y = fr.y + l0 * np.cos(theta)
        hyps.append(PredictedTrajectory(t, np.asarray(x, dtype=float), np.asarray(y, dtype=float),
                                        np.asarray(theta, dtype=float), v, a, prob, label))
    return PredictionSet(history.id, tuple(hyps), history.footprint)


class BaselinePredictor:
    """Callable predictor over all obstacle histories of a cycle."""

    name = "baseline"

    def __call__(self, histories: Sequence[ObstacleHistory], lane_map, horizon: float = DEFAULT_HORIZON,
                 dt: float = 0.2) -> list:
        return [predict(h, lane_map, horizon, dt) for h in histories]


def history_to_json(h: ObstacleHistory) -> dict:
    return {"id": h.id, "length": h.footprint.length, "width": h.footprint.width,
            "states": [[float(t), s.x, s.y, s.theta, s.v, s.a] for t, s in zip(h.times, h.states)]}


def request_json(histories, horizon: float, dt: float, time: Optional[float] = None) -> dict:
    """One cycle of the predictor exchange format."""
    return {"time": time, "horizon": horizon, "dt": dt, "obstacles": [history_to_json(h) for h in histories]}


def parse_response(obj: dict, histories, horizon: float, dt: float) -> list:
    """Decode ``{"predictions": [{"id", "trajectories": [{"probability", "states"}]}]}``."""
    by_id = {p["id"]: p for p in obj["predictions"]}
    out = []
    n = int(round(horizon / dt)) + 1
    for h in histories:
        trajs = []
        for tr in by_id[h.id]["trajectories"]:
            rows = np.asarray(tr["states"], dtype=float)
            if rows.shape[0] != n or rows.shape[1] != 6:
                raise ValueError(f"prediction for {h.id} must have {n} rows of [t, x, y, theta, v, a]")
            trajs.append(PredictedTrajectory(*rows.T, probability=float(tr["probability"]),
                                             label=tr.get("label", "")))
        out.append(PredictionSet.sorted(h.id, trajs, h.footprint))
    return out


class ExternalPredictor:
    """Talks JSON lines with a long-running predictor process.

    Each cycle writes one request object (see :func:`request_json`) and reads
    one response line back.
    """

    name = "external"

    def __init__(self, command: Sequence[str]):
        self.proc = subprocess.Popen(list(command), stdin=subprocess.PIPE, stdout=subprocess.PIPE, text=True)

    def __call__(self, histories, lane_map, horizon: float = DEFAULT_HORIZON, dt: float = 0.2) -> list:
        self.proc.stdin.write(json.dumps(request_json(histories, horizon, dt)) + "\n")
        self.proc.stdin.flush()
        line = self.proc.stdout.readline()
        if not line:
            raise RuntimeError("predictor process closed its output")
        return parse_response(json.loads(line), histories, horizon, dt)

    def close(self):
        if self.proc.poll() is None:
            self.proc.stdin.close()
            self.proc.wait(timeout=5)
