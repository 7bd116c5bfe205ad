"""Jerk-optimal maneuver trajectory candidates in the Frenet frame.

Each candidate pairs a quartic longitudinal profile (velocity keeping) with a
quintic lateral profile. Candidates are filtered against acceleration, speed
and curvature bounds and ranked by

    J = w_j * sum((s''' ** 2 + l''' ** 2) * dt) + w_t * T
        + w_err * ((l(T) - l_desired) ** 2 + (s'(T) - v_desired) ** 2)

with the jerk integral taken as a left Riemann sum on the sampling grid.
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass, field, replace
from typing import Optional, Sequence

import numpy as np

from .errors import EmptyCandidateSet, NonuniformSampling
from .geometry import (
    FrenetState,
    PiecewisePoly,
    ReferencePath,
    TrajectorySample,
    frenet_to_cartesian,
    solve_quartic,
    solve_quintic,
)

_BOUND_TOL = 1e-9


class ManeuverKind(enum.Enum):
    KEEP_SPEED = "KeepSpeed"
    YIELD = "Yield"
    LEFT_CHANGE = "LeftChange"
    RIGHT_CHANGE = "RightChange"
    OVERTAKE = "Overtake"


@dataclass(frozen=True)
class OptimizationParams:
    """Weights, horizon and feasibility bounds for trajectory generation."""

    w_j: float = 0.1
    w_t: float = 0.1
    w_err: float = 1.0
    T: float = 5.0
    dt: float = 0.2
    a_max: float = 2.0
    v_max: float = 57.6
    kappa_max: float = 1.0

    def __post_init__(self):
        if min(self.w_j, self.w_t, self.w_err) < 0:
            raise ValueError("cost weights must be nonnegative")
        if not (self.T > 0 and self.dt > 0):
            raise ValueError("horizon and time step must be positive")
        if abs(self.T / self.dt - round(self.T / self.dt)) > 1e-9:
            raise ValueError(f"horizon {self.T} is not a multiple of dt {self.dt}")

    @property
    def n_steps(self) -> int:
        return int(round(self.T / self.dt))

    def times(self) -> np.ndarray:
        return np.arange(self.n_steps + 1) * self.dt


_CHANNELS = ("x", "y", "theta", "v", "a", "kappa",
             "s", "s_d", "s_dd", "s_ddd", "l", "l_d", "l_dd", "l_ddd")


@dataclass(frozen=True, eq=False)
class Trajectory:
    """Time-sampled ego motion with both Cartesian and Frenet channels."""

    t: np.ndarray
    x: np.ndarray
    y: np.ndarray
    theta: np.ndarray
    v: np.ndarray
    a: np.ndarray
    kappa: np.ndarray
    s: np.ndarray
    s_d: np.ndarray
    s_dd: np.ndarray
    s_ddd: np.ndarray
    l: np.ndarray
    l_d: np.ndarray
    l_dd: np.ndarray
    l_ddd: np.ndarray
    maneuver: ManeuverKind
    lon: object = None
    lat: object = None
    cost: float = math.nan
    feasible: bool = False
    v_target: float = math.nan
    id: str = ""
    meta: dict = field(default_factory=dict)

    def __len__(self):
        return len(self.t)

    def sample(self, i: int) -> TrajectorySample:
        return TrajectorySample(float(self.t[i]), *(float(getattr(self, c)[i]) for c in _CHANNELS))

    @property
    def samples(self) -> list:
        return [self.sample(i) for i in range(len(self.t))]

    @property
    def a_lat(self) -> np.ndarray:
        """Normal (centripetal) acceleration v^2 * kappa."""
        return self.v ** 2 * self.kappa

    @property
    def a_total(self) -> np.ndarray:
        return np.hypot(self.a, self.a_lat)

    def shifted(self, start: int) -> "Trajectory":
        """Suffix of the trajectory from sample ``start`` with time reset to 0."""
        kw = {c: getattr(self, c)[start:] for c in _CHANNELS}
        return replace(self, t=self.t[start:] - self.t[start], **kw)


def speed_offsets(level: int = 0) -> list:
    """Terminal-speed offsets: {0, -1, 1, -2, 2} plus +-(k+2) for k = 1..level."""
    offsets = [0.0, -1.0, 1.0, -2.0, 2.0]
    for k in range(1, level + 1):
        offsets += [-(k + 2.0), k + 2.0]
    return offsets


def sample_pairs(path: ReferencePath, pairs, times, maneuver: ManeuverKind,
                 v_target: float = math.nan) -> list:
    """Evaluate (longitudinal, lateral) polynomial pairs on ``times``.

    Pairs whose arclength leaves the path are dropped.
    """
    if not pairs:
        return []
    t = np.asarray(times, dtype=float)
    lon = np.array([[p.eval(t, k) for k in range(4)] for p, _ in pairs])  # (n, 4, m)
    lat = np.array([[q.eval(t, k) for k in range(4)] for _, q in pairs])
    inside = np.all((lon[:, 0] >= -1e-9) & (lon[:, 0] <= path.length + 1e-9), axis=1)
    if not np.any(inside):
        return []
    lon, lat = lon[inside], lat[inside]
    kept = [pair for pair, ok in zip(pairs, inside) if ok]
    car = frenet_to_cartesian(path, np.clip(lon[:, 0], 0.0, path.length), lon[:, 1], lon[:, 2],
                              lat[:, 0], lat[:, 1], lat[:, 2])
    out = []
    for i, (p, q) in enumerate(kept):
        out.append(Trajectory(
            t=t, x=car.x[i], y=car.y[i], theta=car.theta[i], v=car.v[i], a=car.a[i], kappa=car.kappa[i],
            s=lon[i, 0], s_d=lon[i, 1], s_dd=lon[i, 2], s_ddd=lon[i, 3],
            l=lat[i, 0], l_d=lat[i, 1], l_dd=lat[i, 2], l_ddd=lat[i, 3],
            maneuver=maneuver, lon=p, lat=q, v_target=v_target,
        ))
    return out


def terminal_speeds(v_desired: float, level: int = 0) -> list:
    out = []
    for d in speed_offsets(level):
        v = max(0.0, v_desired + d)
        if v not in out:
            out.append(v)
    return out


def generate_candidates(path: ReferencePath, init: FrenetState, v_desired: float, l_desired: float,
                        params: OptimizationParams, level: int = 0,
                        maneuver: ManeuverKind = ManeuverKind.KEEP_SPEED) -> list:
    """Cross product of terminal speeds with the lateral target, sampled on the dt grid."""
    if not all(math.isfinite(v) for v in (init.s, init.s_d, init.s_dd, init.l, init.l_d, init.l_dd)):
        raise ValueError("initial Frenet state must be finite")
    if v_desired < 0:
        raise ValueError("desired speed must be nonnegative")
    T = params.T
    lat = solve_quintic(init.l, init.l_d, init.l_dd, l_desired, 0.0, 0.0, T)
    pairs = [(solve_quartic(init.s, init.s_d, init.s_dd, v, 0.0, T), lat)
             for v in terminal_speeds(v_desired, level)]
    out = sample_pairs(path, pairs, params.times(), maneuver, v_desired)
    if not out:
        raise EmptyCandidateSet("no candidate stays on the reference path")
    return out


def generate_overtake_candidates(path: ReferencePath, init: FrenetState, v_desired: float,
                                 lane_offset: float, params: OptimizationParams, level: int = 0,
                                 out_time: Optional[float] = None, back_time: Optional[float] = None) -> list:
    """Lane-change / pass / return composites referenced to the current lane.

    The lateral profile moves to ``lane_offset`` over ``[0, t1]``, holds until
    ``t2`` and returns to 0 by ``T``.
    """
    T = params.T
    t1 = out_time if out_time is not None else 0.4 * T
    t2 = back_time if back_time is not None else 0.6 * T
    lat = PiecewisePoly([
        (0.0, solve_quintic(init.l, init.l_d, init.l_dd, lane_offset, 0.0, 0.0, t1)),
        (t1, solve_quintic(lane_offset, 0.0, 0.0, lane_offset, 0.0, 0.0, t2 - t1)),
        (t2, solve_quintic(lane_offset, 0.0, 0.0, 0.0, 0.0, 0.0, T - t2)),
    ])
    pairs = [(solve_quartic(init.s, init.s_d, init.s_dd, v, 0.0, T), lat)
             for v in terminal_speeds(v_desired, level)]
    return sample_pairs(path, pairs, params.times(), ManeuverKind.OVERTAKE, v_desired)


def violations(traj: Trajectory, params: OptimizationParams) -> dict:
    """Per-bound violation flags; all False means the trajectory is feasible."""
    return {
        "acceleration": bool(np.any(traj.a_total > params.a_max + _BOUND_TOL)),
        "speed": bool(np.any(traj.v > params.v_max + _BOUND_TOL)),
        "curvature": bool(np.any(np.abs(traj.kappa) > params.kappa_max + _BOUND_TOL)),
        "reverse": bool(np.any(traj.s_d < -_BOUND_TOL)),
    }


def filter_feasible(candidates: Sequence[Trajectory], params: OptimizationParams) -> list:
    return [replace(c, feasible=True) for c in candidates if not any(violations(c, params).values())]


def trajectory_cost(traj: Trajectory, v_desired: float, l_desired: float, params: OptimizationParams) -> float:
    dts = np.diff(traj.t)
    if len(dts) == 0 or np.any(np.abs(dts - params.dt) > 1e-9):
        raise NonuniformSampling("trajectory is not sampled on the dt grid")
    jerk = np.sum(traj.s_ddd[:-1] ** 2 + traj.l_ddd[:-1] ** 2) * params.dt
    duration = traj.t[-1] - traj.t[0]
    err = (traj.l[-1] - l_desired) ** 2 + (traj.s_d[-1] - v_desired) ** 2
    return float(params.w_j * jerk + params.w_t * duration + params.w_err * err)


def select_optimal(candidates: Sequence[Trajectory], v_desired: float, l_desired: float,
                   params: OptimizationParams) -> Optional[Trajectory]:
    """Minimum-cost candidate; the earliest one wins ties."""
    best, best_cost = None, math.inf
    for c in candidates:
        j = trajectory_cost(c, v_desired, l_desired, params)
        if j < best_cost:
            best, best_cost = c, j
    if best is None:
        return None
    return replace(best, cost=best_cost)


def optimal_trajectory(path: ReferencePath, init: FrenetState, v_desired: float, l_desired: float,
                       params: OptimizationParams, level: int = 0,
                       maneuver: ManeuverKind = ManeuverKind.KEEP_SPEED) -> Optional[Trajectory]:
    """Generate, filter and select in one call; ``None`` if nothing is feasible."""
    try:
        cands = generate_candidates(path, init, v_desired, l_desired, params, level, maneuver)
    except EmptyCandidateSet:
        return None
    return select_optimal(filter_feasible(cands, params), v_desired, l_desired, params)
