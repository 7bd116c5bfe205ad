"""Per-timestep oriented-box collision checks between ego and obstacle trajectories."""

from __future__ import annotations

from dataclasses import dataclass
from typing import NamedTuple, Optional, Sequence

import numpy as np

from . import kernels
from .errors import TimebaseMismatch

DEFAULT_MARGIN = 0.2


@dataclass(frozen=True)
class Footprint:
    length: float = 4.5
    width: float = 1.8

    def __post_init__(self):
        if not (self.length > 0 and self.width > 0):
            raise ValueError("footprint dimensions must be positive")


@dataclass(frozen=True)
class OrientedBox:
    x: float
    y: float
    heading: float
    half_length: float
    half_width: float

    def __post_init__(self):
        if not (self.half_length > 0 and self.half_width > 0):
            raise ValueError("box half-extents must be positive")

    @classmethod
    def from_footprint(cls, x, y, heading, footprint: Footprint, margin: float = 0.0):
        return cls(x, y, heading, footprint.length / 2 + margin, footprint.width / 2 + margin)

    def as_row(self):
        return [self.x, self.y, self.heading, self.half_length, self.half_width]

    def corners(self) -> np.ndarray:
        c, s = np.cos(self.heading), np.sin(self.heading)
        local = np.array([[1, 1], [-1, 1], [-1, -1], [1, -1]]) * [self.half_length, self.half_width]
        return np.array([self.x, self.y]) + local @ np.array([[c, s], [-s, c]])


def obb_overlap(a: OrientedBox, b: OrientedBox) -> bool:
    """True iff the closed rectangles intersect; touching counts as overlap."""
    return bool(kernels.obb_overlap_steps(np.array([a.as_row()]), np.array([b.as_row()]))[0])


class ObstacleHypotheses(NamedTuple):
    """Everything the checker needs about one obstacle."""

    obstacle_id: str
    footprint: Footprint
    trajectories: Sequence  # objects exposing t, x, y, theta arrays


@dataclass(frozen=True)
class CollisionReport:
    collision_free: bool
    step: Optional[int] = None
    time: Optional[float] = None
    obstacle_id: Optional[str] = None
    hypothesis: Optional[int] = None


def _boxes(x, y, theta, footprint, margin):
    n = len(x)
    return np.column_stack([x, y, theta,
                            np.full(n, footprint.length / 2 + margin),
                            np.full(n, footprint.width / 2 + margin)])


def _dt(t):
    return float(t[1] - t[0]) if len(t) > 1 else None


def first_overlap(ego, ego_fp: Footprint, other, other_fp: Footprint, margin: float) -> Optional[int]:
    """Index of the first common step at which the inflated boxes overlap."""
    de, do = _dt(ego.t), _dt(other.t)
    if de is not None and do is not None and abs(de - do) > 1e-9:
        raise TimebaseMismatch(f"ego dt {de} differs from prediction dt {do}")
    n = min(len(ego.t), len(other.t))
    if n == 0:
        return None
    a = _boxes(ego.x[:n], ego.y[:n], ego.theta[:n], ego_fp, margin)
    b = _boxes(other.x[:n], other.y[:n], other.theta[:n], other_fp, margin)
    hits = np.flatnonzero(kernels.obb_overlap_steps(a, b))
    return int(hits[0]) if len(hits) else None


def obstacle_first_collision(ego, ego_fp: Footprint, obstacle: ObstacleHypotheses, margin: float):
    """(step, hypothesis index) of the earliest collision with any hypothesis, or None."""
    best = None
    for h, traj in enumerate(obstacle.trajectories):
        k = first_overlap(ego, ego_fp, traj, obstacle.footprint, margin)
        if k is not None and (best is None or k < best[0]):
            best = (k, h)
    return best


def check_trajectory(ego, ego_fp: Footprint, predictions: Sequence[ObstacleHypotheses],
                     margin: float = DEFAULT_MARGIN) -> CollisionReport:
    """Check an ego trajectory against every hypothesis of every obstacle.

    Every hypothesis is a hard constraint. The reported collision is the
    lowest timestep, then the lowest obstacle index.
    """
    best = None
    for i, obs in enumerate(predictions):
        hit = obstacle_first_collision(ego, ego_fp, obs, margin)
        if hit is not None and (best is None or hit[0] < best[0][0]):
            best = (hit, i)
    if best is None:
        return CollisionReport(True)
    (step, hyp), i = best
    return CollisionReport(False, step, float(ego.t[step]), predictions[i].obstacle_id, hyp)
