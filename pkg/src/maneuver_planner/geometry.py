"""Reference paths, Cartesian/Frenet conversion and polynomial primitives.

A :class:`ReferencePath` is a polyline with per-point headings and curvature.
Positions are interpolated linearly along the polyline while heading and
curvature are interpolated linearly in arclength, which gives a smooth
moving frame ``(T(s), N(s))``. Both conversion directions use that same
frame, so ``frenet_to_cartesian`` and ``cartesian_to_frenet`` are exact
inverses of each other.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import NamedTuple, Sequence

import numpy as np
from numpy.polynomial import polynomial as npoly

from . import kernels
from .errors import DuplicatePoint, NonpositiveDuration, OutOfPathExtent, TooFewPoints

MIN_SPACING = 1e-6
# below this speed the heading/curvature of a sample is taken from the path
STANDSTILL_SPEED = 0.1
_EXTENT_TOL = 1e-6


def normalize_angle(theta):
    """Wrap angles to [-pi, pi)."""
    wrapped = np.mod(np.asarray(theta, dtype=float) + np.pi, 2.0 * np.pi) - np.pi
    wrapped = np.where(wrapped == -np.pi, np.pi, wrapped)
    if np.ndim(wrapped) == 0:
        return float(wrapped)
    return wrapped


@dataclass(frozen=True)
class CartesianState:
    """Planar vehicle state. ``kappa`` is the path curvature of the motion."""

    x: float
    y: float
    theta: float
    v: float
    a: float = 0.0
    kappa: float = 0.0

    def __post_init__(self):
        if self.v < 0:
            raise ValueError(f"speed must be nonnegative, got {self.v}")
        object.__setattr__(self, "theta", normalize_angle(self.theta))


@dataclass(frozen=True)
class FrenetState:
    s: float
    s_d: float
    s_dd: float
    l: float
    l_d: float
    l_dd: float


@dataclass(frozen=True)
class TrajectorySample:
    t: float
    x: float
    y: float
    theta: float
    v: float
    a: float
    kappa: float
    s: float
    s_d: float
    s_dd: float
    s_ddd: float
    l: float
    l_d: float
    l_dd: float
    l_ddd: float


class PathFrame(NamedTuple):
    x: np.ndarray
    y: np.ndarray
    theta: np.ndarray
    kappa: np.ndarray
    dkappa: np.ndarray


class CartesianChannels(NamedTuple):
    x: np.ndarray
    y: np.ndarray
    theta: np.ndarray
    v: np.ndarray
    a: np.ndarray
    kappa: np.ndarray


def _unwrapped_headings(points, cum):
    n = len(points)
    if n == 2:
        d = points[1] - points[0]
        h = math.atan2(d[1], d[0])
        return np.array([h, h])
    diff = np.empty_like(points)
    diff[1:-1] = points[2:] - points[:-2]
    diff[0] = points[1] - points[0]
    diff[-1] = points[-1] - points[-2]
    return np.unwrap(np.arctan2(diff[:, 1], diff[:, 0]))


class ReferencePath:
    """Polyline reference path with cumulative arclength and headings."""

    def __init__(self, points: np.ndarray, cum_arclength: np.ndarray, headings: np.ndarray):
        self.points = points
        self.cum_arclength = cum_arclength
        # unwrapped copy is what interpolation uses
        self._theta = headings
        self.headings = normalize_angle(headings)
        self.curvatures = np.gradient(headings, cum_arclength) if len(points) > 2 else np.zeros(len(points))
        seg = np.diff(points, axis=0)
        self._seg = seg
        self._seg_len = np.diff(cum_arclength)
        self._dtheta = np.diff(headings) / self._seg_len
        self._dkappa = np.diff(self.curvatures) / self._seg_len
        for arr in (self.points, self.cum_arclength, self.headings, self.curvatures):
            arr.setflags(write=False)

    @property
    def length(self) -> float:
        return float(self.cum_arclength[-1])

    def __len__(self):
        return len(self.points)

    def _segment(self, s):
        return np.clip(np.searchsorted(self.cum_arclength, s, side="right") - 1, 0, len(self.points) - 2)

    def interpolate(self, s) -> PathFrame:
        """Position, heading, curvature and curvature slope at arclength ``s``."""
        s = np.asarray(s, dtype=float)
        i = self._segment(s)
        tau = (s - self.cum_arclength[i]) / self._seg_len[i]
        p0 = self.points[i]
        x = p0[..., 0] + tau * self._seg[i, 0]
        y = p0[..., 1] + tau * self._seg[i, 1]
        theta = self._theta[i] + tau * (self._theta[i + 1] - self._theta[i])
        kappa = self.curvatures[i] + tau * (self.curvatures[i + 1] - self.curvatures[i])
        return PathFrame(x, y, theta, kappa, self._dkappa[i])

    def _residual(self, s, px, py):
        i = self._segment(s)
        tau = (s - self.cum_arclength[i]) / self._seg_len[i]
        rx = self.points[i, 0] + tau * self._seg[i, 0]
        ry = self.points[i, 1] + tau * self._seg[i, 1]
        th = self._theta[i] + tau * (self._theta[i + 1] - self._theta[i])
        c, sn = np.cos(th), np.sin(th)
        ex, ey = px - rx, py - ry
        g = ex * c + ey * sn
        ux = self._seg[i, 0] / self._seg_len[i]
        uy = self._seg[i, 1] / self._seg_len[i]
        dg = -(ux * c + uy * sn) + (-ex * sn + ey * c) * self._dtheta[i]
        return g, dg, -ex * sn + ey * c

    def project(self, x, y, check_extent: bool = True):
        """Arclength and signed lateral offset (left positive) of points.

        The nearest segment is found by perpendicular projection; ``s`` is
        then refined so the offset is normal to the interpolated frame.
        """
        px = np.atleast_1d(np.asarray(x, dtype=float))
        py = np.atleast_1d(np.asarray(y, dtype=float))
        pts = self.points
        idx, tau = kernels.nearest_segment(px, py, pts[:-1, 0], pts[:-1, 1], self._seg[:, 0], self._seg[:, 1])
        s = self.cum_arclength[idx] + tau * self._seg_len[idx]
        for _ in range(6):
            g, dg, _ = self._residual(s, px, py)
            step = np.where(np.abs(dg) > 1e-12, g / np.where(dg == 0, 1.0, dg), 0.0)
            s = np.clip(s - step, 0.0, self.length)
        g, _, l = self._residual(s, px, py)
        if check_extent:
            before = (s <= 0.0) & (g < -_EXTENT_TOL)
            after = (s >= self.length) & (g > _EXTENT_TOL)
            if np.any(before | after):
                raise OutOfPathExtent("point projects outside the reference path")
        return s, l


def build_reference_path(points: Sequence[Sequence[float]]) -> ReferencePath:
    """Build a :class:`ReferencePath` from an ordered list of 2D points."""
    pts = np.asarray(points, dtype=float).reshape(-1, 2)
    if len(pts) < 2:
        raise TooFewPoints(f"need at least 2 points, got {len(pts)}")
    spacing = np.hypot(*np.diff(pts, axis=0).T)
    if np.any(spacing <= MIN_SPACING):
        k = int(np.argmax(spacing <= MIN_SPACING))
        raise DuplicatePoint(f"points {k} and {k + 1} are closer than {MIN_SPACING} m")
    cum = np.concatenate([[0.0], np.cumsum(spacing)])
    return ReferencePath(pts.copy(), cum, _unwrapped_headings(pts, cum))


def densify(points, max_spacing: float = 0.5) -> np.ndarray:
    """Insert evenly spaced points on each polyline segment longer than ``max_spacing``."""
    pts = np.asarray(points, dtype=float)
    out = [pts[:1]]
    for p, q in zip(pts[:-1], pts[1:]):
        n = max(1, int(math.ceil(np.hypot(*(q - p)) / max_spacing)))
        f = np.arange(1, n + 1)[:, None] / n
        out.append(p + f * (q - p))
    return np.concatenate(out)


def cartesian_to_frenet(path: ReferencePath, state: CartesianState) -> FrenetState:
    """Project a Cartesian state onto ``path``."""
    s_arr, l_arr = path.project(state.x, state.y)
    s, l = float(s_arr[0]), float(l_arr[0])
    fr = path.interpolate(s)
    dtheta = normalize_angle(state.theta - float(fr.theta))
    if abs(dtheta) >= math.pi / 2:
        raise OutOfPathExtent(f"heading differs from path by {dtheta:.3f} rad")
    kr, dkr = float(fr.kappa), float(fr.dkappa)
    one = 1.0 - kr * l
    c, sn = math.cos(dtheta), math.sin(dtheta)
    v = state.v
    s_d = v * c / one
    l_d = v * sn
    an = v * v * state.kappa
    a_t = state.a * c - an * sn
    a_n = state.a * sn + an * c
    l_dd = a_n - kr * one * s_d * s_d
    s_dd = (a_t + dkr * l * s_d * s_d + 2.0 * kr * l_d * s_d) / one
    return FrenetState(s, s_d, s_dd, l, l_d, l_dd)


def frenet_to_cartesian(path: ReferencePath, s, s_d, s_dd, l, l_d, l_dd) -> CartesianChannels:
    """Map Frenet channels (scalars or arrays) to Cartesian channels."""
    s = np.asarray(s, dtype=float)
    if np.any(s < -_EXTENT_TOL) or np.any(s > path.length + _EXTENT_TOL):
        raise OutOfPathExtent("arclength outside the reference path")
    s_d, s_dd, l, l_d, l_dd = (np.asarray(v, dtype=float) for v in (s_d, s_dd, l, l_d, l_dd))
    fr = path.interpolate(s)
    k, dk = fr.kappa, fr.dkappa
    one = 1.0 - k * l
    c, sn = np.cos(fr.theta), np.sin(fr.theta)
    x = fr.x - l * sn
    y = fr.y + l * c
    vt = one * s_d
    vn = l_d
    at = one * s_dd - dk * l * s_d ** 2 - 2.0 * k * l_d * s_d
    an = k * one * s_d ** 2 + l_dd
    v = np.hypot(vt, vn)
    moving = v > STANDSTILL_SPEED
    safe_v = np.where(v > 0, v, 1.0)
    theta = fr.theta + np.where(v > 1e-9, np.arctan2(vn, vt), 0.0)
    a = np.where(v > 1e-9, (vt * at + vn * an) / safe_v, at)
    kappa = np.where(moving, (vt * an - vn * at) / safe_v ** 3, k / one)
    return CartesianChannels(x, y, normalize_angle(theta), v, a, kappa)


class _Poly:
    """Polynomial in time with ascending coefficients."""

    degree = 0

    def __init__(self, coefficients, duration: float):
        self.coefficients = np.asarray(coefficients, dtype=float)
        self.duration = float(duration)
        self._derivs = [self.coefficients]
        for _ in range(3):
            self._derivs.append(npoly.polyder(self._derivs[-1]))

    def eval(self, t, order: int = 0):
        return npoly.polyval(np.asarray(t, dtype=float), self._derivs[order])

    def __repr__(self):
        return f"{type(self).__name__}({self.coefficients.tolist()}, T={self.duration})"


class QuinticPoly(_Poly):
    degree = 5


class QuarticPoly(_Poly):
    degree = 4


class PiecewisePoly:
    """Polynomials joined in time; each piece is evaluated in local time."""

    def __init__(self, pieces):
        self.pieces = tuple(pieces)  # (t_start, poly)
        first, last = self.pieces[0], self.pieces[-1]
        self.duration = last[0] + last[1].duration - first[0]

    def eval(self, t, order: int = 0):
        t = np.asarray(t, dtype=float)
        starts = np.array([p[0] for p in self.pieces])
        k = np.clip(np.searchsorted(starts, t, side="right") - 1, 0, len(starts) - 1)
        out = np.zeros_like(t)
        for j, (t0, poly) in enumerate(self.pieces):
            mask = k == j
            if np.any(mask):
                out = np.where(mask, poly.eval(t - t0, order), out)
        return out


def solve_quintic(l0, l_d0, l_dd0, lT, l_dT, l_ddT, T) -> QuinticPoly:
    """Quintic matching position, velocity and acceleration at both ends."""
    if not T > 0:
        raise NonpositiveDuration(f"duration must be positive, got {T}")
    a0, a1, a2 = l0, l_d0, l_dd0 / 2.0
    A = np.array([[T ** 3, T ** 4, T ** 5],
                  [3 * T ** 2, 4 * T ** 3, 5 * T ** 4],
                  [6 * T, 12 * T ** 2, 20 * T ** 3]])
    b = np.array([lT - a0 - a1 * T - a2 * T ** 2,
                  l_dT - a1 - 2 * a2 * T,
                  l_ddT - 2 * a2])
    a3, a4, a5 = np.linalg.solve(A, b)
    return QuinticPoly([a0, a1, a2, a3, a4, a5], T)


def solve_quartic(s0, s_d0, s_dd0, s_dT, s_ddT, T) -> QuarticPoly:
    """Quartic matching start state and terminal velocity/acceleration."""
    if not T > 0:
        raise NonpositiveDuration(f"duration must be positive, got {T}")
    a0, a1, a2 = s0, s_d0, s_dd0 / 2.0
    A = np.array([[3 * T ** 2, 4 * T ** 3],
                  [6 * T, 12 * T ** 2]])
    b = np.array([s_dT - a1 - 2 * a2 * T, s_ddT - 2 * a2])
    a3, a4 = np.linalg.solve(A, b)
    return QuarticPoly([a0, a1, a2, a3, a4], T)
