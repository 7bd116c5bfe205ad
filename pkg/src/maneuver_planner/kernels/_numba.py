"""Numba-compiled versions of the kernels in ``_numpy``."""

import math

import numpy as np
from numba import njit

from ._numpy import SAT_SLACK


@njit(cache=True, nogil=True)
def _obb_overlap_steps(a, b):
    n = a.shape[0]
    out = np.empty(n, dtype=np.bool_)
    for i in range(n):
        ca = math.cos(a[i, 2])
        sa = math.sin(a[i, 2])
        cb = math.cos(b[i, 2])
        sb = math.sin(b[i, 2])
        dx = b[i, 0] - a[i, 0]
        dy = b[i, 1] - a[i, 1]
        hit = True
        for k in range(4):
            if k == 0:
                ux, uy = ca, sa
            elif k == 1:
                ux, uy = -sa, ca
            elif k == 2:
                ux, uy = cb, sb
            else:
                ux, uy = -sb, cb
            ra = a[i, 3] * abs(ux * ca + uy * sa) + a[i, 4] * abs(-ux * sa + uy * ca)
            rb = b[i, 3] * abs(ux * cb + uy * sb) + b[i, 4] * abs(-ux * sb + uy * cb)
            if abs(dx * ux + dy * uy) > ra + rb + SAT_SLACK:
                hit = False
                break
        out[i] = hit
    return out


@njit(cache=True, nogil=True)
def _nearest_segment(px, py, x0, y0, dx, dy):
    n = px.shape[0]
    m = x0.shape[0]
    idx = np.empty(n, dtype=np.int64)
    taus = np.empty(n, dtype=np.float64)
    for i in range(n):
        best = np.inf
        best_j = 0
        best_t = 0.0
        for j in range(m):
            len2 = dx[j] * dx[j] + dy[j] * dy[j]
            t = ((px[i] - x0[j]) * dx[j] + (py[i] - y0[j]) * dy[j]) / len2
            if t < 0.0:
                t = 0.0
            elif t > 1.0:
                t = 1.0
            ex = px[i] - (x0[j] + t * dx[j])
            ey = py[i] - (y0[j] + t * dy[j])
            d2 = ex * ex + ey * ey
            if d2 < best:
                best = d2
                best_j = j
                best_t = t
        idx[i] = best_j
        taus[i] = best_t
    return idx, taus


def obb_overlap_steps(a, b):
    return _obb_overlap_steps(np.ascontiguousarray(a, dtype=np.float64),
                              np.ascontiguousarray(b, dtype=np.float64))


def nearest_segment(px, py, x0, y0, dx, dy):
    px = np.atleast_1d(np.asarray(px, dtype=np.float64))
    py = np.atleast_1d(np.asarray(py, dtype=np.float64))
    return _nearest_segment(px, py, np.asarray(x0, dtype=np.float64),
                            np.asarray(y0, dtype=np.float64),
                            np.asarray(dx, dtype=np.float64),
                            np.asarray(dy, dtype=np.float64))
