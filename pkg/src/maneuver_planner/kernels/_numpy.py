"""Pure-numpy implementations of the numeric kernels."""

import numpy as np

SAT_SLACK = 1e-9


def obb_overlap_steps(a, b):
    """Closed-set separating-axis test for paired rectangles.

    ``a`` and ``b`` are ``(n, 5)`` arrays of ``[cx, cy, heading, half_length,
    half_width]``. Returns a boolean array of length ``n``.
    """
    a = np.asarray(a, dtype=float)
    b = np.asarray(b, dtype=float)
    ca, sa = np.cos(a[:, 2]), np.sin(a[:, 2])
    cb, sb = np.cos(b[:, 2]), np.sin(b[:, 2])
    dx = b[:, 0] - a[:, 0]
    dy = b[:, 1] - a[:, 1]
    # the two box frames give the four candidate axes
    axes = ((ca, sa), (-sa, ca), (cb, sb), (-sb, cb))
    hit = np.ones(len(a), dtype=bool)
    for ux, uy in axes:
        ra = a[:, 3] * np.abs(ux * ca + uy * sa) + a[:, 4] * np.abs(-ux * sa + uy * ca)
        rb = b[:, 3] * np.abs(ux * cb + uy * sb) + b[:, 4] * np.abs(-ux * sb + uy * cb)
        hit &= np.abs(dx * ux + dy * uy) <= ra + rb + SAT_SLACK
    return hit


def nearest_segment(px, py, x0, y0, dx, dy):
    """Nearest polyline segment for each query point.

    Segments start at ``(x0, y0)`` with direction vectors ``(dx, dy)``.
    Returns ``(index, tau)`` where ``tau`` in [0, 1] is the clamped
    perpendicular foot parameter. Ties go to the lower segment index.
    """
    px = np.atleast_1d(np.asarray(px, dtype=float))[:, None]
    py = np.atleast_1d(np.asarray(py, dtype=float))[:, None]
    len2 = dx * dx + dy * dy
    tau = ((px - x0) * dx + (py - y0) * dy) / len2
    tau = np.clip(tau, 0.0, 1.0)
    ex = px - (x0 + tau * dx)
    ey = py - (y0 + tau * dy)
    d2 = ex * ex + ey * ey
    idx = np.argmin(d2, axis=1)
    rows = np.arange(len(idx))
    return idx, tau[rows, idx]
