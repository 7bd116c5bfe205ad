"""Hot numeric kernels with a numba path and a pure-numpy fallback.

The backend is chosen once at import time from ``MANEUVER_PLANNER_BACKEND``
(``numba`` or ``numpy``). When unset, numba is used if it imports cleanly.
Both backends are always importable as ``numpy_backend`` / ``numba_backend``
(the latter is ``None`` without numba) so they can be compared directly.
"""

import logging
import os

from . import _numpy as numpy_backend

logger = logging.getLogger(__name__)

try:
    from . import _numba as numba_backend
except ImportError:  # pragma: no cover - numba is a declared dependency
    numba_backend = None


def _select():
    choice = os.environ.get("MANEUVER_PLANNER_BACKEND", "").strip().lower()
    if choice == "numpy":
        return numpy_backend, "numpy"
    if choice not in ("", "numba"):
        raise ValueError(f"MANEUVER_PLANNER_BACKEND must be 'numba' or 'numpy', got {choice!r}")
    if numba_backend is None:
        if choice == "numba":
            logger.warning("numba requested but unavailable; using numpy kernels")
        return numpy_backend, "numpy"
    return numba_backend, "numba"


_backend, BACKEND = _select()

obb_overlap_steps = _backend.obb_overlap_steps
nearest_segment = _backend.nearest_segment

__all__ = ["BACKEND", "obb_overlap_steps", "nearest_segment",
           "numpy_backend", "numba_backend"]
