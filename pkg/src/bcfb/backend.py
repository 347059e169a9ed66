"""Kernel backend selection.

The hot numeric loops (batched mutual-information evaluation and codebook
typicality scans) ship in two versions: numba-compiled kernels and pure-numpy
fallbacks.  The numba path is used when numba imports cleanly, unless the
environment variable BCFB_NO_NUMBA is set to a truthy value.

BCFB_THREADS caps the worker count used by the trial-parallel simulator.
"""

from __future__ import annotations

import os


def _want_numba() -> bool:
    flag = os.environ.get("BCFB_NO_NUMBA", "").strip().lower()
    return flag not in {"1", "true", "yes", "on"}


try:
    from numba import njit  # noqa: F401

    HAS_NUMBA = True
except ImportError:  # pragma: no cover - numba is a declared dependency
    HAS_NUMBA = False

USE_NUMBA = HAS_NUMBA and _want_numba()


def worker_count() -> int:
    """Number of parallel workers allowed for trial-level parallelism."""
    raw = os.environ.get("BCFB_THREADS", "1")
    try:
        return max(1, int(raw))
    except ValueError:
        return 1
