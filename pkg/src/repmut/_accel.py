"""Numba switch.

Set ``REPMUT_DISABLE_NUMBA=1`` before import to run every hot kernel through
its pure-numpy implementation instead.
"""
import os

_flag = os.environ.get("REPMUT_DISABLE_NUMBA", "").strip().lower()
DISABLED = _flag not in ("", "0", "false", "no")

try:
    import numba
except ImportError:  # pragma: no cover
    numba = None

HAVE_NUMBA = numba is not None
USE_NUMBA = HAVE_NUMBA and not DISABLED


def njit(func):
    """Compile with ``numba.njit`` when available, otherwise return ``func``.

    Compilation happens even when numba is disabled for dispatch, so the two
    paths stay directly comparable in tests and benchmarks.
    """
    if not HAVE_NUMBA:
        return func
    return numba.njit(cache=True)(func)
