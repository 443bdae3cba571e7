"""Numba switch for the hot kernels.

Set ``FMPS_DISABLE_NUMBA=1`` to force the pure-numpy paths (useful for
debugging and for the kernel benchmark).
"""
import os

try:
    import numba

    HAVE_NUMBA = True
except ImportError:  # pragma: no cover - numba is a declared dependency
    numba = None
    HAVE_NUMBA = False

DISABLE_NUMBA = os.environ.get("FMPS_DISABLE_NUMBA", "0").lower() not in ("", "0", "false", "no")
USE_NUMBA = HAVE_NUMBA and not DISABLE_NUMBA


def njit(fn):
    """Compile ``fn`` with numba when available, else return it untouched."""
    if not HAVE_NUMBA:
        return fn
    return numba.njit(cache=True, nogil=True)(fn)
