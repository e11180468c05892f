"""numba switch.

Set ``WEGNERLAB_DISABLE_NUMBA=1`` before import to run every kernel through its
pure-numpy implementation.  The flag is read once at import time.
"""
import os

ENV_FLAG = "WEGNERLAB_DISABLE_NUMBA"


def _flag_set():
    return os.environ.get(ENV_FLAG, "").strip().lower() in {"1", "true", "yes", "on"}


try:
    import numba
except ImportError:  # pragma: no cover - numba is a hard dependency in practice
    numba = None

NUMBA_ENABLED = numba is not None and not _flag_set()


def njit(func):
    """Compile ``func`` with numba when enabled, otherwise return it unchanged."""
    if NUMBA_ENABLED:
        return numba.njit(cache=True)(func)
    return func


def select(jitted, fallback):
    """Pick the numba or the numpy implementation of a kernel."""
    return jitted if NUMBA_ENABLED else fallback
