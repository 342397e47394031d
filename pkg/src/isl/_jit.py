"""Numba switch for the hot kernels.

Set ``ISL_DISABLE_NUMBA=1`` before import to run every kernel as plain
Python/numpy. The two paths execute the same source.
"""

import os

_disabled = os.environ.get("ISL_DISABLE_NUMBA", "").strip().lower() in {"1", "true", "yes", "on"}

try:
    import numba
except ImportError:  # pragma: no cover - numba is a declared dependency
    numba = None

NUMBA_ENABLED = numba is not None and not _disabled

numba_default = {
    "nogil": True,
    "cache": True,
    "fastmath": False,
    "error_model": "numpy",
}


def jit(func=None, **overrides):
    """``numba.njit`` with project defaults, or the identity when disabled."""

    def wrap(f):
        if not NUMBA_ENABLED:
            return f
        opts = dict(numba_default)
        opts.update(overrides)
        return numba.njit(**opts)(f)

    if func is not None:
        return wrap(func)
    return wrap
