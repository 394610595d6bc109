"""Kernel backend selection.

The tick kernel is written in nopython style and compiled with numba by
default. Setting SENTINEL_BACKEND=numpy (or running without numba) executes
the same functions as plain Python over numpy scalars; both paths draw
bitwise-identical random streams. The choice is made once at import.
"""

import os

_requested = os.environ.get("SENTINEL_BACKEND", "numba").strip().lower()

if _requested not in ("numba", "numpy"):
    raise RuntimeError(
        f"SENTINEL_BACKEND must be 'numba' or 'numpy', got {_requested!r}"
    )

if _requested == "numba":
    try:
        from numba import njit as _njit

        BACKEND = "numba"
    except ImportError:
        BACKEND = "numpy"
else:
    BACKEND = "numpy"


def maybe_njit(*args, **kwargs):
    """numba.njit under the numba backend, identity decorator otherwise."""
    if BACKEND == "numba":
        return _njit(*args, **kwargs)
    if args and callable(args[0]):
        return args[0]

    def wrap(fn):
        fn.py_func = fn
        return fn

    return wrap
