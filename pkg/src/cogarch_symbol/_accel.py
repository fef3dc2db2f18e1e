"""Backend selection for the hot path kernels.

Set ``COGARCH_BACKEND=numpy`` to force the pure-numpy fallback; the default
uses numba when it imports cleanly.
"""
import os

_requested = os.environ.get("COGARCH_BACKEND", "numba").strip().lower()
if _requested not in ("numba", "numpy"):
    raise ImportError(f"COGARCH_BACKEND must be 'numba' or 'numpy', got {_requested!r}")

HAS_NUMBA = False
if _requested == "numba":
    try:
        from numba import njit as _njit

        HAS_NUMBA = True
    except ImportError:  # pragma: no cover - numba is optional
        pass

BACKEND = "numba" if HAS_NUMBA else "numpy"


def njit(*args, **kwargs):
    """``numba.njit`` when the numba backend is active, identity otherwise."""
    if HAS_NUMBA:
        return _njit(*args, **kwargs)
    if len(args) == 1 and callable(args[0]) and not kwargs:
        return args[0]
    return lambda fn: fn
