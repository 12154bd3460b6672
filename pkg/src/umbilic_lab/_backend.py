"""Backend selection for the hot kernels.

``UMBILIC_LAB_BACKEND=numpy`` forces the pure-numpy path; the default is
numba when it imports cleanly.
"""

import os

BACKEND_ENV = "UMBILIC_LAB_BACKEND"

try:
    import numba as _numba
except ImportError:  # pragma: no cover - numba is a declared dependency
    _numba = None

NUMBA_AVAILABLE = _numba is not None

JIT_OPTIONS = {
    "nogil": True,
    "cache": True,
    # fastmath would reorder reductions and break bit-stable reports
    "fastmath": False,
}


def requested_backend():
    value = os.environ.get(BACKEND_ENV, "").strip().lower()
    if value in ("", "auto"):
        return "numba" if NUMBA_AVAILABLE else "numpy"
    if value not in ("numba", "numpy"):
        raise ValueError(f"{BACKEND_ENV} must be 'numba' or 'numpy', got {value!r}")
    if value == "numba" and not NUMBA_AVAILABLE:
        return "numpy"
    return value


def njit(func):
    if not NUMBA_AVAILABLE:
        return func
    return _numba.njit(**JIT_OPTIONS)(func)
