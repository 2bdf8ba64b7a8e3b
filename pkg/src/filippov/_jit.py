"""Switch between numba-compiled kernels and their plain NumPy source.

The hot loops (Runge-Kutta stepping with event location) are written once in a
numba-compatible subset of Python. When ``FILIPPOV_JIT`` is unset or truthy and
numba is importable they are compiled with ``numba.njit``; with
``FILIPPOV_JIT=0`` the very same functions run as ordinary Python.
"""

import logging
import os

try:
    import numba
    from numba.extending import register_jitable
except ImportError:  # pragma: no cover - numba is a declared dependency
    numba = None

    def register_jitable(fn):
        return fn


log = logging.getLogger(__name__)

HAVE_NUMBA = numba is not None


def _env_flag():
    value = os.environ.get("FILIPPOV_JIT", "1").strip().lower()
    return value not in ("0", "false", "no", "off")


JIT_ENABLED = HAVE_NUMBA and _env_flag()

jitable = register_jitable


def njit(fn):
    """Compile ``fn`` with numba, or hand it back unchanged without numba."""
    if not HAVE_NUMBA:
        return fn
    return numba.njit(fn)


def use_jit(jit=None):
    """Resolve a per-call ``jit`` override against the environment default."""
    if jit is None:
        return JIT_ENABLED
    return bool(jit) and HAVE_NUMBA
