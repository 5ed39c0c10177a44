"""Kernel backend selection.

The integer kernels in :mod:`ncleray.kernels` exist twice: a numba ``@njit``
version and a plain numpy version.  Set ``NCLERAY_DISABLE_JIT=1`` to force
the numpy path (useful for debugging and for benchmarking both).  Results are
identical either way; only speed differs.
"""

import os

ENV_FLAG = "NCLERAY_DISABLE_JIT"


def _jit_requested():
    return os.environ.get(ENV_FLAG, "").strip().lower() not in ("1", "true", "yes", "on")


try:
    import numba  # noqa: F401

    HAVE_NUMBA = True
except ImportError:  # pragma: no cover - numba is a declared dependency
    HAVE_NUMBA = False

USE_JIT = HAVE_NUMBA and _jit_requested()


def backend_name():
    return "numba" if USE_JIT else "numpy"
