"""Kernel backend selection.

The hot simulation loops in :mod:`hybridavg._kernels` are written once and
either compiled with numba or run as plain Python on numpy scalars.  The
backend is chosen at import time from the ``HYBRIDAVG_BACKEND`` environment
variable:

* ``numba`` -- require numba, fail loudly if it is missing;
* ``numpy`` -- pure-Python fallback, no compilation;
* unset/``auto`` -- use numba when importable, fall back to numpy otherwise.
"""

from __future__ import annotations

import os

__all__ = ["BACKEND", "jit"]


def _passthrough(func):
    return func


_requested = os.environ.get("HYBRIDAVG_BACKEND", "auto").strip().lower() or "auto"

if _requested in ("auto", "numba"):
    try:
        from numba import njit as _njit
    except ImportError:
        if _requested == "numba":
            raise ImportError(
                "HYBRIDAVG_BACKEND=numba but numba is not installed; "
                "install numba or set HYBRIDAVG_BACKEND=numpy"
            )
        BACKEND = "numpy"
        jit = _passthrough
    else:
        BACKEND = "numba"

        def jit(func):
            return _njit(cache=True, nogil=True)(func)

elif _requested == "numpy":
    BACKEND = "numpy"
    jit = _passthrough
else:
    raise ValueError(
        f"unknown HYBRIDAVG_BACKEND={_requested!r}; expected 'numba', 'numpy' or 'auto'"
    )
