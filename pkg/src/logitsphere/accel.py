"""Numba shim: jitted hot kernels with a pure-NumPy escape hatch.

The heavy inner loops in :mod:`logitsphere.kernels` are compiled with
``numba.njit`` by default.  Setting the environment variable
``LOGITSPHERE_DISABLE_NUMBA=1`` (or any of ``true``/``yes``) before import
selects the pure-NumPy fallback implementations instead; the same happens
automatically when numba is not importable.  ``benchmarks/bench_kernels.py``
compares the two paths.
"""

import os

__all__ = ["NUMBA_ENABLED", "njit"]


def _flag_disabled() -> bool:
    return os.environ.get("LOGITSPHERE_DISABLE_NUMBA", "").strip().lower() in (
        "1",
        "true",
        "yes",
    )


def _passthrough_njit(*args, **kwargs):
    """Stand-in for numba.njit that leaves functions uncompiled."""
    if len(args) == 1 and callable(args[0]) and not kwargs:
        return args[0]

    def wrapper(func):
        return func

    return wrapper


NUMBA_ENABLED = False
njit = _passthrough_njit

if not _flag_disabled():
    try:
        from numba import njit as _numba_njit

        njit = _numba_njit
        NUMBA_ENABLED = True
    except ImportError:  # pragma: no cover - exercised only without numba
        pass
