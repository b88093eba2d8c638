"""Kernel backend selection.

The hot numeric kernels (simplex pivoting, dominance sweeps, detection
counting) ship in two builds: a numba ``@njit`` build and a pure-numpy
build.  The environment variable ``MALSCHED_BACKEND`` picks one:

* ``auto`` (default) -- numba when importable, numpy otherwise
* ``numba``          -- require numba, fail loudly if missing
* ``numpy``          -- force the vectorized numpy paths

``benchmarks/backend_bench.py`` compares the two builds head to head.
"""

from __future__ import annotations

import logging
import os

logger = logging.getLogger(__name__)

_CHOICES = ("auto", "numba", "numpy")


def _resolve(env: str | None = None) -> bool:
    """Return True when the numba build should be used."""
    choice = (env if env is not None else os.environ.get("MALSCHED_BACKEND", "auto"))
    choice = choice.strip().lower() or "auto"
    if choice not in _CHOICES:
        raise ValueError(f"MALSCHED_BACKEND must be one of {_CHOICES}, got {choice!r}")
    if choice == "numpy":
        return False
    try:
        import numba  # noqa: F401
    except ImportError:
        if choice == "numba":
            raise
        logger.info("numba not importable; falling back to numpy kernels")
        return False
    return True


USING_NUMBA = _resolve()

if USING_NUMBA:
    from numba import njit, prange
else:
    def njit(*args, **kwargs):  # noqa: D103 - stand-in for numba.njit
        if args and callable(args[0]) and not kwargs:
            return args[0]

        def wrap(func):
            return func

        return wrap

    prange = range


def backend() -> str:
    """Name of the active kernel backend."""
    return "numba" if USING_NUMBA else "numpy"
