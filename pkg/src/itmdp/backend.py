"""Simulation backend selection.

Two interchangeable kernel implementations exist: a compiled one
(numba, parallel across trajectories) and a pure-numpy one that runs the
trajectories in lockstep, one vectorized stage at a time.  Both consume
the same per-trajectory random streams in the same order and perform
floating-point operations in the same order per trajectory, so their
outputs are bit-identical; the only difference is speed.

Selection order: an explicit ``backend=`` argument wins, then the
``ITMDP_BACKEND`` environment variable (``numba``, ``numpy`` or
``auto``), then auto-detection (numba when importable).  The
``ITMDP_THREADS`` variable caps the compiled backend's thread count.
"""

from __future__ import annotations

import os

from .errors import ItmdpError

BACKEND_ENV = "ITMDP_BACKEND"
THREADS_ENV = "ITMDP_THREADS"

_CHOICES = ("numba", "numpy", "auto")


def _numba_available() -> bool:
    try:
        import numba  # noqa: F401
    except ImportError:
        return False
    return True


def resolve_backend(backend: str | None = None) -> str:
    """Return the concrete backend name, ``"numba"`` or ``"numpy"``."""
    choice = backend if backend is not None else os.environ.get(BACKEND_ENV, "auto")
    choice = choice.strip().lower()
    if choice not in _CHOICES:
        raise ItmdpError(
            f"unknown backend {choice!r}; expected one of {', '.join(_CHOICES)}"
        )
    if choice == "auto":
        return "numba" if _numba_available() else "numpy"
    if choice == "numba" and not _numba_available():
        raise ItmdpError("backend 'numba' requested but numba is not importable")
    return choice


def _apply_thread_cap() -> None:
    raw = os.environ.get(THREADS_ENV)
    if not raw:
        return
    import numba

    try:
        requested = int(raw)
    except ValueError:
        raise ItmdpError(f"{THREADS_ENV} must be an integer, got {raw!r}")
    if requested < 1:
        raise ItmdpError(f"{THREADS_ENV} must be positive, got {requested}")
    numba.set_num_threads(min(requested, numba.config.NUMBA_NUM_THREADS))


def get_kernels(backend: str | None = None):
    """Import and return the kernel module for the resolved backend."""
    name = resolve_backend(backend)
    if name == "numba":
        _apply_thread_cap()
        from . import _kernels_numba as kernels
    else:
        from . import _kernels_numpy as kernels
    return kernels
