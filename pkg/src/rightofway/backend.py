"""Kernel backend selection.

Hot numeric kernels exist twice: numba-jitted loops and a pure-numpy
fallback. The active backend is chosen once at import time:

* ``RIGHTOFWAY_BACKEND=numpy`` forces the numpy fallback,
* ``RIGHTOFWAY_BACKEND=numba`` requires numba (ImportError if missing),
* unset or ``auto``: numba when importable, numpy otherwise.
"""

import os

_ENV_VAR = "RIGHTOFWAY_BACKEND"
_VALID = ("auto", "numba", "numpy")


def load_backend(name):
    """Import and return the kernel module for an explicit backend name."""
    if name == "numba":
        from . import _kernels_numba
        return _kernels_numba
    if name == "numpy":
        from . import _kernels_numpy
        return _kernels_numpy
    raise ValueError(f"unknown backend {name!r}")


def _select():
    choice = os.environ.get(_ENV_VAR, "auto").strip().lower() or "auto"
    if choice not in _VALID:
        raise RuntimeError(
            f"{_ENV_VAR} must be one of {_VALID}, got {choice!r}")
    if choice == "numpy":
        return "numpy", load_backend("numpy")
    if choice == "numba":
        return "numba", load_backend("numba")
    try:
        return "numba", load_backend("numba")
    except ImportError:
        return "numpy", load_backend("numpy")


ACTIVE_BACKEND, kernels = _select()


def active_backend():
    """Name of the kernel backend in use ('numba' or 'numpy')."""
    return ACTIVE_BACKEND
