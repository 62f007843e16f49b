"""Kernel backend selection.

Hot loops ship in two flavours: numba ``@njit`` kernels and pure-numpy
equivalents. The numba path is used when numba imports cleanly and the
environment variable ``PDTRACE_NO_NUMBA`` is unset (or ``0``). Tests and the
benchmark flip between them at runtime with :func:`use_backend`.
"""

import contextlib
import os

try:
    import numba
except ImportError:  # pragma: no cover - numba is a hard dependency in practice
    numba = None

_DISABLED = os.environ.get("PDTRACE_NO_NUMBA", "0").strip().lower() not in ("", "0", "false", "no")

HAVE_NUMBA = numba is not None
_current = "numba" if HAVE_NUMBA and not _DISABLED else "numpy"


def njit(*args, **kwargs):
    """``numba.njit`` when available, otherwise an identity decorator."""
    if numba is None:
        if len(args) == 1 and callable(args[0]) and not kwargs:
            return args[0]
        return lambda f: f
    kwargs.setdefault("cache", True)
    return numba.njit(*args, **kwargs)


def backend():
    """Name of the active backend, ``"numba"`` or ``"numpy"``."""
    return _current


def set_backend(name):
    global _current
    if name not in ("numba", "numpy"):
        raise ValueError(f"unknown backend {name!r}")
    if name == "numba" and not HAVE_NUMBA:
        raise RuntimeError("numba is not installed")
    _current = name


@contextlib.contextmanager
def use_backend(name):
    previous = _current
    set_backend(name)
    try:
        yield
    finally:
        set_backend(previous)
