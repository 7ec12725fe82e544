"""Backend selection for the hot kernels.

Every hot kernel exists twice: a scalar-loop version compiled with numba and a
vectorised pure-numpy version. ``EPFLOW_NUMBA=0`` selects the numpy path at
import time; :func:`set_backend` switches at run time.
"""
import os

try:
    import numba
    import numba.extending
except ImportError:  # pragma: no cover - numba is a declared dependency
    numba = None

HAVE_NUMBA = numba is not None

_flag = os.environ.get("EPFLOW_NUMBA", "1").strip().lower()
_backend = "numba" if (HAVE_NUMBA and _flag not in ("0", "false", "no", "off")) else "numpy"


def jit(fn):
    """Compile ``fn`` in nopython mode when numba is importable.

    Compilation is lazy, so the numba kernels cost nothing until called even
    when the numpy backend is active.
    """
    if numba is None:
        return fn
    return numba.njit(cache=True, error_model="numpy")(fn)


def shared(fn):
    """Mark plain arithmetic as callable from jitted kernels.

    The function stays an ordinary Python function (so the numpy backend can
    feed it arrays) and is compiled inline when a jitted kernel calls it.
    """
    if numba is None:
        return fn
    return numba.extending.register_jitable(fn)


def backend():
    return _backend


def set_backend(name):
    global _backend
    if name not in ("numba", "numpy"):
        raise ValueError(f"unknown backend {name!r}")
    if name == "numba" and not HAVE_NUMBA:
        raise RuntimeError("numba is not installed")
    _backend = name


def use_numba():
    return _backend == "numba"
