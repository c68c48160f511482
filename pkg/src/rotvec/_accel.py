"""Numba switch for the hot kernels.

Every kernel in this package has a loop implementation that is compiled with
``numba.njit`` and a numpy/pure-Python path.  Setting ``ROTVEC_NUMBA=0`` in the
environment before import routes everything through the uncompiled path.
"""
import os

_flag = os.environ.get("ROTVEC_NUMBA", "1").strip().lower()
NUMBA_REQUESTED = _flag not in ("0", "false", "no", "off")

try:
    import numba
except ImportError:  # pragma: no cover - numba is a declared dependency
    numba = None

USE_NUMBA = NUMBA_REQUESTED and numba is not None


def jit(fn=None, **options):
    """``numba.njit`` with package defaults, or the identity when disabled."""

    def wrap(f):
        if not USE_NUMBA:
            return f
        opts = {"cache": True, "nogil": True}
        opts.update(options)
        return numba.njit(**opts)(f)

    if fn is None:
        return wrap
    return wrap(fn)


def force_jit(fn, **options):
    """Compile ``fn`` even when the package default is the numpy path.

    Used by the benchmark to time both implementations in one process.
    """
    if numba is None:
        raise RuntimeError("numba is not installed")
    opts = {"cache": True, "nogil": True}
    opts.update(options)
    return numba.njit(**opts)(getattr(fn, "py_func", fn))


def thread_count(requested=None):
    """Resolve the worker cap: explicit value, then ROTVEC_THREADS, then 1."""
    if requested is not None:
        return max(1, int(requested))
    env = os.environ.get("ROTVEC_THREADS")
    if env:
        try:
            return max(1, int(env))
        except ValueError:
            pass
    return 1
