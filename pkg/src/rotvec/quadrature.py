"""Composite Simpson rules on uniform grids, plain and cumulative.

The cumulative rule gives the running integral at every node: even nodes use
Simpson pairs, odd nodes use the three-point partial rule
``h/12 * (5 y0 + 8 y1 - y2)`` over the first half of each pair.  Both are
fourth-order accurate on smooth integrands.
"""
import numpy as np

from ._accel import USE_NUMBA, jit


def simpson(y, h):
    """Composite Simpson integral of samples ``y`` (odd length) with step h."""
    y = np.asarray(y, dtype=float)
    n = y.shape[0]
    if n < 3 or n % 2 == 0:
        raise ValueError(f"Simpson rule needs an odd number (>= 3) of samples, got {n}")
    return h / 3.0 * (y[0] + y[-1] + 4.0 * y[1:-1:2].sum(axis=0) + 2.0 * y[2:-1:2].sum(axis=0))


@jit
def _cumsimpson_loop(y, h, out):
    n = y.shape[0]
    out[0] = 0.0
    acc = 0.0
    for m in range(0, n - 2, 2):
        y0 = y[m]
        y1 = y[m + 1]
        y2 = y[m + 2]
        out[m + 1] = acc + h / 12.0 * (5.0 * y0 + 8.0 * y1 - y2)
        acc += h / 3.0 * (y0 + 4.0 * y1 + y2)
        out[m + 2] = acc
    return out


def _cumsimpson_np(y, h):
    y0 = y[0:-2:2]
    y1 = y[1:-1:2]
    y2 = y[2::2]
    pairs = h / 3.0 * (y0 + 4.0 * y1 + y2)
    out = np.empty_like(y)
    out[0] = 0.0
    out[2::2] = np.cumsum(pairs, axis=0)
    out[1::2] = out[0:-2:2] + h / 12.0 * (5.0 * y0 + 8.0 * y1 - y2)
    return out


def cumulative_simpson(y, h, use_numba=None):
    """Running Simpson integral ``int_0^{s_j} y`` at every node of a uniform grid.

    ``y`` must have an odd number of samples along axis 0.  Extra trailing
    axes are integrated independently (numpy path) or looped (numba path).
    """
    y = np.ascontiguousarray(y, dtype=float)
    n = y.shape[0]
    if n < 3 or n % 2 == 0:
        raise ValueError(f"cumulative Simpson needs an odd number (>= 3) of samples, got {n}")
    if use_numba is None:
        use_numba = USE_NUMBA
    if not use_numba:
        return _cumsimpson_np(y, h)
    if y.ndim == 1:
        return _cumsimpson_loop(y, float(h), np.empty(n))
    flat = y.reshape(n, -1)
    out = np.empty_like(flat)
    for j in range(flat.shape[1]):
        col = np.ascontiguousarray(flat[:, j])
        out[:, j] = _cumsimpson_loop(col, float(h), np.empty(n))
    return out.reshape(y.shape)


def uniform_grid(t, h_max, min_intervals=2):
    """Nodes ``0 .. t`` (t may be negative) with an even interval count.

    Returns ``(nodes, step)`` where ``|step| <= h_max``.
    """
    if not np.isfinite(t):
        raise ValueError("grid endpoint must be finite")
    if h_max <= 0:
        raise ValueError("quadrature step must be positive")
    n = max(int(np.ceil(abs(t) / h_max)), min_intervals)
    n += n % 2
    return np.linspace(0.0, t, n + 1), t / n
