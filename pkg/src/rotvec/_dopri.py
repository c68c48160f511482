"""Dormand-Prince 5(4) stepper with Hairer's continuous extension.

``run(rhs, t0, t1, y0, p, ...)`` integrates ``y' = F(t, y, p)`` where the
derivative is obtained through the module global ``_eval(rhs, t, y, p)``.
In the module copy ``rhs`` is an integer kind dispatched by
:func:`rhs_by_kind`; that copy is compiled (and disk-cached) by numba.  A
second copy of the same code object is bound to globals where ``_eval`` simply
calls ``rhs``, so user callables run through identical stepping logic.
"""
import types

import numpy as np

from ._accel import USE_NUMBA, jit
from ._rhs import KINDS, rhs_by_kind as _eval

C2, C3, C4, C5 = 1.0 / 5.0, 3.0 / 10.0, 4.0 / 5.0, 8.0 / 9.0
A21 = 1.0 / 5.0
A31, A32 = 3.0 / 40.0, 9.0 / 40.0
A41, A42, A43 = 44.0 / 45.0, -56.0 / 15.0, 32.0 / 9.0
A51, A52, A53, A54 = 19372.0 / 6561.0, -25360.0 / 2187.0, 64448.0 / 6561.0, -212.0 / 729.0
A61, A62, A63, A64, A65 = (9017.0 / 3168.0, -355.0 / 33.0, 46732.0 / 5247.0,
                           49.0 / 176.0, -5103.0 / 18656.0)
A71, A73, A74, A75, A76 = (35.0 / 384.0, 500.0 / 1113.0, 125.0 / 192.0,
                           -2187.0 / 6784.0, 11.0 / 84.0)
E1, E3, E4, E5, E6, E7 = (71.0 / 57600.0, -71.0 / 16695.0, 71.0 / 1920.0,
                          -17253.0 / 339200.0, 22.0 / 525.0, -1.0 / 40.0)
D1, D3, D4, D5, D6, D7 = (-12715105075.0 / 11282082432.0, 87487479700.0 / 32700410799.0,
                          -10690763975.0 / 1880347072.0, 701980252875.0 / 199316789632.0,
                          -1453857185.0 / 822651844.0, 69997945.0 / 29380423.0)

OK = 0
STEP_UNDERFLOW = 1
MAX_STEPS = 2
BLOWUP = 3

STATUS_TEXT = {
    OK: "ok",
    STEP_UNDERFLOW: "step size underflow",
    MAX_STEPS: "maximum number of steps exceeded",
    BLOWUP: "solution left the admissible range (blow-up)",
}


@jit
def _norm(errv, y, y1, atol, rtol):
    # scaled max norm; a NaN entry makes the result NaN
    err = 0.0
    for j in range(y.shape[0]):
        e = abs(errv[j]) / (atol + rtol * max(abs(y[j]), abs(y1[j])))
        if not (e <= err):
            err = e
    return err


def _norm_np(errv, y, y1, atol, rtol):
    return np.max(np.abs(errv) / (atol + rtol * np.maximum(np.abs(y), np.abs(y1))))


def run(rhs, t0, t1, y0, p, atol, rtol, h_init, h_max, max_steps, blowup, dense):
    n = y0.shape[0]
    direction = 1.0 if t1 >= t0 else -1.0
    span = abs(t1 - t0)
    cap = 256
    ts = np.empty(cap)
    ys = np.empty((cap, n))
    rc = np.empty((cap if dense else 1, 5, n))
    ts[0] = t0
    ys[0] = y0
    t = t0
    y = y0.copy()
    k1 = _eval(rhs, t, y, p)
    m = 1
    nacc = 0
    nrej = 0
    status = 0
    if span == 0.0:
        return ts[:1], ys[:1], rc[:0], nacc, nrej, status

    h = h_init
    if h <= 0.0:
        sc = atol + rtol * np.abs(y)
        d0 = np.max(np.abs(y) / sc)
        d1 = np.max(np.abs(k1) / sc)
        if d0 < 1e-5 or d1 < 1e-5:
            h = 1e-6
        else:
            h = 0.01 * d0 / d1
    h = min(h, h_max, span)
    rejected_last = False
    err_old = 1e-4

    while direction * (t1 - t) > 0.0:
        if nacc + nrej >= max_steps:
            status = 2
            break
        if h < 1e-13 * max(1.0, abs(t)):
            status = 1
            break
        last = False
        if h >= abs(t1 - t):
            h = abs(t1 - t)
            last = True
        hs = direction * h
        k2 = _eval(rhs, t + C2 * hs, y + hs * (A21 * k1), p)
        k3 = _eval(rhs, t + C3 * hs, y + hs * (A31 * k1 + A32 * k2), p)
        k4 = _eval(rhs, t + C4 * hs, y + hs * (A41 * k1 + A42 * k2 + A43 * k3), p)
        k5 = _eval(rhs, t + C5 * hs, y + hs * (A51 * k1 + A52 * k2 + A53 * k3 + A54 * k4), p)
        k6 = _eval(rhs, t + hs, y + hs * (A61 * k1 + A62 * k2 + A63 * k3 + A64 * k4 + A65 * k5), p)
        y1 = y + hs * (A71 * k1 + A73 * k3 + A74 * k4 + A75 * k5 + A76 * k6)
        k7 = _eval(rhs, t + hs, y1, p)
        errv = hs * (E1 * k1 + E3 * k3 + E4 * k4 + E5 * k5 + E6 * k6 + E7 * k7)
        err = _norm(errv, y, y1, atol, rtol)
        if not np.isfinite(err):
            h *= 0.2
            nrej += 1
            rejected_last = True
            continue
        if err <= 1.0:
            if m == cap:
                cap *= 2
                ts2 = np.empty(cap)
                ys2 = np.empty((cap, n))
                ts2[:m] = ts[:m]
                ys2[:m] = ys[:m]
                ts = ts2
                ys = ys2
                if dense:
                    rc2 = np.empty((cap, 5, n))
                    rc2[:m - 1] = rc[:m - 1]
                    rc = rc2
            if dense:
                dy = y1 - y
                bspl = hs * k1 - dy
                rc[m - 1, 0] = y
                rc[m - 1, 1] = dy
                rc[m - 1, 2] = bspl
                rc[m - 1, 3] = dy - hs * k7 - bspl
                rc[m - 1, 4] = hs * (D1 * k1 + D3 * k3 + D4 * k4 + D5 * k5 + D6 * k6 + D7 * k7)
            t = t1 if last else t + hs
            ts[m] = t
            ys[m] = y1
            m += 1
            y = y1
            k1 = k7
            nacc += 1
            if np.max(np.abs(y)) > blowup:
                status = 3
                break
            # PI step control with Hairer's dopri5 constants
            e = max(err, 1e-10)
            fac = min(10.0, max(0.2, 0.9 * e ** -0.17 * err_old ** 0.04))
            err_old = max(e, 1e-4)
            if rejected_last:
                fac = min(fac, 1.0)
            rejected_last = False
            h = min(h * fac, h_max)
        else:
            nrej += 1
            rejected_last = True
            h *= max(0.2, 0.9 * err ** -0.17)
    return ts[:m], ys[:m], rc[:m - 1], nacc, nrej, status



run_compiled = jit(run)


def _call(rhs, t, y, p):
    return rhs(t, y, p)


run_callable = types.FunctionType(run.__code__, dict(globals(), _eval=_call, _norm=_norm_np),
                                  "run_callable")


def core_for(name):
    """Driver bound to a built-in right-hand side (compiled when numba is on)."""
    kind = KINDS[name]
    runner = run_compiled if USE_NUMBA else run

    def core(*args):
        return runner(kind, *args)

    return core


def python_core(rhs):
    """Driver around an arbitrary Python ``rhs(t, y, p)``."""

    def core(*args):
        return run_callable(rhs, *args)

    return core


def dense_eval(seg_t0, seg_h, seg_rc, index, tq):
    """Evaluate the continuous extension of segment ``index`` at times ``tq``."""
    theta = (tq - seg_t0[index]) / seg_h[index]
    theta1 = 1.0 - theta
    rc = seg_rc[index]
    th = theta[:, None]
    th1 = theta1[:, None]
    return rc[:, 0] + th * (rc[:, 1] + th1 * (rc[:, 2] + th * (rc[:, 3] + th1 * rc[:, 4])))
