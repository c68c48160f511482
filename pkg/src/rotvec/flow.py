"""Flow of a periodic field, trajectory storage and rotation-vector estimates."""
import io
from dataclasses import dataclass, field as dc_field
from typing import Optional

import numpy as np

from . import _dopri, _rhs
from .growth import SLOPE_TOL, T_MIN, growth_verdict, two_sided_times

DEFAULT_TOL = 1e-10
BLOWUP = 1e300


class IntegrationError(RuntimeError):
    """Integrator failure; ``partial`` holds what was computed."""

    def __init__(self, message, partial=None, status=None):
        super().__init__(message)
        self.partial = partial
        self.status = status


class HorizonError(ValueError):
    pass


def fmt(v):
    return f"{v:.9g}"


@dataclass(frozen=True, eq=False)
class Trajectory:
    """Accepted steps of an integration, with the dense-output segments.

    Times are strictly increasing and may extend to negative values.  States
    are kept in the lift (never reduced mod 1).
    """

    t: np.ndarray
    x: np.ndarray
    steps: int = 0
    rejected: int = 0
    tol: float = 0.0
    status: int = 0
    segments: Optional[tuple] = dc_field(default=None, repr=False)

    @classmethod
    def from_samples(cls, t, x):
        t = np.asarray(t, dtype=float)
        x = np.asarray(x, dtype=float)
        if x.ndim == 1:
            x = x[:, None]
        if np.any(np.diff(t) <= 0):
            raise ValueError("sample times must be strictly increasing")
        return cls(t=t, x=x)

    @property
    def dim(self):
        return self.x.shape[1]

    @property
    def t_start(self):
        return float(self.t[0])

    @property
    def t_end(self):
        return float(self.t[-1])

    def state_at(self, tq):
        """States at times ``tq`` (dense output, or linear interpolation)."""
        tq = np.atleast_1d(np.asarray(tq, dtype=float))
        if np.any(tq < self.t[0] - 1e-12) or np.any(tq > self.t[-1] + 1e-12):
            raise ValueError("query time outside the trajectory span")
        if self.segments is None:
            return np.stack([np.interp(tq, self.t, self.x[:, j]) for j in range(self.dim)], axis=1)
        seg_lo, seg_t0, seg_h, seg_rc = self.segments
        if seg_h.size == 0:
            return np.repeat(self.x[:1], tq.size, axis=0)
        idx = np.clip(np.searchsorted(seg_lo, tq, side="right") - 1, 0, seg_h.size - 1)
        return _dopri.dense_eval(seg_t0, seg_h, seg_rc, idx, tq)

    def dense_samples(self, per_step=3):
        """Node times plus ``per_step`` interior points per accepted step."""
        if self.segments is None or per_step <= 0:
            return self.t, self.x
        frac = np.arange(1, per_step + 1) / (per_step + 1.0)
        inner = (self.t[:-1, None] + np.diff(self.t)[:, None] * frac[None, :]).ravel()
        tq = np.concatenate([self.t, inner])
        order = np.argsort(tq, kind="stable")
        xs = np.concatenate([self.x, self.state_at(inner)])
        return tq[order], xs[order]

    def to_csv(self, path=None):
        buf = io.StringIO()
        buf.write("t," + ",".join(f"x{j + 1}" for j in range(self.dim)) + "\n")
        for tk, xk in zip(self.t, self.x):
            buf.write(fmt(tk) + "," + ",".join(fmt(v) for v in xk) + "\n")
        text = buf.getvalue()
        if path is not None:
            with open(path, "w", newline="") as fh:
                fh.write(text)
        return text


def _segments(ts, rc):
    t0 = ts[:-1]
    h = np.diff(ts)
    return t0, h, rc


def _join(back, fwd, dense):
    """Merge a backward run (decreasing times from 0) and a forward run."""
    bt, bx, brc = back
    ft, fx, frc = fwd
    t = np.concatenate([bt[:0:-1], ft])
    x = np.concatenate([bx[:0:-1], fx])
    if not dense:
        return t, x, None
    b0, bh, brc = _segments(bt, brc)
    f0, fh, frc = _segments(ft, frc)
    seg_t0 = np.concatenate([b0[::-1], f0])
    seg_h = np.concatenate([bh[::-1], fh])
    seg_rc = np.concatenate([brc[::-1], frc])
    seg_lo = np.minimum(seg_t0, seg_t0 + seg_h)
    return t, x, (seg_lo, seg_t0, seg_h, seg_rc)


def run_two_sided(core, y0, p, t_span, atol, rtol=0.0, h_max=np.inf,
                  max_steps=50_000_000, blowup=BLOWUP, dense=True):
    """Integrate from 0 to ``b`` and from 0 to ``a``; returns a Trajectory.

    Raises IntegrationError (with the partial trajectory) on failure.
    """
    a, b = (float(v) for v in t_span)
    if not a <= 0.0 <= b:
        raise ValueError("time span must contain 0")
    if atol <= 0:
        raise ValueError("tolerance must be positive")
    y0 = np.ascontiguousarray(y0, dtype=float)
    p = np.ascontiguousarray(p, dtype=float)
    runs = []
    stats = [0, 0]
    status = _dopri.OK
    for end in (a, b):
        ts, ys, rc, nacc, nrej, st = core(0.0, end, y0, p, float(atol), float(rtol), 0.0,
                                          float(h_max), int(max_steps), float(blowup), dense)
        runs.append((ts, ys, rc))
        stats[0] += nacc
        stats[1] += nrej
        if st != _dopri.OK:
            status = st
            break
    runs_end = float(runs[-1][0][-1])
    if len(runs) == 1:
        runs.append((runs[0][0][:1], runs[0][1][:1], runs[0][2][:0]))
    t, x, seg = _join(runs[0], runs[1], dense)
    traj = Trajectory(t=t, x=x, steps=stats[0], rejected=stats[1], tol=float(atol),
                      status=int(status), segments=seg)
    if status != _dopri.OK:
        raise IntegrationError(
            f"integration stopped near t = {fmt(runs_end)}: "
            f"{_dopri.STATUS_TEXT[status]}", partial=traj, status=status)
    return traj


def integrate(field, x0, t_span, tol=DEFAULT_TOL, perturbation=None, h_max=np.inf,
              max_steps=50_000_000, dense=True):
    """Solve ``x' = f(x) [+ zeta(t)]`` on ``t_span = (a, b)`` with ``a <= 0 <= b``.

    Uses Dormand-Prince 5(4) with absolute local error ``tol`` per step.
    Shipped models run through the compiled kernel; other fields (and
    callable perturbations) through the same stepper in Python.
    """
    x0 = np.asarray(x0, dtype=float).reshape(field.dim)
    builtin = getattr(perturbation, "builtin", None) if perturbation is not None else None
    if field.packed is not None and (perturbation is None or builtin is not None):
        if builtin is None:
            p = _rhs.pack_flow(field.packed)
        else:
            kind, width, vec = builtin
            p = _rhs.pack_flow(field.packed, kind, width, vec)
        core = _dopri.core_for("flow")
    else:
        if perturbation is None:
            def rhs(t, y, p):
                return field.evaluate(y)
        else:
            def rhs(t, y, p):
                return field.evaluate(y) + perturbation.evaluate(t)
        core = _dopri.python_core(rhs)
        p = np.zeros(1)
    return run_two_sided(core, x0, p, t_span, tol, h_max=h_max, max_steps=max_steps, dense=dense)


@dataclass(frozen=True)
class RotationEstimate:
    """Tail-secant rotation vector with residual diagnostics on ``[0, T]``."""

    rho: np.ndarray
    horizon: float
    residual_sup: float
    window_sups: np.ndarray
    windows: list
    initial_sup: float
    slope: float


def _residual_samples(traj, x0, lam, per_step=3):
    t, x = traj.dense_samples(per_step)
    # long steps (e.g. an exactly linear flow) would leave windows empty
    T = max(traj.t_end, -traj.t_start)
    if T >= 4.0 * T_MIN:
        grid = two_sided_times(T)
        grid = grid[(grid >= traj.t_start) & (grid <= traj.t_end)]
        t = np.concatenate([t, grid])
        x = np.concatenate([x, traj.state_at(grid)])
    r = np.max(np.abs(x - x0[None, :] - t[:, None] * lam[None, :]), axis=1)
    return t, r


def rotation_estimate(traj, t_min=T_MIN):
    """``lambda = (x(T) - x(T/2)) / (T/2)`` on the forward part of ``traj``."""
    T = traj.t_end
    if T < 100.0:
        raise HorizonError(f"rotation estimate needs a forward horizon >= 100, got {T:g}")
    xT, xh = traj.state_at([T, T / 2.0])
    lam = (xT - xh) / (T / 2.0)
    x0 = traj.state_at([0.0])[0]
    t, r = _residual_samples(traj, x0, lam)
    keep = t >= 0
    v = growth_verdict(t[keep], r[keep], T, t_min)
    side = v.sides["forward"]
    return RotationEstimate(lam, T, float(np.max(r[keep])), side.sups, side.windows,
                            side.initial_sup, side.slope)


def boundedness_test(traj, lam, slope_tol=SLOPE_TOL, t_min=T_MIN, x0=None):
    """Window test on ``|x(t) - x0 - lam t|`` over the trajectory span.

    Returns a :class:`GrowthVerdict`; ``verdict.sup`` is the bound estimate.
    Both time directions are tested when the trajectory extends backwards.
    """
    lam = np.asarray(lam, dtype=float).reshape(traj.dim)
    if x0 is None:
        x0 = traj.state_at([0.0])[0]
    T = max(traj.t_end, -traj.t_start)
    if T < 100.0:
        raise HorizonError(f"boundedness test needs a horizon >= 100, got {T:g}")
    t, r = _residual_samples(traj, np.asarray(x0, dtype=float), lam)
    return growth_verdict(t, r, T, t_min, slope_tol)
