"""Verification of candidate leader curves and of their distance to the flow.

A candidate ``mu`` comes with its derivative.  Along it the package samples
the signed sources ``sigma(I_i (mu' - g(mu)))`` and kernel traces
``sigma(I_i dg(mu) I_i)``; the three leader conditions are growth tests on

1. the running integral of the full trace ``sigma(dg(mu))`` (both directions),
2. the oriented integral ``int_0^t tau_i sigma(I_i dg(mu(tau_i nu)) I_i)``
   for ``t >= 0`` (signed: only growth to ``+inf`` fails),
3. ``|psi_0 - psi_i|`` where ``psi_i`` solves the scalar linear ODE with the
   same source and kernel, on both sides of 0.

The second condition is one-sided while the third covers all of R, so the
third does not depend on ``tau``.  Both asymmetries are kept as they are and
reported separately.
"""
import io
import json
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field as dc_field
from typing import Callable

import numpy as np

from ._accel import thread_count
from .algebra import kernel_traces, max_norm, signed_sums
from .flow import DEFAULT_TOL, HorizonError, fmt, integrate
from .growth import SLOPE_TOL, T_MIN, GrowthVerdict, growth_verdict, two_sided_times
from .psi import CHUNK, AffineLine, line_ode, sign_of_average
from .quadrature import cumulative_simpson, simpson, uniform_grid


@dataclass(frozen=True)
class AffineLeader:
    """``mu(t) = offset + rate * t``."""

    rate: np.ndarray
    offset: np.ndarray

    def __post_init__(self):
        object.__setattr__(self, "rate", np.asarray(self.rate, dtype=float).ravel())
        object.__setattr__(self, "offset",
                           np.broadcast_to(np.asarray(self.offset, dtype=float),
                                           self.rate.shape).copy())

    @property
    def dim(self):
        return self.rate.size

    def __call__(self, t):
        t = np.asarray(t, dtype=float)
        return self.offset + t[..., None] * self.rate

    def derivative(self, t):
        t = np.asarray(t, dtype=float)
        return np.broadcast_to(self.rate, t.shape + self.rate.shape).copy()


@dataclass(frozen=True)
class CurveLeader:
    """A closed-form pair ``(mu, mu')``; both map an array of times to ``(..., q)``."""

    func: Callable
    deriv: Callable
    dim: int

    def __call__(self, t):
        return np.asarray(self.func(np.asarray(t, dtype=float)), dtype=float)

    def derivative(self, t):
        return np.asarray(self.deriv(np.asarray(t, dtype=float)), dtype=float)


@dataclass(frozen=True, eq=False)
class CurveLine:
    """Sources and kernels of a field along an arbitrary curve.

    Mirrors the sampling interface of :class:`rotvec.psi.AffineLine`.
    """

    field: object
    leader: CurveLeader

    @property
    def dim(self):
        return self.field.dim

    def default_step(self, points_per_unit_phase=50.0, cap=0.02, probe=1000.0):
        t = np.linspace(-probe, probe, 4001)
        rate = float(np.max(np.abs(self.leader.derivative(t))))
        return cap if rate == 0.0 else min(cap, 1.0 / (points_per_unit_phase * rate))

    def sample(self, s):
        s = np.asarray(s, dtype=float)
        q = self.dim
        A = np.empty((s.size, q + 1))
        K = np.empty((s.size, q + 1))
        for lo in range(0, s.size, CHUNK):
            sl = s[lo:lo + CHUNK]
            pts = self.leader(sl).reshape(sl.size, q)
            u = self.leader.derivative(sl).reshape(sl.size, q) - self.field.evaluate(pts)
            A[lo:lo + sl.size] = signed_sums(u)
            K[lo:lo + sl.size] = kernel_traces(self.field.jacobian(pts))
        return A, K

    def psi_params(self, i):
        return None


def leader_line(g, mu):
    """The sampler for ``g`` along ``mu``.

    ``g`` is a periodic field, or a normalized field (anything with a
    ``line`` method) paired with an affine ``mu`` through the origin.
    """
    if hasattr(g, "line"):
        if not isinstance(mu, AffineLeader) or np.any(mu.offset != 0.0):
            raise ValueError("a normalized field takes an affine leader through the origin")
        return g.line(mu.rate, 1.0, conjugate=False)
    if isinstance(mu, AffineLeader):
        if mu.dim != g.dim:
            raise ValueError(f"leader has dimension {mu.dim}, field has {g.dim}")
        return AffineLine(g, mu.offset, mu.rate, mu.rate)
    return CurveLine(g, mu)


def _running_integral(line, T, h, column=None):
    """Two-sided running integrals of the kernel traces on a uniform grid."""
    out_t, out_v = [], []
    for end in (-T, T):
        nodes, step = uniform_grid(end, h)
        _, K = line.sample(nodes)
        if column is not None:
            K = K[:, column]
        out_t.append(nodes)
        out_v.append(cumulative_simpson(K, step))
    return out_t, out_v


@dataclass(frozen=True)
class BulletThree:
    index: int
    verdict: GrowthVerdict
    drift: float


@dataclass
class LeaderReport:
    """Outcome of the three leader conditions on ``[-T, T]``."""

    horizon: float
    trace: GrowthVerdict
    tau: np.ndarray
    lam: np.ndarray
    oriented: list
    differences: list
    series: dict = dc_field(default_factory=dict, repr=False)

    @property
    def bullet1(self):
        return self.trace.passed

    @property
    def bullet2(self):
        return all(v.passed for v in self.oriented)

    @property
    def bullet3(self):
        return all(b.verdict.passed for b in self.differences)

    @property
    def passed(self):
        return self.bullet1 and self.bullet2 and self.bullet3

    @property
    def drifts(self):
        return np.array([b.drift for b in self.differences])

    def as_dict(self):
        return {
            "horizon": self.horizon,
            "passed": self.passed,
            "bullet1": {"passed": self.bullet1, "slope": self.trace.slope, "sup": self.trace.sup},
            "bullet2": [
                {"index": i + 1, "tau": float(t), "average": float(a), "passed": v.passed,
                 "slope": v.slope, "sup": v.sup}
                for i, (t, a, v) in enumerate(zip(self.tau, self.lam, self.oriented))
            ],
            "bullet3": [
                {"index": b.index, "passed": b.verdict.passed, "slope": b.verdict.slope,
                 "sup": b.verdict.sup, "drift": b.drift}
                for b in self.differences
            ],
        }

    def to_json(self, path=None):
        text = json.dumps(self.as_dict(), indent=2)
        if path is not None:
            with open(path, "w") as fh:
                fh.write(text + "\n")
        return text

    def to_csv(self, path=None):
        """Bullet-3 differences ``psi_0 - psi_i`` on the sample times."""
        t = self.series["t"]
        diff = self.series["differences"]
        buf = io.StringIO()
        buf.write("t," + ",".join(f"d_{i + 1}" for i in range(diff.shape[1])) + "\n")
        for tk, row in zip(t, diff):
            buf.write(fmt(tk) + "," + ",".join(fmt(v) for v in row) + "\n")
        text = buf.getvalue()
        if path is not None:
            with open(path, "w", newline="") as fh:
                fh.write(text)
        return text


def _drift(t, d):
    """Least-squares slope of ``d`` against ``t`` (through any offset)."""
    tc = t - t.mean()
    return float(np.dot(tc, d - d.mean()) / np.dot(tc, tc))


def leader_check(g, mu, T, h=None, tol=1e-12, slope_tol=SLOPE_TOL, t_min=T_MIN, threads=None):
    """Test the three leader conditions for ``mu`` against ``g`` on ``[-T, T]``.

    ``tau_i`` is ``-Sign`` of the average of ``sigma(I_i dg(mu) I_i)`` over
    ``[0, T]``.  Per-index ODEs run on up to ``threads`` workers.
    """
    if T < 100.0:
        raise HorizonError(f"leader check needs a horizon >= 100, got {T:g}")
    line = leader_line(g, mu)
    q = line.dim
    if h is None:
        h = min(0.01, line.default_step())

    # bullet 1: sigma(dg) is the i = 0 trace
    ts, vs = _running_integral(line, T, h, column=0)
    t1 = np.concatenate([ts[0][:0:-1], ts[1]])
    v1 = np.concatenate([vs[0][:0:-1], vs[1]])
    trace = growth_verdict(t1, np.abs(v1), T, t_min, slope_tol)

    # bullet 2: orientation from forward averages, then the one-sided signed integral
    nodes, step = uniform_grid(T, h)
    _, K = line.sample(nodes)
    lam = simpson(K[:, 1:], step) / T
    tau = sign_of_average(lam)
    back_nodes, back_step = uniform_grid(-T, h)
    _, Kb = line.sample(back_nodes)
    fwd_int = cumulative_simpson(K[:, 1:], step)
    back_int = cumulative_simpson(Kb[:, 1:], back_step)
    oriented = []
    for i in range(q):
        # int_0^t tau K(tau nu) dnu = int_0^{tau t} K
        vals = fwd_int[:, i] if tau[i] > 0 else back_int[:, i]
        oriented.append(growth_verdict(nodes, vals, T, t_min, slope_tol))

    # bullet 3: psi ODEs on both sides
    times = two_sided_times(T, t_min)
    workers = min(thread_count(threads), q + 1)
    if workers > 1:
        with ThreadPoolExecutor(workers) as pool:
            psis = list(pool.map(lambda i: line_ode(line, i, times, tol)[0], range(q + 1)))
    else:
        psis = [line_ode(line, i, times, tol)[0] for i in range(q + 1)]
    diffs = np.stack([psis[0] - psis[i] for i in range(1, q + 1)], axis=1)
    third = [BulletThree(i + 1, growth_verdict(times, np.abs(diffs[:, i]), T, t_min, slope_tol),
                         _drift(times, diffs[:, i]))
             for i in range(q)]
    return LeaderReport(float(T), trace, tau, lam, oriented, third,
                        series={"t": times, "differences": diffs})


@dataclass(frozen=True)
class DistanceReport:
    """``sup |mu(t) - x(t)|`` per window and the growth verdict; ``D`` is the sup."""

    horizon: float
    verdict: GrowthVerdict
    t: np.ndarray = dc_field(repr=False)
    distance: np.ndarray = dc_field(repr=False)

    @property
    def passed(self):
        return self.verdict.passed

    @property
    def D(self):
        return self.verdict.sup

    def as_dict(self):
        return {"horizon": self.horizon, "passed": self.passed, "D": self.D,
                "verdict": self.verdict.as_dict()}


def leader_distance(field, mu, x0=None, T=1e4, tol=DEFAULT_TOL, slope_tol=SLOPE_TOL,
                    t_min=T_MIN):
    """Integrate the flow from ``mu(0)`` over ``[-T, T]`` and test ``|mu - x|``.

    For a normalized field the time-changed system is not integrated
    directly: its solution is ``z(s) = c s + x(gamma s) - x0`` with ``x``
    the flow of the underlying field started at ``x0``.
    """
    if T < 100.0:
        raise HorizonError(f"distance test needs a horizon >= 100, got {T:g}")
    start = np.asarray(mu(np.array(0.0)), dtype=float).ravel()
    if x0 is not None and max_norm(start - np.asarray(x0, dtype=float)) > 1e-12:
        raise ValueError("the leader must start at x0")
    times = two_sided_times(T, t_min)
    if hasattr(field, "line"):
        g = field
        gT = g.gamma * T
        traj = integrate(g.field, g.x0, (-gT, gT), tol)
        x = g.c * times[:, None] + traj.state_at(g.gamma * times) - g.x0
        # include accepted steps so short-lived excursions are not missed
        extra = traj.t / g.gamma
        xe = g.c * extra[:, None] + traj.x - g.x0
        times = np.concatenate([times, extra])
        x = np.concatenate([x, xe])
    else:
        traj = integrate(field, start, (-T, T), tol)
        st, sx = traj.dense_samples(3)
        times = np.concatenate([times, st])
        x = np.concatenate([traj.state_at(times[:-st.size]), sx])
    d = np.max(np.abs(mu(times).reshape(x.shape) - x), axis=1)
    order = np.argsort(times, kind="stable")
    times, d = times[order], d[order]
    verdict = growth_verdict(times, d, T, t_min, slope_tol)
    return DistanceReport(float(T), verdict, times, d)
