"""Generalized Riccati equations ``y' = A(t) + B(t) y + y^T H(t) y``, ``y(0) = 0``.

Simulation, the two hypotheses on ``A, B`` that the boundedness theorem
needs, the empirical boundedness verdict, and the construction of such a
system by linearizing a periodic flow around a candidate curve.
"""
import io
import json
import math
from dataclasses import dataclass, field as dc_field
from typing import Callable, Optional

import numpy as np

from . import _dopri
from .algebra import kernel_traces, max_norm, signed_sums
from .flow import HorizonError, IntegrationError, Trajectory, fmt, run_two_sided
from .growth import SLOPE_TOL, T_MIN, GrowthVerdict, growth_verdict, two_sided_times
from .quadrature import cumulative_simpson, uniform_grid

DEFAULT_TOL = 1e-10
BLOWUP_NORM = 1e8
GRID_STEP = 0.01


class RiccatiError(ValueError):
    pass


@dataclass(frozen=True)
class TrigSeries:
    """``sum_k cos_k * cos(w_k t) + sin_k * sin(w_k t)`` for an array of shape ``shape``.

    ``cos`` and ``sin`` have shape ``shape + (K,)``.
    """

    freqs: np.ndarray
    cos: np.ndarray
    sin: np.ndarray

    def __post_init__(self):
        f = np.asarray(self.freqs, dtype=float).ravel()
        c = np.asarray(self.cos, dtype=float)
        s = np.asarray(self.sin, dtype=float)
        if c.shape != s.shape or c.shape[-1] != f.size:
            raise RiccatiError("cos/sin coefficient shapes do not match the frequencies")
        object.__setattr__(self, "freqs", f)
        object.__setattr__(self, "cos", c)
        object.__setattr__(self, "sin", s)

    @classmethod
    def zeros(cls, shape):
        return cls(np.zeros(1), np.zeros(tuple(shape) + (1,)), np.zeros(tuple(shape) + (1,)))

    @property
    def shape(self):
        return self.cos.shape[:-1]

    def __call__(self, t):
        t = np.asarray(t, dtype=float)
        ph = t[..., None] * self.freqs
        # result shape: t.shape + self.shape
        cs = np.cos(ph)
        sn = np.sin(ph)
        extra = (None,) * len(self.shape)
        idx = (Ellipsis,) + extra + (slice(None),)
        return np.sum(self.cos * cs[idx] + self.sin * sn[idx], axis=-1)

    def abs_bound(self):
        """Entrywise bound ``sum_k |cos_k| + |sin_k|``."""
        return np.sum(np.abs(self.cos) + np.abs(self.sin), axis=-1)

    def packed(self):
        return np.concatenate([self.freqs, self.cos.ravel(), self.sin.ravel()])


@dataclass(frozen=True, eq=False)
class RiccatiSystem:
    """Coefficients ``A: t -> R^q``, ``B: t -> R^{q x q}``, ``H: t -> R^{q x q x q}``.

    Callables take an array of times and return an array with the time axes
    first (a scalar time gives the bare coefficient).  ``gamma`` declares
    ``max(|H|, |B|) <= gamma < 1``; it is spot-checked on construction.
    ``trig`` holds the packed coefficients when all three are trigonometric
    sums, which routes simulation through the compiled kernel.
    """

    dim: int
    A: Callable
    B: Callable
    H: Callable
    gamma: float
    trig: Optional[np.ndarray] = dc_field(default=None, repr=False)
    name: str = "riccati"

    def __post_init__(self):
        if not 0.0 <= self.gamma < 1.0:
            raise RiccatiError(f"declared bound gamma must lie in [0, 1), got {self.gamma:g}")
        probe = np.linspace(-100.0, 100.0, 257)
        q = self.dim
        b = _sample(self.B, probe, (q, q))
        h = _sample(self.H, probe, (q, q, q))
        worst = max(max(max_norm(m) for m in b), max(max_norm(m) for m in h))
        if worst > self.gamma * (1.0 + 1e-12) + 1e-15:
            raise RiccatiError(
                f"sampled max(|H|, |B|) = {worst:.6g} exceeds the declared gamma = {self.gamma:g}")

    @classmethod
    def constant(cls, a, b, h, gamma=None, name="constant"):
        a = np.atleast_1d(np.asarray(a, dtype=float))
        q = a.size
        b = np.asarray(b, dtype=float).reshape(q, q)
        h = np.asarray(h, dtype=float).reshape(q, q, q)
        if gamma is None:
            gamma = max(max_norm(b), max_norm(h))
        return cls.from_trig(TrigSeries(np.zeros(1), a[:, None], np.zeros((q, 1))),
                             TrigSeries(np.zeros(1), b[..., None], np.zeros((q, q, 1))),
                             TrigSeries(np.zeros(1), h[..., None], np.zeros((q, q, q, 1))),
                             gamma, name)

    @classmethod
    def zero(cls, q):
        return cls.constant(np.zeros(q), np.zeros((q, q)), np.zeros((q, q, q)), 0.0, "zero")

    @classmethod
    def from_trig(cls, A, B, H, gamma=None, name="trig"):
        q = A.shape[0]
        if A.shape != (q,) or B.shape != (q, q) or H.shape != (q, q, q):
            raise RiccatiError("coefficient shapes must be (q,), (q, q), (q, q, q)")
        if gamma is None:
            gamma = max(max_norm(B.abs_bound()), max_norm(H.abs_bound()))
        packed = np.concatenate([[q, A.freqs.size, B.freqs.size, H.freqs.size],
                                 A.packed(), B.packed(), H.packed()])
        return cls(q, A, B, H, float(gamma), packed, name)


def _sample(fn, t, shape):
    """Evaluate a coefficient on an array of times, looping if it is scalar-only."""
    t = np.asarray(t, dtype=float)
    try:
        out = np.asarray(fn(t), dtype=float)
        if out.shape == t.shape + tuple(shape):
            return out
    except (TypeError, ValueError):
        pass
    return np.stack([np.asarray(fn(float(tk)), dtype=float).reshape(shape) for tk in t])


@dataclass(frozen=True)
class RiccatiRun:
    """Trajectory of ``y``; ``blew_up`` marks a partial run stopped by blow-up."""

    trajectory: Trajectory
    blew_up: bool = False
    message: str = ""

    def to_csv(self, path=None):
        traj = self.trajectory
        buf = io.StringIO()
        buf.write("t," + ",".join(f"y{j + 1}" for j in range(traj.dim)) + "\n")
        for tk, yk in zip(traj.t, traj.x):
            buf.write(fmt(tk) + "," + ",".join(fmt(v) for v in yk) + "\n")
        text = buf.getvalue()
        if path is not None:
            with open(path, "w", newline="") as fh:
                fh.write(text)
        return text


def riccati_simulate(system, t_span, tol=DEFAULT_TOL, blowup=BLOWUP_NORM, max_steps=20_000_000):
    """Integrate from ``y(0) = 0`` over ``t_span = (a, b)`` with ``a <= 0 <= b``."""
    q = system.dim
    if system.trig is not None:
        core = _dopri.core_for("riccati")
        p = system.trig
    else:
        def rhs(t, y, _p):
            b = np.asarray(system.B(t), dtype=float).reshape(q, q)
            h = np.asarray(system.H(t), dtype=float).reshape(q, q, q)
            return (np.asarray(system.A(t), dtype=float).reshape(q) + b @ y
                    + np.einsum("iac,a,c->i", h, y, y))

        core = _dopri.python_core(rhs)
        p = np.zeros(1)
    try:
        traj = run_two_sided(core, np.zeros(q), p, t_span, tol, max_steps=max_steps, blowup=blowup)
    except IntegrationError as exc:
        if exc.status == _dopri.BLOWUP and exc.partial is not None:
            return RiccatiRun(exc.partial, True, str(exc))
        raise
    return RiccatiRun(traj)


@dataclass
class HypothesisReport:
    """Verdicts for the two hypotheses on ``[-T, T]``.

    ``part1``: ``|int_0^t sigma(B)|`` on both sides.  ``part2[i]``: the
    one-sided oriented kernel integral for the chosen ``tau[i]``.  ``h2[i]``:
    ``|psi_0 - psi_i|`` on both sides (so independent of ``tau``).
    """

    horizon: float
    part1: GrowthVerdict
    tau: np.ndarray
    part2: list
    h2: list
    psi_t: np.ndarray = dc_field(repr=False)
    psi: np.ndarray = dc_field(repr=False)

    @property
    def h1_passed(self):
        return self.part1.passed and all(v.passed for v in self.part2)

    @property
    def h2_passed(self):
        return all(v.passed for v in self.h2)

    @property
    def passed(self):
        return self.h1_passed and self.h2_passed

    def as_dict(self):
        return {
            "horizon": self.horizon,
            "passed": self.passed,
            "h1": {
                "passed": self.h1_passed,
                "part1": {"passed": self.part1.passed, "slope": self.part1.slope,
                          "sup": self.part1.sup},
                "part2": [{"index": i + 1, "tau": float(t), "passed": v.passed,
                           "slope": v.slope, "sup": v.sup}
                          for i, (t, v) in enumerate(zip(self.tau, self.part2))],
            },
            "h2": [{"index": i + 1, "passed": v.passed, "slope": v.slope, "sup": v.sup}
                   for i, v in enumerate(self.h2)],
        }

    def to_json(self, path=None):
        text = json.dumps(self.as_dict(), indent=2)
        if path is not None:
            with open(path, "w") as fh:
                fh.write(text + "\n")
        return text

    def to_csv(self, path=None):
        """The curves ``psi_0..psi_q`` on the sample times."""
        buf = io.StringIO()
        buf.write("t," + ",".join(f"psi_{i}" for i in range(self.psi.shape[1])) + "\n")
        for tk, row in zip(self.psi_t, self.psi):
            buf.write(fmt(tk) + "," + ",".join(fmt(v) for v in row) + "\n")
        text = buf.getvalue()
        if path is not None:
            with open(path, "w", newline="") as fh:
                fh.write(text)
        return text


def _psi_curve(system, i, times, tol):
    q = system.dim
    if system.trig is not None:
        core = _dopri.core_for("riccati-psi")
        p = np.concatenate([[i], system.trig])
    else:
        def rhs(t, y, _p):
            src = signed_sums(np.asarray(system.A(t), dtype=float).reshape(1, q))[0, i]
            ker = kernel_traces(np.asarray(system.B(t), dtype=float).reshape(1, q, q))[0, i]
            return np.array([src + ker * y[0] / q])

        core = _dopri.python_core(rhs)
        p = np.zeros(1)
    traj = run_two_sided(core, np.zeros(1), p, (float(times.min()), float(times.max())), tol)
    return traj.state_at(times)[:, 0]


def hypothesis_check(system, T, h=GRID_STEP, tol=DEFAULT_TOL, slope_tol=SLOPE_TOL, t_min=T_MIN):
    """Check both hypotheses on ``[-T, T]``.

    For each i both orientations are tested; ``tau_i = -1`` when both pass,
    otherwise the passing one, otherwise the one with the smaller sup.
    Only ``dim``, ``A``, ``B`` and ``trig`` of ``system`` are read, so any
    object with those attributes works (the hypotheses do not involve gamma).
    """
    if T < 100.0:
        raise HorizonError(f"hypothesis check needs a horizon >= 100, got {T:g}")
    q = system.dim
    grids, traces = [], []
    for end in (-T, T):
        nodes, step = uniform_grid(end, h)
        K = kernel_traces(_sample(system.B, nodes, (q, q)))
        grids.append(nodes)
        traces.append(cumulative_simpson(K, step))
    t_all = np.concatenate([grids[0][:0:-1], grids[1]])
    k0 = np.concatenate([traces[0][:0:-1, 0], traces[1][:, 0]])
    part1 = growth_verdict(t_all, np.abs(k0), T, t_min, slope_tol)

    tau = np.empty(q)
    part2 = []
    for i in range(1, q + 1):
        # tau int_0^t K(tau nu) dnu is the running integral evaluated at tau t
        neg = growth_verdict(-grids[0], traces[0][:, i], T, t_min, slope_tol)
        pos = growth_verdict(grids[1], traces[1][:, i], T, t_min, slope_tol)
        if neg.passed or not pos.passed and neg.sup <= pos.sup:
            tau[i - 1], chosen = -1.0, neg
        else:
            tau[i - 1], chosen = 1.0, pos
        part2.append(chosen)

    times = two_sided_times(T, t_min)
    psi = np.stack([_psi_curve(system, i, times, tol) for i in range(q + 1)], axis=1)
    h2 = [growth_verdict(times, np.abs(psi[:, 0] - psi[:, i]), T, t_min, slope_tol)
          for i in range(1, q + 1)]
    return HypothesisReport(float(T), part1, tau, part2, h2, times, psi)


@dataclass(frozen=True)
class BoundednessResult:
    passed: bool
    sup: float
    verdict: Optional[GrowthVerdict]
    blew_up: bool
    horizon: float

    def as_dict(self):
        return {"passed": self.passed, "sup": self.sup, "blew_up": self.blew_up,
                "horizon": self.horizon,
                "verdict": None if self.verdict is None else self.verdict.as_dict()}


def boundedness_verdict(system, T, tol=DEFAULT_TOL, slope_tol=SLOPE_TOL, t_min=T_MIN):
    """Simulate on ``[-T, T]``; PASS iff no blow-up and ``|y|`` passes the window test."""
    run = riccati_simulate(system, (-T, T), tol)
    traj = run.trajectory
    if run.blew_up:
        return BoundednessResult(False, math.inf, None, True, float(T))
    t, y = traj.dense_samples(3)
    grid = two_sided_times(T, t_min)
    t = np.concatenate([t, grid])
    y = np.concatenate([y, traj.state_at(grid)])
    norm = np.max(np.abs(y), axis=1)
    verdict = growth_verdict(t, norm, T, t_min, slope_tol)
    return BoundednessResult(verdict.passed, float(np.max(norm)), verdict, False, float(T))


def linearize(field, mu, x0=None, threshold=0.1, scale=None):
    """Riccati system of the rescaled deviation from ``mu``.

    ``A(t) = e^3 [mu'(e t) - f(mu(e t))]``, ``B(t) = e^2 df(mu(e t))`` and a
    constant quadratic tensor of norm ``e |d2f|``, every entry equal, with
    ``e = min(1/2, threshold / (2 |d2f|))`` unless ``scale`` is given.
    ``mu`` is a leader object (callable with a ``derivative`` method).
    """
    q = field.dim
    d2 = field.second_derivative_bound
    sup_f, sup_df = field.norms()
    if not (math.isfinite(d2) and math.isfinite(sup_df)):
        raise RiccatiError("linearization needs finite first and second derivative bounds")
    start = np.asarray(mu(np.array(0.0)), dtype=float).ravel()
    if x0 is not None and max_norm(start - np.asarray(x0, dtype=float)) > 1e-12:
        raise RiccatiError("the curve must start at x0")
    if scale is None:
        scale = 0.5 if d2 == 0.0 else min(0.5, threshold / (2.0 * d2))
    e = float(scale)
    if not 0.0 < e < 1.0:
        raise RiccatiError(f"scale must lie in (0, 1), got {e:g}")

    def A(t):
        s = e * np.asarray(t, dtype=float)
        pts = np.asarray(mu(s), dtype=float)
        return e ** 3 * (np.asarray(mu.derivative(s), dtype=float) - field.evaluate(pts))

    def B(t):
        s = e * np.asarray(t, dtype=float)
        return e ** 2 * field.jacobian(np.asarray(mu(s), dtype=float))

    h_norm = e * d2
    tensor = np.full((q, q, q), h_norm / (q * q))
    assert max_norm(tensor) <= e * d2 * (1.0 + 1e-12)

    def H(t):
        t = np.asarray(t, dtype=float)
        return np.broadcast_to(tensor, t.shape + tensor.shape).copy()

    gamma = max(h_norm, e ** 2 * sup_df)
    if gamma >= 1.0:
        raise RiccatiError(f"linearized bound {gamma:.4g} is not below 1; reduce the scale")
    return RiccatiSystem(q, A, B, H, gamma * (1.0 + 1e-9), None, "linearized")


BASE_FREQUENCY = 2.0 * math.pi
SOURCE_HARMONICS = (1, 7)
COUPLING_HARMONICS = (3, 5)


def random_trig_system(q, gamma, rng, source_scale=1.0):
    """Random trigonometric system with ``max(|B|, |H|) = gamma`` exactly (as a bound).

    The source uses cosines of harmonics 1 and 7 of ``2 pi``; the couplings use
    harmonics 3 and 5.  All products of the first two orders then have no
    constant component, so there is no resonant forcing at those orders.
    """
    rng = np.random.default_rng(rng)
    wa = BASE_FREQUENCY * np.asarray(SOURCE_HARMONICS, dtype=float)
    wc = BASE_FREQUENCY * np.asarray(COUPLING_HARMONICS, dtype=float)
    ka, kc = wa.size, wc.size
    A = TrigSeries(wa, source_scale * rng.uniform(-1, 1, (q, ka)), np.zeros((q, ka)))
    B = TrigSeries(wc, rng.uniform(-1, 1, (q, q, kc)), rng.uniform(-1, 1, (q, q, kc)))
    H = TrigSeries(wc, rng.uniform(-1, 1, (q, q, q, kc)), rng.uniform(-1, 1, (q, q, q, kc)))
    b_bound = max_norm(B.abs_bound())
    h_bound = max_norm(H.abs_bound())
    B = TrigSeries(wc, B.cos * gamma / b_bound, B.sin * gamma / b_bound)
    H = TrigSeries(wc, H.cos * gamma / h_bound, H.sin * gamma / h_bound)
    return RiccatiSystem.from_trig(A, B, H, gamma, "random-trig")
