"""The Psi_i functionals along straight lines, their residuals and sign profiles.

For a line ``p(s) = base + s * vel`` the building blocks are

* the source ``u(s) = rate - (a + b f(p(s)))``,
* the kernel matrix ``M(s) = b df(p(s))``,

optionally conjugated by a positive weight vector ``w`` (``u -> u / w``,
``M -> diag(1/w) M diag(w)``).  Then, for ``i = 0..q``,

    Psi_i(t) = int_0^t sigma(I_i u(s)) exp((1/q) int_s^t sigma(I_i M I_i)) ds

which also solves ``psi' = sigma(I_i u) + (1/q) sigma(I_i M I_i) psi``.
"""
import io
from dataclasses import dataclass
from typing import Callable, Optional

import numpy as np

from . import _dopri, _rhs
from .algebra import Involution, kernel_traces, signed_sums
from .flow import HorizonError, fmt, run_two_sided
from .quadrature import cumulative_simpson, simpson, uniform_grid

EXP_LIMIT = 700.0
DEFAULT_STEP = 1e-3
CHUNK = 1 << 15


class KernelOverflowError(ArithmeticError):
    """Kernel exponent left the representable range."""

    def __init__(self, index, t, exponent):
        super().__init__(
            f"kernel exponent {exponent:.3g} exceeds {EXP_LIMIT:g} for i = {index} at t = {t:.6g}; "
            "the field is outside the small-coupling regime")
        self.index = index
        self.t = t


@dataclass(frozen=True, eq=False)
class AffineLine:
    """A field sampled along ``base + s * vel`` together with a source term.

    ``source``, when given, replaces ``rate - (a + b f)`` by an explicit
    function of ``s`` returning shape ``(..., q)`` (used for perturbations).
    """

    field: object
    base: np.ndarray
    vel: np.ndarray
    rate: np.ndarray
    a: float = 0.0
    b: float = 1.0
    weights: Optional[np.ndarray] = None
    source: Optional[Callable] = None

    @property
    def dim(self):
        return self.field.dim

    def points(self, s):
        return self.base + np.asarray(s, dtype=float)[..., None] * self.vel

    def values(self, s):
        return self.a + self.b * self.field.evaluate(self.points(s))

    def phase_rate(self):
        return float(np.max(np.abs(self.vel))) if self.vel.size else 0.0

    def default_step(self, points_per_unit_phase=50.0, cap=0.02):
        rate = self.phase_rate()
        return cap if rate == 0.0 else min(cap, 1.0 / (points_per_unit_phase * rate))

    def sample(self, s):
        """Signed sources and kernel traces for all i at the nodes ``s``.

        Returns ``(A, K)`` of shape ``(N, q + 1)``; column ``i`` holds
        ``sigma(I_i u)`` and ``sigma(I_i M I_i)``.
        """
        s = np.asarray(s, dtype=float)
        q = self.dim
        A = np.empty((s.size, q + 1))
        K = np.empty((s.size, q + 1))
        for lo in range(0, s.size, CHUNK):
            sl = s[lo:lo + CHUNK]
            pts = self.points(sl)
            if self.source is None:
                u = self.rate - (self.a + self.b * self.field.evaluate(pts))
            else:
                u = np.asarray(self.source(sl), dtype=float).reshape(sl.size, q)
            m = self.b * self.field.jacobian(pts)
            if self.weights is not None:
                u = u / self.weights
                m = m * (self.weights[None, None, :] / self.weights[None, :, None])
            A[lo:lo + sl.size] = signed_sums(u)
            K[lo:lo + sl.size] = kernel_traces(m)
        return A, K

    def psi_params(self, i):
        """Packed parameters for the compiled scalar ODE, or None."""
        if self.source is not None or getattr(self.field, "packed", None) is None:
            return None
        return _rhs.pack_psi(self.field.packed, i, self.a, self.b, self.base, self.vel,
                             self.rate, self.weights)


def direct_line(field, x0, rho, weights=None):
    """Line ``x0 + s rho`` with source ``rho - f``: the unconjugated form."""
    x0 = np.asarray(x0, dtype=float).reshape(field.dim)
    rho = np.asarray(rho, dtype=float).reshape(field.dim)
    w = None if weights is None else np.asarray(weights, dtype=float).reshape(field.dim)
    if w is not None and np.any(w <= 0):
        raise ValueError("conjugation weights must be positive")
    return AffineLine(field, x0, rho, rho, weights=w)


def _check_index(i, q):
    if not 0 <= i <= q:
        raise ValueError(f"index {i} outside 0..{q}")


@dataclass(frozen=True)
class PsiCurve:
    index: int
    rho: np.ndarray
    x0: np.ndarray
    t: np.ndarray
    values: np.ndarray
    method: str
    form: str = "direct"

    def to_csv(self, path=None):
        buf = io.StringIO()
        buf.write("t,value\n")
        for tk, v in zip(self.t, self.values):
            buf.write(f"{fmt(tk)},{fmt(v)}\n")
        text = buf.getvalue()
        if path is not None:
            with open(path, "w", newline="") as fh:
                fh.write(text)
        return text


def psi_curves_on_grid(line, t, h=None):
    """All curves ``Psi_0..Psi_q`` on a uniform grid from 0 to ``t``.

    Returns ``(nodes, values)`` with ``values`` shaped ``(N, q + 1)``.  The
    inner integral is accumulated once as ``G`` and the outer one as
    ``exp(G(t)) * cumsum(A exp(-G))``.
    """
    if h is None:
        h = min(DEFAULT_STEP, line.default_step())
    nodes, step = uniform_grid(t, h)
    A, K = line.sample(nodes)
    q = line.dim
    G = cumulative_simpson(K, step) / q
    worst = np.max(np.abs(G), axis=0)
    if np.any(worst > EXP_LIMIT):
        i = int(np.argmax(worst))
        j = int(np.argmax(np.abs(G[:, i])))
        raise KernelOverflowError(i, float(nodes[j]), float(G[j, i]))
    inner = cumulative_simpson(A * np.exp(-G), step)
    return nodes, np.exp(G) * inner


def coefficient_A(field, x0, rho, i, s):
    """``sigma(I_i (rho - f(s rho + x0)))`` (scalar or array in ``s``)."""
    _check_index(i, field.dim)
    line = direct_line(field, x0, rho)
    s_arr = np.atleast_1d(np.asarray(s, dtype=float))
    u = line.rate - line.values(s_arr)
    vals = Involution(i, field.dim).apply(u).sum(axis=-1)
    return float(vals[0]) if np.ndim(s) == 0 else vals


def psi_quadrature(field, x0, rho, i, t, h=DEFAULT_STEP, weights=None):
    """``Psi_i(rho, t)`` by composite Simpson with a cumulative inner integral."""
    _check_index(i, field.dim)
    line = direct_line(field, x0, rho, weights)
    _, vals = psi_curves_on_grid(line, t, h)
    return float(vals[-1, i])


def psi_quadrature_curve(field, x0, rho, i, t, h=DEFAULT_STEP, weights=None):
    _check_index(i, field.dim)
    line = direct_line(field, x0, rho, weights)
    nodes, vals = psi_curves_on_grid(line, t, h)
    form = "direct" if weights is None else "conjugated"
    return PsiCurve(i, line.rate, line.base, nodes, vals[:, i], "quadrature", form)


def line_ode(line, i, times, tol=1e-12):
    """Solve the scalar linear ODE for ``Psi_i`` along ``line``; values at ``times``."""
    times = np.asarray(times, dtype=float)
    a = min(0.0, float(times.min()))
    b = max(0.0, float(times.max()))
    p = line.psi_params(i)
    if p is not None:
        core = _dopri.core_for("psi")
    else:
        q = line.dim

        def rhs(t, y, _p):
            A, K = line.sample(np.array([t]))
            return np.array([A[0, i] + K[0, i] * y[0] / q])

        core = _dopri.python_core(rhs)
        p = np.zeros(1)
    traj = run_two_sided(core, np.zeros(1), p, (a, b), tol)
    return traj.state_at(times)[:, 0], traj


def psi_ode(field, x0, rho, i, times, tol=1e-12, weights=None):
    """``Psi_i`` by adaptive integration of its one-dimensional ODE.

    ``times`` may be negative; the ODE is integrated both ways from 0.
    """
    _check_index(i, field.dim)
    line = direct_line(field, x0, rho, weights)
    vals, _ = line_ode(line, i, times, tol)
    form = "direct" if weights is None else "conjugated"
    return PsiCurve(i, line.rate, line.base, np.asarray(times, dtype=float), vals, "ode", form)


@dataclass(frozen=True)
class ResidualReport:
    """``R_i(t) = (Psi_0 - Psi_i) / t`` at log-spaced times, with tail fits."""

    rho: np.ndarray
    horizon: float
    t: np.ndarray
    values: np.ndarray
    limit: np.ndarray
    stderr: np.ndarray

    def max_limit(self):
        return float(np.max(np.abs(self.limit))) if self.limit.size else 0.0

    def to_csv(self, path=None):
        q = self.values.shape[1]
        buf = io.StringIO()
        buf.write("t," + ",".join(f"R_{i + 1}" for i in range(q)) + "\n")
        for tk, row in zip(self.t, self.values):
            buf.write(fmt(tk) + "," + ",".join(fmt(v) for v in row) + "\n")
        text = buf.getvalue()
        if path is not None:
            with open(path, "w", newline="") as fh:
                fh.write(text)
        return text


def residual_from_line(line, T, samples=48, h=None, t_first=1.0, tail_points=4096):
    if T < 100.0:
        raise HorizonError(f"residual needs a horizon >= 100, got {T:g}")
    if h is None:
        h = line.default_step()
    nodes, vals = psi_curves_on_grid(line, T, h)
    D = vals[:, :1] - vals[:, 1:]
    targets = np.geomspace(t_first, T, samples)
    idx = np.unique(np.clip(np.searchsorted(nodes, targets), 1, nodes.size - 1))
    tk = nodes[idx]
    R = D[idx] / tk[:, None]
    # slope of Psi_0 - Psi_i over the last decade: offsets do not bias it
    first = int(np.searchsorted(nodes, T / 10.0))
    sel = np.unique(np.linspace(first, nodes.size - 1, tail_points).astype(int))
    X = np.stack([np.ones(sel.size), nodes[sel]], axis=1)
    coef, *_ = np.linalg.lstsq(X, D[sel], rcond=None)
    fit = D[sel] - X @ coef
    dof = max(sel.size - 2, 1)
    tc = nodes[sel] - nodes[sel].mean()
    stderr = np.sqrt(np.sum(fit ** 2, axis=0) / dof / np.dot(tc, tc))
    return ResidualReport(line.rate, float(T), tk, R, coef[1], stderr)


def residual(field, x0, rho, T, samples=48, h=None, weights=None):
    """Residuals of the rotation-vector equations at ``rho`` up to horizon T.

    ``limit`` estimates ``lim (Psi_0 - Psi_i) / t`` as the least-squares
    slope of ``Psi_0 - Psi_i`` over the last decade; ``stderr`` is the
    slope's standard error (oscillation, not noise, so only indicative).
    """
    line = direct_line(field, x0, rho, weights)
    return residual_from_line(line, T, samples, h)


@dataclass(frozen=True)
class SignProfile:
    """``tau_i = -Sign(lambda_i)`` with ``Sign(0) = +1``, for i = 1..q."""

    tau: np.ndarray
    lam: np.ndarray
    lam0: float
    horizon: float


def sign_of_average(lam):
    return np.where(np.asarray(lam) >= 0.0, -1.0, 1.0)


def kernel_averages(line, T, h=None):
    """Time averages over ``[0, T]`` of ``sigma(I_i M I_i)``, i = 0..q."""
    if h is None:
        h = line.default_step()
    nodes, step = uniform_grid(T, h)
    _, K = line.sample(nodes)
    return simpson(K, step) / T


def autonomous_line(g, z, tau=1.0):
    """Line ``tau * s * z`` through the origin with the weight-``z`` conjugation."""
    z = np.asarray(z, dtype=float).reshape(g.dim)
    return AffineLine(g, np.zeros(g.dim), tau * z, z, weights=z)


def tau_signs(g, z, T=1000.0, h=None):
    """Sign profile of ``g`` along ``nu * z`` (conjugated by ``z``).

    ``g`` is a normalized field (anything with a ``line(z, tau)`` method) or
    a plain field, in which case the line through the origin is used.
    """
    z = np.asarray(z, dtype=float)
    if np.any(z <= 0):
        raise ValueError("z must be entrywise positive")
    if T < 100.0:
        raise HorizonError(f"sign profile needs a horizon >= 100, got {T:g}")
    line = g.line(z, 1.0) if hasattr(g, "line") else autonomous_line(g, z)
    lam = kernel_averages(line, T, h)
    return SignProfile(sign_of_average(lam[1:]), lam[1:], float(lam[0]), float(T))
