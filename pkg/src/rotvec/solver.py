"""Rotation vectors from the finite-horizon fixed-point problem Gamma_k(z) = z.

The field is first normalized: with constants ``c`` and ``gamma`` the lifted
system ``z' = c + gamma f(z + x0 - c t)`` has all velocities above ``1 + beta``
and a Jacobian of size ``gamma |df|``.  A fixed point ``z*`` of Gamma_k
approximates its rotation vector and ``rho = (z* - c) / gamma`` is returned.
"""
import io
import math
import warnings
from dataclasses import dataclass, field as dc_field
from typing import Optional

import numpy as np

from . import _gamma
from ._accel import USE_NUMBA
from .algebra import max_norm
from .flow import fmt
from .psi import (EXP_LIMIT, AffineLine, KernelOverflowError, residual, sign_of_average)

SMALLNESS_THRESHOLD = 0.1
DEFAULT_BETA = 0.5
DEFAULT_ALPHA = 0.5
DEFAULT_TOL = 1e-11
DEFAULT_SPAN = 4e4
POINTS_PER_PHASE = 50.0
MIN_INTERVALS = 256


class SolverError(RuntimeError):
    pass


class SmallnessError(SolverError):
    """Requested parameters are outside the small-coupling regime."""


class NormalizationError(ValueError):
    """Inconsistent normalization constants (a configuration problem)."""


class DegenerateDenominatorError(SolverError):
    pass


class ConeViolationError(SolverError):
    def __init__(self, message, z=None):
        super().__init__(message)
        self.z = z


class IterationError(SolverError):
    def __init__(self, message, history=None):
        super().__init__(message)
        self.history = history or []


@dataclass(frozen=True, eq=False)
class NormalizedField:
    """``g(z, s) = c + gamma f(z + x0 - c s)`` for a periodic field ``f``.

    Along the ray ``(s z, s)`` this is ``c + gamma f(x0 + s (z - c))``.
    """

    field: object
    x0: np.ndarray
    c: float
    gamma: float
    beta: float = DEFAULT_BETA

    def __post_init__(self):
        if not 0.0 < self.gamma < 1.0:
            raise NormalizationError(f"gamma must lie in (0, 1), got {self.gamma:g}")
        sup_f, _ = self.field.norms()
        need = 1.0 + self.beta + self.gamma * sup_f
        if not self.c > need:
            raise NormalizationError(
                f"c = {self.c:g} must exceed 1 + beta + gamma |f| = {need:.6g}")

    @property
    def dim(self):
        return self.field.dim

    def evaluate(self, z, s):
        z = np.asarray(z, dtype=float)
        s = np.asarray(s, dtype=float)
        return self.c + self.gamma * self.field.evaluate(z + self.x0 - self.c * s[..., None])

    @property
    def lower_bound(self):
        return self.c - self.gamma * self.field.norms()[0]

    @property
    def sup_norm(self):
        return abs(self.c) + self.gamma * self.field.norms()[0]

    @property
    def jacobian_bound(self):
        return self.gamma * self.field.norms()[1]

    def line(self, z, tau=1.0, conjugate=True):
        """The ray ``tau s (z, 1)`` as an :class:`AffineLine` in f-coordinates."""
        z = np.asarray(z, dtype=float).reshape(self.dim)
        return AffineLine(self.field, np.asarray(self.x0, dtype=float), tau * (z - self.c), z,
                          a=self.c, b=self.gamma, weights=z if conjugate else None)

    def to_rotation(self, z):
        return (np.asarray(z, dtype=float) - self.c) / self.gamma

    def from_rotation(self, rho):
        return self.c + self.gamma * np.asarray(rho, dtype=float)


def cone_parameter_range(gamma_eff, q, g_norm, beta):
    """Open interval of cone sizes L allowed by the two smallness inequalities.

    ``gamma_eff`` bounds the Jacobian of the normalized field.  Returns
    ``(lo, hi)`` or None when no L > 1 qualifies.
    """
    x = q * math.expm1(2.0 * gamma_eff) * g_norm
    if x <= 0.0:
        return 1.0, math.inf
    disc = 1.0 - 2.0 * x
    if disc <= 0.0:
        return None
    lo = max(1.0, (1.0 - math.sqrt(disc)) / x)
    hi = min((1.0 + math.sqrt(disc)) / x, 2.0 * beta / x)
    return (lo, hi) if hi > lo else None


def default_cone_parameter(rng):
    lo, hi = rng
    if math.isinf(hi):
        return max(3.0, lo + 1.0)
    return lo + 0.9 * (hi - lo)


def in_cone(z, L, g_norm):
    z = np.asarray(z, dtype=float)
    return bool(np.all(z > 1.0) and max_norm(z) <= (L - 1.0) * g_norm)


@dataclass(frozen=True)
class GammaState:
    z: np.ndarray
    k: float
    image: np.ndarray
    zeta: np.ndarray
    tau: np.ndarray
    lam: np.ndarray
    in_cone: Optional[bool] = None

    @property
    def residual(self):
        return max_norm(self.image - self.z)


def grid_intervals(g, z, k, points_per_phase=POINTS_PER_PHASE):
    rate = max_norm(np.asarray(z, dtype=float) - g.c)
    n = max(MIN_INTERVALS, int(math.ceil(k * rate * points_per_phase)))
    return n + n % 2


def _oriented_sums(g, z, tau, k, n_intervals):
    line = g.line(z, 1.0)  # the kernels apply the orientation themselves
    packed = getattr(g.field, "packed", None)
    if USE_NUMBA and packed is not None:
        out = _gamma.gamma_sums_loop(packed, float(g.c), float(g.gamma), np.asarray(g.x0, float),
                                     line.vel, line.weights, float(tau), float(k), int(n_intervals))
    else:
        out = _gamma.gamma_sums_np(line, float(tau), float(k), int(n_intervals))
    if out[5] > EXP_LIMIT:
        raise KernelOverflowError(-1, float(k), float(out[5]))
    return out


def _combine(sums, tau, q):
    S1, S4, S5, S3, Ck, _ = sums
    e0 = np.exp(tau * Ck[0] / q)
    ei = np.exp(tau * Ck[1:] / q)
    theta = e0 * (S5 + 0.5 * S4) - 0.5 * ei * S3
    num = e0 * S1
    zeta = 0.5 * (e0 * S4 - ei * S3) / (e0 * S5)
    return num, theta, zeta


def level_signs(g, z, k, n_intervals=None):
    """``tau_i`` from kernel averages over the finite horizon ``[0, k]``."""
    if n_intervals is None:
        n_intervals = grid_intervals(g, z, k)
    sums = _oriented_sums(g, z, 1.0, k, n_intervals)
    lam = sums[4] / k
    return sign_of_average(lam[1:]), lam, sums


def gamma_map(g, z, k, tau=None, n_intervals=None, L=None):
    """Evaluate ``Gamma_k(z)`` with per-component orientation ``tau``.

    When ``tau`` is None it is measured on ``[0, k]``.  Also returns the
    ``zeta_i`` diagnostics and, if ``L`` is given, whether ``z`` lies in the
    cone ``V_L``.
    """
    z = np.asarray(z, dtype=float).reshape(g.dim)
    if np.any(z <= 0):
        raise ValueError("z must be entrywise positive")
    if k < 1:
        raise ValueError("horizon k must be >= 1")
    q = g.dim
    if n_intervals is None:
        n_intervals = grid_intervals(g, z, k)
    fwd = None
    lam = np.full(q + 1, np.nan)
    if tau is None:
        tau, lam, fwd = level_signs(g, z, k, n_intervals)
    tau = np.asarray(tau, dtype=float)
    image = np.empty(q)
    zeta = np.empty(q)
    for sgn in (1.0, -1.0):
        mask = tau == sgn
        if not np.any(mask):
            continue
        sums = fwd if (sgn == 1.0 and fwd is not None) else _oriented_sums(g, z, sgn, k, n_intervals)
        if sgn == 1.0:
            lam = sums[4] / k
        num, theta, zt = _combine(sums, sgn, q)
        if np.any(np.abs(theta[mask]) < 1e-12):
            raise DegenerateDenominatorError(f"Theta below 1e-12 at k = {k:g}")
        image[mask] = (num / theta)[mask]
        zeta[mask] = zt[mask]
    member = None if L is None else in_cone(z, L, g.sup_norm)
    return GammaState(z, float(k), image, zeta, tau.copy(), lam, member)


def theta_kernels(g, z, k, s, i, tau=None, h=None):
    """``(theta_0^i, theta_i, theta_0^i - theta_i)`` at ``s`` in ``[0, k]``.

    The exponents ``(tau/q) int_s^k sigma(...)`` are computed by composite
    Simpson directly on ``[s, k]``.
    """
    from .quadrature import simpson, uniform_grid

    z = np.asarray(z, dtype=float).reshape(g.dim)
    q = g.dim
    if not 1 <= i <= q:
        raise ValueError(f"index {i} outside 1..{q}")
    if tau is None:
        tau = level_signs(g, z, k)[0][i - 1]
    line = g.line(z, tau)
    if h is None:
        h = line.default_step()
    s_arr = np.atleast_1d(np.asarray(s, dtype=float))
    out = np.empty((s_arr.size, 3))
    for j, sj in enumerate(s_arr):
        if not 0.0 <= sj <= k:
            raise ValueError("s must lie in [0, k]")
        if sj == k:
            out[j] = (1.0, 1.0, 0.0)
            continue
        nodes, step = uniform_grid(k - sj, h)
        _, K = line.sample(sj + nodes)
        e0 = tau / q * simpson(K[:, 0], step)
        ei = tau / q * simpson(K[:, i], step)
        if max(abs(e0), abs(ei)) > EXP_LIMIT:
            raise KernelOverflowError(i, float(sj), float(max(abs(e0), abs(ei))))
        out[j] = (math.exp(e0), math.exp(ei), math.exp(e0) - math.exp(ei))
    if np.ndim(s) == 0:
        return tuple(out[0])
    return out[:, 0], out[:, 1], out[:, 2]


def default_k_schedule(gamma, span=DEFAULT_SPAN, start=25):
    """Doubling horizons from ``start`` until ``gamma * k`` reaches ``span``."""
    ks = [start]
    while gamma * ks[-1] < span:
        ks.append(ks[-1] * 2)
    return ks


@dataclass
class FixedPointResult:
    z: np.ndarray
    levels: list = dc_field(default_factory=list)
    residual_histories: list = dc_field(default_factory=list)
    taus: list = dc_field(default_factory=list)
    iterations: int = 0
    L: float = 0.0

    @property
    def final_residual(self):
        return self.residual_histories[-1][-1] if self.residual_histories else math.nan


def fixed_point(g, L=None, k_schedule=None, tol=DEFAULT_TOL, alpha=DEFAULT_ALPHA,
                max_iters=400, threshold=SMALLNESS_THRESHOLD, span=DEFAULT_SPAN):
    """Damped iteration ``z <- (1 - alpha) z + alpha Gamma_k(z)`` over a k schedule.

    The first evaluation from ``z0 = c 1`` is taken undamped; each later
    horizon is warm-started from the previous fixed point, with ``tau``
    measured once per horizon.  The schedule stops early once two
    consecutive horizons give fixed points within ``tol``.
    """
    q = g.dim
    if g.jacobian_bound > threshold:
        raise SmallnessError(
            f"gamma |df| = {g.jacobian_bound:.4g} exceeds the smallness threshold {threshold:g}")
    rng = cone_parameter_range(g.jacobian_bound, q, g.sup_norm, g.beta)
    if rng is None:
        raise SmallnessError(
            f"no cone size L satisfies the smallness inequalities at gamma |df| = "
            f"{g.jacobian_bound:.4g}, |g| = {g.sup_norm:.4g}; reduce gamma")
    if L is None:
        L = default_cone_parameter(rng)
    elif not rng[0] < L < rng[1]:
        raise NormalizationError(f"L = {L:g} outside the admissible range ({rng[0]:.4g}, {rng[1]:.4g})")
    if k_schedule is None:
        k_schedule = default_k_schedule(g.gamma, span)
    if any(b <= a for a, b in zip(k_schedule, k_schedule[1:])) or k_schedule[0] < 1:
        raise NormalizationError("k_schedule must be increasing integers >= 1")
    if not 0.0 < alpha <= 1.0:
        raise NormalizationError("damping alpha must lie in (0, 1]")

    g_norm = g.sup_norm
    z = np.full(q, float(g.c))
    result = FixedPointResult(z=z, L=L)
    first = True
    for k in k_schedule:
        n_int = grid_intervals(g, z, k)
        tau = None  # measured by the first evaluation at this level, then frozen
        history = []
        for _ in range(max_iters):
            state = gamma_map(g, z, k, tau=tau, n_intervals=n_int)
            tau = state.tau
            result.iterations += 1
            res = state.residual
            history.append(res)
            if res <= tol:
                break
            step = 1.0 if first else alpha
            first = False
            z = (1.0 - step) * z + step * state.image
            if not in_cone(z, L, g_norm):
                raise ConeViolationError(f"iterate left V_L at k = {k}: z = {z}", z=z)
            n_int = grid_intervals(g, z, k)
        else:
            raise IterationError(
                f"no convergence at k = {k} after {max_iters} iterations (residual {res:.3g})",
                history=result.residual_histories + [history])
        first = False
        settled = bool(result.levels) and max_norm(z - result.levels[-1][1]) <= tol
        result.levels.append((k, z.copy()))
        result.residual_histories.append(history)
        result.taus.append(tau)
        if settled:
            break
    result.z = z
    return result


@dataclass
class RotationFormulaResult:
    """Denormalized rotation vector with the solver's diagnostics.

    ``certificate`` holds the residual report of the rotation-vector
    equations at ``rho``; ``certified`` says whether its tail limit is below
    ``certificate_tol``.
    """

    rho: np.ndarray
    z: np.ndarray
    normalized: NormalizedField
    fixed_point: FixedPointResult
    certificate: Optional[object] = None
    certificate_tol: float = 1e-3
    warnings: list = dc_field(default_factory=list)

    @property
    def certified(self):
        return self.certificate is None or self.certificate.max_limit() <= self.certificate_tol

    def rho_sequence(self):
        g = self.normalized
        return [(k, g.to_rotation(z)) for k, z in self.fixed_point.levels]

    def diagnostics_csv(self, path=None):
        q = self.rho.size
        buf = io.StringIO()
        buf.write("k,iterations,final_residual," + ",".join(f"rho_{i + 1}" for i in range(q)) + "\n")
        for (k, rho), hist in zip(self.rho_sequence(), self.fixed_point.residual_histories):
            buf.write(f"{k},{len(hist)},{fmt(hist[-1])}," + ",".join(fmt(v) for v in rho) + "\n")
        text = buf.getvalue()
        if path is not None:
            with open(path, "w", newline="") as fh:
                fh.write(text)
        return text

    def as_dict(self):
        g = self.normalized
        out = {
            "rho": self.rho.tolist(),
            "z": self.z.tolist(),
            "c": g.c,
            "gamma": g.gamma,
            "beta": g.beta,
            "L": self.fixed_point.L,
            "iterations": self.fixed_point.iterations,
            "rho_k": [[k, r.tolist()] for k, r in self.rho_sequence()],
            "final_residual": self.fixed_point.final_residual,
            "warnings": list(self.warnings),
        }
        if self.certificate is not None:
            out["certificate"] = {
                "horizon": self.certificate.horizon,
                "limit": self.certificate.limit.tolist(),
                "stderr": self.certificate.stderr.tolist(),
                "certified": self.certified,
            }
        return out


def default_gamma(field, threshold=SMALLNESS_THRESHOLD, beta=DEFAULT_BETA):
    """Largest gamma (halving from the threshold) admitting a cone size L >= 2."""
    sup_f, sup_df = field.norms()
    gamma = 0.5 if sup_df == 0.0 else min(0.5, threshold / sup_df)
    for _ in range(60):
        c = default_c(sup_f, gamma, beta)
        rng = cone_parameter_range(gamma * sup_df, field.dim, abs(c) + gamma * sup_f, beta)
        if rng is not None and rng[1] > 2.0:
            return gamma
        gamma *= 0.5
    raise SmallnessError("could not find an admissible gamma")


def default_c(sup_f, gamma, beta=DEFAULT_BETA):
    return 1.0 + beta + gamma * sup_f + 1.0


def solve_rotation_formula(field, x0=None, c=None, gamma=None, L=None, k_schedule=None,
                           tol=DEFAULT_TOL, beta=DEFAULT_BETA, alpha=DEFAULT_ALPHA,
                           threshold=SMALLNESS_THRESHOLD, span=DEFAULT_SPAN,
                           certificate_horizon=1000.0, certificate_tol=1e-3, max_iters=400):
    """Rotation vector of ``x' = f(x)`` through the normalized fixed-point problem.

    Raises :class:`SmallnessError` when ``gamma |df|`` exceeds ``threshold``.
    A certificate residual above ``certificate_tol`` is reported as a warning
    and the result is still returned.
    """
    x0 = np.zeros(field.dim) if x0 is None else np.asarray(x0, dtype=float).reshape(field.dim)
    sup_f, sup_df = field.norms()
    if not (math.isfinite(sup_f) and math.isfinite(sup_df)):
        raise SolverError("field bounds are not finite")
    if gamma is None:
        gamma = default_gamma(field, threshold, beta)
    if gamma * sup_df > threshold:
        raise SmallnessError(
            f"gamma |df| = {gamma * sup_df:.4g} exceeds the smallness threshold {threshold:g} "
            f"(gamma = {gamma:g}, |df| = {sup_df:.4g})")
    if c is None:
        c = default_c(sup_f, gamma, beta)
    g = NormalizedField(field, x0, float(c), float(gamma), float(beta))
    fp = fixed_point(g, L=L, k_schedule=k_schedule, tol=tol, alpha=alpha, max_iters=max_iters,
                     threshold=threshold, span=span)
    rho = g.to_rotation(fp.z)
    out = RotationFormulaResult(rho, fp.z, g, fp, certificate_tol=certificate_tol)
    if certificate_horizon:
        out.certificate = residual(field, x0, rho, certificate_horizon)
        if not out.certified:
            msg = (f"certificate residual {out.certificate.max_limit():.3g} above "
                   f"{certificate_tol:g}")
            out.warnings.append(msg)
            warnings.warn(msg, RuntimeWarning, stacklevel=2)
    return out
