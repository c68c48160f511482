"""Periodic vector fields on R^n and the shipped model zoo."""
import math
from dataclasses import dataclass, field as dc_field
from typing import Callable, Optional

import numpy as np

from . import _models
from .algebra import max_norm

FD_STEP = np.finfo(float).eps ** (1.0 / 3.0)

MODEL_NAMES = ("constant", "circle", "torus-product", "winfree-type")
_ALIASES = {"torus": "torus-product", "winfree": "winfree-type"}


class ModelError(ValueError):
    """Unknown model or parameters outside the admissible range."""


def _vectorized(func, x, n, out_tail):
    """Call ``func`` on a stack of points, looping if it is not vectorized."""
    x = np.asarray(x, dtype=float)
    try:
        y = np.asarray(func(x), dtype=float)
        if y.shape == x.shape[:-1] + out_tail:
            return y
    except (TypeError, ValueError, IndexError):
        pass
    flat = x.reshape(-1, n)
    rows = [np.asarray(func(p), dtype=float).reshape(out_tail) for p in flat]
    return np.array(rows).reshape(x.shape[:-1] + out_tail)


def finite_difference_jacobian(func, x, n):
    """Central differences with step ``eps**(1/3) * (1 + |x_j|)``."""
    x = np.asarray(x, dtype=float)
    out = np.empty(x.shape + (n,))
    for j in range(n):
        step = FD_STEP * (1.0 + np.abs(x[..., j]))
        xp = x.copy()
        xm = x.copy()
        xp[..., j] += step
        xm[..., j] -= step
        fp = _vectorized(func, xp, n, (n,))
        fm = _vectorized(func, xm, n, (n,))
        out[..., :, j] = (fp - fm) / (2.0 * step[..., None])
    return out


@dataclass(frozen=True, eq=False)
class PeriodicField:
    """A vector field ``f: R^n -> R^n`` with period 1 in every coordinate.

    ``func`` and ``jac`` receive arrays shaped ``(..., n)``.  When ``jac`` is
    omitted the Jacobian comes from central differences.  Shipped models also
    carry ``packed``, the flat parameter record used by compiled kernels, and
    analytic bounds on ``|f|``, ``|df|`` and ``|d^2 f|`` in the max-norm.
    """

    dim: int
    func: Callable
    jac: Optional[Callable] = None
    second_derivative_bound: float = math.inf
    name: str = "custom"
    params: dict = dc_field(default_factory=dict)
    packed: Optional[np.ndarray] = None
    sup_bound: Optional[float] = None
    jacobian_bound: Optional[float] = None

    def __call__(self, x):
        return self.evaluate(x)

    def evaluate(self, x):
        return _vectorized(self.func, x, self.dim, (self.dim,))

    def jacobian(self, x):
        if self.jac is None:
            return finite_difference_jacobian(self.func, x, self.dim)
        return _vectorized(self.jac, x, self.dim, (self.dim, self.dim))

    @property
    def analytic_jacobian(self):
        return self.jac is not None

    def norms(self, samples=4096, seed=0):
        """``(sup |f|, sup |df|)`` in the max-norm over the unit cell.

        Analytic bounds are used when the model supplies them; otherwise the
        sup is estimated on random points of the unit cell.
        """
        if self.sup_bound is not None and self.jacobian_bound is not None:
            return self.sup_bound, self.jacobian_bound
        pts = np.random.default_rng(seed).random((samples, self.dim))
        fs = self.evaluate(pts)
        js = self.jacobian(pts)
        sup_f = self.sup_bound if self.sup_bound is not None else float(np.max(np.abs(fs)))
        if self.jacobian_bound is not None:
            sup_j = self.jacobian_bound
        else:
            sup_j = float(np.max(np.sum(np.abs(js), axis=-1)))
        return sup_f, sup_j


@dataclass(frozen=True)
class ModelSpec:
    name: str
    params: dict
    dim: Optional[int] = None


def _vec(params, key, name):
    if key not in params:
        raise ModelError(f"model {name!r} needs parameter {key!r}")
    v = np.atleast_1d(np.asarray(params[key], dtype=float)).ravel()
    if not np.all(np.isfinite(v)):
        raise ModelError(f"parameter {key!r} of {name!r} must be finite")
    return v


def _scalar(params, key, name, default=None):
    if key not in params:
        if default is None:
            raise ModelError(f"model {name!r} needs parameter {key!r}")
        return float(default)
    v = np.asarray(params[key], dtype=float)
    if v.size != 1 or not np.isfinite(v):
        raise ModelError(f"parameter {key!r} of {name!r} must be a finite scalar")
    return float(v.reshape(()))


def _from_packed(mp, name, params, d2, sup_f, sup_df):
    n = int(mp[1])
    return PeriodicField(
        dim=n,
        func=lambda x: _models.model_f_np(mp, x),
        jac=lambda x: _models.model_df_np(mp, x),
        second_derivative_bound=d2,
        name=name,
        params=params,
        packed=mp,
        sup_bound=sup_f,
        jacobian_bound=sup_df,
    )


def make_model(spec):
    """Instantiate a shipped model.

    ``constant``: ``f = omega``.  ``circle``: ``c + eps sin 2 pi x``.
    ``torus-product``: one circle field per coordinate.  ``winfree-type``:
    ``f_i = omega_i + (kappa/n) R(x_i) sum_j P(x_j)`` with ``P = 1 + cos``,
    ``R = -sin`` (both of ``2 pi x``).
    """
    name = _ALIASES.get(spec.name, spec.name)
    p = dict(spec.params)
    if name == "constant":
        omega = _vec(p, "omega", name)
        n = omega.size
        mp = np.concatenate([[_models.CONSTANT, n], omega])
        field = _from_packed(mp, name, {"omega": omega.tolist()}, 0.0, max_norm(omega), 0.0)
    elif name == "circle":
        c = _scalar(p, "c", name)
        eps = _scalar(p, "eps", name)
        mp = np.array([_models.CIRCLE, 1, c, eps], dtype=float)
        field = _from_packed(
            mp, name, {"c": c, "eps": eps},
            4.0 * math.pi ** 2 * abs(eps), abs(c) + abs(eps), 2.0 * math.pi * abs(eps),
        )
    elif name == "torus-product":
        c = _vec(p, "c", name)
        eps = _vec(p, "eps", name)
        if c.size != eps.size:
            raise ModelError("torus-product needs as many eps values as c values")
        if c.size < 2:
            raise ModelError("torus-product needs n >= 2 (use 'circle' for n = 1)")
        n = c.size
        mp = np.concatenate([[_models.TORUS, n], c, eps])
        field = _from_packed(
            mp, name, {"c": c.tolist(), "eps": eps.tolist()},
            4.0 * math.pi ** 2 * max_norm(eps), max_norm(np.abs(c) + np.abs(eps)),
            2.0 * math.pi * max_norm(eps),
        )
    elif name == "winfree-type":
        omega = _vec(p, "omega", name)
        kappa = _scalar(p, "kappa", name)
        if kappa < 0:
            raise ModelError("winfree-type coupling kappa must be >= 0")
        n = omega.size
        mp = np.concatenate([[_models.WINFREE, n, kappa], omega])
        field = _from_packed(
            mp, name, {"omega": omega.tolist(), "kappa": kappa},
            20.0 * math.pi ** 2 * kappa, max_norm(omega) + 2.0 * kappa, 6.0 * math.pi * kappa,
        )
    else:
        raise ModelError(f"unknown model {spec.name!r}; expected one of {', '.join(MODEL_NAMES)}")
    if spec.dim is not None and spec.dim != field.dim:
        raise ModelError(f"model {name!r} has dimension {field.dim}, spec says {spec.dim}")
    return field


def custom_field(func, dim, jac=None, second_derivative_bound=math.inf, name="custom"):
    """Wrap a user callable as a field (periodicity is not assumed)."""
    return PeriodicField(dim=dim, func=func, jac=jac, name=name,
                         second_derivative_bound=second_derivative_bound)


@dataclass(frozen=True)
class CheckReport:
    max_deviation: float
    tolerance: float
    samples: int

    @property
    def passed(self):
        return bool(self.max_deviation < self.tolerance)


def periodicity_check(field, sample_count=256, seed=0, tol=1e-10):
    """Max over random x and coordinates j of ``|f(x + e_j) - f(x)|``."""
    if sample_count < 1:
        raise ValueError("sample_count must be >= 1")
    rng = np.random.default_rng(seed)
    x = rng.uniform(-3.0, 3.0, (sample_count, field.dim))
    base = field.evaluate(x)
    worst = 0.0
    for j in range(field.dim):
        shifted = x.copy()
        shifted[:, j] += 1.0
        worst = max(worst, float(np.max(np.abs(field.evaluate(shifted) - base))))
    return CheckReport(worst, tol, sample_count)


def jacobian_check(field, sample_count=64, seed=0, step=1e-6, tol=1e-5):
    """Analytic Jacobian against central differences with a fixed step."""
    rng = np.random.default_rng(seed)
    x = rng.uniform(0.0, 1.0, (sample_count, field.dim))
    analytic = field.jacobian(x)
    worst = 0.0
    for j in range(field.dim):
        xp = x.copy()
        xm = x.copy()
        xp[:, j] += step
        xm[:, j] -= step
        col = (field.evaluate(xp) - field.evaluate(xm)) / (2.0 * step)
        worst = max(worst, float(np.max(np.abs(col - analytic[:, :, j]))))
    return CheckReport(worst, tol, sample_count)
