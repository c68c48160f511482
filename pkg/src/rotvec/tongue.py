"""Locking under time-dependent perturbations and two-parameter locking scans.

``perturbation_criterion`` tests whether ``Psi_0[zeta] - Psi_i[zeta]`` stays
bounded, where the source of ``Psi_i[zeta]`` is ``sigma(I_i zeta(s))`` and
the kernel is the one of the unperturbed line ``s rho + x0``.  Bounded
differences mean the perturbed flow keeps the rotation vector ``rho``.

``tongue_scan`` estimates the rotation vector on every cell of a parameter
grid and flags cells whose value sits on a rational plateau.
"""
import io
import json
import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field as dc_field
from fractions import Fraction
from typing import Callable, Optional

import numpy as np

from . import _dopri, _models, _rhs
from ._accel import USE_NUMBA, thread_count
from .field import ModelError, ModelSpec, make_model
from .flow import DEFAULT_TOL, HorizonError, IntegrationError, fmt, integrate, rotation_estimate
from .growth import SLOPE_TOL, T_MIN, growth_verdict
from .psi import AffineLine, psi_curves_on_grid

TAGS = ("decaying", "bounded", "growing")
LOCK_TOL = 1e-3
MAX_DENOMINATOR = 8


@dataclass(frozen=True, eq=False)
class Perturbation:
    """``zeta(t) = profile(t) * vec`` or an arbitrary callable.

    ``func`` maps an array of times to ``(..., n)``.  ``builtin`` is set for
    the shipped profiles, ``(kind, width, vec)``, so that simulations can use
    the compiled right-hand side.  ``tag`` is the caller's integrability claim.
    """

    func: Callable
    tag: str
    dim: int
    builtin: Optional[tuple] = None
    name: str = "custom"

    def __post_init__(self):
        if self.tag not in TAGS:
            raise ValueError(f"integrability tag must be one of {', '.join(TAGS)}, got {self.tag!r}")

    def __call__(self, t):
        t = np.asarray(t, dtype=float)
        return np.asarray(self.func(t), dtype=float).reshape(t.shape + (self.dim,))

    def evaluate(self, t):
        return self(np.asarray(float(t)))


_DEFAULT_TAGS = {"zero": "decaying", "constant": "bounded", "gaussian": "decaying",
                 "exp-decay": "decaying", "lorentzian": "decaying", "sine": "bounded"}

_PROFILES = {
    "zero": lambda u: np.zeros_like(u),
    "constant": lambda u: np.ones_like(u),
    "gaussian": lambda u: np.exp(-u * u),
    "exp-decay": lambda u: np.exp(-np.abs(u)),
    "lorentzian": lambda u: 1.0 / (1.0 + u * u),
    "sine": lambda u: np.sin(2.0 * math.pi * u),
}


def builtin_perturbation(kind, vec, width=1.0, tag=None):
    """One of the shipped profiles times a constant vector.

    ``kind``: zero, constant, gaussian (``exp(-(t/w)^2)``), exp-decay
    (``exp(-|t|/w)``), lorentzian (``1/(1+(t/w)^2)``), sine (``sin(2 pi t/w)``).
    """
    if kind not in _rhs.ZETA_KINDS:
        raise ValueError(f"unknown perturbation {kind!r}; expected one of {', '.join(_rhs.ZETA_KINDS)}")
    if width <= 0:
        raise ValueError("perturbation width must be positive")
    vec = np.atleast_1d(np.asarray(vec, dtype=float))
    prof = _PROFILES[kind]
    w = float(width)

    def func(t):
        return prof(np.asarray(t, dtype=float) / w)[..., None] * vec

    return Perturbation(func, tag or _DEFAULT_TAGS[kind], vec.size,
                        (_rhs.ZETA_KINDS[kind], w, vec), kind)


@dataclass(frozen=True)
class CriterionResult:
    """``locked`` iff every ``|Psi_0[zeta] - Psi_i[zeta]|`` passes the window test."""

    locked: bool
    verdicts: list
    horizon: float

    def as_dict(self):
        return {"locked": self.locked, "horizon": self.horizon,
                "differences": [v.as_dict() for v in self.verdicts]}


def perturbation_criterion(field, x0, rho, zeta, T, h=None, slope_tol=SLOPE_TOL, t_min=T_MIN):
    """Boundedness of ``Psi_0[zeta] - Psi_i[zeta]`` along ``s rho + x0`` on ``[-T, T]``."""
    if T < 100.0:
        raise HorizonError(f"perturbation criterion needs a horizon >= 100, got {T:g}")
    q = field.dim
    if zeta.dim != q:
        raise ValueError(f"perturbation has dimension {zeta.dim}, field has {q}")
    x0 = np.asarray(x0, dtype=float).reshape(q)
    rho = np.asarray(rho, dtype=float).reshape(q)
    line = AffineLine(field, x0, rho, rho, source=zeta)
    if h is None:
        h = min(0.01, line.default_step())
    ts, ds = [], []
    for end in (-T, T):
        nodes, vals = psi_curves_on_grid(line, end, h)
        ts.append(nodes)
        ds.append(vals[:, :1] - vals[:, 1:])
    t = np.concatenate([ts[0][:0:-1], ts[1]])
    d = np.concatenate([ds[0][:0:-1], ds[1]])
    verdicts = [growth_verdict(t, np.abs(d[:, i]), T, t_min, slope_tol) for i in range(q)]
    return CriterionResult(all(v.passed for v in verdicts), verdicts, float(T))


@dataclass(frozen=True)
class LockingComparison:
    """Empirical rotation vectors with and without the perturbation."""

    rho_unperturbed: np.ndarray
    rho_perturbed: np.ndarray
    tol: float

    @property
    def difference(self):
        return float(np.max(np.abs(self.rho_perturbed - self.rho_unperturbed)))

    @property
    def locked(self):
        return self.difference <= self.tol


def simulate_locking(field, x0, zeta, T=1e4, tol=DEFAULT_TOL, lock_tol=LOCK_TOL):
    """Compare tail-secant rotation vectors of ``x' = f(x)`` and ``y' = f(y) + zeta(t)``."""
    x = integrate(field, x0, (0.0, T), tol)
    y = integrate(field, x0, (0.0, T), tol, perturbation=zeta)
    return LockingComparison(rotation_estimate(x).rho, rotation_estimate(y).rho, lock_tol)


def shipped_perturbation_cases():
    """Six ``(name, field, zeta)`` cases: four integrable perturbations, two drifting ones."""
    const = make_model(ModelSpec("constant", {"omega": [1.0, 2.0]}))
    circle = make_model(ModelSpec("circle", {"c": 2.0, "eps": 0.1}))
    torus = make_model(ModelSpec("torus-product", {"c": [2.0, 3.0], "eps": [0.1, 0.1]}))
    return [
        ("zero-circle", circle, builtin_perturbation("zero", [0.0])),
        ("constant-drift", const, builtin_perturbation("constant", [0.3, 0.0])),
        ("gaussian-constant-field", const, builtin_perturbation("gaussian", [0.5, -0.4])),
        ("gaussian-circle", circle, builtin_perturbation("gaussian", [0.5], width=5.0)),
        ("exp-decay-torus", torus, builtin_perturbation("exp-decay", [0.2, -0.1], width=1.0)),
        ("constant-circle", circle, builtin_perturbation("constant", [0.05])),
    ]


# --- parameter scans -------------------------------------------------------

@dataclass(frozen=True)
class Family:
    """Two-parameter model family: ``build(p1, p2)`` returns a ModelSpec."""

    build: Callable
    name: str = "family"

    @classmethod
    def from_template(cls, model, params, name=None):
        """Template values are numbers or one of ``param1``, ``-param1``, ``param2``, ``-param2``."""

        def resolve(v, p1, p2):
            if isinstance(v, str):
                key = v.strip()
                sign = -1.0 if key.startswith("-") else 1.0
                key = key.lstrip("+-")
                if key not in ("param1", "param2"):
                    raise ModelError(f"template value {v!r} is not a parameter reference")
                return sign * (p1 if key == "param1" else p2)
            if isinstance(v, (list, tuple)):
                return [resolve(x, p1, p2) for x in v]
            return v

        def build(p1, p2):
            return ModelSpec(model, {k: resolve(v, p1, p2) for k, v in params.items()})

        return cls(build, name or model)


def arnold_family():
    """``x' = Omega - eps sin(2 pi x)`` with ``(param1, param2) = (Omega, eps)``."""
    return Family.from_template("circle", {"c": "param1", "eps": "-param2"}, "arnold")


def rational_targets(lo, hi, max_denominator=MAX_DENOMINATOR):
    vals = set()
    for q in range(1, max_denominator + 1):
        for p in range(math.floor(lo * q) - 1, math.ceil(hi * q) + 2):
            f = Fraction(p, q)
            if lo - 1.0 <= f <= hi + 1.0:
                vals.add(f)
    return sorted(vals)


@dataclass
class TongueGrid:
    """Per-cell rotation estimates on the grid ``axis1 x axis2``.

    ``rho[i, j]`` belongs to ``(axis1[i], axis2[j])``.  ``target[i, j]`` is the
    plateau value a locked cell matched (NaN when unlocked or failed);
    ``errors`` maps failed cells to their message.
    """

    axis1: np.ndarray
    axis2: np.ndarray
    rho: np.ndarray
    locked: np.ndarray
    target: np.ndarray
    horizon: float
    lock_tol: float
    tol: float
    errors: dict = dc_field(default_factory=dict)

    def locked_at(self, value):
        """Cells locked onto the plateau ``value``."""
        return self.locked & np.all(np.isclose(self.target, value, rtol=0, atol=1e-12), axis=-1)

    def to_csv(self, path=None):
        n = self.rho.shape[-1]
        buf = io.StringIO()
        buf.write("param1,param2," + ",".join(f"rho_{k + 1}" for k in range(n)) + ",locked\n")
        for i, a in enumerate(self.axis1):
            for j, b in enumerate(self.axis2):
                row = ",".join(fmt(v) for v in self.rho[i, j])
                buf.write(f"{fmt(a)},{fmt(b)},{row},{int(self.locked[i, j])}\n")
        text = buf.getvalue()
        if path is not None:
            with open(path, "w", newline="") as fh:
                fh.write(text)
        return text

    def metadata(self):
        return {"horizon": self.horizon, "lock_tol": self.lock_tol, "tol": self.tol,
                "shape": list(self.locked.shape), "locked_cells": int(self.locked.sum()),
                "failed_cells": {f"{i},{j}": msg for (i, j), msg in self.errors.items()}}

    def to_json(self, path=None):
        text = json.dumps(self.metadata(), indent=2)
        if path is not None:
            with open(path, "w") as fh:
                fh.write(text + "\n")
        return text


def _secant(core, p, x0, T, tol):
    """``(x(T) - x(T/2)) / (T/2)`` from two non-dense legs."""
    out = []
    y = np.ascontiguousarray(x0, dtype=float)
    for a, b in ((0.0, T / 2.0), (T / 2.0, T)):
        ts, ys, _, _, _, st = core(a, b, y, p, tol, 0.0, 0.0, np.inf, 500_000_000, 1e300, False)
        if st != _dopri.OK:
            raise IntegrationError(f"scan integration failed: {_dopri.STATUS_TEXT[st]}", status=st)
        y = ys[-1].copy()
        out.append(y)
    return (out[1] - out[0]) / (T / 2.0)


_DECOUPLED = (_models.CIRCLE, _models.TORUS)


def _batched_rates(fields, x0s, T, tol):
    """Rotation rates of decoupled fields, integrated together as one product flow."""
    c = np.concatenate([f.packed[2:2 + f.dim] for f in fields])
    eps = np.concatenate([f.packed[2 + f.dim:2 + 2 * f.dim] for f in fields])
    mp = np.concatenate([[_models.TORUS, c.size], c, eps])
    if USE_NUMBA:
        core = _dopri.core_for("flow")
        p = _rhs.pack_flow(mp)
    else:
        def rhs(t, y, _p):
            return _models.model_f_np(mp, y)

        core = _dopri.python_core(rhs)
        p = np.zeros(1)
    rates = _secant(core, p, np.concatenate(x0s), T, tol)
    return np.split(rates, np.cumsum([f.dim for f in fields])[:-1])


def _cell_rate(field, x0, T, tol):
    return rotation_estimate(integrate(field, x0, (0.0, T), tol, dense=True)).rho


def _classify(rho, targets, lock_tol):
    """Matched plateau value (per component) or None."""
    out = np.empty_like(rho)
    for k, v in enumerate(rho):
        best = min(targets, key=lambda f: abs(v - float(f)))
        if abs(v - float(best)) > lock_tol:
            return None
        out[k] = float(best)
    return out


def tongue_scan(family, axis1, axis2, horizon=1000.0, x0=None, tol=1e-8, lock_tol=LOCK_TOL,
                targets=None, threads=None, batch=1024):
    """Rotation vectors over the grid and their plateau classification.

    Cells of decoupled families (circle, torus-product) are integrated in
    batches as one product flow; other families cell by cell on up to
    ``threads`` workers.  The cell-to-result mapping is fixed by the grid
    index, so the outcome does not depend on scheduling.  A cell whose model
    cannot be built or integrated is recorded in ``errors`` and left NaN.
    """
    if horizon < 100.0:
        raise HorizonError(f"scan horizon must be >= 100, got {horizon:g}")
    a1 = np.asarray(axis1, dtype=float).ravel()
    a2 = np.asarray(axis2, dtype=float).ravel()
    cells = [(i, j) for i in range(a1.size) for j in range(a2.size)]
    errors = {}
    fields = {}
    for i, j in cells:
        try:
            fields[i, j] = make_model(family.build(a1[i], a2[j]))
        except (ModelError, ValueError) as exc:
            errors[i, j] = str(exc)
    dims = {f.dim for f in fields.values()}
    if len(dims) > 1:
        raise ModelError("family cells have different dimensions")
    n = dims.pop() if dims else 1
    start = np.zeros(n) if x0 is None else np.asarray(x0, dtype=float).reshape(n)
    rho = np.full((a1.size, a2.size, n), np.nan)

    ok = [c for c in cells if c in fields]
    decoupled = all(int(fields[c].packed[0]) in _DECOUPLED
                    for c in ok if fields[c].packed is not None) and \
        all(fields[c].packed is not None for c in ok)
    if decoupled:
        for lo in range(0, len(ok), batch):
            chunk = ok[lo:lo + batch]
            try:
                rates = _batched_rates([fields[c] for c in chunk], [start] * len(chunk),
                                       horizon, tol)
            except IntegrationError:
                rates = None
            for k, c in enumerate(chunk):
                if rates is not None:
                    rho[c] = rates[k]
                    continue
                try:
                    rho[c] = _cell_rate(fields[c], start, horizon, tol)
                except IntegrationError as exc:
                    errors[c] = str(exc)
    else:
        def work(c):
            try:
                return c, _cell_rate(fields[c], start, horizon, tol), None
            except IntegrationError as exc:
                return c, None, str(exc)

        workers = thread_count(threads)
        if workers > 1:
            with ThreadPoolExecutor(workers) as pool:
                results = list(pool.map(work, ok))
        else:
            results = [work(c) for c in ok]
        for c, r, err in results:
            if err is None:
                rho[c] = r
            else:
                errors[c] = err

    finite = rho[np.isfinite(rho)]
    if targets is None:
        lo = float(finite.min()) if finite.size else 0.0
        hi = float(finite.max()) if finite.size else 0.0
        targets = rational_targets(lo, hi)
    targets = [Fraction(t).limit_denominator(10 ** 6) if not isinstance(t, Fraction) else t
               for t in targets]
    locked = np.zeros((a1.size, a2.size), dtype=bool)
    matched = np.full_like(rho, np.nan)
    for c in ok:
        if c in errors:
            continue
        m = _classify(rho[c], targets, lock_tol)
        if m is not None:
            locked[c] = True
            matched[c] = m
    return TongueGrid(a1, a2, rho, locked, matched, float(horizon), float(lock_tol), float(tol),
                      errors)


@dataclass(frozen=True)
class BoundaryReport:
    """Per-row extent of the cells locked at ``value`` along ``axis1``."""

    axis2: np.ndarray
    lower: np.ndarray
    upper: np.ndarray
    contiguous: np.ndarray


def locked_extent(grid, value=0.0):
    """For each ``axis2`` value, the smallest and largest locked ``axis1`` value.

    ``contiguous[j]`` says whether the locked cells of column ``j`` form one
    interval along ``axis1``.
    """
    mask = grid.locked_at(value)
    lower = np.full(grid.axis2.size, np.nan)
    upper = np.full(grid.axis2.size, np.nan)
    contiguous = np.ones(grid.axis2.size, dtype=bool)
    for j in range(grid.axis2.size):
        idx = np.flatnonzero(mask[:, j])
        if idx.size:
            lower[j] = grid.axis1[idx[0]]
            upper[j] = grid.axis1[idx[-1]]
            contiguous[j] = bool(idx[-1] - idx[0] + 1 == idx.size)
    return BoundaryReport(grid.axis2, lower, upper, contiguous)
