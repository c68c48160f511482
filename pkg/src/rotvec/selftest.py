"""Exact examples that every build must reproduce (``rotvec selftest``).

Each check returns ``(passed, detail)``; ``run_all`` never raises.
"""
import math
from types import SimpleNamespace

import numpy as np

from . import algebra, flow, leader, psi, riccati, solver, tongue
from .field import ModelSpec, custom_field, jacobian_check, make_model, periodicity_check

OMEGA = np.array([0.5, 2.0])
EXACT = 1e-12


def _const(omega=OMEGA):
    return make_model(ModelSpec("constant", {"omega": list(omega)}))


def _circle(c=2.0, eps=1.0):
    return make_model(ModelSpec("circle", {"c": c, "eps": eps}))


def _close(value, expected, tol=EXACT):
    err = float(np.max(np.abs(np.asarray(value, dtype=float) - np.asarray(expected, dtype=float))))
    return err <= tol, f"error {err:.3g}"


# --- algebra -------------------------------------------------------------------

def entry_sum():
    ok = (algebra.sum_entries([[1, 2], [3, 4]]) == 10.0
          and algebra.sum_entries(np.zeros((3, 3))) == 0.0
          and algebra.sum_entries(np.diag([-1.0, 1.0])) == 0.0)
    return ok, ""


def involution_square():
    y = np.random.default_rng(1).normal(size=5)
    ok = all(np.array_equal(algebra.involution(i, 5).apply(algebra.involution(i, 5).apply(y)), y)
             for i in range(6))
    return ok, ""


def component_recovery():
    y = np.array([3.0, 5.0])
    ok = algebra.recover_component(y, 1) == 3.0 and algebra.recover_component(y, 2) == 5.0
    r = np.random.default_rng(2).normal(size=7)
    ok = ok and all(abs(algebra.recover_component(r, i + 1) - r[i]) <= EXACT for i in range(7))
    return ok, ""


def ones_exp_at_zero():
    return all(np.array_equal(algebra.ones_exp(0.0, q), np.eye(q)) for q in (1, 2, 5)), ""


# --- field -------------------------------------------------------------------------

def field_values():
    ok = np.array_equal(_const().evaluate(np.array([0.3, 0.9])), OMEGA)
    c = _circle()
    ok = ok and abs(float(c.evaluate(np.array([0.25]))[0]) - 3.0) <= EXACT
    ok = ok and abs(float(c.jacobian(np.array([0.25]))[0, 0])) <= 1e-12
    ok = ok and abs(float(c.jacobian(np.array([0.0]))[0, 0]) - 2.0 * math.pi) <= EXACT
    return ok, ""


def periodicity():
    models = [_const(), _circle(),
              make_model(ModelSpec("torus", {"c": [2.0, 3.0], "eps": [0.1, 0.2]})),
              make_model(ModelSpec("winfree", {"omega": [1.0, 1.3], "kappa": 0.2}))]
    ok = all(periodicity_check(m).passed for m in models)
    ok = ok and periodicity_check(_const()).max_deviation == 0.0
    lin = periodicity_check(custom_field(lambda x: x, 1))
    ok = ok and not lin.passed and abs(lin.max_deviation - 1.0) <= 1e-9
    return ok, ""


def constant_jacobian():
    rep = jacobian_check(_const())
    return rep.max_deviation == 0.0, ""


# --- flow ----------------------------------------------------------------------------

def constant_flow():
    tol = 1e-10
    traj = flow.integrate(_const(), np.zeros(2), (0.0, 4.0), tol)
    ok, _ = _close(traj.state_at([4.0])[0], [2.0, 8.0], 10 * tol)
    fwd = flow.integrate(_circle(), np.zeros(1), (0.0, 4.0), tol)
    back = flow.integrate(_circle(), fwd.state_at([4.0])[0], (-4.0, 0.0), tol)
    err = abs(float(back.state_at([-4.0])[0][0]))
    return ok and err <= 10 * tol, f"round trip {err:.3g}"


def constant_rotation_estimate():
    traj = flow.integrate(_const(), np.zeros(2), (0.0, 200.0))
    return _close(flow.rotation_estimate(traj).rho, OMEGA, 1e-9)


def boundedness_examples():
    t = np.linspace(0.0, 1000.0, 20001)
    lam = np.array([0.7])
    exact = flow.boundedness_test(flow.Trajectory.from_samples(t, lam * t[:, None]), lam)
    wiggle = flow.boundedness_test(
        flow.Trajectory.from_samples(t, lam * t[:, None] + np.sin(t)[:, None]), lam)
    wrong = flow.boundedness_test(flow.Trajectory.from_samples(t, 0.8 * t[:, None]), lam)
    ok = exact.passed and exact.sup <= EXACT and wiggle.passed and abs(wiggle.sup - 1.0) < 1e-3
    return ok and not wrong.passed, f"sup {wiggle.sup:.4g}"


# --- psi ---------------------------------------------------------------------------------

def source_coefficient():
    f = _const([1.0, 2.0])
    s = np.array([0.0, 1.5, 7.0])
    ok = np.all(psi.coefficient_A(f, np.zeros(2), [1.0, 2.0], 1, s) == 0.0)
    ok = ok and np.all(psi.coefficient_A(f, np.zeros(2), [2.0, 2.0], 0, s) == 1.0)
    ok = ok and np.all(psi.coefficient_A(f, np.zeros(2), [2.0, 2.0], 1, s) == -1.0)
    return bool(ok), ""


def constant_psi():
    f = _const()
    rho = np.array([1.0, -1.0])
    ok = True
    for i in range(3):
        expected = algebra.sum_entries(algebra.involution(i, 2).apply(rho - OMEGA)) * 5.0
        ok = ok and abs(psi.psi_quadrature(f, np.zeros(2), OMEGA, i, 5.0)) <= EXACT
        ok = ok and abs(psi.psi_quadrature(f, np.zeros(2), rho, i, 5.0) - expected) <= 1e-10
        curve = psi.psi_ode(f, np.zeros(2), rho, i, np.array([0.0, 2.0, 5.0]))
        ok = ok and abs(curve.values[-1] - expected) <= 1e-9
    return ok, ""


def constant_residual():
    f = _const()
    zero = psi.residual(f, np.zeros(2), OMEGA, 100.0)
    rho = np.array([1.0, 1.5])
    off = psi.residual(f, np.zeros(2), rho, 100.0)
    ok = float(np.max(np.abs(zero.values))) <= EXACT
    ok = ok and float(np.max(np.abs(off.values - 2.0 * (rho - OMEGA)))) <= 1e-9
    return ok, ""


# --- solver ----------------------------------------------------------------------------------

def constant_gamma_map():
    g = solver.NormalizedField(_const([2.0, 3.0]), np.zeros(2), 4.0, 0.5)
    omega = g.evaluate(np.zeros(2), np.array(0.0))
    ok = True
    for z in (np.array([5.0, 5.5]), np.array([4.8, 6.2])):
        st = solver.gamma_map(g, z, 50.0)
        ok = ok and float(np.max(np.abs(st.image - omega))) <= 1e-12
    th = solver.theta_kernels(g, np.array([5.0, 5.5]), 50.0, 10.0, 1)
    ok = ok and abs(th[0] - 1.0) <= EXACT and abs(th[1] - 1.0) <= EXACT and abs(th[2]) <= EXACT
    fp = solver.fixed_point(g, k_schedule=[50.0])
    ok = ok and float(np.max(np.abs(fp.z - omega))) <= 1e-12 and fp.final_residual <= 1e-12
    return ok, ""


def constant_solve():
    res = solver.solve_rotation_formula(_const(), certificate_horizon=0)
    return _close(res.rho, OMEGA, 1e-9)


# --- leader ------------------------------------------------------------------------------------

def constant_leader():
    f = _const([1.0, 2.0])
    good = leader.leader_check(f, leader.AffineLeader([1.0, 2.0], 0.0), 200.0)
    bad = leader.leader_check(f, leader.AffineLeader([2.0, 4.0], 0.0), 200.0)
    ok = good.passed and float(np.max(np.abs(good.drifts))) <= EXACT
    ok = ok and not bad.bullet3 and abs(abs(bad.drifts[0]) - 2.0) <= 1e-6
    return ok, f"drift {bad.drifts[0]:.9g}"


def constant_distance():
    f = _const()
    exact = leader.leader_distance(f, leader.AffineLeader(OMEGA, 0.0), np.zeros(2), 200.0)
    ok = exact.passed and exact.D <= 1e-9
    wobble = leader.CurveLeader(lambda t: OMEGA * np.asarray(t)[..., None]
                                + 0.3 * np.sin(np.asarray(t))[..., None],
                                lambda t: OMEGA + 0.3 * np.cos(np.asarray(t))[..., None], 2)
    near = leader.leader_distance(f, wobble, np.zeros(2), 200.0)
    ok = ok and near.passed and abs(near.D - 0.3) <= 1e-3
    return ok, f"D {near.D:.4g}"


# --- riccati -------------------------------------------------------------------------------------

def riccati_closed_forms():
    run = riccati.riccati_simulate(riccati.RiccatiSystem.zero(2), (-5.0, 5.0))
    ok = float(np.max(np.abs(run.trajectory.x))) == 0.0
    lin = riccati.riccati_simulate(riccati.RiccatiSystem.constant([0.7], [[0.0]], [[[0.0]]]),
                                   (-5.0, 5.0))
    ok = ok and float(np.max(np.abs(lin.trajectory.x[:, 0] - 0.7 * lin.trajectory.t))) <= 1e-9
    return ok, ""


def riccati_hypotheses():
    zero = riccati.hypothesis_check(riccati.RiccatiSystem.zero(1), 100.0)
    # sup |B| = 1 is outside the declared-bound range, so pass a bare bundle
    sine = SimpleNamespace(dim=1, A=lambda t: np.zeros(np.shape(t) + (1,)),
                           B=lambda t: np.sin(2.0 * math.pi * np.asarray(t))[..., None, None],
                           trig=None)
    drift = riccati.RiccatiSystem.constant([0.0], [[0.1]], [[[0.0]]])
    ok = zero.h1_passed and zero.part1.sup == 0.0
    ok = ok and riccati.hypothesis_check(sine, 100.0).h1_passed
    ok = ok and not riccati.hypothesis_check(drift, 100.0).part1.passed
    bound = riccati.boundedness_verdict(riccati.RiccatiSystem.zero(2), 100.0)
    return ok and bound.passed and bound.sup == 0.0, ""


def linearize_exact_leader():
    f = _const()
    sys_ = riccati.linearize(f, leader.AffineLeader(OMEGA, [0.1, 0.2]), [0.1, 0.2])
    t = np.linspace(-20.0, 20.0, 41)
    ok = float(np.max(np.abs(sys_.A(t)))) == 0.0 and float(np.max(np.abs(sys_.B(t)))) == 0.0
    return ok, ""


# --- tongue ------------------------------------------------------------------------------------------

def perturbation_examples():
    f = _circle()
    zero = tongue.perturbation_criterion(f, np.zeros(1), [math.sqrt(3.0)],
                                         tongue.builtin_perturbation("zero", [0.0]), 200.0)
    c = _const([1.0, 2.0])
    drift = tongue.perturbation_criterion(c, np.zeros(2), [1.0, 2.0],
                                          tongue.builtin_perturbation("constant", [0.3, 0.0]), 200.0)
    return zero.locked and not drift.locked, ""


def arnold_zero_row():
    axis1 = np.linspace(-1.0, 1.0, 21)
    grid = tongue.tongue_scan(tongue.arnold_family(), axis1, [0.0], horizon=200.0)
    ok = float(np.max(np.abs(grid.rho[:, 0, 0] - axis1))) <= 1e-9
    at0 = grid.locked_at(0.0)[:, 0]
    ok = ok and bool(at0[10]) and int(at0.sum()) == 1
    return ok, ""


CHECKS = [
    ("entry sum", entry_sum),
    ("involution squares to identity", involution_square),
    ("component recovery", component_recovery),
    ("ones-matrix exponential at zero", ones_exp_at_zero),
    ("model values and derivatives", field_values),
    ("periodicity check", periodicity),
    ("constant field Jacobian", constant_jacobian),
    ("constant flow and reversibility", constant_flow),
    ("constant rotation estimate", constant_rotation_estimate),
    ("boundedness test examples", boundedness_examples),
    ("source coefficient", source_coefficient),
    ("constant-field psi", constant_psi),
    ("constant-field residual", constant_residual),
    ("constant gamma map and fixed point", constant_gamma_map),
    ("constant solve", constant_solve),
    ("constant leader", constant_leader),
    ("constant leader distance", constant_distance),
    ("riccati closed forms", riccati_closed_forms),
    ("riccati hypotheses", riccati_hypotheses),
    ("linearization along exact solution", linearize_exact_leader),
    ("perturbation verdicts", perturbation_examples),
    ("arnold family at zero amplitude", arnold_zero_row),
]


def run_all(checks=None):
    out = []
    for name, fn in checks or CHECKS:
        try:
            ok, detail = fn()
        except Exception as exc:  # a crash is a failed check, not a crashed suite
            ok, detail = False, f"{type(exc).__name__}: {exc}"
        out.append((name, bool(ok), detail))
    return out
