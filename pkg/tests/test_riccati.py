from types import SimpleNamespace

import numpy as np
import pytest
from scipy import integrate as sp_integrate

from rotvec import leader, riccati, solver

from conftest import OMEGA, model


def rk4(a, b, h, t_end, steps):
    """Fixed-step classical Runge-Kutta for the scalar constant-coefficient case."""
    f = lambda y: a + b * y + h * y * y
    dt = t_end / steps
    y = 0.0
    out = [y]
    for _ in range(steps):
        k1 = f(y)
        k2 = f(y + 0.5 * dt * k1)
        k3 = f(y + 0.5 * dt * k2)
        k4 = f(y + dt * k3)
        y += dt / 6.0 * (k1 + 2 * k2 + 2 * k3 + k4)
        out.append(y)
    return np.linspace(0.0, t_end, steps + 1), np.array(out)


SCALAR = riccati.RiccatiSystem.constant([0.1], [[-0.2]], [[[0.05]]])


def test_zero_system_is_identically_zero():
    sys_ = riccati.RiccatiSystem.zero(2)
    run = riccati.riccati_simulate(sys_, (-20.0, 20.0))
    assert not run.blew_up and np.max(np.abs(run.trajectory.x)) == 0.0
    hyp = riccati.hypothesis_check(sys_, 100.0)
    assert hyp.passed and np.max(np.abs(hyp.psi)) == 0.0
    bound = riccati.boundedness_verdict(sys_, 100.0)
    assert bound.passed and bound.sup == 0.0


def test_pure_source_is_linear():
    run = riccati.riccati_simulate(riccati.RiccatiSystem.constant([0.7], [[0.0]], [[[0.0]]]),
                                   (-5.0, 5.0))
    assert np.allclose(run.trajectory.x[:, 0], 0.7 * run.trajectory.t, atol=1e-12)


def test_scalar_example_against_refined_rk4():
    # backward the solution blows up near t = -12.46, so compare on [-10, 50]
    run = riccati.riccati_simulate(SCALAR, (-10.0, 50.0), tol=1e-13)
    for end, steps in ((50.0, 50_000), (-10.0, 10_000)):
        t, y = rk4(0.1, -0.2, 0.05, end, steps)
        assert np.max(np.abs(run.trajectory.state_at(t)[:, 0] - y)) < 1e-8


def test_scalar_example_blows_up_backward():
    oracle = sp_integrate.quad(lambda y: 1.0 / (0.1 - 0.2 * y + 0.05 * y * y), -np.inf, 0.0)[0]
    assert oracle == pytest.approx(12.4645048, abs=1e-6)  # frozen
    run = riccati.riccati_simulate(SCALAR, (-50.0, 50.0))
    assert run.blew_up
    assert run.trajectory.t_start == pytest.approx(-oracle, abs=1e-4)
    assert not riccati.boundedness_verdict(SCALAR, 50.0).passed


def test_linearity_without_quadratic_term():
    rng = np.random.default_rng(4)
    A = riccati.TrigSeries([1.0, 3.0], rng.normal(size=(2, 2)), rng.normal(size=(2, 2)))
    B = riccati.TrigSeries([2.0], 0.1 * rng.normal(size=(2, 2, 1)), np.zeros((2, 2, 1)))
    H = riccati.TrigSeries.zeros((2, 2, 2))
    one = riccati.RiccatiSystem.from_trig(A, B, H)
    two = riccati.RiccatiSystem.from_trig(riccati.TrigSeries(A.freqs, 2 * A.cos, 2 * A.sin), B, H)
    t = np.linspace(-20.0, 20.0, 81)
    y1 = riccati.riccati_simulate(one, (-20.0, 20.0), 1e-12).trajectory.state_at(t)
    y2 = riccati.riccati_simulate(two, (-20.0, 20.0), 1e-12).trajectory.state_at(t)
    assert np.max(np.abs(y2 - 2 * y1)) < 1e-8


def test_compiled_and_python_paths_agree():
    sys_ = riccati.random_trig_system(2, 0.05, 7)
    plain = riccati.RiccatiSystem(sys_.dim, sys_.A, sys_.B, sys_.H, sys_.gamma)
    t = np.linspace(-10.0, 10.0, 41)
    a = riccati.riccati_simulate(sys_, (-10.0, 10.0), 1e-12).trajectory.state_at(t)
    b = riccati.riccati_simulate(plain, (-10.0, 10.0), 1e-12).trajectory.state_at(t)
    assert np.max(np.abs(a - b)) < 1e-9


def test_declared_bound_is_checked():
    with pytest.raises(riccati.RiccatiError):
        riccati.RiccatiSystem.constant([0.0], [[0.5]], [[[0.0]]], gamma=0.1)
    with pytest.raises(riccati.RiccatiError):
        riccati.RiccatiSystem.constant([0.0], [[0.0]], [[[0.0]]], gamma=1.0)


def test_hypothesis_examples():
    zero_b = riccati.RiccatiSystem.constant([0.3], [[0.0]], [[[0.0]]])
    rep = riccati.hypothesis_check(zero_b, 100.0)
    assert rep.h1_passed and rep.part1.sup == 0.0
    assert np.array_equal(rep.tau, [-1.0])  # both orientations pass: tie goes to -1
    sine = SimpleNamespace(dim=1, A=lambda t: np.zeros(np.shape(t) + (1,)),
                           B=lambda t: np.sin(2 * np.pi * np.asarray(t))[..., None, None],
                           trig=None)
    assert riccati.hypothesis_check(sine, 100.0).h1_passed
    drift = riccati.RiccatiSystem.constant([0.0], [[0.1]], [[[0.0]]])
    rep = riccati.hypothesis_check(drift, 100.0)
    assert not rep.part1.passed and not rep.h1_passed


def test_negative_mean_kernel_picks_plus_orientation():
    sys_ = riccati.RiccatiSystem.constant([0.0, 0.0], [[-0.1, 0.0], [0.0, -0.1]],
                                          np.zeros((2, 2, 2)))
    rep = riccati.hypothesis_check(sys_, 100.0)
    # sigma(I_i B I_i) = -0.2 < 0: the forward integral decreases, so tau = +1 keeps it bounded above
    assert np.array_equal(rep.tau, [1.0, 1.0])


def test_boundedness_is_monotone_in_horizon():
    for seed in range(3):
        sys_ = riccati.random_trig_system(2, 0.01, seed)
        big = riccati.boundedness_verdict(sys_, 200.0)
        small = riccati.boundedness_verdict(sys_, 100.0)
        assert (not big.passed) or small.passed
        assert small.sup <= big.sup + 1e-12


def test_random_design_respects_gamma():
    sys_ = riccati.random_trig_system(3, 0.02, 11)
    assert sys_.gamma == pytest.approx(0.02)
    t = np.linspace(-50, 50, 501)
    A = sys_.A(t)
    assert abs(np.mean(A)) < 0.05  # no constant term in the source


def test_large_gamma_is_reported_only():
    sys_ = riccati.random_trig_system(2, 0.9, 0)
    res = riccati.boundedness_verdict(sys_, 100.0)
    assert isinstance(res.passed, bool) and res.as_dict()["horizon"] == 100.0


def test_linearize_exact_leader_has_zero_coefficients():
    f = model("constant", omega=list(OMEGA))
    x0 = np.array([0.1, 0.2])
    for scale in (None, 0.3):
        sys_ = riccati.linearize(f, leader.AffineLeader(OMEGA, x0), x0, scale=scale)
        t = np.linspace(-40.0, 40.0, 81)
        assert np.max(np.abs(sys_.A(t))) == 0.0
        assert np.max(np.abs(sys_.B(t))) == 0.0


def test_linearize_remainder_bound():
    f = model("winfree", omega=[1.0, 1.3], kappa=0.2)
    sys_ = riccati.linearize(f, leader.AffineLeader([1.1, 1.2], 0.0))
    e = min(0.5, 0.1 / (2 * f.second_derivative_bound))
    h = sys_.H(np.array([0.0, 3.0]))
    assert np.max(np.sum(np.abs(h), axis=(2, 3))) <= e * f.second_derivative_bound * (1 + 1e-12)


def test_linearize_rejects_wrong_start():
    f = model("circle", c=2.0, eps=0.1)
    with pytest.raises(riccati.RiccatiError):
        riccati.linearize(f, leader.AffineLeader([2.0], [0.3]), [0.0])


def test_linearized_circle_passes():
    f = model("circle", c=2.0, eps=0.1)
    rho = solver.solve_rotation_formula(f, certificate_horizon=0).rho
    sys_ = riccati.linearize(f, leader.AffineLeader(rho, 0.0), np.zeros(1))
    assert riccati.hypothesis_check(sys_, 200.0).passed
    assert riccati.boundedness_verdict(sys_, 200.0).passed


def test_exports():
    sys_ = riccati.random_trig_system(2, 0.01, 1)
    rep = riccati.hypothesis_check(sys_, 100.0)
    assert rep.to_csv().splitlines()[0].startswith("t,")
    run = riccati.riccati_simulate(sys_, (-1.0, 1.0))
    assert run.to_csv().splitlines()[0] == "t,y1,y2"
