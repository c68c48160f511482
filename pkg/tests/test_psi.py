import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from scipy import integrate as sp_integrate

from rotvec import algebra, psi
from rotvec.field import custom_field
from rotvec.solver import NormalizedField

from conftest import OMEGA, SHIPPED, model


def closed_form(rho, omega, i, t):
    return algebra.sum_entries(algebra.involution(i, len(rho)).apply(np.subtract(rho, omega))) * t


def test_coefficient_examples():
    f = model("constant", omega=[1.0, 2.0])
    s = np.linspace(-3.0, 3.0, 7)
    assert np.all(psi.coefficient_A(f, np.zeros(2), [1.0, 2.0], 2, s) == 0.0)
    assert psi.coefficient_A(f, np.zeros(2), [2.0, 2.0], 0, 1.7) == 1.0
    assert psi.coefficient_A(f, np.zeros(2), [2.0, 2.0], 1, -4.0) == -1.0
    with pytest.raises(ValueError):
        psi.coefficient_A(f, np.zeros(2), [2.0, 2.0], 3, 0.0)


@pytest.mark.parametrize("i", [0, 1, 2])
def test_constant_field_closed_forms(constant_field, i):
    assert psi.psi_quadrature(constant_field, np.zeros(2), OMEGA, i, 30.0) == 0.0
    rho = np.array([1.0, -1.0])
    want = closed_form(rho, OMEGA, i, 30.0)
    assert psi.psi_quadrature(constant_field, np.zeros(2), rho, i, 30.0) == pytest.approx(want)
    curve = psi.psi_ode(constant_field, np.zeros(2), rho, i, np.array([-10.0, 0.0, 30.0]))
    assert curve.values[1] == 0.0
    assert curve.values == pytest.approx([closed_form(rho, OMEGA, i, -10.0), 0.0, want])


def test_circle_methods_agree_at_fifty():
    f = model("circle", c=2.0, eps=0.1)
    q = psi.psi_quadrature(f, np.zeros(1), [1.9975], 0, 50.0)
    o = psi.psi_ode(f, np.zeros(1), [1.9975], 0, np.array([0.0, 50.0])).values[-1]
    assert abs(q - o) <= 1e-8


@pytest.mark.parametrize("name", sorted(SHIPPED))
def test_quadrature_and_ode_agree_on_shipped_models(name):
    f = model(name, **SHIPPED[name])
    rho = np.full(f.dim, 1.3)
    x0 = np.full(f.dim, 0.1)
    times = np.linspace(0.0, 100.0, 51)
    for i in range(f.dim + 1):
        q = psi.psi_quadrature_curve(f, x0, rho, i, 100.0)
        qv = np.interp(times, q.t, q.values)
        o = psi.psi_ode(f, x0, rho, i, times).values
        assert np.max(np.abs(qv - o)) <= 1e-8, (name, i)


def test_quadrature_against_brute_force_double_integral():
    f = model("circle", c=2.0, eps=0.3)
    rho, t = 1.7, 3.0
    dfl = lambda s: 0.3 * 2 * math.pi * math.cos(2 * math.pi * rho * s)
    A = lambda s: rho - 2.0 - 0.3 * math.sin(2 * math.pi * rho * s)
    inner = lambda s: sp_integrate.quad(dfl, s, t, epsabs=1e-13)[0]
    want = sp_integrate.quad(lambda s: A(s) * math.exp(inner(s)), 0.0, t, epsabs=1e-12)[0]
    assert psi.psi_quadrature(f, np.zeros(1), [rho], 0, t) == pytest.approx(want, abs=1e-9)


def test_negative_time_quadrature_matches_ode(circle_field):
    q = psi.psi_quadrature(circle_field, np.zeros(1), [1.5], 0, -20.0)
    o = psi.psi_ode(circle_field, np.zeros(1), [1.5], 0, np.array([-20.0, 0.0])).values[0]
    assert abs(q - o) < 1e-8


@settings(max_examples=20)
@given(st.floats(-5, 5), st.floats(0.1, 50))
def test_linear_in_source(scale, t):
    f = model("constant", omega=[1.0, 2.0])
    base = np.array([1.0, 2.0])
    d = np.array([0.3, -0.2])
    one = psi.psi_quadrature(f, np.zeros(2), base + d, 1, t)
    many = psi.psi_quadrature(f, np.zeros(2), base + scale * d, 1, t)
    assert many == pytest.approx(scale * one, rel=1e-9, abs=1e-12)


def test_conjugation_with_unit_weights_is_identity(circle_field):
    z = np.ones(1)
    plain = psi.direct_line(circle_field, np.zeros(1), [1.2])
    weighted = psi.direct_line(circle_field, np.zeros(1), [1.2], weights=z)
    s = np.linspace(0.0, 5.0, 101)
    for a, b in zip(plain.sample(s), weighted.sample(s)):
        assert np.array_equal(a, b)


def test_residual_constant_field(constant_field):
    zero = psi.residual(constant_field, np.zeros(2), OMEGA, 100.0)
    assert np.max(np.abs(zero.values)) <= 1e-12
    rho = np.array([1.0, 1.5])
    off = psi.residual(constant_field, np.zeros(2), rho, 100.0)
    assert np.allclose(off.values, 2 * (rho - OMEGA), atol=1e-9, rtol=0)
    # t-independent
    assert np.ptp(off.values, axis=0) == pytest.approx([0.0, 0.0], abs=1e-9)


def test_residual_circle_at_true_rotation():
    f = model("circle", c=2.0, eps=0.1)
    rep = psi.residual(f, np.zeros(1), [math.sqrt(3.99)], 1000.0)
    assert rep.max_limit() < 1e-3


def test_residual_horizon_guard(constant_field):
    with pytest.raises(psi.HorizonError):
        psi.residual(constant_field, np.zeros(2), OMEGA, 50.0)


def test_kernel_overflow_guard():
    f = custom_field(lambda x: 10.0 * x, 1, jac=lambda x: np.full(x.shape + (1,), 10.0))
    with pytest.raises(psi.KernelOverflowError) as info:
        psi.psi_quadrature(f, np.zeros(1), [1.0], 0, 100.0, h=0.01)
    assert info.value.index == 0


def test_tau_constant_normalized_field():
    g = NormalizedField(model("constant", omega=[1.0, 2.0]), np.zeros(2), 4.0, 0.5)
    prof = psi.tau_signs(g, np.array([4.5, 5.0]), 200.0)
    assert np.array_equal(prof.lam, [0.0, 0.0])
    assert np.array_equal(prof.tau, [-1.0, -1.0])


def test_tau_negative_average_gives_plus_one():
    slope = -0.1
    f = custom_field(lambda x: slope * x, 1, jac=lambda x: np.full(x.shape + (1,), slope))
    prof = psi.tau_signs(f, np.array([1.0]), 200.0)
    brute = sp_integrate.quad(lambda s: slope, 0.0, 200.0)[0] / 200.0
    assert prof.lam[0] == pytest.approx(brute)
    assert prof.tau[0] == 1.0


@pytest.mark.parametrize("name", ["winfree", "torus"])
def test_tau_stable_under_horizon_doubling(name):
    f = model(name, **SHIPPED[name])
    g = NormalizedField(f, np.zeros(2), 4.0, 0.05)
    z = g.from_rotation([1.2, 1.4])
    a = psi.tau_signs(g, z, 500.0)
    b = psi.tau_signs(g, z, 1000.0)
    big = np.abs(b.lam) > 10.0 / 500.0
    assert np.array_equal(a.tau[big], b.tau[big])


def test_curve_csv(constant_field):
    c = psi.psi_ode(constant_field, np.zeros(2), [1.0, 1.0], 0, np.array([0.0, 1.0]))
    assert c.to_csv().splitlines() == ["t,value", "0,0", "1,-0.5"]
