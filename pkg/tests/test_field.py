import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from rotvec.field import (ModelError, ModelSpec, custom_field, jacobian_check, make_model,
                          periodicity_check)

from conftest import SHIPPED, model


def test_constant_values(constant_field):
    assert np.array_equal(constant_field.evaluate(np.array([0.3, 0.9])), [0.5, 2.0])
    assert np.array_equal(constant_field.jacobian(np.array([0.3, 0.9])), np.zeros((2, 2)))


def test_circle_values(circle_field):
    assert circle_field.evaluate(np.array([0.25]))[0] == pytest.approx(3.0, abs=1e-15)
    assert circle_field.jacobian(np.array([0.25]))[0, 0] == pytest.approx(0.0, abs=1e-12)
    assert circle_field.jacobian(np.array([0.0]))[0, 0] == pytest.approx(2.0 * math.pi)


def test_shipped_models_are_periodic_and_differentiable(shipped):
    _, f = shipped
    assert periodicity_check(f).passed
    rep = jacobian_check(f)
    assert rep.passed, rep.max_deviation


def test_constant_checks_are_exact(constant_field):
    assert periodicity_check(constant_field).max_deviation == 0.0
    assert jacobian_check(constant_field).max_deviation == 0.0


def test_linear_field_fails_periodicity():
    rep = periodicity_check(custom_field(lambda x: x, 1))
    assert not rep.passed
    assert rep.max_deviation == pytest.approx(1.0, abs=1e-9)


def test_winfree_jacobian_against_finite_differences():
    f = model("winfree", omega=[1.0, 1.3, 0.7], kappa=0.4)
    rep = jacobian_check(f, sample_count=128, seed=5)
    assert rep.max_deviation < 1e-5


def test_norms_are_finite_and_plausible(shipped):
    name, f = shipped
    sup_f, sup_df = f.norms()
    assert math.isfinite(sup_f) and math.isfinite(sup_df)
    if name == "circle":
        assert sup_f == pytest.approx(2.1)
        assert sup_df == pytest.approx(0.2 * math.pi)


def test_aliases_and_dimension():
    assert make_model(ModelSpec("torus", {"c": [2, 3], "eps": [1, 1]})).dim == 2
    assert make_model(ModelSpec("winfree-type", {"omega": [1, 2, 3], "kappa": 0.1})).dim == 3


@pytest.mark.parametrize("spec", [
    ModelSpec("spiral", {}),
    ModelSpec("constant", {}),
    ModelSpec("circle", {"c": 2.0}),
    ModelSpec("circle", {"c": [2.0, 3.0], "eps": 1.0}),
    ModelSpec("constant", {"omega": [1.0, float("nan")]}),
    ModelSpec("constant", {"omega": [1.0, 2.0]}, dim=3),
])
def test_bad_specs_rejected(spec):
    with pytest.raises(ModelError):
        make_model(spec)


def test_custom_field_uses_finite_differences():
    f = custom_field(lambda x: np.sin(2 * np.pi * x[..., ::-1]), 2)
    x = np.array([0.1, 0.3])
    want = np.array([[0.0, 2 * np.pi * np.cos(2 * np.pi * 0.3)],
                     [2 * np.pi * np.cos(2 * np.pi * 0.1), 0.0]])
    assert np.allclose(f.jacobian(x), want, atol=1e-6)


@given(st.floats(-5, 5), st.integers(-3, 3))
def test_circle_integer_shift_invariance(x, k):
    f = model(*("circle",), **SHIPPED["circle"])
    assert f.evaluate(np.array([x + k]))[0] == pytest.approx(f.evaluate(np.array([x]))[0],
                                                              abs=1e-12)
