import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st
from scipy import integrate

from rotvec import quadrature


def test_simpson_is_exact_on_cubics():
    t = np.linspace(0.0, 2.0, 11)
    assert quadrature.simpson(t ** 3 - t, t[1] - t[0]) == pytest.approx(2.0, abs=1e-14)


@pytest.mark.parametrize("use_numba", [False, True])
def test_cumulative_matches_scipy_on_even_nodes(use_numba):
    t = np.linspace(0.0, 3.0, 301)
    y = np.exp(np.sin(t))
    got = quadrature.cumulative_simpson(y, t[1] - t[0], use_numba=use_numba)
    ref = integrate.cumulative_simpson(y, x=t, initial=0.0)
    assert np.max(np.abs(got[::2] - ref[::2])) < 1e-12


@pytest.mark.parametrize("use_numba", [False, True])
def test_cumulative_accuracy(use_numba):
    t = np.linspace(0.0, 5.0, 2001)
    got = quadrature.cumulative_simpson(np.cos(t), t[1] - t[0], use_numba=use_numba)
    assert np.max(np.abs(got - np.sin(t))) < 1e-10


def test_cumulative_rejects_even_counts():
    with pytest.raises(ValueError):
        quadrature.cumulative_simpson(np.ones(4), 0.1)


@given(st.integers(1, 200), st.floats(-50, 50).filter(lambda v: abs(v) > 1e-6))
def test_cumulative_paths_agree(half, scale):
    rng = np.random.default_rng(half)
    y = scale * rng.normal(size=(2 * half + 1, 2))
    a = quadrature.cumulative_simpson(y, 0.01, use_numba=False)
    b = quadrature.cumulative_simpson(y, 0.01, use_numba=True)
    assert np.allclose(a, b, rtol=1e-12, atol=1e-12 * abs(scale))


@given(st.floats(-1e3, 1e3).filter(lambda v: abs(v) > 1e-9), st.floats(1e-3, 1.0))
def test_uniform_grid(t, h):
    nodes, step = quadrature.uniform_grid(t, h)
    assert (nodes.size - 1) % 2 == 0
    assert abs(step) <= h * (1 + 1e-12)
    assert nodes[0] == 0.0 and nodes[-1] == t
