import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from rotvec import growth


def test_dyadic_windows_cover_tail():
    wins = growth.dyadic_windows(1000.0)
    assert wins[-1] == (500.0, 1000.0)
    assert wins[0][0] >= growth.T_MIN
    assert all(a[1] == b[0] for a, b in zip(wins, wins[1:]))
    with pytest.raises(ValueError):
        growth.dyadic_windows(20.0)


def test_bounded_and_linear_signals():
    T = 1e4
    t = growth.two_sided_times(T)
    bounded = growth.growth_verdict(t, np.abs(np.sin(t)), T)
    linear = growth.growth_verdict(t, 0.01 * np.abs(t), T)
    assert bounded.passed and bounded.sup == pytest.approx(1.0, abs=1e-3)
    assert not linear.passed
    assert set(bounded.sides) == {"forward", "backward"}


def test_one_bad_side_fails():
    T = 1e3
    t = growth.two_sided_times(T)
    v = np.where(t < 0, np.abs(t), 1.0)
    assert not growth.growth_verdict(t, v, T).passed


def test_non_finite_values_fail():
    t = growth.window_sample_times(1e3)
    v = np.ones_like(t)
    v[-1] = np.inf
    assert not growth.growth_verdict(t, v, 1e3).passed


@given(st.floats(1e-3, 10.0))
def test_linear_slope_scales_with_rate(rate):
    T = 1e4
    t = growth.window_sample_times(T)
    v = growth.growth_verdict(t, rate * t, T)
    # window sups double each window: the slope is a positive multiple of the rate
    assert v.slope > 0.1 * rate * T / 2 ** 9
    assert not v.passed


@given(st.floats(0.0, 100.0), st.floats(0.1, 10.0))
def test_bounded_oscillation_passes(amp, freq):
    # clipped so the sup sits on wide plateaus that coarse window samples still hit
    T = 1e4
    t = growth.window_sample_times(T)
    v = amp * np.minimum(1.0, 2.0 * np.abs(np.cos(freq * t)))
    assert growth.growth_verdict(t, v, T).passed


def test_least_squares_slope():
    assert growth.least_squares_slope([1.0, 3.0, 5.0]) == pytest.approx(2.0)
