"""Dyadic-window growth test: the numerical stand-in for ``sup_t |r(t)| < inf``.

The horizon ``[0, T]`` is cut into windows ``[T/2^(j+1), T/2^j]`` down to a
minimum time ``t_min``.  The sup of the residual on each window is regressed
against the window index (chronological order, one unit per doubling).  A
bounded residual gives a flat profile; a drifting one roughly doubles per
window.  PASS iff the least-squares slope is at most ``slope_tol``.
"""
from dataclasses import dataclass, field

import numpy as np

SLOPE_TOL = 1e-3
T_MIN = 10.0
SAMPLES_PER_WINDOW = 512


def dyadic_windows(T, t_min=T_MIN):
    """Chronological list of ``(lo, hi)`` windows; at least two are required."""
    if T <= 0:
        raise ValueError("horizon must be positive")
    count = int(np.floor(np.log2(T / t_min))) if T > t_min else 0
    if count < 2:
        raise ValueError(f"horizon {T:g} too short for the window test (t_min = {t_min:g})")
    return [(T / 2.0 ** (j + 1), T / 2.0 ** j) for j in range(count - 1, -1, -1)]


def window_sample_times(T, t_min=T_MIN, per_window=SAMPLES_PER_WINDOW):
    """Uniform sample times covering ``[0, T]`` densely enough for window sups."""
    wins = dyadic_windows(T, t_min)
    pieces = [np.linspace(0.0, wins[0][0], per_window)]
    pieces += [np.linspace(lo, hi, per_window) for lo, hi in wins]
    return np.unique(np.concatenate(pieces))


def least_squares_slope(values):
    values = np.asarray(values, dtype=float)
    idx = np.arange(values.size, dtype=float)
    idx -= idx.mean()
    return float(np.dot(idx, values - values.mean()) / np.dot(idx, idx))


@dataclass(frozen=True)
class SideProfile:
    windows: list
    sups: np.ndarray
    initial_sup: float
    slope: float


@dataclass(frozen=True)
class GrowthVerdict:
    """Outcome of the window test on one or both time directions.

    ``sup`` is the empirical sup of the residual (the bound estimate),
    ``slope`` the worst side's regression slope.
    """

    passed: bool
    slope: float
    sup: float
    slope_tol: float
    sides: dict = field(default_factory=dict)

    def as_dict(self):
        return {
            "passed": self.passed,
            "slope": self.slope,
            "sup": self.sup,
            "slope_tol": self.slope_tol,
            "sides": {
                k: {"window_sups": v.sups.tolist(), "slope": v.slope,
                    "windows": [list(w) for w in v.windows]}
                for k, v in self.sides.items()
            },
        }


def side_profile(times, values, T, t_min=T_MIN):
    """Window sups for samples at non-negative ``times`` (already |t|)."""
    times = np.asarray(times, dtype=float)
    values = np.asarray(values, dtype=float)
    wins = dyadic_windows(T, t_min)
    sups = np.empty(len(wins))
    for k, (lo, hi) in enumerate(wins):
        mask = (times >= lo) & (times <= hi)
        if not np.any(mask):
            raise ValueError(f"no samples in window [{lo:g}, {hi:g}]")
        sups[k] = np.max(values[mask])
    head = times <= wins[0][0]
    initial = float(np.max(values[head])) if np.any(head) else 0.0
    return SideProfile(wins, sups, initial, least_squares_slope(sups))


def growth_verdict(times, values, T, t_min=T_MIN, slope_tol=SLOPE_TOL):
    """Window test on samples ``values(times)``; negative times form a second side.

    Each present side is tested separately and all must pass.
    """
    times = np.asarray(times, dtype=float)
    values = np.asarray(values, dtype=float)
    if not np.all(np.isfinite(values)):
        nan = float("nan")
        return GrowthVerdict(False, nan, float("inf"), slope_tol, {})
    sides = {}
    pos = times >= 0
    neg = times <= 0
    if np.any(times > 0):
        sides["forward"] = side_profile(times[pos], values[pos], T, t_min)
    if np.any(times < 0):
        sides["backward"] = side_profile(-times[neg], values[neg], T, t_min)
    if not sides:
        raise ValueError("no samples away from t = 0")
    slope = max(s.slope for s in sides.values())
    sup = float(np.max(values))
    return GrowthVerdict(bool(slope <= slope_tol), slope, sup, slope_tol, sides)


def two_sided_times(T, t_min=T_MIN, per_window=SAMPLES_PER_WINDOW):
    fwd = window_sample_times(T, t_min, per_window)
    return np.concatenate([-fwd[:0:-1], fwd])
