import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from tactile_cues.tipping import (OutOfRangeError, TipScenario, brute_force_tip_oracle, contact_drop,
                                  drop_slope, onset_slope, tip_angle, x_max)

WOOD = TipScenario(372.0, 100.0, 150.0)

scenarios = st.builds(TipScenario, st.floats(50.0, 2000.0), st.floats(20.0, 200.0), st.floats(30.0, 300.0))


def analytic_rate(s, x):
    """R dtheta/dx by implicit differentiation of the contact equation."""
    th = tip_angle(s, x)
    a = s.R + s.w - x
    return s.R * math.cos(th) / (s.h * math.cos(th) - a * math.sin(th))


def test_zero_push():
    assert tip_angle(WOOD, 0.0) == 0.0
    assert brute_force_tip_oracle(WOOD, 0.0) == pytest.approx(0.0, abs=1e-4)


def test_wooden_box_range_and_final_angle():
    xm = x_max(WOOD)
    assert xm == pytest.approx(24.5, abs=0.05)
    th = tip_angle(WOOD, xm)
    assert th == pytest.approx(0.3235, abs=2e-4)
    # frozen from the brute-force oracle
    assert th == pytest.approx(brute_force_tip_oracle(WOOD, xm), abs=1e-6)
    assert contact_drop(WOOD, th) == pytest.approx(120.3, abs=0.05)


def test_x_max_closed_form():
    c = WOOD.R + WOOD.w
    assert x_max(WOOD) == pytest.approx(c - math.sqrt(c * c - WOOD.h**2), rel=1e-12)


@pytest.mark.parametrize("s,x", [(WOOD, 5.0), (TipScenario(1000.0, 43.0, 60.0), 1.0)])
def test_oracle_examples(s, x):
    assert abs(tip_angle(s, x) - brute_force_tip_oracle(s, x)) <= 1e-6


def test_contact_drop():
    assert contact_drop(WOOD, 0.0) == 0.0
    assert contact_drop(TipScenario(372.0, 1.0, 1.0), 0.1) == pytest.approx(37.2)
    with pytest.raises(ValueError):
        contact_drop(WOOD, -0.1)


def test_out_of_range():
    with pytest.raises(OutOfRangeError):
        tip_angle(WOOD, -1e-9)
    with pytest.raises(OutOfRangeError):
        tip_angle(WOOD, x_max(WOOD) * (1 + 1e-9))
    with pytest.raises(OutOfRangeError):
        drop_slope(WOOD, x_max(WOOD))


def test_oracle_step_precondition():
    with pytest.raises(ValueError):
        brute_force_tip_oracle(WOOD, 1.0, theta_step=1e-3)


def test_scenario_validation():
    with pytest.raises(ValueError):
        TipScenario(0.0, 1.0, 1.0)


@pytest.mark.parametrize("R,h,expected", [(372.0, 150.0, 2.48), (372.0, 372.0, 1.0), (100.0, 150.0, 0.6667)])
def test_onset_slope_examples(R, h, expected):
    s = TipScenario(R, 100.0, h)
    assert onset_slope(s) == pytest.approx(R / h)
    assert drop_slope(s, 0.0) == pytest.approx(expected, abs=1e-4)
    assert abs(drop_slope(s, 0.0) - R / h) <= 1e-6


@given(scenarios)
def test_onset_identity(s):
    assert abs(drop_slope(s, 0.0) - s.R / s.h) <= 1e-6


@given(scenarios, st.floats(0.0, 1.0))
def test_residual_and_root_selection(s, frac):
    x = frac * x_max(s)
    th = tip_angle(s, x)
    assert th >= 0
    resid = (s.R + s.w - x) * math.cos(th) + s.h * math.sin(th) - (s.R + s.w)
    assert abs(resid) <= 1e-12 * (s.R + s.w)
    # smallest non-negative root: the residual starts at -x and stays negative before th
    grid = np.linspace(0, th, 50)[1:-1]
    assert np.all((s.R + s.w - x) * np.cos(grid) + s.h * np.sin(grid) - (s.R + s.w) < 1e-9 * (s.R + s.w))


@given(scenarios, st.floats(0.0, 0.999), st.floats(0.0, 0.999))
def test_monotone(s, a, b):
    if a == b:
        return
    lo, hi = sorted((a, b))
    xm = x_max(s)
    assert tip_angle(s, lo * xm) < tip_angle(s, hi * xm)


@given(scenarios, st.floats(0.05, 0.9))
def test_interior_slope_matches_implicit_derivative(s, frac):
    x = frac * x_max(s)
    assert drop_slope(s, x) == pytest.approx(analytic_rate(s, x), rel=1e-5)


@given(scenarios, st.floats(0.0, 1.0))
def test_oracle_equivalence_random(s, frac):
    x = frac * x_max(s)
    assert abs(tip_angle(s, x) - brute_force_tip_oracle(s, x)) <= 1e-6


def test_degenerate_curvature():
    s = TipScenario(1e6, 100.0, 150.0)
    assert x_max(s) < 0.02
    assert x_max(s) == pytest.approx(s.h**2 / (2 * (s.R + s.w)), rel=1e-3)
    # curvature is what buys tip-trackable range
    assert x_max(TipScenario(100.0, 100.0, 150.0)) > x_max(WOOD) > x_max(s)
