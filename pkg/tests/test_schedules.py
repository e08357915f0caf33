import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from penaltyflow.convex import DescriptorError
from penaltyflow.schedules import (ConstSchedule, CustomSchedule, ExpSchedule, PowerSchedule,
                                   beta_tilde, default_grid, schedule_from_dict, verify_growth)

SCHEDULES = [PowerSchedule(0.0), PowerSchedule(0.5), PowerSchedule(2.0), PowerSchedule(3.0),
             ExpSchedule(1.0, 0.5), ExpSchedule(2.0, 0.0), ConstSchedule(3.0)]


@pytest.mark.parametrize("s", SCHEDULES, ids=repr)
def test_derivative_matches_finite_difference(s):
    t = np.linspace(0.0, 20.0, 101)
    h = 1e-5
    fd = (s.beta(t + h) - s.beta(t - h)) / (2 * h)
    np.testing.assert_allclose(s.beta_dot(t), fd, rtol=1e-4, atol=1e-8)


@pytest.mark.parametrize("s", SCHEDULES, ids=repr)
def test_growth_sup_matches_grid(s):
    grid = default_grid(span=100.0)
    ratio = s.beta_dot(grid) / s.beta(grid)
    assert ratio.max() == pytest.approx(s.growth_sup(0.0), rel=1e-12, abs=1e-15)


@pytest.mark.parametrize("s", SCHEDULES, ids=repr)
def test_descriptor_round_trip(s):
    r = schedule_from_dict(s.to_dict())
    t = np.array([0.0, 1.0, 10.0])
    np.testing.assert_allclose(r.beta(t), s.beta(t))
    assert r.to_dict() == s.to_dict()


@pytest.mark.parametrize("alpha,gamma,feasible", [
    (2.0, 3.0, True), (1.5, 2.0, True), (3.0, 3.0, False), (4.0, 1.0, False), (0.0, 0.5, True)])
def test_power_growth(alpha, gamma, feasible):
    rep = verify_growth(PowerSchedule(alpha), gamma)
    assert rep.feasible is feasible
    assert rep.k_min == alpha and rep.status == "proved"
    assert rep.margin == pytest.approx(gamma - alpha)
    if not feasible:
        assert "k_min" in rep.reason


def test_growth_later_start_relaxes_k():
    # beta_dot/beta = alpha/(1+t) so the bound tightens with t0
    rep = verify_growth(PowerSchedule(4.0), 1.0, t0=7.0)
    assert rep.feasible and rep.k_min == pytest.approx(0.5)


def test_exp_growth():
    assert verify_growth(ExpSchedule(1.0, 0.5), 1.0).feasible
    rep = verify_growth(ExpSchedule(1.0, 2.0), 1.0)
    assert not rep.feasible and rep.k_min == 2.0


def test_custom_schedule_grid_checks():
    decreasing = CustomSchedule(lambda t: 1.0 / (1.0 + t), lambda t: -1.0 / (1.0 + t) ** 2)
    rep = verify_growth(decreasing, 1.0)
    assert not rep.feasible and "nonincreasing" in rep.reason
    ok = CustomSchedule(lambda t: (1 + t) ** 2, lambda t: 2 * (1 + t), k=2.0, divergent=True)
    rep = verify_growth(ok, 3.0)
    assert rep.feasible and rep.status == "grid-checked" and rep.divergent
    lying = CustomSchedule(lambda t: (1 + t) ** 2, lambda t: 2 * (1 + t), k=1.0)
    assert "violated on grid" in verify_growth(lying, 3.0).reason
    with pytest.raises(TypeError):
        ok.to_dict()


def test_growth_argument_errors():
    with pytest.raises(ValueError):
        verify_growth(PowerSchedule(1.0), 0.0)
    with pytest.raises(ValueError):
        verify_growth(PowerSchedule(1.0), 1.0, t0=-1.0)
    with pytest.raises(ValueError):
        verify_growth(PowerSchedule(1.0), 1.0, t0=5.0, grid=[0.0, 1.0])


def test_beta_tilde():
    s = PowerSchedule(2.0)
    assert beta_tilde(s, 2.0, 3.0, 1.0) == pytest.approx(4.0 / 3.0)
    with pytest.raises(ValueError):
        beta_tilde(s, 3.0, 3.0, 1.0)


def test_schedule_properties():
    assert PowerSchedule(1.5).inverse_integrable() and not PowerSchedule(1.0).inverse_integrable()
    assert not PowerSchedule(0.0).divergent and PowerSchedule(0.1).divergent
    assert ConstSchedule(2.0).beta(5.0) == 2.0
    assert ConstSchedule(2.0).beta(np.zeros(3)).shape == (3,)
    with pytest.raises(ValueError):
        PowerSchedule(-1.0)
    with pytest.raises(ValueError):
        ExpSchedule(0.0, 1.0)


@pytest.mark.parametrize("bad", [{"family": "power"}, {"family": "power", "alpha": 1, "k": 2},
                                 {"family": "poly", "alpha": 1}, {"family": "power", "alpha": -1},
                                 "power"])
def test_descriptor_errors(bad):
    with pytest.raises(DescriptorError):
        schedule_from_dict(bad)


@given(st.floats(0.0, 10.0), st.floats(0.0, 1e3), st.floats(0.0, 1e3))
@settings(max_examples=200, deadline=None)
def test_power_schedule_monotone_and_bounded_growth(alpha, t1, t2):
    s = PowerSchedule(alpha)
    lo, hi = sorted((t1, t2))
    assert s.beta(lo) <= s.beta(hi) * (1 + 1e-15)
    assert 0.0 <= s.beta_dot(hi) <= s.growth_sup(0.0) * s.beta(hi) * (1 + 1e-12) + 1e-300
    assert math.isfinite(float(s.beta(hi)))
