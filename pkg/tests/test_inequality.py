import math

import numpy as np
import pytest

from prodconc.inequality import (
    BRANCH_POINT,
    alpha_g,
    base_case_scan,
    claim_f,
    claim_scan,
    ineq7_scan,
    slice_inequalities_check,
    theorem1_verify,
)
from prodconc.rng import derive_rng
from prodconc.spaces import Event, bernoulli_cube
from prodconc.sweeps import random_event, random_space


def test_alpha_g_branches():
    # above the branch point (2 log lam > -1)
    s = alpha_g(0.8)
    assert s.alpha == pytest.approx(0.55371289737158049, abs=1e-15)
    assert s.g == pytest.approx(1.1892828838008543, abs=1e-15)
    # below: alpha clamps to 0 and g to e^{1/4}
    s = alpha_g(0.3)
    assert s.alpha == 0.0
    assert s.g == pytest.approx(math.exp(0.25), abs=1e-15)
    # the boundary takes the alpha = 0 branch
    s = alpha_g(BRANCH_POINT)
    assert s.alpha == 0.0
    assert s.g == pytest.approx(math.exp(0.25), abs=1e-15)


def test_alpha_g_domain():
    with pytest.raises(ValueError):
        alpha_g(0.0)
    with pytest.raises(ValueError):
        alpha_g(1.5)


def test_claim_f_frozen_values():
    assert claim_f(1.0) == pytest.approx(0.0, abs=1e-15)
    assert claim_f(0.9) == pytest.approx(-0.0011549459038620523, abs=1e-15)
    assert claim_f(0.8) == pytest.approx(-0.010717116199145693, abs=1e-15)
    assert claim_f(0.3) == pytest.approx(-0.41597458331225852, abs=1e-15)
    assert claim_f(BRANCH_POINT) == pytest.approx(-0.10944392359962509,
                                                  abs=1e-15)


def test_base_case_scan():
    res = base_case_scan(100_001)
    assert abs(res.maximum - 1.0) <= 1e-9
    assert res.argmax == pytest.approx(1.0, abs=1e-9)
    # the hand value at r = 0.5
    r = 0.5
    assert r * (r + (1 - r) * math.exp(0.25)) == pytest.approx(
        0.57100635417193537, abs=1e-15)


def test_claim_scan():
    res = claim_scan(10_000)
    assert res.maximum <= 1e-12
    assert res.argmax == 1.0
    assert abs(res.f_at_one) <= 1e-15
    assert abs(res.fprime_at_one) <= 1e-6


def test_ineq7_scan():
    res = ineq7_scan(1_000)
    assert res.maximum <= 1e-12
    # maximum is attained on the q = 1 edge where the product is exactly 1
    assert res.maximum == pytest.approx(0.0, abs=1e-12)


def test_theorem1_full_event_is_tight():
    # A = whole space: every phi is 0, expectation = 1 = 1/P(A)
    space = bernoulli_cube(3, 0.4)
    event = Event(outcomes=tuple(
        (a, b, c) for a in (0, 1) for b in (0, 1) for c in (0, 1)))
    rep = theorem1_verify(space, event)
    assert rep.event_probability == pytest.approx(1.0, abs=1e-12)
    assert rep.expectation == pytest.approx(1.0, abs=1e-12)
    assert rep.gap_budget == 0.0
    assert rep.passed


def test_theorem1_single_point_cube():
    # A = {origin} in the Bernoulli cube: phi is the Euclidean distance to
    # the origin, sqrt(#ones); check against a direct enumeration
    eta = 0.3
    space = bernoulli_cube(4, eta)
    event = Event(outcomes=((0, 0, 0, 0),))
    rep = theorem1_verify(space, event, tol=1e-6)
    expected = sum(
        math.comb(4, k) * eta ** k * (1 - eta) ** (4 - k) * math.exp(k / 4.0)
        for k in range(5))
    assert rep.expectation == pytest.approx(expected, abs=1e-5)
    assert rep.bound == pytest.approx((1 - eta) ** -4, abs=1e-12)
    assert rep.passed


def test_theorem1_random_events():
    space = bernoulli_cube(5, 0.35)
    for i in range(10):
        rng = derive_rng(2024, "ineq-event", i)
        event = random_event(rng, space)
        rep = theorem1_verify(space, event, tol=1e-4)
        assert rep.passed
        assert rep.gap_budget < 0.05


def test_slice_inequalities_on_random_instances():
    for i in range(5):
        rng = derive_rng(606, "slice", i)
        space = random_space(rng, min_blocks=3, max_blocks=3, max_points=2,
                             max_dim=2)
        event = random_event(rng, space)
        rep = slice_inequalities_check(space, event)
        assert rep.passed
        assert rep.checked > 0


def test_theorem1_rejects_empty_event():
    with pytest.raises(ValueError):
        theorem1_verify(bernoulli_cube(2, 0.5), Event(outcomes=()))
