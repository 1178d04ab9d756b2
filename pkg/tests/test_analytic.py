import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from scipy.optimize import brentq

from _oracles import M_reference, draw_globals, draw_mixed, follower_drift
from planned_behavior.analytic import (
    FULL_ACTION,
    NO_ACTION,
    PARTIAL_ACTION,
    UNDETERMINED,
    AlwaysIncreasingError,
    Classification,
    NeverIncreasingError,
    action_bounds,
    b0_alpha2,
    classify_two,
    fixed_point_xstar,
    invariant_M,
    map_f,
    map_f_rational,
    min_alpha1_bisect,
    min_alpha1_for_action_B0,
    t_crit,
)
from planned_behavior.model import (
    DomainError,
    GlobalParams,
    NoPeriodError,
    ParameterError,
    TwoBodyConstants,
    two_body_solution,
)

FIG6 = GlobalParams(1.0, 0.5, 0.5, 0.5, 0.05, 0.86, 0.8)


def test_invariant_M_matches_quadrature():
    rng = np.random.default_rng(7)
    for _ in range(25):
        p, a1, a2, M = draw_mixed(rng)
        assert invariant_M(p, a1, a2) == pytest.approx(M, rel=1e-9, abs=1e-11)


def test_M_vanishes_as_tau_shrinks():
    vals = [abs(invariant_M(GlobalParams(1.0, 0.5, 0.5, 0.5, 0.05, 0.86, tau), 0.6, 0.1))
            for tau in (1e-2, 1e-4, 1e-6)]
    assert vals[0] > vals[1] > vals[2]
    assert vals[2] < 1e-4


def test_M_positive_when_follower_margin_is_zero():
    assert invariant_M(FIG6, 0.6, 0.25) > 0.0


def test_M_precondition():
    with pytest.raises(NoPeriodError):
        invariant_M(FIG6, 0.25, 0.1)
    with pytest.raises(DomainError):
        invariant_M(GlobalParams(1.0, 0.5, 0.5, 0.5, 0.05, 0.0, 0.8), 0.6, 0.1)


def test_starting_position_independence():
    rng = np.random.default_rng(8)
    for _ in range(20):
        p, a1, a2, M = draw_mixed(rng, m_min=1e-6)
        k = TwoBodyConstants.from_params(p, a1, a2)
        signs = {np.sign(two_body_solution(k, u0, k.T) - u0)
                 for u0 in (-0.9, -0.5, 0.0, 0.5, 0.9 * p.tau)}
        assert signs == {np.sign(M)}


def test_map_f_basics():
    assert map_f(0.0, 0.3) == pytest.approx(0.3, abs=1e-15)
    assert map_f(0.7, 0.0) == pytest.approx(math.tanh(0.7))
    with pytest.raises(DomainError):
        map_f(0.1, 1.0)
    for M in np.linspace(-3, 3, 13):
        for x in np.linspace(-0.99, 0.99, 21):
            assert map_f(M, x) == pytest.approx(map_f_rational(M, x), abs=1e-12)


@settings(max_examples=200, deadline=None)
@given(M=st.floats(-5, 5), x=st.floats(-0.999, 0.999), y=st.floats(-0.999, 0.999))
def test_map_f_order_preserving(M, x, y):
    fx, fy = map_f(M, x), map_f(M, y)
    assert -1.0 <= fx <= 1.0
    if x < y:
        assert fx <= fy
    if M > 0:
        assert fx >= x - 1e-15


def test_map_f_continuous_extension():
    for M in (-2.0, 0.5, 3.0):
        assert map_f(M, 1 - 1e-9) > 1 - 1e-6
        assert map_f(M, -1 + 1e-9) < -1 + 1e-6


def test_iterating_f_passes_tau_within_bound():
    rng = np.random.default_rng(9)
    for _ in range(20):
        p, a1, a2, M = draw_mixed(rng, sign=1, m_min=1e-2)
        b = action_bounds(p, a1, a2)
        x = b.x_T
        steps = 1
        while x < p.tau:
            x = map_f(M, x)
            steps += 1
        assert steps <= b.m + b.n_after


def test_xstar():
    with pytest.raises(DomainError):
        fixed_point_xstar(0.0)
    for M in (1e-3, 0.1, 1.0, 4.0):
        xs = fixed_point_xstar(M)
        assert -1.0 < xs < 0.0
        th = math.tanh(M)
        naive = -(1 - math.sqrt(1 - th * th)) / th
        assert xs == pytest.approx(naive, rel=1e-9)
        h = 1e-6
        deriv = lambda x: (map_f(M, x + h) - map_f(M, x - h)) / (2 * h)  # noqa: E731
        assert deriv(xs) == pytest.approx(1.0, abs=1e-6)
        if xs - 0.1 > -1:
            assert deriv(xs - 0.1) > 1.0
        assert deriv(xs + 0.1) < 1.0
    grid = [fixed_point_xstar(M) for M in np.linspace(0.01, 5, 60)]
    assert all(b < a for a, b in zip(grid, grid[1:]))
    assert abs(fixed_point_xstar(1e-10)) < 1e-9
    assert fixed_point_xstar(800.0) == -1.0


def test_t_crit_values():
    r = 0.5
    p = GlobalParams(1.0, 1.0, 0.5, 0.5, 0.05, r, 0.8)
    # arg = mu_s - sigma_a*alpha2/sigma_s
    assert t_crit(p, -0.5) == 0.0
    assert t_crit(p, 0.5 - math.exp(-r)) == pytest.approx(1.0)
    with pytest.raises(AlwaysIncreasingError):
        t_crit(p, 0.6)
    with pytest.raises(NeverIncreasingError):
        t_crit(p, -0.6)
    with pytest.raises(DomainError):
        t_crit(GlobalParams(1.0, 1.0, 0.5, 0.5, 0.05, 0.0, 0.8), 0.1)


def test_t_crit_is_where_the_drift_changes_sign():
    rng = np.random.default_rng(10)
    n = 0
    while n < 20:
        p, a1, a2, _ = draw_mixed(rng)
        try:
            tc = t_crit(p, a2)
        except DomainError:
            continue
        if tc <= 0:
            continue
        n += 1
        root = brentq(lambda t: follower_drift(p, a2, t), 0.0, 10 * tc + 1, xtol=1e-14)
        assert root == pytest.approx(tc, abs=1e-8)


def test_action_bounds():
    p = FIG6
    b = action_bounds(p, 0.6, 0.24)
    k = TwoBodyConstants.from_params(p, 0.6, 0.24)
    assert b.m >= 1 and b.n_after >= 0
    assert b.horizon >= b.T == k.T
    assert b.x_star == fixed_point_xstar(k.M)
    with pytest.raises(DomainError):
        action_bounds(p, 0.6, 0.1)  # M < 0
    # a follower starting high is already past x*
    assert action_bounds(p, 0.6, 0.24, x2_0=0.5).m == 1


def test_classification_object():
    with pytest.raises(ValueError):
        Classification(PARTIAL_ACTION, ())
    with pytest.raises(ValueError):
        Classification(PARTIAL_ACTION, (0, 1), margins=(0.1, 0.2))
    with pytest.raises(ValueError):
        Classification("Sometimes")
    c = Classification(PARTIAL_ACTION, (0,), -0.5, (0.1, -0.2))
    assert c.as_dict() == {"tag": PARTIAL_ACTION, "actors": [1], "M": -0.5,
                           "margins": [0.1, -0.2]}


def test_classify_rows():
    p = FIG6  # margin line at alpha = 0.25
    assert classify_two(p, 0.2, 0.1).tag == NO_ACTION
    assert classify_two(p, 0.25, 0.1).tag == NO_ACTION
    assert classify_two(p, 0.6, 0.4).tag == FULL_ACTION
    assert classify_two(p, 0.6, 0.25).tag == FULL_ACTION
    c = classify_two(p, 0.9, 0.2)
    assert c.tag == FULL_ACTION and c.M > 0
    c = classify_two(p, 0.6, 0.1)
    assert (c.tag, c.actors) == (PARTIAL_ACTION, (0,)) and c.M < 0
    assert c.margins == pytest.approx((0.35, -0.15))


def test_classify_is_symmetric():
    rng = np.random.default_rng(11)
    for _ in range(200):
        p = draw_globals(rng)
        a, b = rng.uniform(-1, 1, 2)
        c1, c2 = classify_two(p, a, b), classify_two(p, b, a)
        assert c1.tag == c2.tag
        assert c1.actors == tuple(sorted(1 - i for i in c2.actors))
        assert c1.tag != UNDETERMINED


def test_classify_exact_zero_M_is_partial():
    p = GlobalParams(1.0, 0.5, 0.5, 0.5, 0.05, 0.86, 0.8)
    a2 = b0_alpha2(p)
    a1 = min_alpha1_for_action_B0(p)
    assert abs(invariant_M(p, a1, a2)) < 1e-12
    assert classify_two(p, a1, a2).tag == PARTIAL_ACTION


def test_classify_without_decay():
    # fresh nudges never fade: the follower's sign is fixed after the first one
    p = GlobalParams(1.0, 0.5, 0.5, 0.5, 0.05, 0.0, 0.8)
    assert classify_two(p, 0.6, 0.1).tag == FULL_ACTION
    p = GlobalParams(1.0, 0.5, 0.5, 0.9, 0.05, 0.0, 0.8)
    assert classify_two(p, 0.6, -0.5).tag == PARTIAL_ACTION


def test_degenerate_all_zero_params():
    p = GlobalParams(0.0, 0.0, 0.0, 0.5, 0.0, 1.0, 0.5)
    assert classify_two(p, 0.9, 0.1).tag == NO_ACTION


def test_min_alpha1_B0():
    rng = np.random.default_rng(12)
    n = 0
    while n < 15:
        p = draw_globals(rng)
        try:
            a1 = min_alpha1_for_action_B0(p)
        except DomainError:
            continue
        a2 = b0_alpha2(p)
        k = TwoBodyConstants.from_params(p, a1, a2)
        assert abs(k.B) < 1e-12
        assert abs(M_reference(p, a1, a2)) < 1e-9
        eps = 1e-6
        if a1 + eps < 1:
            assert invariant_M(p, a1 + eps, a2) > 0
        assert invariant_M(p, a1 - eps, a2) < 0
        assert min_alpha1_bisect(p, a2) == pytest.approx(a1, abs=1e-10)
        n += 1


def test_min_alpha1_B0_errors():
    with pytest.raises(ParameterError):
        min_alpha1_for_action_B0(GlobalParams(0.0, 0.5, 0.5, 0.5, 0.05, 0.86, 0.8))
    with pytest.raises(NoPeriodError):
        min_alpha1_for_action_B0(GlobalParams(1.0, 0.5, 0.5, 0.5, 0.0, 0.86, 0.8))
    with pytest.raises(DomainError):
        # mu_c >= 1: no positive period solves M = 0
        min_alpha1_for_action_B0(GlobalParams(1.0, 0.5, 0.5, 0.9, 1.2, 0.86, 0.8))
    with pytest.raises(DomainError):
        # pinned follower attitude outside (-1, 1)
        min_alpha1_for_action_B0(GlobalParams(0.2, 1.5, 0.5, 0.9, 0.05, 0.86, 0.8))
