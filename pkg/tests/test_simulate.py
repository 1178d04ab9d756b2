import math

import numpy as np
import pytest

from _oracles import draw_mixed, reference_path
from planned_behavior.analytic import (
    FULL_ACTION,
    NO_ACTION,
    PARTIAL_ACTION,
    UNDETERMINED,
    classify_two,
)
from planned_behavior.model import (
    GlobalParams,
    IndividualConfig,
    ParameterError,
    TwoBodyConstants,
    two_body_solution,
)
from planned_behavior.simulate import (
    ActionEvent,
    SimConfig,
    Trajectory,
    default_config,
    empirical_classify,
    simulate,
    simulate_and_classify,
)

FIG6 = GlobalParams(1.0, 0.5, 0.5, 0.5, 0.05, 0.86, 0.8)


def inds(*alphas):
    return [IndividualConfig(a) for a in alphas]


def test_config_validation():
    with pytest.raises(ParameterError):
        SimConfig(t_end=10.0, dt_max=1.0, event_tol=2.0)
    with pytest.raises(ParameterError):
        SimConfig(t_end=10.0, dt_max=2.0, sample_every=1.0)
    with pytest.raises(ParameterError):
        SimConfig(t_end=-1.0, dt_max=0.1)
    with pytest.raises(ParameterError):
        SimConfig(t_end=10.0, dt_max=0.1, horizon_periods=0)
    assert SimConfig(t_end=10.0, dt_max=0.1).sample_every == 10.0
    with pytest.raises(ParameterError):
        simulate(FIG6, inds(0.5), SimConfig(10.0, 0.1))


def test_no_action_when_margins_negative():
    traj = simulate(FIG6, inds(0.1, -0.3), SimConfig(t_end=500.0, dt_max=1.0, sample_every=5.0))
    assert traj.events == []
    assert empirical_classify(traj).tag == NO_ACTION
    assert np.all(traj.x <= 0.0)


def test_single_individual_period():
    p = FIG6.with_n(1)
    A = p.rate(0.7)
    T = math.atanh(p.tau) / A
    cfg = default_config(p, [0.7], horizon_periods=12)
    traj = simulate(p, inds(0.7), cfg)
    ts = traj.event_times(0)
    assert len(ts) == math.floor(cfg.t_end / T + 1e-9)
    for k, t in enumerate(ts, start=1):
        assert abs(t - k * T) < k * 1e-9


def test_partial_action_keeps_leader_period():
    rng = np.random.default_rng(20)
    for _ in range(5):
        p, a1, a2, M = draw_mixed(rng, sign=-1, m_min=1e-3)
        k = TwoBodyConstants.from_params(p, a1, a2)
        cfg = default_config(p, [a1, a2], horizon_periods=15)
        traj = simulate(p, inds(a1, a2), cfg)
        assert traj.actors() == (0,)
        ts = traj.event_times(0)
        assert np.allclose(np.diff(ts), k.T, rtol=0, atol=1e-8)
        assert classify_two(p, a1, a2).tag == PARTIAL_ACTION


def test_follower_matches_closed_form_over_a_period():
    p = FIG6
    a1, a2 = 0.6, 0.1
    k = TwoBodyConstants.from_params(p, a1, a2)
    u0 = -0.3
    cfg = SimConfig(t_end=k.T * (1 - 1e-9), dt_max=k.T / 200, sample_every=k.T / 40)
    traj = simulate(p, [IndividualConfig(a1, 0.0, 1.0), IndividualConfig(a2, u0, 0.0)], cfg,
                    ignore_threshold=[0])
    ref = np.array([two_body_solution(k, u0, t) for t in traj.t])
    # individual 1 starts freshly nudged, so the follower sees y1 = e^{-rt}
    assert np.max(np.abs(traj.x[:, 1] - ref)) < 1e-6


def test_threshold_free_path_matches_reference_integrator():
    p = GlobalParams(0.8, 0.6, 0.9, 0.4, 0.1, 0.7, 0.9, n=3)
    alphas = [0.5, 0.2, -0.4]
    x0, y0 = [0.1, -0.2, 0.3], [0.9, 0.2, 0.5]
    cfg = SimConfig(t_end=20.0, dt_max=0.2, sample_every=0.5)
    traj = simulate(p, [IndividualConfig(a, x, y) for a, x, y in zip(alphas, x0, y0)], cfg,
                    ignore_threshold=[0, 1, 2])
    ref = reference_path(p, alphas, x0, y0, traj.t)
    assert np.max(np.abs(traj.x.T - ref[:3])) < 1e-8
    assert np.max(np.abs(traj.y.T - ref[3:]) / np.maximum(ref[3:], 1e-300)) < 1e-8


def test_state_box_decay_and_event_spacing():
    p = GlobalParams(1.0, 0.7, 0.6, 0.4, 0.08, 0.5, 0.75, n=3)
    alphas = [0.8, 0.5, 0.2]
    cfg = default_config(p, alphas, horizon_periods=10, sample_every=None)
    cfg = SimConfig(cfg.t_end, cfg.dt_max, sample_every=cfg.dt_max)
    traj = simulate(p, inds(*alphas), cfg)
    assert np.all(np.abs(traj.x) < 1.0)
    assert np.all((traj.y >= 0.0) & (traj.y <= 1.0))
    assert np.all(np.diff(traj.t) > 0)
    assert traj.t[-1] == cfg.t_end
    assert all(0.0 <= e.t <= cfg.t_end for e in traj.events)
    for i in range(3):
        ts = traj.event_times(i)
        assert np.all(np.diff(ts) > cfg.event_tol)
    # y decays exponentially between one individual's own actions
    for i in range(3):
        ts = np.concatenate([[0.0], traj.event_times(i), [np.inf]])
        for lo, hi in zip(ts, ts[1:]):
            m = (traj.t > lo) & (traj.t < hi)
            tt, yy = traj.t[m], traj.y[m, i]
            if len(tt) > 1 and yy[0] > 0:
                assert np.allclose(yy[1:] / yy[:-1], np.exp(-p.r * np.diff(tt)), rtol=1e-8)
    # the reset is visible in the pre-reset record
    for e, row in zip(traj.events, traj.event_x):
        assert row[e.individual] >= p.tau - 1e-8


def test_first_action_bound_and_ordering():
    rng = np.random.default_rng(21)
    for _ in range(10):
        p = GlobalParams(*rng.uniform(0.3, 1.2, 3), rng.uniform(0.1, 0.6),
                         rng.uniform(0.02, 0.3), rng.uniform(0.3, 1.5), rng.uniform(0.4, 0.9),
                         n=3)
        if not p.alpha_boundary < 0.95:
            continue
        alphas = sorted(rng.uniform(p.alpha_boundary, 1.0, 3))
        if not all(p.rate(a) > 0 for a in alphas):
            continue
        T_max = math.atanh(p.tau) / p.rate(alphas[0])
        cfg = SimConfig(t_end=1.01 * T_max, dt_max=T_max / 50)
        traj = simulate(p, inds(*alphas), cfg)
        firsts = [traj.first_action(i) for i in range(3)]
        for a, t in zip(alphas, firsts):
            assert t <= math.atanh(p.tau) / p.rate(a) + cfg.event_tol
        assert firsts[0] >= firsts[1] >= firsts[2]


def test_start_at_threshold_acts_immediately():
    p = FIG6
    cfg = SimConfig(t_end=1.0, dt_max=0.1)
    traj = simulate(p, [IndividualConfig(0.0, 0.9, 0.0), IndividualConfig(0.0)], cfg)
    assert traj.events[0] == ActionEvent(0, 0.0)
    assert traj.x[0, 0] == 0.0 and traj.y[0, 0] == 1.0


def test_determinism():
    p = GlobalParams(1.0, 0.7, 0.6, 0.4, 0.08, 0.5, 0.75, n=3)
    alphas = [0.8, 0.5, 0.2]
    cfg = default_config(p, alphas, horizon_periods=8)
    t1 = simulate(p, inds(*alphas), cfg)
    t2 = simulate(p, inds(*alphas), cfg)
    assert t1.events == t2.events
    assert np.array_equal(t1.x, t2.x)


def _fake(events, event_x, n=2):
    return Trajectory(np.array([0.0, 1.0]), np.zeros((2, n)), np.zeros((2, n)),
                      [ActionEvent(i, t) for i, t in events], np.array(event_x), 1.0,
                      FIG6, (0.6, 0.1))


def test_empirical_classify_from_logs():
    assert empirical_classify(_fake([], np.empty((0, 2)))).tag == NO_ACTION
    c = empirical_classify(_fake([(0, 0.2), (0, 0.6)], [[0.8, -0.3], [0.8, -0.4]]))
    assert (c.tag, c.actors) == (PARTIAL_ACTION, (0,))
    c = empirical_classify(_fake([(0, 0.2), (0, 0.6)], [[0.8, -0.3], [0.8, -0.3 + 1e-8]]))
    assert c.tag == UNDETERMINED
    c = empirical_classify(_fake([(0, 0.2), (1, 0.6)], [[0.8, 0.1], [0.1, 0.8]]))
    assert (c.tag, c.actors) == (FULL_ACTION, (0, 1))


def test_simulated_classification_matches_analytic():
    rng = np.random.default_rng(22)
    for sign in (1, -1) * 6:
        p, a1, a2, M = draw_mixed(rng, sign=sign, m_min=1e-3)
        verdict, _ = simulate_and_classify(p, inds(a1, a2), default_config(p, [a1, a2]))
        expect = classify_two(p, a1, a2)
        assert (verdict.tag, verdict.actors) == (expect.tag, expect.actors)
