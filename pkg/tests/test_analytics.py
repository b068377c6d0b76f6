"""Closed-form dissemination results against independent numerical oracles.

Frozen constants were produced by adaptive ODE integration (for population
curves) and adaptive quadrature of the survival function (for delays), then
pinned here at full double precision.
"""

import math

import numpy as np
import pytest
from scipy.integrate import quad

from edgecache.analytics import (
    ArrivalSchedule,
    EMPTY_SCHEDULE,
    content_cost,
    content_cost_phases,
    delivery_probability,
    effective_meeting_rate,
    expected_delay,
    holders_requesters_at,
    integrate_generalized,
    relative_cost_decrease,
    sc_delivery_fraction,
    total_cost,
)
from edgecache.model import (
    ContentClass,
    CostParams,
    EffectiveState,
    Placement,
    ScenarioConfig,
    effective_state,
)

ES = EffectiveState(r0=100.0, h0=1.0)


def test_population_curves_match_ode_oracle_value():
    h, r = holders_requesters_at(0.1, ES, p_c=0.5, mu=1.0)
    assert h == pytest.approx(39.08533186078578, rel=1e-12)
    assert r == pytest.approx(23.829336278428443, rel=1e-12)


def test_delivery_probability_frozen_value():
    p = delivery_probability(0.05, ES, p_c=0.5, mu=1.0)
    assert p == pytest.approx(0.18798994176710015, rel=1e-12)


def test_expected_delay_frozen_value():
    d = expected_delay(0.1, ES, p_c=0.5, mu=1.0)
    assert d == pytest.approx(0.07331494504763389, rel=1e-12)


def test_sc_fraction_frozen_value():
    es = EffectiveState(r0=50.0, h0=4.0)
    q = sc_delivery_fraction(1.0, 2.0, es, p_c=0.5, mu=1.0)
    assert q == pytest.approx(0.15848011750949176, rel=1e-12)


def test_sc_fraction_without_relaying_is_the_holder_ratio():
    es = EffectiveState(r0=50.0, h0=4.0)
    assert sc_delivery_fraction(1.0, 2.0, es, p_c=0.0, mu=1.0) == 0.5


def test_conservation_battery():
    # h(t) + p_c * r(t) is invariant along the flow
    rng = np.random.default_rng(7)
    for _ in range(300):
        r0 = rng.uniform(1, 500)
        h0 = rng.uniform(0.1, 50)
        p_c = rng.uniform(0, 1)
        mu = 10 ** rng.uniform(-5, 0)
        t = 10 ** rng.uniform(-2, 5)
        h, r = holders_requesters_at(t, EffectiveState(r0, h0), p_c, mu)
        lhs = h + p_c * r
        rhs = h0 + p_c * r0
        assert abs(lhs - rhs) <= 1e-9 * max(1.0, rhs)


def test_no_relaying_reduces_to_pure_exponential():
    es = EffectiveState(r0=80.0, h0=5.0)
    for t in (0.0, 0.3, 2.0):
        h, r = holders_requesters_at(t, es, p_c=0.0, mu=0.7)
        assert h == pytest.approx(5.0, abs=1e-12)
        assert r == pytest.approx(80.0 * math.exp(-0.7 * 5.0 * t), rel=1e-12)
        p = delivery_probability(t, es, 0.0, 0.7)
        assert p == pytest.approx(-math.expm1(-0.7 * 5.0 * t), rel=1e-12, abs=1e-15)


def test_vectorized_and_scalar_agree():
    grid = np.array([0.0, 0.02, 0.4, 1.7])
    h_vec, r_vec = holders_requesters_at(grid, ES, 0.3, 1.0)
    p_vec = delivery_probability(grid, ES, 0.3, 1.0)
    for i, t in enumerate(grid):
        h, r = holders_requesters_at(float(t), ES, 0.3, 1.0)
        assert (h, r) == (h_vec[i], r_vec[i])
        assert delivery_probability(float(t), ES, 0.3, 1.0) == p_vec[i]
    assert isinstance(h_vec, np.ndarray)
    assert isinstance(delivery_probability(0.5, ES, 0.3, 1.0), float)


def test_delivery_probability_monotone_and_bounded():
    grid = np.linspace(0, 50, 400)
    p = delivery_probability(grid, ES, 0.8, 0.05)
    assert (np.diff(p) >= -1e-15).all()
    assert p[0] == 0.0
    assert ((0.0 <= p) & (p <= 1.0)).all()


def test_more_relaying_speeds_delivery():
    ps = [delivery_probability(0.05, ES, p_c, 1.0) for p_c in (0.0, 0.3, 0.7, 1.0)]
    assert ps == sorted(ps)
    assert ps[0] < ps[-1]


def test_no_overflow_at_extreme_horizons():
    with np.errstate(over="raise", invalid="raise", divide="raise"):
        h, r = holders_requesters_at(1e6, ES, 1.0, 1.0)
        p = delivery_probability(1e6, ES, 1.0, 1.0)
    assert p == 1.0
    assert h == pytest.approx(101.0, rel=1e-12)
    assert r == pytest.approx(0.0, abs=1e-12)


def test_degenerate_populations():
    assert delivery_probability(3.0, EffectiveState(0.0, 2.0), 0.5, 1.0) == 1.0
    assert delivery_probability(3.0, EffectiveState(10.0, 0.0), 0.5, 1.0) == 0.0
    h, r = holders_requesters_at(3.0, EffectiveState(10.0, 0.0), 0.5, 1.0)
    assert (h, r) == (0.0, 10.0)


def test_expected_delay_matches_survival_quadrature():
    rng = np.random.default_rng(11)
    for _ in range(40):
        r0 = rng.uniform(1, 200)
        h0 = rng.uniform(0.2, 20)
        p_c = rng.uniform(0, 1)
        mu = 10 ** rng.uniform(-4, 0)
        ttl = 10 ** rng.uniform(-1, 3)
        es = EffectiveState(r0, h0)
        val = expected_delay(ttl, es, p_c, mu)
        ref, err = quad(lambda t: 1.0 - delivery_probability(t, es, p_c, mu),
                        0.0, ttl, limit=200)
        assert abs(val - ref) <= 1e-6 * max(1.0, abs(ref)) + 10 * err
        assert 0.0 <= val <= ttl


def test_expected_delay_edge_cases():
    assert expected_delay(0.0, ES, 0.5, 1.0) == 0.0
    assert expected_delay(4.0, EffectiveState(0.0, 3.0), 0.5, 1.0) == 0.0
    # no holders and no relaying: everyone waits out the deadline
    assert expected_delay(4.0, EffectiveState(10.0, 0.0), 0.0, 1.0) == 4.0
    with pytest.raises(ValueError):
        expected_delay(-1.0, ES, 0.5, 1.0)


def test_expected_delay_continuous_at_small_p_c():
    es = EffectiveState(60.0, 3.0)
    below = expected_delay(100.0, es, 1e-10, 0.01)  # analytic limit branch
    above = expected_delay(100.0, es, 1e-8, 0.01)
    assert below == pytest.approx(above, rel=1e-6)


def test_sc_fraction_bounds_and_errors():
    es = EffectiveState(50.0, 4.0)
    q = sc_delivery_fraction(2.0, 4.0, es, 0.9, 1.0)
    assert 0.0 < q < 1.0
    assert sc_delivery_fraction(2.0, 0.0, es, 0.9, 1.0) == 0.0
    with pytest.raises(ValueError):
        sc_delivery_fraction(2.0, 5.0, es, 0.9, 1.0)
    with pytest.raises(ValueError):
        sc_delivery_fraction(2.0, 1.0, EffectiveState(50.0, 0.0), 0.9, 1.0)


def test_sc_fraction_decreases_with_relaying_growth():
    # more relaying means more D2D holders diluting the small cells
    es = EffectiveState(200.0, 4.0)
    qs = [sc_delivery_fraction(5.0, 4.0, es, p_c, 0.5) for p_c in (0.0, 0.2, 0.6, 1.0)]
    assert qs[0] == 1.0
    assert all(q2 < q1 for q1, q2 in zip(qs, qs[1:]))


CFG = ScenarioConfig(n_bs=1, n_sc=4, n_mn=100, cache_per_sc=25, p_c=0.5, mu_lambda=0.01)
COSTS = CostParams(c_bh=0.8, c_bs=1.0, c_sc=0.2, c_d2d=0.1, c_bs_ttl=2.0)


def test_cost_phases_sum_and_structure():
    content = ContentClass("a", 50, 30.0)
    ph = content_cost_phases(content, 3.0, 4.0, CFG, COSTS)
    assert ph[0] == pytest.approx(0.8 * 3 + 1.0 * 4)
    es = effective_state(50, 3.0, 4.0, CFG.p_c)
    p = delivery_probability(30.0, es, CFG.p_c, CFG.mu_lambda)
    q = sc_delivery_fraction(30.0, 3.0, es, CFG.p_c, CFG.mu_lambda)
    assert ph[1] == pytest.approx((0.2 * q + 0.1 * (1 - q)) * es.r0 * p)
    assert ph[2] == pytest.approx(2.0 * es.r0 * (1 - p))
    assert content_cost(content, 3.0, 4.0, CFG, COSTS) == pytest.approx(sum(ph))


def test_cost_with_no_copies_is_pure_deadline():
    content = ContentClass("a", 50, 30.0)
    cfg = ScenarioConfig(n_bs=1, n_sc=4, n_mn=100, cache_per_sc=25, p_c=0.0, mu_lambda=0.01)
    assert content_cost(content, 0.0, 0.0, cfg, COSTS) == pytest.approx(2.0 * 50)


def test_total_cost_sums_contents():
    contents = [ContentClass("a", 50, 30.0), ContentClass("b", 20, 10.0)]
    pl = Placement(h_sc0=[3.0, 1.0], h_mn0=[4.0, 0.0])
    want = sum(content_cost(c, hs, hm, CFG, COSTS)
               for c, hs, hm in zip(contents, pl.h_sc0, pl.h_mn0))
    assert total_cost(contents, pl, CFG, COSTS) == pytest.approx(want)


def test_relative_cost_decrease():
    assert relative_cost_decrease(100.0, 25.0) == pytest.approx(0.75)
    with pytest.raises(ValueError):
        relative_cost_decrease(0.0, 1.0)


def test_effective_meeting_rate_variants():
    rng = np.random.default_rng(3)
    lam = rng.gamma(2.0, 0.5, size=20000)
    # unit weight: both variants collapse to the plain mean
    assert effective_meeting_rate(lam, lambda x: 1.0, "selfishness") == pytest.approx(lam.mean())
    assert effective_meeting_rate(lam, lambda x: 1.0, "placement") == pytest.approx(lam.mean())
    # rate-proportional weight: placement biases toward fast pairs
    boosted = effective_meeting_rate(lam, lambda x: x, "placement")
    assert boosted == pytest.approx(np.mean(lam ** 2) / lam.mean())
    assert boosted > lam.mean()
    # selfishness with a thinning weight can only slow things down
    thinned = effective_meeting_rate(lam, lambda x: 0.5, "selfishness")
    assert thinned == pytest.approx(0.5 * lam.mean())
    with pytest.raises(ValueError):
        effective_meeting_rate(lam, lambda x: 1.0, "bogus")
    with pytest.raises(ValueError):
        effective_meeting_rate([], lambda x: 1.0, "selfishness")
    with pytest.raises(ValueError):
        effective_meeting_rate([1.0], lambda x: 0.0, "placement")


# --- generalized integrator --------------------------------------------------

def rk4_oracle(es, p_c, mu, lambda_d, h_sc0, events, t_end, n_steps=40000):
    """Fixed-step RK4 with explicit jump handling, independent of scipy."""
    def f(h, r):
        return (p_c * h * r * mu - (h - h_sc0) * lambda_d, -h * r * mu)

    h, r = float(es.h0), float(es.r0)
    t = 0.0
    pending = sorted(e for e in events if e[0] <= t_end)
    marks = [tau for tau, _ in pending] + [t_end]
    for mark in marks:
        span = mark - t
        if span > 0:
            steps = max(1, int(round(n_steps * span / t_end)))
            dt = span / steps
            for _ in range(steps):
                k1 = f(h, r)
                k2 = f(h + dt / 2 * k1[0], r + dt / 2 * k1[1])
                k3 = f(h + dt / 2 * k2[0], r + dt / 2 * k2[1])
                k4 = f(h + dt * k3[0], r + dt * k3[1])
                h += dt / 6 * (k1[0] + 2 * k2[0] + 2 * k3[0] + k4[0])
                r += dt / 6 * (k1[1] + 2 * k2[1] + 2 * k3[1] + k4[1])
            t = mark
        if pending and pending[0][0] == mark:
            r += pending.pop(0)[1]
    return h, r


def test_generalized_integrator_reduces_to_closed_form():
    es = EffectiveState(r0=100.0, h0=2.0)
    grid = np.linspace(0.0, 5.0, 41)
    traj = integrate_generalized(es, 0.6, 0.05, 0.0, 2.0, EMPTY_SCHEDULE, grid)
    h_ref, r_ref = holders_requesters_at(grid, es, 0.6, 0.05)
    np.testing.assert_allclose(traj.h, h_ref, rtol=1e-8)
    np.testing.assert_allclose(traj.r, r_ref, rtol=1e-8, atol=1e-10)


def test_generalized_integrator_matches_rk4_with_drops_and_arrivals():
    es = EffectiveState(r0=60.0, h0=3.0)
    events = ((1.0, 25.0), (2.5, -10.0))
    sched = ArrivalSchedule(events=events)
    grid = np.linspace(0.0, 4.0, 33)
    traj = integrate_generalized(es, 0.5, 0.02, 0.3, 2.0, sched, grid)
    h_ref, r_ref = rk4_oracle(es, 0.5, 0.02, 0.3, 2.0, events, 4.0)
    assert traj.h[-1] == pytest.approx(h_ref, rel=1e-7)
    assert traj.r[-1] == pytest.approx(r_ref, rel=1e-7)


def test_drops_pull_holders_back_toward_caches():
    # with relaying off, holders decay exponentially toward the cache count
    es = EffectiveState(r0=0.0, h0=10.0)
    grid = np.array([0.0, 1.0, 3.0])
    traj = integrate_generalized(es, 0.0, 0.01, 0.5, 4.0, EMPTY_SCHEDULE, grid)
    want = 4.0 + 6.0 * np.exp(-0.5 * grid)
    np.testing.assert_allclose(traj.h, want, rtol=1e-8)


def test_arrival_on_grid_point_reports_post_jump_state():
    es = EffectiveState(r0=10.0, h0=1.0)
    sched = ArrivalSchedule(events=((0.5, 7.0),))
    grid = np.array([0.0, 0.5, 1.0])
    traj = integrate_generalized(es, 0.0, 0.0, 0.0, 1.0, sched, grid)
    assert traj.r[1] == pytest.approx(17.0)
    assert traj.r[2] == pytest.approx(17.0)


def test_arrival_schedule_validation():
    with pytest.raises(ValueError):
        ArrivalSchedule(events=((0.0, 5.0),))
    with pytest.raises(ValueError):
        ArrivalSchedule(events=((1.0, 5.0), (1.0, 2.0)))
    es = EffectiveState(r0=3.0, h0=1.0)
    sched = ArrivalSchedule(events=((0.5, -50.0),))
    with pytest.raises(ValueError, match="below zero"):
        integrate_generalized(es, 0.0, 0.0, 0.0, 0.0, sched, np.array([0.0, 1.0]))


def test_grid_validation():
    es = EffectiveState(r0=3.0, h0=1.0)
    with pytest.raises(ValueError):
        integrate_generalized(es, 0.5, 1.0, 0.0, 0.0, EMPTY_SCHEDULE, np.array([0.5, 1.0]))
    with pytest.raises(ValueError):
        integrate_generalized(es, 0.5, 1.0, 0.0, 0.0, EMPTY_SCHEDULE, np.array([0.0, 0.0]))
