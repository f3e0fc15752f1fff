import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from wiretap.channel import ChannelState, RayleighUnit, SampleSet, draw_sample_set
from wiretap.errors import InvalidArgument, OracleScopeExceeded
from wiretap.power import (
    LN2,
    Kkt,
    Tabulated,
    Uniform,
    calibrate_uniform,
    calibrate_water_filling,
    kkt_powers,
    solve_lambda,
)
from wiretap.rate import (
    brute_force_allocate,
    ergodic_rate,
    instantaneous_rate,
    rate_difference,
    secrecy_capacity,
)


def finite(states, weights=None):
    weights = weights or [1 / len(states)] * len(states)
    return SampleSet.from_states(states, weights)


@pytest.mark.parametrize(
    "g1, g2, p, expected",
    [(3, 1, 1, 1.0), (3, 1, 0, 0.0), (0.4, 0.1, 0, 0.0), (1, 2, 5, 0.0)],
)
def test_instantaneous_rate(g1, g2, p, expected):
    assert instantaneous_rate(ChannelState(g1, g2), p) == pytest.approx(expected, abs=1e-15)


def test_instantaneous_rate_negative_power():
    with pytest.raises(InvalidArgument):
        instantaneous_rate(ChannelState(1, 0), -0.1)


def test_ergodic_examples():
    est = ergodic_rate(finite([(3, 1)]), Uniform(1.0))
    assert (est.rate, est.error_bound) == (1.0, 0.0)
    est = ergodic_rate(finite([(3, 1), (1, 3)]), Uniform(2.0))
    assert est.rate == pytest.approx(0.5 * (math.log2(7) - math.log2(3)), abs=1e-15)
    ss = draw_sample_set(RayleighUnit(), 1000, 2)
    assert ergodic_rate(ss, Tabulated((0.0,) * 1000)).rate == 0.0


def test_capacity_examples():
    est, sol = secrecy_capacity(finite([(1, 1)]), 10.0)
    assert est.rate == 0.0 and est.no_secrecy and sol is None
    est, _ = secrecy_capacity(finite([(1, 0)]), 1.0)
    assert est.rate == pytest.approx(1.0, abs=1e-9)
    p = math.sqrt(17) / 2 - 1.5
    est, sol = secrecy_capacity(finite([(1, 0.5)]), p)
    assert sol.lam == pytest.approx(1 / (4 * LN2), rel=1e-9)
    expected = math.log2(1 + p) - math.log2(1 + 0.5 * p)
    assert est.rate == pytest.approx(expected, abs=1e-12)
    assert brute_force_allocate(finite([(1, 0.5)]), p)[1] == pytest.approx(expected, abs=1e-4)


def test_monte_carlo_error_bound():
    ss = draw_sample_set(RayleighUnit(), 20_000, 4)
    est, _ = secrecy_capacity(ss, 10.0)
    assert 0 < est.error_bound < 0.05
    # one-sigma bound shrinks like 1/sqrt(n)
    big, _ = secrecy_capacity(draw_sample_set(RayleighUnit(), 80_000, 4), 10.0)
    assert big.error_bound == pytest.approx(est.error_bound / 2, rel=0.1)


def test_oracle_examples():
    pol, rate = brute_force_allocate(finite([(1, 0)]), 1.0, grid=1000)
    assert pol.powers[0] == pytest.approx(1.0, abs=1e-3)
    assert rate == pytest.approx(1.0, abs=1e-4)

    ss = finite([(3, 0), (1, 0)])
    exact, _ = secrecy_capacity(ss, 1.0)
    # both active at lam = 3/(5 ln2): levels 5/3 - 1/3 and 5/3 - 1
    closed = 0.5 * math.log2(1 + 3 * 4 / 3) + 0.5 * math.log2(1 + 2 / 3)
    assert exact.rate == pytest.approx(closed, abs=1e-12)
    assert brute_force_allocate(ss, 1.0)[1] == pytest.approx(closed, abs=1e-4)

    pol, rate = brute_force_allocate(finite([(1, 2), (0.5, 0.5)]), 1.0)
    assert pol.powers == (0.0, 0.0) and rate == 0.0


def test_oracle_scope():
    ss = finite([(2, 1)] * 9)
    with pytest.raises(OracleScopeExceeded):
        brute_force_allocate(ss, 1.0)
    with pytest.raises(InvalidArgument):
        brute_force_allocate(finite([(2, 1)]), 1.0, grid=10)


def random_finite(rng, max_states=6):
    n = int(rng.integers(1, max_states + 1))
    g = rng.uniform(0, 5, size=(n, 2))
    w = rng.dirichlet(np.ones(n))
    w[-1] = 1.0 - math.fsum(w[:-1].tolist())
    return SampleSet(g[:, 0], g[:, 1], np.maximum(w, 0.0))


def test_oracle_agreement_random():
    rng = np.random.default_rng(11)
    for _ in range(10):
        ss = random_finite(rng)
        budget = rng.uniform(0.1, 10)
        est, _ = secrecy_capacity(ss, budget)
        assert abs(est.rate - brute_force_allocate(ss, budget)[1]) <= 1e-4


def test_policy_dominance():
    rng = np.random.default_rng(5)
    sets = [random_finite(rng, 30) for _ in range(40)]
    sets += [draw_sample_set(RayleighUnit(), 5000, s) for s in range(5)]
    for ss in sets:
        if ss.mass_of_a() == 0:
            continue
        budget = rng.uniform(0.1, 100)
        opt, _ = secrecy_capacity(ss, budget)
        uni = ergodic_rate(ss, calibrate_uniform(ss, budget))
        wf = ergodic_rate(ss, calibrate_water_filling(ss, budget))
        assert opt.rate >= uni.rate - 1e-12
        assert opt.rate >= wf.rate - 1e-12


def test_budget_monotone():
    rng = np.random.default_rng(6)
    for _ in range(50):
        ss = random_finite(rng, 20)
        b1, b2 = np.sort(rng.uniform(0.01, 50, 2))
        r1, _ = secrecy_capacity(ss, b1)
        r2, _ = secrecy_capacity(ss, b2)
        assert r2.rate >= r1.rate - 1e-12


@settings(max_examples=200, deadline=None)
@given(
    st.lists(st.tuples(st.floats(0, 10), st.floats(0, 10)), min_size=1, max_size=30),
    st.floats(1e-3, 20),
)
def test_zero_power_off_a(states, lam):
    g = np.array(states)
    p = kkt_powers(g[:, 0], g[:, 1], lam)
    assert np.all(p[g[:, 0] <= g[:, 1]] == 0.0)


def test_clamp_consistency():
    # Collapse every A^c state into one (0, 0) state carrying the same mass;
    # weights must still sum to one, and such states get no power or rate.
    rng = np.random.default_rng(12)
    for _ in range(50):
        ss = random_finite(rng, 30)
        if ss.mass_of_a() == 0:
            continue
        a = ss.in_a
        w_out = math.fsum(ss.weights[~a].tolist())
        g1 = np.append(ss.g1[a], 0.0)
        g2 = np.append(ss.g2[a], 0.0)
        w = np.append(ss.weights[a], w_out)
        reduced = SampleSet(g1, g2, w)
        budget = rng.uniform(0.1, 10)
        full, s1 = secrecy_capacity(ss, budget)
        part, s2 = secrecy_capacity(reduced, budget)
        assert abs(full.rate - part.rate) <= 1e-12
        assert s1.lam == s2.lam


def test_rate_difference_paired():
    ss = draw_sample_set(RayleighUnit(), 50_000, 21)
    sol = solve_lambda(ss, 10.0)
    opt, uni = Kkt(sol.lam), calibrate_uniform(ss, 10.0)
    diff = rate_difference(ss, opt, uni)
    assert diff.rate == pytest.approx(ergodic_rate(ss, opt).rate - ergodic_rate(ss, uni).rate, abs=1e-12)
    # pairing removes most of the shared fading noise
    a, b = ergodic_rate(ss, opt).error_bound, ergodic_rate(ss, uni).error_bound
    assert diff.error_bound < math.hypot(a, b)
