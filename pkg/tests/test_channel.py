import math

import numpy as np
import pytest
from scipy import stats

from wiretap.channel import (
    ChannelState,
    ExternalSampler,
    FiniteMass,
    Provenance,
    RayleighFading,
    RayleighUnit,
    SampleSet,
    counter_uniforms,
    draw_sample_set,
    draw_shard,
    in_transmission_set,
)
from wiretap.config import dump_distribution, load_distribution
from wiretap.errors import InvalidArgument, InvalidDistribution, InvalidState


def test_finite_mass_passes_through():
    dist = FiniteMass(((1.0, 0.0),), (1.0,))
    ss = draw_sample_set(dist, 100, 7)
    assert ss.states == [ChannelState(1.0, 0.0)]
    assert ss.weights.tolist() == [1.0]
    assert str(ss.provenance) == "finite-mass exact"


def test_rayleigh_deterministic():
    a = draw_sample_set(RayleighUnit(), 4, 42)
    b = draw_sample_set(RayleighUnit(), 4, 42)
    assert a == b
    assert a.g1.tobytes() == b.g1.tobytes()
    assert a.g2.tobytes() == b.g2.tobytes()
    assert draw_sample_set(RayleighUnit(), 4, 43) != a


def test_rayleigh_mean_large_sample():
    ss = draw_sample_set(RayleighUnit(), 10**6, 1)
    assert abs(ss.g1.mean() - 1.0) < 0.005
    assert abs(ss.g2.mean() - 1.0) < 0.005
    # an independent generator at the same size lands in the same window
    ref = np.random.default_rng(1).exponential(size=10**6)
    assert abs(ref.mean() - 1.0) < 0.005
    # and the two samplers agree in distribution
    assert stats.ks_2samp(ss.g1[:100_000], ref[:100_000]).pvalue > 1e-4


@pytest.mark.parametrize("seed", [0, 1, 2, 17, 2**63 + 5])
def test_rayleigh_ks(seed):
    ss = draw_sample_set(RayleighUnit(), 10**5, seed)
    for g in (ss.g1, ss.g2):
        assert stats.kstest(g, "expon").statistic < 0.01


def test_gains_independent():
    ss = draw_sample_set(RayleighUnit(), 10**5, 3)
    assert abs(np.corrcoef(ss.g1, ss.g2)[0, 1]) < 0.02


def test_rayleigh_scaled_means():
    ss = draw_sample_set(RayleighFading(2.0, 0.5), 10**5, 5)
    assert ss.g1.mean() == pytest.approx(2.0, rel=0.02)
    assert ss.g2.mean() == pytest.approx(0.5, rel=0.02)


@pytest.mark.parametrize("workers", [1, 2, 3, 7])
def test_shards_interleave_to_full_stream(workers):
    full = draw_sample_set(RayleighUnit(), 1001, 9)
    g1 = np.empty(1001)
    g2 = np.empty(1001)
    for k in range(workers):
        idx, a, b = draw_shard(RayleighUnit(), 1001, 9, k, workers)
        g1[idx], g2[idx] = a, b
    assert np.array_equal(g1, full.g1)
    assert np.array_equal(g2, full.g2)


def test_counter_uniforms_prefix_stable():
    # state j does not depend on how many states are drawn
    short = draw_sample_set(RayleighUnit(), 10, 11)
    long = draw_sample_set(RayleighUnit(), 1000, 11)
    assert np.array_equal(short.g1, long.g1[:10])
    u = counter_uniforms(5, np.arange(10_000))
    assert u.min() >= 0.0 and u.max() < 1.0


@pytest.mark.parametrize("n", [0, -3, 2.5])
def test_bad_sample_count(n):
    with pytest.raises(InvalidArgument):
        draw_sample_set(RayleighUnit(), n, 1)


def test_bad_seed():
    with pytest.raises(InvalidArgument):
        draw_sample_set(RayleighUnit(), 10, -1)
    with pytest.raises(InvalidArgument):
        draw_sample_set(RayleighUnit(), 10, 2**64)


@pytest.mark.parametrize(
    "states, probs",
    [
        ((), ()),
        (((1, 0),), (0.9,)),
        (((1, 0), (2, 0)), (1.2, -0.2)),
        (((1, 0), (2, 0)), (1.0,)),
    ],
)
def test_finite_mass_invalid(states, probs):
    with pytest.raises(InvalidDistribution):
        FiniteMass(states, probs)


@pytest.mark.parametrize("g", [(-1, 0), (0, -0.1), (math.inf, 0), (1, math.nan)])
def test_state_invalid(g):
    with pytest.raises(InvalidState):
        ChannelState(*g)


@pytest.mark.parametrize(
    "g1, g2, expected",
    [(2, 1, True), (1, 1, False), (0.5, 0.9, False), (0, 0, False), (1e-300, 0, True)],
)
def test_in_transmission_set(g1, g2, expected):
    assert in_transmission_set(ChannelState(g1, g2)) is expected


def test_raw_normalization():
    s = ChannelState.from_raw(2.0, 3.0, mu2=4.0, nu2=0.5)
    assert (s.g1, s.g2) == (0.5, 6.0)


def test_sample_set_invariants():
    with pytest.raises(InvalidArgument):
        SampleSet([1.0], [0.0], [0.5], Provenance("finite-mass"))
    with pytest.raises(InvalidArgument):
        SampleSet([1.0, 2.0], [0.0], [1.0], Provenance("finite-mass"))
    ss = SampleSet.from_states([(1, 0), (0, 1)], [0.25, 0.75])
    with pytest.raises(ValueError):
        ss.g1[0] = 5.0
    assert ss.mass_of_a() == 0.25


def test_finite_mass_round_trip():
    rng = np.random.default_rng(0)
    g = rng.uniform(0, 5, size=(7, 2))
    p = rng.dirichlet(np.ones(7))
    p[-1] = 1.0 - math.fsum(p[:-1].tolist())
    dist = FiniteMass(tuple(map(tuple, g)), tuple(p))
    back = load_distribution(dump_distribution(dist))
    assert back == dist
    a, b = draw_sample_set(dist, 1, 0), draw_sample_set(back, 1, 0)
    assert a == b


def test_rayleigh_round_trip():
    for d in (RayleighUnit(), RayleighFading(2.5, 0.125)):
        assert load_distribution(dump_distribution(d)) == d


def _correlated(n, seed):
    rng = np.random.default_rng(seed)
    g1 = rng.exponential(size=n)
    return g1, 0.5 * g1


def test_external_sampler():
    dist = ExternalSampler("tests:correlated", _correlated)
    a = draw_sample_set(dist, 50, 4)
    assert a == draw_sample_set(dist, 50, 4)
    assert np.all(a.in_a)
    assert a.provenance.kind == "external"


def test_external_sampler_bad_shape():
    dist = ExternalSampler("bad", lambda n, seed: (np.ones(n), np.ones(n + 1)))
    with pytest.raises(InvalidDistribution):
        draw_sample_set(dist, 5, 0)
