"""Instantaneous and ergodic secrecy rates.

The ergodic secrecy rate of a policy is the expectation, over fading
states, of ``max(0, log2(1 + P g1) - log2(1 + P g2))``.  Taking the
expectation over all states with a clamped integrand is the same as the
restricted expectation over the transmission set, because every policy
except water-filling puts zero power outside it and the clamp zeroes the
rest.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass

import numpy as np

from .channel import ChannelState, Provenance, SampleSet, weighted_sum
from .errors import InfeasibleSecrecy, InvalidArgument, OracleScopeExceeded
from .power import (
    LN2,
    Kkt,
    LambdaSolution,
    PowerPolicy,
    Tabulated,
    policy_powers,
    solve_lambda,
)

__all__ = [
    "SecrecyRateEstimate",
    "instantaneous_rate",
    "instantaneous_rates",
    "rate_contributions",
    "ergodic_rate",
    "rate_difference",
    "secrecy_capacity",
    "brute_force_allocate",
]

ORACLE_MAX_STATES = 8


@dataclass(frozen=True)
class SecrecyRateEstimate:
    """Rate in bits per channel use.

    ``error_bound`` is one standard error for sampled provenance and 0 for
    exact finite-mass expectations.  ``no_secrecy`` marks results where the
    transmission set had zero mass and no allocation was attempted.
    """

    rate: float
    error_bound: float
    provenance: Provenance
    no_secrecy: bool = False


def instantaneous_rates(g1, g2, p) -> np.ndarray:
    p = np.asarray(p, dtype=float)
    if np.any(p < 0):
        raise InvalidArgument("power must be nonnegative")
    g1 = np.asarray(g1, dtype=float)
    g2 = np.asarray(g2, dtype=float)
    r = (np.log1p(p * g1) - np.log1p(p * g2)) / LN2
    return np.maximum(r, 0.0)


def instantaneous_rate(s: ChannelState, p: float) -> float:
    """Secrecy rate of a single Gaussian wiretap state at power ``p``.

    >>> instantaneous_rate(ChannelState(3.0, 1.0), 1.0)
    1.0
    """
    if not p >= 0:
        raise InvalidArgument(f"power must be nonnegative, got {p}")
    return float(instantaneous_rates(s.g1, s.g2, p))


def rate_contributions(samples: SampleSet, policy: PowerPolicy) -> np.ndarray:
    """Per-state secrecy rate (unweighted) under ``policy``."""
    return instantaneous_rates(samples.g1, samples.g2, policy_powers(policy, samples))


def _standard_error(samples: SampleSet, values: np.ndarray, mean: float) -> float:
    if samples.provenance.exact:
        return 0.0
    n = len(samples)
    if n < 2:
        return math.inf
    w = samples.weights
    var = weighted_sum(w, (values - mean) ** 2) * n / (n - 1)
    return math.sqrt(var * math.fsum((w * w).tolist()))


def _estimate(samples: SampleSet, values: np.ndarray) -> SecrecyRateEstimate:
    mean = weighted_sum(samples.weights, values)
    return SecrecyRateEstimate(mean, _standard_error(samples, values, mean), samples.provenance)


def ergodic_rate(samples: SampleSet, policy: PowerPolicy) -> SecrecyRateEstimate:
    return _estimate(samples, rate_contributions(samples, policy))


def rate_difference(samples: SampleSet, a: PowerPolicy, b: PowerPolicy) -> SecrecyRateEstimate:
    """Paired estimate of ``rate(a) - rate(b)`` on one shared sample set.

    The standard error is that of the per-state differences, which is the
    right yardstick when both policies see the same draws.  The returned
    ``rate`` field may be negative.
    """
    diff = rate_contributions(samples, a) - rate_contributions(samples, b)
    return _estimate(samples, diff)


def secrecy_capacity(
    samples: SampleSet,
    budget: float,
    rtol: float = 1e-8,
) -> tuple[SecrecyRateEstimate, LambdaSolution | None]:
    """Ergodic secrecy capacity on the sample measure at average power ``budget``.

    When the transmission set has zero mass the capacity is 0; the estimate
    then carries ``no_secrecy=True`` and the multiplier is ``None``.
    """
    try:
        sol = solve_lambda(samples, budget, rtol)
    except InfeasibleSecrecy:
        return SecrecyRateEstimate(0.0, 0.0, samples.provenance, no_secrecy=True), None
    return ergodic_rate(samples, Kkt(sol.lam)), sol


# --------------------------------------------------------------------------
# brute-force oracle
# --------------------------------------------------------------------------


def brute_force_allocate(
    samples: SampleSet,
    budget: float,
    grid: int = 1000,
) -> tuple[Tabulated, float]:
    """Maximize the ergodic secrecy rate by pairwise exchanges on a power grid.

    Works in weighted power ``x_i = w_i P_i`` with ``sum x_i = budget``.  Each
    move shifts ``delta`` from one state to another, with ``delta`` taken
    from a lattice of step ``budget/grid``; every candidate move of a pair is
    scored and the best kept, sweeping all pairs until nothing improves.
    Two refinement stages repeat this at steps ten and a hundred times finer,
    each searching ten steps of the preceding stage either side of the
    incumbent.

    The objective is separable and concave with one linear constraint, so
    a point that no pairwise lattice move improves is the lattice optimum.
    Intended for desk-scale checks only.
    """
    n = len(samples)
    if n > ORACLE_MAX_STATES:
        raise OracleScopeExceeded(
            f"oracle handles at most {ORACLE_MAX_STATES} states, got {n}"
        )
    if grid < 100:
        raise InvalidArgument(f"grid must be >= 100, got {grid}")
    if not (math.isfinite(budget) and budget > 0):
        raise InvalidArgument(f"budget must be positive and finite, got {budget}")

    g1, g2, w = samples.g1, samples.g2, samples.weights
    live = np.flatnonzero(samples.in_a & (w > 0))
    powers = np.zeros(n)
    if live.size == 0:
        return Tabulated(tuple(powers)), 0.0

    wl, a, b = w[live], g1[live], g2[live]

    def value(i, x):
        # weighted rate of live state i at weighted power x (array)
        p = x / wl[i]
        return wl[i] * (np.log1p(p * a[i]) - np.log1p(p * b[i])) / LN2

    x = np.full(live.size, budget / live.size)
    step = budget / grid
    stages = [(step, None), (step / 10, 100), (step / 100, 100)]
    for h, window in stages:
        for _ in range(10_000):
            improved = False
            for i, j in itertools.combinations(range(live.size), 2):
                # move delta from j to i; delta in [-x_i, x_j]
                if window is None:
                    lo_k = -math.floor(x[i] / h)
                    hi_k = math.floor(x[j] / h)
                else:
                    lo_k = max(-math.floor(x[i] / h), -window)
                    hi_k = min(math.floor(x[j] / h), window)
                deltas = np.arange(lo_k, hi_k + 1) * h
                deltas = np.concatenate([deltas, [-x[i], x[j]]])
                deltas = np.clip(deltas, -x[i], x[j])
                total = value(i, x[i] + deltas) + value(j, x[j] - deltas)
                cur = value(i, np.array([x[i]]))[0] + value(j, np.array([x[j]]))[0]
                k = int(np.argmax(total))
                if total[k] > cur + 1e-15 and deltas[k] != 0.0:
                    x[i] += deltas[k]
                    x[j] -= deltas[k]
                    x[j] = max(x[j], 0.0)
                    x[i] = max(x[i], 0.0)
                    improved = True
            if not improved:
                break

    powers[live] = x / wl
    policy = Tabulated(tuple(powers.tolist()))
    rate = weighted_sum(w, instantaneous_rates(g1, g2, powers))
    return policy, rate
