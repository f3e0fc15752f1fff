"""Fading states, fading laws and the sample sets that discretize them.

A fading realization is carried in normalized form: ``g1 = |h1|^2 / mu^2``
for the destination and ``g2 = |h2|^2 / nu^2`` for the wiretapper.  Only
these two scalars enter the secrecy capacity, so phases and separate noise
variances are dropped at ingestion.

Monte Carlo draws come from a counter-based generator: the ``j``-th state of
a stream is a pure function of ``(seed, j)``.  Any partition of the index
range across workers therefore reproduces the same logical sequence.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable, Sequence, Union

import numpy as np

from .errors import InvalidArgument, InvalidDistribution, InvalidState

__all__ = [
    "ChannelState",
    "RayleighFading",
    "RayleighUnit",
    "FiniteMass",
    "ExternalSampler",
    "FadingDistribution",
    "Provenance",
    "SampleSet",
    "counter_uniforms",
    "draw_sample_set",
    "draw_shard",
    "in_transmission_set",
    "weighted_sum",
]

WEIGHT_SUM_TOL = 1e-12
_U64 = np.uint64
_MASK64 = (1 << 64) - 1


def weighted_sum(weights, values) -> float:
    """Exactly rounded ``sum(w * v)``.

    ``math.fsum`` is order independent, so the result does not depend on how
    the terms were produced or split across workers.
    """
    return math.fsum(np.multiply(weights, values).tolist())


@dataclass(frozen=True)
class ChannelState:
    g1: float
    g2: float

    def __post_init__(self):
        g1, g2 = float(self.g1), float(self.g2)
        if not (math.isfinite(g1) and math.isfinite(g2)):
            raise InvalidState(f"gains must be finite, got ({g1}, {g2})")
        if g1 < 0 or g2 < 0:
            raise InvalidState(f"gains must be nonnegative, got ({g1}, {g2})")
        object.__setattr__(self, "g1", g1)
        object.__setattr__(self, "g2", g2)

    @classmethod
    def from_raw(cls, h1_sq: float, h2_sq: float, mu2: float = 1.0, nu2: float = 1.0):
        """Normalize squared gain magnitudes by the two noise variances."""
        if mu2 <= 0 or nu2 <= 0:
            raise InvalidArgument("noise variances must be positive")
        return cls(h1_sq / mu2, h2_sq / nu2)


def in_transmission_set(s: ChannelState) -> bool:
    """True iff the destination is strictly stronger than the wiretapper."""
    return s.g1 > s.g2


# --------------------------------------------------------------------------
# fading laws
# --------------------------------------------------------------------------


@dataclass(frozen=True)
class RayleighFading:
    """Independent exponential normalized gains.

    ``mean_g1`` and ``mean_g2`` are ``E|h1|^2/mu^2`` and ``E|h2|^2/nu^2``.
    The unit case (both means 1) is the standard Rayleigh model.
    """

    mean_g1: float = 1.0
    mean_g2: float = 1.0

    def __post_init__(self):
        for name in ("mean_g1", "mean_g2"):
            v = getattr(self, name)
            if not (math.isfinite(v) and v > 0):
                raise InvalidDistribution(f"{name} must be positive and finite, got {v}")

    @property
    def is_unit(self) -> bool:
        return self.mean_g1 == 1.0 and self.mean_g2 == 1.0


def RayleighUnit() -> RayleighFading:
    return RayleighFading(1.0, 1.0)


@dataclass(frozen=True)
class FiniteMass:
    """A fading law supported on finitely many states."""

    states: tuple[ChannelState, ...]
    probs: tuple[float, ...]

    def __post_init__(self):
        states = tuple(
            s if isinstance(s, ChannelState) else ChannelState(*s) for s in self.states
        )
        probs = tuple(float(p) for p in self.probs)
        if not states:
            raise InvalidDistribution("finite-mass law needs at least one mass point")
        if len(states) != len(probs):
            raise InvalidDistribution(
                f"{len(states)} mass points but {len(probs)} probabilities"
            )
        for i, p in enumerate(probs):
            if not (math.isfinite(p) and p >= 0):
                raise InvalidDistribution(f"probability {i} is {p}; must be >= 0")
        total = math.fsum(probs)
        if abs(total - 1.0) > WEIGHT_SUM_TOL:
            raise InvalidDistribution(f"probabilities sum to {total!r}, not 1")
        object.__setattr__(self, "states", states)
        object.__setattr__(self, "probs", probs)

    @classmethod
    def uniform_product(cls, levels: Sequence[float], levels2: Sequence[float] | None = None):
        """Independent uniform ``g1`` over ``levels`` and ``g2`` over ``levels2``."""
        levels2 = levels if levels2 is None else levels2
        n = len(levels) * len(levels2)
        if n == 0:
            raise InvalidDistribution("levels must be non-empty")
        states = [ChannelState(a, b) for a in levels for b in levels2]
        return cls(tuple(states), (1.0 / n,) * n)


@dataclass(frozen=True)
class ExternalSampler:
    """User-supplied deterministic generator.

    ``fn(n, seed)`` must return two length-``n`` arrays ``(g1, g2)`` and be a
    pure function of its arguments.
    """

    name: str
    fn: Callable[[int, int], tuple[np.ndarray, np.ndarray]] = field(compare=False)


FadingDistribution = Union[RayleighFading, FiniteMass, ExternalSampler]


# --------------------------------------------------------------------------
# sample sets
# --------------------------------------------------------------------------


@dataclass(frozen=True)
class Provenance:
    kind: str  # "monte-carlo" | "finite-mass" | "external"
    seed: int | None = None
    count: int | None = None
    source: str | None = None

    @property
    def exact(self) -> bool:
        return self.kind == "finite-mass"

    def __str__(self):
        if self.kind == "finite-mass":
            return "finite-mass exact"
        parts = [self.kind]
        if self.source:
            parts.append(self.source)
        parts.append(f"seed={self.seed}")
        parts.append(f"n={self.count}")
        return " ".join(parts)


def _frozen(a) -> np.ndarray:
    arr = np.array(a, dtype=float)
    arr.setflags(write=False)
    return arr


@dataclass(frozen=True, eq=False)
class SampleSet:
    """A weighted list of channel states standing in for a fading law.

    Stored column-wise: ``g1[i], g2[i], weights[i]`` describe state ``i``.
    """

    g1: np.ndarray
    g2: np.ndarray
    weights: np.ndarray
    provenance: Provenance = Provenance("finite-mass")

    def __post_init__(self):
        g1, g2, w = _frozen(self.g1), _frozen(self.g2), _frozen(self.weights)
        if not (g1.ndim == g2.ndim == w.ndim == 1):
            raise InvalidArgument("sample arrays must be one-dimensional")
        if not (len(g1) == len(g2) == len(w)) or len(g1) == 0:
            raise InvalidArgument("states and weights must have equal length >= 1")
        if not (np.all(np.isfinite(g1)) and np.all(np.isfinite(g2))):
            raise InvalidState("gains must be finite")
        if np.any(g1 < 0) or np.any(g2 < 0):
            raise InvalidState("gains must be nonnegative")
        if np.any(~np.isfinite(w)) or np.any(w < 0):
            raise InvalidArgument("weights must be nonnegative and finite")
        total = math.fsum(w.tolist())
        if abs(total - 1.0) > WEIGHT_SUM_TOL:
            raise InvalidArgument(f"weights sum to {total!r}, not 1")
        object.__setattr__(self, "g1", g1)
        object.__setattr__(self, "g2", g2)
        object.__setattr__(self, "weights", w)

    @classmethod
    def from_states(cls, states, weights, provenance: Provenance | None = None):
        states = [s if isinstance(s, ChannelState) else ChannelState(*s) for s in states]
        return cls(
            [s.g1 for s in states],
            [s.g2 for s in states],
            weights,
            provenance or Provenance("finite-mass"),
        )

    def __len__(self):
        return len(self.g1)

    @property
    def states(self) -> list[ChannelState]:
        return [ChannelState(a, b) for a, b in zip(self.g1.tolist(), self.g2.tolist())]

    @property
    def in_a(self) -> np.ndarray:
        """Boolean mask of states in the transmission set."""
        return self.g1 > self.g2

    def mass_of_a(self) -> float:
        return math.fsum(self.weights[self.in_a].tolist())

    def __eq__(self, other):
        if not isinstance(other, SampleSet):
            return NotImplemented
        return (
            self.provenance == other.provenance
            and np.array_equal(self.g1, other.g1)
            and np.array_equal(self.g2, other.g2)
            and np.array_equal(self.weights, other.weights)
        )

    __hash__ = None


# --------------------------------------------------------------------------
# counter-based generator
# --------------------------------------------------------------------------

_GOLDEN = _U64(0x9E3779B97F4A7C15)
_M1 = _U64(0xBF58476D1CE4E5B9)
_M2 = _U64(0x94D049BB133111EB)


def _mix64(z: np.ndarray) -> np.ndarray:
    # splitmix64 finalizer; uint64 arithmetic wraps modulo 2**64
    z = (z ^ (z >> _U64(30))) * _M1
    z = (z ^ (z >> _U64(27))) * _M2
    return z ^ (z >> _U64(31))


def counter_uniforms(seed: int, counters) -> np.ndarray:
    """Uniform doubles in ``[0, 1)``, one per counter, keyed by ``seed``.

    Output ``k`` depends only on ``(seed, counters[k])``.
    """
    if not 0 <= seed <= _MASK64:
        raise InvalidArgument(f"seed must be a 64-bit unsigned integer, got {seed}")
    key = _mix64(np.array([seed], dtype=_U64))[0]
    c = np.asarray(counters, dtype=_U64)
    with np.errstate(over="ignore"):
        z = _mix64(key + (c + _U64(1)) * _GOLDEN)
    return (z >> _U64(11)).astype(np.float64) * 2.0**-53


def _rayleigh_gains(dist: RayleighFading, seed: int, indices: np.ndarray):
    idx = np.asarray(indices, dtype=_U64)
    u1 = counter_uniforms(seed, _U64(2) * idx)
    u2 = counter_uniforms(seed, _U64(2) * idx + _U64(1))
    # 1 - u lies in (0, 1], so the log is finite
    return -dist.mean_g1 * np.log1p(-u1), -dist.mean_g2 * np.log1p(-u2)


def draw_sample_set(
    dist: FadingDistribution,
    n: int,
    seed: int,
) -> SampleSet:
    """Discretize ``dist`` into a SampleSet.

    Rayleigh and external laws give ``n`` equally weighted draws; a
    finite-mass law returns its own mass points and ``n`` is ignored.
    Partial streams for a single worker come from :func:`draw_shard`.
    """
    if not isinstance(n, (int, np.integer)) or n < 1:
        raise InvalidArgument(f"sample count must be a positive integer, got {n!r}")
    n = int(n)
    if isinstance(dist, FiniteMass):
        return SampleSet.from_states(dist.states, dist.probs, Provenance("finite-mass"))
    if isinstance(dist, RayleighFading):
        g1, g2 = _rayleigh_gains(dist, seed, np.arange(n, dtype=np.uint64))
        return SampleSet(g1, g2, np.full(n, 1.0 / n), Provenance("monte-carlo", seed, n))
    if isinstance(dist, ExternalSampler):
        g1, g2 = dist.fn(n, seed)
        g1 = np.asarray(g1, dtype=float)
        g2 = np.asarray(g2, dtype=float)
        if g1.shape != (n,) or g2.shape != (n,):
            raise InvalidDistribution(
                f"sampler {dist.name!r} returned shapes {g1.shape}, {g2.shape}; expected ({n},)"
            )
        return SampleSet(
            g1, g2, np.full(n, 1.0 / n), Provenance("external", seed, n, dist.name)
        )
    raise InvalidDistribution(f"unknown distribution type {type(dist).__name__}")


def draw_shard(dist: RayleighFading, n: int, seed: int, worker: int, workers: int):
    """Gains at indices ``worker, worker + workers, ...`` below ``n``.

    Returns ``(indices, g1, g2)``.  Interleaving the shards of all workers
    reproduces :func:`draw_sample_set` bit for bit.
    """
    if not isinstance(dist, RayleighFading):
        raise InvalidDistribution("sharded draws are defined for Rayleigh laws only")
    if workers < 1 or not 0 <= worker < workers:
        raise InvalidArgument(f"bad shard ({worker}, {workers})")
    idx = np.arange(worker, n, workers, dtype=np.uint64)
    g1, g2 = _rayleigh_gains(dist, seed, idx)
    return idx.astype(np.int64), g1, g2
