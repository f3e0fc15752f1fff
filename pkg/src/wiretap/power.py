"""Power allocation over fading states.

The secrecy-optimal allocation for a state with normalized gains
``g1 > g2`` and multiplier ``lam`` solves the stationarity condition

    (g1 / (1 + P g1) - g2 / (1 + P g2)) / ln 2 = lam

whenever its positive root exists, and is zero otherwise.  With ``g2 = 0``
the condition collapses to ordinary water-filling, ``P = 1/(lam ln 2) - 1/g1``.
``lam`` itself is set so the average power over the sample measure meets the
budget; the average is monotone in ``lam`` and is found by bisection.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Union

import numpy as np

from .channel import ChannelState, SampleSet, weighted_sum
from .errors import ConvergenceFailure, InfeasibleSecrecy, InvalidArgument, InvalidState

__all__ = [
    "Kkt",
    "Uniform",
    "WaterFilling",
    "Tabulated",
    "PowerPolicy",
    "LambdaSolution",
    "kkt_power",
    "kkt_powers",
    "stationarity_residual",
    "solve_lambda",
    "average_power",
    "policy_power",
    "policy_powers",
    "calibrate_uniform",
    "water_filling_allocation",
    "calibrate_water_filling",
]

LN2 = math.log(2.0)
ROUNDOFF_CLAMP = 1e-12


# --------------------------------------------------------------------------
# policies
# --------------------------------------------------------------------------


@dataclass(frozen=True)
class Kkt:
    lam: float

    def __post_init__(self):
        _check_lambda(self.lam)


@dataclass(frozen=True)
class Uniform:
    """Same power on every state in the transmission set, zero elsewhere."""

    level: float

    def __post_init__(self):
        if not (math.isfinite(self.level) and self.level >= 0):
            raise InvalidArgument(f"uniform level must be >= 0 and finite, got {self.level}")


@dataclass(frozen=True)
class WaterFilling:
    """Classic capacity water-filling on ``g1``.

    Ignores the wiretapper entirely, so it does put power on states with
    ``g1 <= g2``.  Kept as the no-secrecy contrast.
    """

    lam: float

    def __post_init__(self):
        _check_lambda(self.lam)


@dataclass(frozen=True)
class Tabulated:
    """Explicit power per SampleSet index."""

    powers: tuple[float, ...]

    def __post_init__(self):
        powers = tuple(float(p) for p in self.powers)
        for i, p in enumerate(powers):
            if not (math.isfinite(p) and p >= 0):
                raise InvalidArgument(f"tabulated power {i} is {p}")
        object.__setattr__(self, "powers", powers)


PowerPolicy = Union[Kkt, Uniform, WaterFilling, Tabulated]

POLICY_NAMES = {Kkt: "kkt", Uniform: "uniform", WaterFilling: "water-filling", Tabulated: "tabulated"}


def _check_lambda(lam):
    if not (isinstance(lam, (int, float, np.floating)) and math.isfinite(lam) and lam > 0):
        raise InvalidArgument(f"lambda must be positive and finite, got {lam!r}")


# --------------------------------------------------------------------------
# closed form
# --------------------------------------------------------------------------


def kkt_powers(g1, g2, lam: float) -> np.ndarray:
    """Vectorized secrecy-optimal power for arrays of gains."""
    _check_lambda(lam)
    g1 = np.asarray(g1, dtype=float)
    g2 = np.asarray(g2, dtype=float)
    if not (np.all(np.isfinite(g1)) and np.all(np.isfinite(g2))):
        raise InvalidState("gains must be finite")
    c = lam * LN2
    d = g1 - g2
    out = np.zeros(np.broadcast(g1, g2).shape)
    # g1 > g2 and lam < (g1 - g2)/ln2, written without the division
    active = (d > 0) & (d > c)

    wf = active & (g2 == 0)
    g1w = np.broadcast_to(g1, out.shape)[wf]
    out[wf] = 1.0 / c - 1.0 / g1w

    q = active & (g2 > 0)
    a, b, dq = np.broadcast_to(g1, out.shape)[q], np.broadcast_to(g2, out.shape)[q], np.broadcast_to(d, out.shape)[q]
    # Positive root of P^2 + (1/a + 1/b) P + 1/(ab) - (1/b - 1/a)/c = 0,
    # rationalized so nothing cancels and 1/b never appears.
    disc = dq * (dq + 4.0 * a * b / c)
    out[q] = 2.0 * (dq / c - 1.0) / ((a + b) + np.sqrt(disc))

    neg = out < 0
    if np.any(out[neg] < -ROUNDOFF_CLAMP):
        raise AssertionError("negative power from the closed form")
    out[neg] = 0.0
    return out


def kkt_power(s: ChannelState, lam: float) -> float:
    """Secrecy-optimal power for one state.

    Examples
    --------
    >>> round(kkt_power(ChannelState(1.0, 0.0), 1 / (2 * LN2)), 12)
    1.0
    >>> kkt_power(ChannelState(1.0, 2.0), 0.1)
    0.0
    """
    p = float(kkt_powers(s.g1, s.g2, lam))
    if p > 0:
        r = stationarity_residual(s, lam, p)
        if abs(r) > 1e-9:
            raise AssertionError(f"stationarity residual {r:.3e} at {s}, lam={lam}")
    return p


def stationarity_residual(s: ChannelState, lam: float, p: float) -> float:
    """Derivative of the per-state Lagrangian, in bits per unit power."""
    return (s.g1 / (1.0 + p * s.g1) - s.g2 / (1.0 + p * s.g2)) / LN2 - lam


# --------------------------------------------------------------------------
# multiplier search
# --------------------------------------------------------------------------


@dataclass(frozen=True)
class LambdaSolution:
    lam: float
    achieved_avg_power: float
    iterations: int
    residual: float


def average_power(samples: SampleSet, lam: float) -> float:
    return weighted_sum(samples.weights, kkt_powers(samples.g1, samples.g2, lam))


def solve_lambda(
    samples: SampleSet,
    budget: float,
    rtol: float = 1e-8,
    max_iter: int = 200,
) -> LambdaSolution:
    """Find the multiplier whose average power equals ``budget``.

    The upper end of the bracket is the largest activation threshold
    ``(g1 - g2)/ln2``, where the average power is exactly zero.  The lower
    end is halved until the average reaches the budget.  Bisection then runs
    until the bracket collapses to adjacent floats, so the returned residual
    is usually far below ``rtol * budget``.
    """
    if not (math.isfinite(budget) and budget > 0):
        raise InvalidArgument(f"budget must be positive and finite, got {budget}")
    if not rtol > 0:
        raise InvalidArgument(f"rtol must be positive, got {rtol}")
    useful = samples.in_a & (samples.weights > 0)
    if not np.any(useful):
        raise InfeasibleSecrecy("no sample with positive weight lies in the transmission set")

    hi = float(np.max(samples.g1[useful] - samples.g2[useful])) / LN2
    lo = hi
    iterations = 0
    p_lo = 0.0
    for _ in range(2100):
        hi_candidate = lo
        lo = lo / 2.0
        iterations += 1
        if lo == 0.0:
            break
        p_lo = average_power(samples, lo)
        if p_lo >= budget:
            hi = hi_candidate
            break
    else:  # pragma: no cover - 2100 halvings reach subnormals first
        lo = 0.0
    if lo == 0.0 or p_lo < budget:
        raise ConvergenceFailure(
            f"average power never reached budget {budget}",
            best=LambdaSolution(max(lo, 5e-324), p_lo, iterations, p_lo - budget),
        )

    p_hi = average_power(samples, hi)
    for _ in range(max_iter):
        mid = 0.5 * (lo + hi)
        if not lo < mid < hi:
            break
        iterations += 1
        p_mid = average_power(samples, mid)
        if p_mid == budget:
            lo = hi = mid
            p_lo = p_hi = p_mid
            break
        if p_mid > budget:
            lo, p_lo = mid, p_mid
        else:
            hi, p_hi = mid, p_mid

    if abs(p_lo - budget) <= abs(p_hi - budget):
        best = LambdaSolution(lo, p_lo, iterations, p_lo - budget)
    else:
        best = LambdaSolution(hi, p_hi, iterations, p_hi - budget)
    if abs(best.residual) > rtol * budget:
        raise ConvergenceFailure(
            f"average power residual {best.residual:.3e} exceeds {rtol * budget:.3e}",
            best=best,
        )
    return best


# --------------------------------------------------------------------------
# evaluation of arbitrary policies
# --------------------------------------------------------------------------


def policy_power(policy: PowerPolicy, s: ChannelState, index: int | None = None) -> float:
    if isinstance(policy, Kkt):
        return kkt_power(s, policy.lam)
    if isinstance(policy, Uniform):
        return policy.level if s.g1 > s.g2 else 0.0
    if isinstance(policy, WaterFilling):
        return float(_water_fill(np.array([s.g1]), policy.lam)[0])
    if isinstance(policy, Tabulated):
        if index is None or not 0 <= index < len(policy.powers):
            raise InvalidArgument(f"tabulated policy needs an index in [0, {len(policy.powers)})")
        return policy.powers[index]
    raise InvalidArgument(f"unknown policy {policy!r}")


def policy_powers(policy: PowerPolicy, samples: SampleSet) -> np.ndarray:
    """Power on every state of ``samples`` under ``policy``."""
    if isinstance(policy, Kkt):
        return kkt_powers(samples.g1, samples.g2, policy.lam)
    if isinstance(policy, Uniform):
        return np.where(samples.in_a, policy.level, 0.0)
    if isinstance(policy, WaterFilling):
        return _water_fill(samples.g1, policy.lam)
    if isinstance(policy, Tabulated):
        if len(policy.powers) != len(samples):
            raise InvalidArgument(
                f"tabulated policy has {len(policy.powers)} entries for {len(samples)} states"
            )
        return np.array(policy.powers)
    raise InvalidArgument(f"unknown policy {policy!r}")


def calibrate_uniform(samples: SampleSet, budget: float) -> Uniform:
    if not (math.isfinite(budget) and budget > 0):
        raise InvalidArgument(f"budget must be positive and finite, got {budget}")
    mass = samples.mass_of_a()
    if mass <= 0:
        raise InfeasibleSecrecy("transmission set has zero probability")
    return Uniform(budget / mass)


# --------------------------------------------------------------------------
# classic water-filling
# --------------------------------------------------------------------------


def _water_fill(g1, lam: float) -> np.ndarray:
    g1 = np.asarray(g1, dtype=float)
    level = 1.0 / (lam * LN2)
    out = np.zeros_like(g1)
    pos = g1 > 0
    # 1/g1 may overflow for subnormal gains; the power is then 0
    with np.errstate(over="ignore"):
        out[pos] = np.maximum(0.0, level - 1.0 / g1[pos])
    return out


def water_filling_allocation(samples: SampleSet, budget: float) -> tuple[np.ndarray, float]:
    """Exact water-filling on ``g1`` by sorting, no iteration.

    Returns the per-state powers and the water level ``L`` with
    ``P_i = max(0, L - 1/g1_i)``.
    """
    if not (math.isfinite(budget) and budget > 0):
        raise InvalidArgument(f"budget must be positive and finite, got {budget}")
    g1, w = samples.g1, samples.weights
    ok = (g1 > 0) & (w > 0)
    if not np.any(ok):
        raise InfeasibleSecrecy("no state with positive gain and weight")
    idx = np.flatnonzero(ok)
    with np.errstate(over="ignore"):
        inv = 1.0 / g1[idx]
    order = np.argsort(inv, kind="stable")
    inv, ws = inv[order], w[idx][order]
    cw = np.cumsum(ws)
    cwi = np.cumsum(ws * inv)
    levels = (budget + cwi) / cw
    # k best states are active iff the level clears the k-th floor
    k = int(np.flatnonzero(levels > inv)[-1])
    level = float(levels[k])
    powers = np.zeros(len(samples))
    with np.errstate(over="ignore"):
        powers[idx] = np.maximum(0.0, level - 1.0 / g1[idx])
    return powers, level


def calibrate_water_filling(samples: SampleSet, budget: float) -> WaterFilling:
    _, level = water_filling_allocation(samples, budget)
    return WaterFilling(1.0 / (level * LN2))
