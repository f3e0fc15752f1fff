"""Experiment runners behind the command line.

* capacity sweeps: secrecy rate against SNR for several power policies,
  with every policy at an SNR point evaluated on one shared sample set;
* allocation surfaces: the optimal power as a function of ``(g1, g2)``;
* allocation tables: multiplier and per-state power for one budget;
* discrete channel reports.

CSV output is byte-reproducible for a given configuration: numbers are
written with 12 significant digits, rows follow grid order, and nothing
depends on timing or the number of workers.
"""

from __future__ import annotations

import csv
import io
import json
import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from . import __version__
from .channel import SampleSet, draw_sample_set, weighted_sum
from .config import ExperimentConfig, config_hash
from .dmc import (
    ParallelWiretap,
    check_degraded,
    dmc_secrecy_capacity_degraded,
    dmc_secrecy_capacity_general,
    load_channel_file,
    parse_channel_text,
    subchannel_secrecy_capacities,
)
from .errors import InfeasibleSecrecy, InvalidArgument
from .power import (
    LambdaSolution,
    Kkt,
    calibrate_uniform,
    kkt_powers,
    policy_powers,
    solve_lambda,
    water_filling_allocation,
    LN2,
    WaterFilling,
)
from .rate import ergodic_rate, instantaneous_rates, secrecy_capacity

__all__ = [
    "CurveRow",
    "CURVE_HEADER",
    "snr_to_budget",
    "run_capacity_sweep",
    "curve_csv",
    "run_allocation_surface",
    "surface_csv",
    "AllocationTable",
    "run_allocation",
    "run_dmc",
    "write_output",
]

CURVE_HEADER = ("snr_db", "policy", "rate", "error_bound", "lambda", "avg_power_residual", "status")


def _fmt(x) -> str:
    if x is None:
        return ""
    return format(float(x), ".12g")


def snr_to_budget(snr_db: float) -> float:
    return 10.0 ** (snr_db / 10.0)


# --------------------------------------------------------------------------
# capacity sweep
# --------------------------------------------------------------------------


@dataclass(frozen=True)
class CurveRow:
    snr_db: float
    policy: str
    rate: float
    error_bound: float
    lam: float | None
    avg_power_residual: float
    status: str = "ok"

    def cells(self) -> list[str]:
        return [
            _fmt(self.snr_db),
            self.policy,
            _fmt(self.rate),
            _fmt(self.error_bound),
            _fmt(self.lam),
            _fmt(self.avg_power_residual),
            self.status,
        ]


def _no_secrecy(snr_db, policy) -> CurveRow:
    return CurveRow(snr_db, policy, 0.0, 0.0, None, 0.0, "no-secrecy")


def _policy_row(samples: SampleSet, snr_db: float, budget: float, policy: str, rtol: float) -> CurveRow:
    if policy == "optimal":
        est, sol = secrecy_capacity(samples, budget, rtol)
        if sol is None:
            return _no_secrecy(snr_db, policy)
        return CurveRow(snr_db, policy, est.rate, est.error_bound, sol.lam, sol.residual)
    if policy == "uniform":
        try:
            pol = calibrate_uniform(samples, budget)
        except InfeasibleSecrecy:
            return _no_secrecy(snr_db, policy)
        est = ergodic_rate(samples, pol)
        used = weighted_sum(samples.weights, policy_powers(pol, samples))
        return CurveRow(snr_db, policy, est.rate, est.error_bound, None, used - budget)
    if policy == "water-filling":
        try:
            _, level = water_filling_allocation(samples, budget)
        except InfeasibleSecrecy:
            return _no_secrecy(snr_db, policy)
        pol = WaterFilling(1.0 / (level * LN2))
        est = ergodic_rate(samples, pol)
        used = weighted_sum(samples.weights, policy_powers(pol, samples))
        return CurveRow(snr_db, policy, est.rate, est.error_bound, pol.lam, used - budget)
    raise InvalidArgument(f"unknown policy {policy!r}")


def _sweep_point(dist, snr_db, policies, n, seed, rtol) -> list[CurveRow]:
    budget = snr_to_budget(snr_db)
    samples = draw_sample_set(dist, n, seed)
    return [_policy_row(samples, snr_db, budget, p, rtol) for p in policies]


def run_capacity_sweep(cfg: ExperimentConfig, workers: int | None = None) -> list[CurveRow]:
    """Rows for every (SNR, policy) pair, in grid order.

    Each SNR point draws its sample set from the configured seed, so all
    policies at a point, and all points, see the same fading draws.  Points
    may run on several threads; results are collected in grid order.
    """
    cfg.validate()
    workers = cfg.workers if workers is None else workers
    args = [(cfg.distribution, s, cfg.policies, cfg.mc_samples, cfg.seed, cfg.rtol) for s in cfg.snr_db]
    if workers <= 1:
        chunks = [_sweep_point(*a) for a in args]
    else:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            chunks = list(pool.map(lambda a: _sweep_point(*a), args))
    return [row for chunk in chunks for row in chunk]


def _csv_text(header, rows) -> str:
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(header)
    writer.writerows(rows)
    return buf.getvalue()


def curve_csv(rows: list[CurveRow]) -> str:
    return _csv_text(CURVE_HEADER, [r.cells() for r in rows])


def write_output(path: Path, text: str, meta: dict) -> None:
    """Write ``text`` to ``path`` and ``meta`` to ``<path>.meta.json``."""
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text(text)
    meta = {"library_version": __version__, **meta}
    Path(str(path) + ".meta.json").write_text(json.dumps(meta, indent=2, sort_keys=True) + "\n")


def sweep_metadata(cfg: ExperimentConfig) -> dict:
    return {
        "experiment": "sweep",
        "config_sha256": config_hash(cfg),
        "seed": cfg.seed,
        "samples": cfg.mc_samples,
    }


# --------------------------------------------------------------------------
# allocation surface and table
# --------------------------------------------------------------------------


def _solve_on(cfg: ExperimentConfig, budget: float) -> tuple[SampleSet, LambdaSolution]:
    samples = draw_sample_set(cfg.distribution, cfg.mc_samples, cfg.seed)
    return samples, solve_lambda(samples, budget, cfg.rtol)


def run_allocation_surface(
    cfg: ExperimentConfig,
    budget: float,
    g1_values,
    g2_values,
) -> tuple[LambdaSolution, np.ndarray]:
    """Optimal power on a ``(g1, g2)`` grid at the multiplier for ``budget``.

    The multiplier is solved once on the configured distribution.  Returns
    it together with an ``(n, 3)`` array of ``(g1, g2, power)`` rows, ``g1``
    varying slowest.
    """
    if not (math.isfinite(budget) and budget > 0):
        raise InvalidArgument(f"budget must be positive and finite, got {budget}")
    _, sol = _solve_on(cfg, budget)
    g1 = np.asarray(g1_values, dtype=float)
    g2 = np.asarray(g2_values, dtype=float)
    a, b = np.meshgrid(g1, g2, indexing="ij")
    p = kkt_powers(a, b, sol.lam)
    return sol, np.column_stack([a.ravel(), b.ravel(), p.ravel()])


def surface_csv(table: np.ndarray) -> str:
    return _csv_text(("g1", "g2", "power"), [[_fmt(x) for x in row] for row in table])


@dataclass(frozen=True)
class AllocationTable:
    solution: LambdaSolution
    samples: SampleSet
    powers: np.ndarray
    rate: float
    error_bound: float

    def csv(self) -> str:
        s = self.samples
        r = instantaneous_rates(s.g1, s.g2, self.powers)
        rows = [
            [str(i), _fmt(a), _fmt(b), _fmt(w), _fmt(p), _fmt(x)]
            for i, (a, b, w, p, x) in enumerate(zip(s.g1, s.g2, s.weights, self.powers, r))
        ]
        return _csv_text(("index", "g1", "g2", "weight", "power", "rate"), rows)


def run_allocation(cfg: ExperimentConfig, budget: float) -> AllocationTable:
    samples, sol = _solve_on(cfg, budget)
    est = ergodic_rate(samples, Kkt(sol.lam))
    powers = kkt_powers(samples.g1, samples.g2, sol.lam)
    return AllocationTable(sol, samples, powers, est.rate, est.error_bound)


# --------------------------------------------------------------------------
# discrete channels
# --------------------------------------------------------------------------


def _vec(a) -> str:
    return "[" + " ".join(format(float(x), ".9g") for x in np.ravel(a)) + "]"


def run_dmc(
    source,
    mode: str = "degraded",
    *,
    u_card: int | None = None,
    grid: int = 32,
    tol: float = 1e-9,
    text: str | None = None,
) -> str:
    """Human-readable report for the subchannels in a matrix file.

    ``mode`` is ``degraded`` (forward-degraded capacity per subchannel),
    ``general`` (grid-scan lower bound per subchannel) or ``parallel``
    (classify each subchannel and sum).
    """
    subs = parse_channel_text(text, str(source)) if text is not None else load_channel_file(source)
    lines = []
    if mode == "parallel":
        pw = ParallelWiretap.classify(subs, tol)
        caps = subchannel_secrecy_capacities(pw, tol=tol, u_card=u_card, grid=grid)
        for i, (ch, tag, c) in enumerate(zip(subs, pw.tags, caps)):
            fwd = check_degraded(ch, "forward", tol)
            lines.append(
                f"subchannel {i}: tag={tag} capacity={_fmt(c)} forward_residual={fwd.residual:.3e}"
            )
        lines.append(f"total_secrecy_capacity: {_fmt(math.fsum(caps))}")
        return "\n".join(lines) + "\n"
    if mode not in ("degraded", "general"):
        raise InvalidArgument(f"mode must be degraded, general or parallel, got {mode!r}")
    for i, ch in enumerate(subs):
        fwd = check_degraded(ch, "forward", tol)
        rev = check_degraded(ch, "reverse", tol)
        lines.append(f"subchannel {i}")
        lines.append(f"  forward_degraded: {fwd.degraded} (witness residual {fwd.residual:.3e})")
        lines.append(f"  reverse_degraded: {rev.degraded} (witness residual {rev.residual:.3e})")
        if mode == "degraded":
            res = dmc_secrecy_capacity_degraded(ch, tol)
            lines.append(f"  secrecy_capacity: {_fmt(res.capacity)}")
            lines.append(f"  argmax_px: {_vec(res.px)}")
            if res.grid_max is not None:
                lines.append(f"  grid_certificate: {_fmt(res.grid_max)}")
            if fwd.degraded:
                lines.append(f"  witness: {_vec(fwd.witness)}")
        else:
            res = dmc_secrecy_capacity_general(ch, u_card, grid)
            lines.append(f"  secrecy_lower_bound: {_fmt(res.lower_bound)}")
            lines.append(f"  argmax_pu: {_vec(res.pu)}")
            lines.append(f"  argmax_px_given_u: {_vec(res.px_given_u)}")
            lines.append(f"  evaluations: {res.evaluations}")
    return "\n".join(lines) + "\n"
