"""``wiretap`` command line.

Subcommands::

    wiretap sweep    --config exp.toml [--seed N] [--samples N] [--rtol F] [--out PATH] [--workers K]
    wiretap surface  --config exp.toml [--budget P | --snr-db S] [--g1 A B N] [--g2 A B N] [--out PATH]
    wiretap allocate --config exp.toml (--budget P | --snr-db S) [--out PATH]
    wiretap dmc      CHANNELS.txt [--mode degraded|general|parallel] [--u-card K] [--grid G] [--tol T]

See :mod:`wiretap.config` for the config file schema and :mod:`wiretap.dmc`
for the matrix file format.  CSV goes to ``--out`` (plus a ``.meta.json``
sidecar) or to stdout when no output path is configured.

Exit codes: 0 success, 2 bad configuration or input, 3 numerical
convergence failure.
"""

from __future__ import annotations

import argparse
import sys
from pathlib import Path

import numpy as np

from . import __version__
from .config import SurfaceConfig, config_hash, load_config
from .errors import ConvergenceFailure, WiretapError
from .experiments import (
    curve_csv,
    run_allocation,
    run_allocation_surface,
    run_capacity_sweep,
    run_dmc,
    snr_to_budget,
    surface_csv,
    sweep_metadata,
    write_output,
)

EXIT_OK = 0
EXIT_CONFIG = 2
EXIT_CONVERGENCE = 3


def _u64(text: str) -> int:
    v = int(text, 0)
    if not 0 <= v < 1 << 64:
        raise argparse.ArgumentTypeError("seed must fit in an unsigned 64-bit integer")
    return v


def _common(p: argparse.ArgumentParser) -> None:
    p.add_argument("--config", required=True, type=Path, help="TOML experiment config")
    p.add_argument("--seed", type=_u64)
    p.add_argument("--samples", type=int, help="Monte Carlo sample count")
    p.add_argument("--rtol", type=float, help="relative tolerance on the average power")
    p.add_argument("--out", type=Path, help="output CSV path")
    p.add_argument("--format", choices=["csv"], default="csv")


def _budget_args(p: argparse.ArgumentParser) -> None:
    g = p.add_mutually_exclusive_group()
    g.add_argument("--budget", type=float, help="average power budget P")
    g.add_argument("--snr-db", type=float, help="budget as 10*log10(P)")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="wiretap",
        description="Ergodic secrecy capacity of fading wiretap channels.",
    )
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("sweep", help="secrecy rate vs SNR for several power policies")
    _common(p)
    p.add_argument("--workers", type=int, help="SNR points evaluated concurrently")

    p = sub.add_parser("surface", help="optimal power over a (g1, g2) grid")
    _common(p)
    _budget_args(p)
    p.add_argument("--g1", nargs=3, type=float, metavar=("START", "STOP", "N"))
    p.add_argument("--g2", nargs=3, type=float, metavar=("START", "STOP", "N"))

    p = sub.add_parser("allocate", help="multiplier and per-state power for one budget")
    _common(p)
    _budget_args(p)

    p = sub.add_parser("dmc", help="secrecy capacity of discrete wiretap subchannels")
    p.add_argument("channels", type=Path, help="matrix text file")
    p.add_argument("--mode", choices=["degraded", "general", "parallel"], default="degraded")
    p.add_argument("--u-card", type=int, help="auxiliary alphabet size for the general scan")
    p.add_argument("--grid", type=int, default=32, help="grid resolution for the general scan")
    p.add_argument("--tol", type=float, default=1e-9, help="degradedness tolerance")
    return parser


def _load(args):
    cfg = load_config(args.config)
    cfg = cfg.with_overrides(
        seed=args.seed,
        mc_samples=args.samples,
        rtol=args.rtol,
        output=args.out,
        workers=getattr(args, "workers", None),
    )
    return cfg.validate()


def _emit(text: str, out: Path | None, meta: dict) -> None:
    if out is None:
        sys.stdout.write(text)
    else:
        write_output(out, text, meta)


def _budget(args, default: float | None) -> float:
    if args.budget is not None:
        return args.budget
    if args.snr_db is not None:
        return snr_to_budget(args.snr_db)
    if default is None:
        raise WiretapError("give --budget or --snr-db")
    return default


def _axis(bounds, fallback):
    if bounds is None:
        return fallback
    start, stop, n = bounds
    if n < 1 or n != int(n):
        raise WiretapError("grid axis needs a positive integer point count")
    return tuple(np.linspace(start, stop, int(n)).tolist())


def cmd_sweep(args) -> int:
    cfg = _load(args)
    rows = run_capacity_sweep(cfg)
    _emit(curve_csv(rows), cfg.output, sweep_metadata(cfg))
    return EXIT_OK


def cmd_surface(args) -> int:
    cfg = _load(args)
    surf = cfg.surface or SurfaceConfig(1.0, tuple(x / 10 for x in range(51)), tuple(x / 10 for x in range(51)))
    budget = _budget(args, surf.budget)
    g1 = _axis(args.g1, surf.g1)
    g2 = _axis(args.g2, surf.g2)
    sol, table = run_allocation_surface(cfg, budget, g1, g2)
    out = args.out or surf.output
    meta = {
        "experiment": "surface",
        "config_sha256": config_hash(cfg),
        "seed": cfg.seed,
        "samples": cfg.mc_samples,
        "budget": budget,
        "lambda": sol.lam,
    }
    _emit(surface_csv(table), out, meta)
    return EXIT_OK


def cmd_allocate(args) -> int:
    cfg = _load(args)
    budget = _budget(args, None)
    tab = run_allocation(cfg, budget)
    summary = (
        f"lambda={tab.solution.lam:.12g} avg_power={tab.solution.achieved_avg_power:.12g} "
        f"residual={tab.solution.residual:.3e} rate={tab.rate:.12g} error_bound={tab.error_bound:.3e}\n"
    )
    meta = {
        "experiment": "allocate",
        "config_sha256": config_hash(cfg),
        "seed": cfg.seed,
        "samples": cfg.mc_samples,
        "budget": budget,
        "lambda": tab.solution.lam,
    }
    if args.out is None:
        sys.stdout.write(tab.csv())
        sys.stderr.write(summary)
    else:
        write_output(args.out, tab.csv(), meta)
        sys.stdout.write(summary)
    return EXIT_OK


def cmd_dmc(args) -> int:
    sys.stdout.write(run_dmc(args.channels, args.mode, u_card=args.u_card, grid=args.grid, tol=args.tol))
    return EXIT_OK


COMMANDS = {"sweep": cmd_sweep, "surface": cmd_surface, "allocate": cmd_allocate, "dmc": cmd_dmc}


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return COMMANDS[args.command](args)
    except ConvergenceFailure as exc:
        print(f"wiretap: convergence failure: {exc}", file=sys.stderr)
        return EXIT_CONVERGENCE
    except WiretapError as exc:
        print(f"wiretap: error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
