"""Experiment configuration and distribution descriptors (TOML).

Schema
------
::

    [distribution]
    kind = "rayleigh-unit"   # | "rayleigh" | "finite-mass" | "external" | "<module>:<callable>"
    mu2 = 1.0                # destination noise variance (optional)
    nu2 = 1.0                # wiretapper noise variance (optional)

    # kind = "rayleigh": mean squared gains, E|h1|^2 and E|h2|^2
    mean_h1 = 1.0
    mean_h2 = 1.0

    # kind = "finite-mass": explicit rows of (|h1|^2, |h2|^2, probability) ...
    points = [[1.0, 0.0, 0.5], [2.0, 1.0, 0.5]]
    # ... or independent uniform levels for |h1|^2 and |h2|^2
    levels = [0.2, 0.4, 0.6]
    levels_h2 = [0.2, 0.4]   # optional, defaults to levels

    # kind = "external": a deterministic sampler fn(n, seed) -> (g1, g2)
    sampler = "mypkg.samplers:correlated"

    [experiment]
    snr_db = [0, 5, 10, 15, 20]          # or {start = 0, stop = 20, step = 5}
    policies = ["optimal", "uniform"]     # subset of optimal, uniform, water-filling
    samples = 100000                      # Monte Carlo draws, >= 1000
    seed = 1                              # unsigned 64-bit
    rtol = 1e-8
    output = "curves.csv"
    workers = 1

    [surface]
    snr_db = 10                           # or budget = 10.0
    g1 = [0.0, 5.0, 51]                   # start, stop, number of points
    g2 = [0.0, 5.0, 51]
    output = "surface.csv"

All gains are divided by ``mu2`` / ``nu2`` on ingestion, so with the
defaults the rows are normalized gains ``(g1, g2, prob)`` directly.
``snr_db`` sets the average power budget ``P = 10**(snr_db/10)``.
"""

from __future__ import annotations

import hashlib
import importlib
import json
import math
import sys
from dataclasses import dataclass, field, replace
from pathlib import Path

import numpy as np

from .channel import ExternalSampler, FadingDistribution, FiniteMass, RayleighFading
from .errors import ConfigError, WiretapError

if sys.version_info >= (3, 11):
    import tomllib
else:
    import tomli as tomllib

__all__ = [
    "POLICIES",
    "SurfaceConfig",
    "ExperimentConfig",
    "parse_distribution",
    "load_distribution",
    "dump_distribution",
    "parse_config",
    "load_config",
    "config_hash",
]

POLICIES = ("optimal", "uniform", "water-filling")
MIN_MC_SAMPLES = 1000
_SEED_MAX = (1 << 64) - 1


@dataclass(frozen=True)
class SurfaceConfig:
    budget: float
    g1: tuple[float, ...]
    g2: tuple[float, ...]
    output: Path | None = None


@dataclass(frozen=True)
class ExperimentConfig:
    distribution: FadingDistribution
    snr_db: tuple[float, ...] = ()
    policies: tuple[str, ...] = ("optimal", "uniform")
    mc_samples: int = 100_000
    seed: int = 0
    rtol: float = 1e-8
    output: Path | None = None
    workers: int = 1
    surface: SurfaceConfig | None = None
    descriptor: dict = field(default_factory=dict, compare=False, repr=False)

    def validate(self) -> "ExperimentConfig":
        if not self.snr_db:
            raise ConfigError("needs at least one point", "field experiment.snr_db")
        if any(b <= a for a, b in zip(self.snr_db, self.snr_db[1:])):
            raise ConfigError("must be strictly increasing", "field experiment.snr_db")
        if any(not math.isfinite(x) for x in self.snr_db):
            raise ConfigError("must be finite", "field experiment.snr_db")
        _check_policies(self.policies)
        if not isinstance(self.distribution, FiniteMass) and self.mc_samples < MIN_MC_SAMPLES:
            raise ConfigError(
                f"must be >= {MIN_MC_SAMPLES} for sampled distributions, got {self.mc_samples}",
                "field experiment.samples",
            )
        if self.mc_samples < 1:
            raise ConfigError("must be positive", "field experiment.samples")
        if not 0 <= self.seed <= _SEED_MAX:
            raise ConfigError("must be an unsigned 64-bit integer", "field experiment.seed")
        if not (self.rtol > 0 and math.isfinite(self.rtol)):
            raise ConfigError("must be positive", "field experiment.rtol")
        if self.workers < 1:
            raise ConfigError("must be >= 1", "field experiment.workers")
        return self

    def with_overrides(self, **kw) -> "ExperimentConfig":
        kw = {k: v for k, v in kw.items() if v is not None}
        return replace(self, **kw)


def _check_policies(policies):
    if not policies:
        raise ConfigError("needs at least one policy", "field experiment.policies")
    for p in policies:
        if p not in POLICIES:
            raise ConfigError(f"unknown policy {p!r}; choose from {POLICIES}", "field experiment.policies")
    if len(set(policies)) != len(policies):
        raise ConfigError("duplicate policy", "field experiment.policies")


# --------------------------------------------------------------------------
# field helpers
# --------------------------------------------------------------------------


def _number(table, key, where, default=None, positive=False):
    if key not in table:
        if default is None:
            raise ConfigError("missing", f"field {where}.{key}")
        return default
    v = table[key]
    if isinstance(v, bool) or not isinstance(v, (int, float)):
        raise ConfigError(f"expected a number, got {v!r}", f"field {where}.{key}")
    v = float(v)
    if not math.isfinite(v) or (positive and v <= 0):
        raise ConfigError(f"must be {'positive and ' if positive else ''}finite, got {v}", f"field {where}.{key}")
    return v


def _integer(table, key, where, default):
    v = table.get(key, default)
    if isinstance(v, bool) or not isinstance(v, int):
        raise ConfigError(f"expected an integer, got {v!r}", f"field {where}.{key}")
    return v


def _float_list(v, where):
    if not isinstance(v, list) or not v:
        raise ConfigError("expected a non-empty list of numbers", f"field {where}")
    out = []
    for i, x in enumerate(v):
        if isinstance(x, bool) or not isinstance(x, (int, float)) or not math.isfinite(x):
            raise ConfigError(f"entry {i} is not a finite number: {x!r}", f"field {where}")
        out.append(float(x))
    return out


def _resolve_sampler(target: str) -> ExternalSampler:
    mod, _, attr = target.partition(":")
    if not mod or not attr:
        raise ConfigError(f"sampler must look like 'module:callable', got {target!r}", "field distribution.sampler")
    try:
        fn = getattr(importlib.import_module(mod), attr)
    except (ImportError, AttributeError) as exc:
        raise ConfigError(f"cannot load sampler {target!r}: {exc}", "field distribution.sampler") from None
    if not callable(fn):
        raise ConfigError(f"{target!r} is not callable", "field distribution.sampler")
    return ExternalSampler(target, fn)


# --------------------------------------------------------------------------
# distributions
# --------------------------------------------------------------------------


def parse_distribution(table: dict) -> FadingDistribution:
    """Build a fading law from a ``[distribution]`` table."""
    w = "distribution"
    if not isinstance(table, dict):
        raise ConfigError("expected a table", f"field {w}")
    kind = table.get("kind")
    if not isinstance(kind, str):
        raise ConfigError("missing or not a string", f"field {w}.kind")
    mu2 = _number(table, "mu2", w, 1.0, positive=True)
    nu2 = _number(table, "nu2", w, 1.0, positive=True)
    try:
        if kind == "rayleigh-unit":
            return RayleighFading(1.0 / mu2, 1.0 / nu2)
        if kind == "rayleigh":
            m1 = _number(table, "mean_h1", w, 1.0, positive=True)
            m2 = _number(table, "mean_h2", w, 1.0, positive=True)
            return RayleighFading(m1 / mu2, m2 / nu2)
        if kind == "finite-mass":
            return _parse_finite_mass(table, mu2, nu2)
        if kind == "external":
            target = table.get("sampler")
            if not isinstance(target, str):
                raise ConfigError("missing or not a string", f"field {w}.sampler")
            return _resolve_sampler(target)
        if ":" in kind:
            return _resolve_sampler(kind)
    except ConfigError:
        raise
    except WiretapError as exc:
        raise ConfigError(str(exc), f"field {w}") from None
    raise ConfigError(
        f"unknown kind {kind!r}; expected rayleigh-unit, rayleigh, finite-mass, external or module:callable",
        f"field {w}.kind",
    )


def _parse_finite_mass(table, mu2, nu2) -> FiniteMass:
    w = "distribution"
    if "points" in table and "levels" in table:
        raise ConfigError("give either points or levels, not both", f"field {w}")
    if "levels" in table:
        l1 = [x / mu2 for x in _float_list(table["levels"], f"{w}.levels")]
        l2 = [x / nu2 for x in _float_list(table.get("levels_h2", table["levels"]), f"{w}.levels_h2")]
        if min(l1) < 0 or min(l2) < 0:
            raise ConfigError("levels must be nonnegative", f"field {w}.levels")
        return FiniteMass.uniform_product(l1, l2)
    rows = table.get("points")
    if not isinstance(rows, list) or not rows:
        raise ConfigError("finite-mass needs a non-empty 'points' or 'levels' list", f"field {w}.points")
    states, probs = [], []
    for i, row in enumerate(rows):
        where = f"field {w}.points[{i}]"
        vals = _float_list(row, f"{w}.points[{i}]")
        if len(vals) != 3:
            raise ConfigError(f"expected [h1sq, h2sq, prob], got {len(vals)} entries", where)
        if vals[0] < 0 or vals[1] < 0:
            raise ConfigError("gains must be nonnegative", where)
        if vals[2] < 0:
            raise ConfigError("probability must be nonnegative", where)
        states.append((vals[0] / mu2, vals[1] / nu2))
        probs.append(vals[2])
    total = math.fsum(probs)
    if abs(total - 1.0) > 1e-12:
        raise ConfigError(f"probabilities sum to {total!r}, not 1", f"field {w}.points")
    return FiniteMass(tuple(states), tuple(probs))


def load_distribution(text: str, source: str = "<string>") -> FadingDistribution:
    doc = _loads(text, source)
    if "distribution" not in doc:
        raise ConfigError("missing [distribution] table", source)
    return parse_distribution(doc["distribution"])


def dump_distribution(dist: FadingDistribution) -> str:
    """Descriptor text that :func:`load_distribution` parses back exactly."""
    lines = ["[distribution]"]
    if isinstance(dist, RayleighFading):
        if dist.is_unit:
            lines.append('kind = "rayleigh-unit"')
        else:
            lines += ['kind = "rayleigh"', f"mean_h1 = {dist.mean_g1!r}", f"mean_h2 = {dist.mean_g2!r}"]
    elif isinstance(dist, FiniteMass):
        lines += ['kind = "finite-mass"', "points = ["]
        for s, p in zip(dist.states, dist.probs):
            lines.append(f"  [{s.g1!r}, {s.g2!r}, {p!r}],")
        lines.append("]")
    elif isinstance(dist, ExternalSampler):
        lines += ['kind = "external"', f"sampler = {json.dumps(dist.name)}"]
    else:
        raise ConfigError(f"cannot serialize {type(dist).__name__}")
    return "\n".join(lines) + "\n"


# --------------------------------------------------------------------------
# experiment config
# --------------------------------------------------------------------------


def _loads(text: str, source: str) -> dict:
    try:
        return tomllib.loads(text)
    except tomllib.TOMLDecodeError as exc:
        raise ConfigError(str(exc), source) from None


def _snr_grid(v, where):
    if isinstance(v, dict):
        start = _number(v, "start", where)
        stop = _number(v, "stop", where)
        step = _number(v, "step", where, positive=True)
        n = int(math.floor((stop - start) / step + 1e-9)) + 1
        if n < 1:
            raise ConfigError("empty range", f"field {where}")
        return tuple(float(x) for x in np.round(start + step * np.arange(n), 12))
    return tuple(_float_list(v, where))


def _axis(v, where):
    vals = _float_list(v, where)
    if len(vals) != 3 or vals[2] != int(vals[2]) or vals[2] < 1:
        raise ConfigError("expected [start, stop, count]", f"field {where}")
    if vals[0] < 0 or vals[1] < vals[0]:
        raise ConfigError("need 0 <= start <= stop", f"field {where}")
    return tuple(np.linspace(vals[0], vals[1], int(vals[2])).tolist())


def _parse_surface(t: dict, base: Path | None) -> SurfaceConfig:
    w = "surface"
    if "budget" in t and "snr_db" in t:
        raise ConfigError("give either budget or snr_db, not both", f"field {w}")
    if "snr_db" in t:
        budget = 10.0 ** (_number(t, "snr_db", w) / 10.0)
    else:
        budget = _number(t, "budget", w, positive=True)
    g1 = _axis(t.get("g1", [0.0, 5.0, 51]), f"{w}.g1")
    g2 = _axis(t.get("g2", [0.0, 5.0, 51]), f"{w}.g2")
    out = t.get("output")
    return SurfaceConfig(budget, g1, g2, _path(out, base, f"{w}.output"))


def _path(v, base, where):
    if v is None:
        return None
    if not isinstance(v, str):
        raise ConfigError("expected a path string", f"field {where}")
    p = Path(v)
    return p if p.is_absolute() or base is None else base / p


def parse_config(text: str, source: str = "<string>", base: Path | None = None) -> ExperimentConfig:
    doc = _loads(text, source)
    unknown = set(doc) - {"distribution", "experiment", "surface"}
    if unknown:
        raise ConfigError(f"unknown table(s) {sorted(unknown)}", source)
    if "distribution" not in doc:
        raise ConfigError("missing [distribution] table", source)
    dist = parse_distribution(doc["distribution"])
    ex = doc.get("experiment", {})
    w = "experiment"
    snr = _snr_grid(ex["snr_db"], f"{w}.snr_db") if "snr_db" in ex else (0.0,)
    policies = ex.get("policies", ["optimal", "uniform"])
    if not isinstance(policies, list) or not all(isinstance(p, str) for p in policies):
        raise ConfigError("expected a list of strings", f"field {w}.policies")
    surface = _parse_surface(doc["surface"], base) if "surface" in doc else None
    cfg = ExperimentConfig(
        distribution=dist,
        snr_db=snr,
        policies=tuple(policies),
        mc_samples=_integer(ex, "samples", w, 100_000),
        seed=_integer(ex, "seed", w, 0),
        rtol=_number(ex, "rtol", w, 1e-8, positive=True),
        output=_path(ex.get("output"), base, f"{w}.output"),
        workers=_integer(ex, "workers", w, 1),
        surface=surface,
        descriptor=doc["distribution"],
    )
    return cfg.validate()


def load_config(path) -> ExperimentConfig:
    path = Path(path)
    try:
        text = path.read_text()
    except OSError as exc:
        raise ConfigError(f"cannot read config: {exc.strerror}", str(path)) from None
    return parse_config(text, str(path), base=path.parent)


def config_hash(cfg: ExperimentConfig) -> str:
    """SHA-256 of everything that determines the numbers in the output.

    Output paths and worker counts are excluded.
    """
    payload = {
        "distribution": cfg.descriptor or dump_distribution(cfg.distribution),
        "snr_db": list(cfg.snr_db),
        "policies": list(cfg.policies),
        "samples": cfg.mc_samples,
        "seed": cfg.seed,
        "rtol": cfg.rtol,
    }
    blob = json.dumps(payload, sort_keys=True, separators=(",", ":")).encode()
    return hashlib.sha256(blob).hexdigest()
