"""Discrete memoryless wiretap subchannels and their parallel combination.

A subchannel is described by its two marginals ``p(y|x)`` and ``p(z|x)``;
the secrecy capacity does not depend on how the two outputs are jointly
distributed.  All information quantities are in bits.

Three capacity routes are provided:

* forward-degraded subchannels (``X -> Y -> Z``): maximize
  ``I(X;Y) - I(X;Z)`` over input laws, a concave program;
* general subchannels: exhaustive grid scan of ``I(U;Y) - I(U;Z)`` over
  joint laws ``p(u, x)``, a certified lower bound at desk scale;
* reverse-degraded subchannels (``X -> Z -> Y``): zero.

The capacity of a parallel channel is the sum over its subchannels.

Matrix text format
------------------
One matrix row per line, entries separated by whitespace.  A blank line
(or a line holding only ``---``) ends a block.  Blocks pair up in order:
the first of each pair is ``p(y|x)`` and the second ``p(z|x)``.  Lines
starting with ``#`` are ignored.  Example, one degraded BSC pair::

    0.9 0.1
    0.1 0.9

    0.74 0.26
    0.26 0.74
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np
from scipy.special import entr, rel_entr

from .errors import (
    ConfigError,
    ConvergenceFailure,
    InvalidArgument,
    OracleScopeExceeded,
    PreconditionViolation,
)

__all__ = [
    "DmcWiretap",
    "ParallelWiretap",
    "DegradednessCheck",
    "DegradedCapacity",
    "GeneralCapacity",
    "TAGS",
    "bsc",
    "mutual_information",
    "secrecy_objective",
    "check_degraded",
    "classify",
    "dmc_secrecy_capacity_degraded",
    "dmc_secrecy_capacity_general",
    "subchannel_secrecy_capacities",
    "parallel_secrecy_capacity",
    "simplex_grid",
    "parse_channel_text",
    "load_channel_file",
]

LN2 = math.log(2.0)
ROW_SUM_TOL = 1e-12
TAGS = ("forward-degraded", "reverse-degraded", "general", "unknown")

CERTIFY_RESOLUTION = 64
CERTIFY_MAX_INPUTS = 3
CERTIFY_SLACK = 1e-6

GENERAL_MAX_INPUTS = 3
GENERAL_MAX_U = 4
GENERAL_MAX_GRID = 32
GENERAL_MAX_EVALUATIONS = 50_000_000


def _stochastic(m, what: str) -> np.ndarray:
    a = np.array(m, dtype=float)
    if a.ndim != 2 or a.shape[0] < 1 or a.shape[1] < 1:
        raise InvalidArgument(f"{what} must be a non-empty 2-D matrix, got shape {a.shape}")
    if not np.all(np.isfinite(a)) or np.any(a < 0) or np.any(a > 1):
        raise InvalidArgument(f"{what} entries must lie in [0, 1]")
    for i, row in enumerate(a):
        s = math.fsum(row.tolist())
        if abs(s - 1.0) > ROW_SUM_TOL:
            raise InvalidArgument(f"{what} row {i} sums to {s!r}, not 1")
    a.setflags(write=False)
    return a


@dataclass(frozen=True, eq=False)
class DmcWiretap:
    py_given_x: np.ndarray
    pz_given_x: np.ndarray

    def __post_init__(self):
        y = _stochastic(self.py_given_x, "p(y|x)")
        z = _stochastic(self.pz_given_x, "p(z|x)")
        if y.shape[0] != z.shape[0]:
            raise InvalidArgument(
                f"input alphabets differ: p(y|x) has {y.shape[0]} rows, p(z|x) has {z.shape[0]}"
            )
        object.__setattr__(self, "py_given_x", y)
        object.__setattr__(self, "pz_given_x", z)

    @property
    def n_inputs(self) -> int:
        return self.py_given_x.shape[0]

    def swapped(self) -> "DmcWiretap":
        """The same subchannel with the roles of destination and wiretapper exchanged."""
        return DmcWiretap(self.pz_given_x, self.py_given_x)


def bsc(p: float) -> np.ndarray:
    """Binary symmetric channel matrix with crossover ``p``."""
    return np.array([[1 - p, p], [p, 1 - p]])


def _entropy(p, axis=-1):
    return entr(p).sum(axis=axis) / LN2


def _check_input(px, n: int) -> np.ndarray:
    px = np.asarray(px, dtype=float)
    if px.shape != (n,):
        raise InvalidArgument(f"input distribution has shape {px.shape}, channel has {n} inputs")
    if np.any(px < 0) or abs(math.fsum(px.tolist()) - 1.0) > ROW_SUM_TOL:
        raise InvalidArgument("input distribution must lie on the probability simplex")
    return px


def _mi(px, w):
    return _entropy(px @ w) - px @ _entropy(w)


def mutual_information(px, channel) -> float:
    """``I(X;Y)`` in bits for input law ``px`` and row-stochastic ``channel``.

    >>> mutual_information([0.5, 0.5], np.eye(2))
    1.0
    """
    w = np.asarray(channel, dtype=float)
    if w.ndim != 2:
        raise InvalidArgument("channel must be a 2-D matrix")
    px = _check_input(px, w.shape[0])
    return max(0.0, float(_mi(px, w)))


def secrecy_objective(px, ch: DmcWiretap) -> float:
    """``I(X;Y) - I(X;Z)``; may be negative."""
    px = _check_input(px, ch.n_inputs)
    return float(_mi(px, ch.py_given_x) - _mi(px, ch.pz_given_x))


def _project_rows(v: np.ndarray) -> np.ndarray:
    """Euclidean projection of each row onto the probability simplex."""
    v = np.atleast_2d(v)
    n = v.shape[1]
    u = -np.sort(-v, axis=1)
    css = np.cumsum(u, axis=1) - 1.0
    ks = np.arange(1, n + 1)
    cond = u - css / ks > 0
    rho = n - 1 - np.argmax(cond[:, ::-1], axis=1)
    theta = css[np.arange(v.shape[0]), rho] / (rho + 1)
    return np.maximum(v - theta[:, None], 0.0)


def simplex_grid(dim: int, resolution: int) -> np.ndarray:
    """All points of the simplex with coordinates in ``(1/resolution) Z``.

    Rows are in lexicographic order of their integer numerators.
    """
    def numerators(d, r):
        if d == 1:
            return np.array([[r]])
        parts = []
        for first in range(r + 1):
            sub = numerators(d - 1, r - first)
            parts.append(np.column_stack([np.full(len(sub), first), sub]))
        return np.vstack(parts)

    return numerators(dim, resolution) / resolution


# --------------------------------------------------------------------------
# degradedness
# --------------------------------------------------------------------------


@dataclass(frozen=True)
class DegradednessCheck:
    degraded: bool
    witness: np.ndarray = field(repr=False)
    residual: float
    iterations: int

    def __bool__(self):
        return self.degraded


def check_degraded(
    ch: DmcWiretap,
    direction: str = "forward",
    tol: float = 1e-9,
    max_iter: int = 10_000,
) -> DegradednessCheck:
    """Search for a stochastic ``Q`` with ``p(z|x) = p(y|x) Q`` (forward).

    The reverse direction looks for ``p(y|x) = p(z|x) R``.  Each is a least
    squares problem over row-stochastic matrices, solved by accelerated
    projected gradient with the fixed step ``1/||A||_2^2``.  The channel is
    declared degraded iff the entrywise max residual is at most ``tol``.
    """
    if tol <= 0:
        raise InvalidArgument("tol must be positive")
    if direction == "forward":
        a, b = ch.py_given_x, ch.pz_given_x
    elif direction == "reverse":
        a, b = ch.pz_given_x, ch.py_given_x
    else:
        raise InvalidArgument(f"direction must be 'forward' or 'reverse', got {direction!r}")

    lip = np.linalg.norm(a, 2) ** 2
    q = _project_rows(np.linalg.lstsq(a, b, rcond=None)[0])
    best_q, best_r = q, float(np.max(np.abs(a @ q - b)))
    y, t = q, 1.0
    stalled = 0
    it = 0
    for it in range(1, max_iter + 1):
        if best_r <= tol * 1e-3:
            break
        grad = a.T @ (a @ y - b)
        q_new = _project_rows(y - grad / lip)
        t_new = 0.5 * (1.0 + math.sqrt(1.0 + 4.0 * t * t))
        y = q_new + ((t - 1.0) / t_new) * (q_new - q)
        q, t = q_new, t_new
        r = float(np.max(np.abs(a @ q - b)))
        if r < best_r * (1 - 1e-9):
            best_q, best_r, stalled = q, r, 0
        else:
            stalled += 1
            if stalled > 2000:
                break
    best_q = best_q.copy()
    best_q.setflags(write=False)
    return DegradednessCheck(best_r <= tol, best_q, best_r, it)


def classify(ch: DmcWiretap, tol: float = 1e-9) -> str:
    if check_degraded(ch, "forward", tol):
        return "forward-degraded"
    if check_degraded(ch, "reverse", tol):
        return "reverse-degraded"
    return "general"


# --------------------------------------------------------------------------
# degraded subchannel
# --------------------------------------------------------------------------


@dataclass(frozen=True)
class DegradedCapacity:
    capacity: float
    px: np.ndarray = field(repr=False)
    iterations: int
    grid_max: float | None = None


def _objective_gradient(px, w, v):
    tiny = 1e-300
    qy = np.maximum(px @ w, tiny)
    qz = np.maximum(px @ v, tiny)
    return (rel_entr(w, qy).sum(axis=1) - rel_entr(v, qz).sum(axis=1)) / LN2


def _ascend(p, w, v, max_iter):
    f = float(_mi(p, w) - _mi(p, v))
    step = 1.0
    for it in range(1, max_iter + 1):
        g = _objective_gradient(p, w, v)
        while True:
            p_new = _project_rows(p + step * g)[0]
            f_new = float(_mi(p_new, w) - _mi(p_new, v))
            if f_new >= f + 1e-4 * float(g @ (p_new - p)):
                break
            step *= 0.5
            if step < 1e-30:
                return p, f, it, True
        moved = float(np.max(np.abs(p_new - p)))
        p, f = p_new, f_new
        if moved < 1e-15:
            return p, f, it, True
        step = min(step * 2.0, 1e8)
    return p, f, max_iter, False


def dmc_secrecy_capacity_degraded(
    ch: DmcWiretap,
    tol: float = 1e-9,
    *,
    assume_degraded: bool = False,
    max_iter: int = 20_000,
) -> DegradedCapacity:
    """Secrecy capacity ``max_p I(X;Y) - I(X;Z)`` of a forward-degraded subchannel.

    Projected gradient ascent with backtracking from the uniform input.  For
    at most three inputs the answer is certified against a scan of the
    simplex at resolution 1/64 and must not fall below the scan's best point
    by more than 1e-6.
    """
    if not assume_degraded:
        chk = check_degraded(ch, "forward", tol)
        if not chk:
            raise PreconditionViolation(
                f"subchannel is not forward-degraded (witness residual {chk.residual:.3e})"
            )
    w, v = ch.py_given_x, ch.pz_given_x
    n = ch.n_inputs
    p, f, its, ok = _ascend(np.full(n, 1.0 / n), w, v, max_iter)

    grid_max = None
    if n <= CERTIFY_MAX_INPUTS:
        pts = simplex_grid(n, CERTIFY_RESOLUTION)
        vals = _entropy(pts @ w) - pts @ _entropy(w) - (_entropy(pts @ v) - pts @ _entropy(v))
        k = int(np.argmax(vals))
        grid_max = float(vals[k])
        if f < grid_max - CERTIFY_SLACK:
            p, f, more, ok = _ascend(pts[k], w, v, max_iter)
            its += more
            if f < grid_max - CERTIFY_SLACK:
                raise ConvergenceFailure(
                    f"ascent value {f:.9f} below grid maximum {grid_max:.9f}",
                    best=DegradedCapacity(max(f, 0.0), p, its, grid_max),
                )
    if not ok:
        raise ConvergenceFailure(
            f"ascent did not settle within {max_iter} iterations",
            best=DegradedCapacity(max(f, 0.0), p, its, grid_max),
        )
    p = p.copy()
    p.setflags(write=False)
    return DegradedCapacity(max(f, 0.0), p, its, grid_max)


# --------------------------------------------------------------------------
# general subchannel
# --------------------------------------------------------------------------


@dataclass(frozen=True)
class GeneralCapacity:
    """Best grid value of ``I(U;Y) - I(U;Z)``, a lower bound on capacity."""

    lower_bound: float
    pu: np.ndarray = field(repr=False)
    px_given_u: np.ndarray = field(repr=False)
    evaluations: int

    @property
    def px(self) -> np.ndarray:
        return self.pu @ self.px_given_u


def dmc_secrecy_capacity_general(
    ch: DmcWiretap,
    u_card: int | None = None,
    grid: int = GENERAL_MAX_GRID,
    *,
    max_evaluations: int = GENERAL_MAX_EVALUATIONS,
) -> GeneralCapacity:
    """Exhaustive scan of ``I(U;Y) - I(U;Z)`` over ``p(u)`` and ``p(x|u)``.

    Both ``p(u)`` and every column ``p(x|u=k)`` range over the simplex grid
    of resolution ``1/grid``.  Relabeling ``U`` does not change the
    objective, so only nondecreasing tuples of columns are visited.  Ties go
    to the lexicographically first (column tuple, ``p(u)``) point.

    Scope: ``|X| <= 3``, ``u_card <= 4``, ``grid <= 32``, and at most
    ``max_evaluations`` objective evaluations.
    """
    n = ch.n_inputs
    k = n if u_card is None else int(u_card)
    if not (1 <= n <= GENERAL_MAX_INPUTS and 1 <= k <= GENERAL_MAX_U and 1 <= grid <= GENERAL_MAX_GRID):
        raise OracleScopeExceeded(
            f"general scan limited to |X| <= {GENERAL_MAX_INPUTS}, u_card <= {GENERAL_MAX_U}, "
            f"grid <= {GENERAL_MAX_GRID}; got |X|={n}, u_card={k}, grid={grid}"
        )
    cols = simplex_grid(n, grid)
    weights = simplex_grid(k, grid)
    n_tuples = math.comb(len(cols) + k - 1, k)
    total = n_tuples * len(weights)
    if total > max_evaluations:
        raise OracleScopeExceeded(
            f"general scan needs {total} evaluations (> {max_evaluations}); "
            f"lower grid or u_card"
        )

    w, v = ch.py_given_x, ch.pz_given_x
    qy, qz = cols @ w, cols @ v
    # H(Y|U=u) - H(Z|U=u) per candidate column
    cond = _entropy(qy) - _entropy(qz)
    tuples = np.fromiter(
        itertools.chain.from_iterable(itertools.combinations_with_replacement(range(len(cols)), k)),
        dtype=np.int64,
        count=n_tuples * k,
    ).reshape(n_tuples, k)

    width = w.shape[1] + v.shape[1]
    chunk = max(1, 4_000_000 // (len(weights) * width))
    best_val, best_at = -math.inf, None
    for start in range(0, n_tuples, chunk):
        t = tuples[start:start + chunk]
        mix_y = np.einsum("wk,mky->mwy", weights, qy[t])
        mix_z = np.einsum("wk,mkz->mwz", weights, qz[t])
        vals = _entropy(mix_y) - _entropy(mix_z) - np.einsum("wk,mk->mw", weights, cond[t])
        j = int(np.argmax(vals))
        if vals.flat[j] > best_val:
            best_val = float(vals.flat[j])
            best_at = (start + j // len(weights), j % len(weights))

    ti, wi = best_at
    pu = weights[wi].copy()
    px_u = cols[tuples[ti]].copy()
    # a point mass on U scores exactly 0; anything below is rounding
    return GeneralCapacity(max(best_val, 0.0), pu, px_u, total)


# --------------------------------------------------------------------------
# parallel channel
# --------------------------------------------------------------------------


@dataclass(frozen=True)
class ParallelWiretap:
    subchannels: tuple[DmcWiretap, ...]
    tags: tuple[str, ...] | None = None

    def __post_init__(self):
        subs = tuple(self.subchannels)
        if not subs:
            raise InvalidArgument("a parallel channel needs at least one subchannel")
        tags = ("unknown",) * len(subs) if self.tags is None else tuple(self.tags)
        if len(tags) != len(subs):
            raise InvalidArgument(f"{len(tags)} tags for {len(subs)} subchannels")
        for t in tags:
            if t not in TAGS:
                raise InvalidArgument(f"unknown tag {t!r}; expected one of {TAGS}")
        object.__setattr__(self, "subchannels", subs)
        object.__setattr__(self, "tags", tags)

    @classmethod
    def classify(cls, subchannels, tol: float = 1e-9) -> "ParallelWiretap":
        subs = tuple(subchannels)
        return cls(subs, tuple(classify(c, tol) for c in subs))

    def __add__(self, other: "ParallelWiretap") -> "ParallelWiretap":
        return ParallelWiretap(self.subchannels + other.subchannels, self.tags + other.tags)

    def __len__(self):
        return len(self.subchannels)


def subchannel_secrecy_capacities(
    pw: ParallelWiretap,
    *,
    tol: float = 1e-9,
    u_card: int | None = None,
    grid: int = GENERAL_MAX_GRID,
) -> list[float]:
    """Per-subchannel secrecy capacities, routed by tag.

    ``unknown`` tags are resolved with :func:`classify`.  A reverse-degraded
    tag is verified, then contributes 0 without any optimization.  General
    subchannels go to the grid scanner, so their entries are lower bounds.
    """
    out = []
    for ch, tag in zip(pw.subchannels, pw.tags):
        if tag == "unknown":
            tag = classify(ch, tol)
        if tag == "forward-degraded":
            out.append(dmc_secrecy_capacity_degraded(ch, tol).capacity)
        elif tag == "reverse-degraded":
            chk = check_degraded(ch, "reverse", tol)
            if not chk:
                raise PreconditionViolation(
                    f"subchannel tagged reverse-degraded is not (residual {chk.residual:.3e})"
                )
            out.append(0.0)
        else:
            out.append(dmc_secrecy_capacity_general(ch, u_card, grid).lower_bound)
    return out


def parallel_secrecy_capacity(pw: ParallelWiretap, **kwargs) -> float:
    """Sum of the subchannel secrecy capacities."""
    return math.fsum(subchannel_secrecy_capacities(pw, **kwargs))


# --------------------------------------------------------------------------
# text format
# --------------------------------------------------------------------------


def parse_channel_text(text: str, source: str = "<string>") -> list[DmcWiretap]:
    """Parse the matrix text format into subchannels (see module docstring)."""
    blocks: list[list[tuple[int, list[float]]]] = []
    current: list[tuple[int, list[float]]] = []
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line or line == "---":
            if current:
                blocks.append(current)
                current = []
            continue
        try:
            row = [float(tok) for tok in line.split()]
        except ValueError:
            raise ConfigError(f"non-numeric entry in {raw.strip()!r}", f"{source}:{lineno}") from None
        if any(not math.isfinite(x) or x < 0 or x > 1 for x in row):
            raise ConfigError("probabilities must lie in [0, 1]", f"{source}:{lineno}")
        s = math.fsum(row)
        if abs(s - 1.0) > ROW_SUM_TOL:
            raise ConfigError(f"row sums to {s!r}, expected 1", f"{source}:{lineno}")
        if current and len(row) != len(current[0][1]):
            raise ConfigError(
                f"row has {len(row)} entries, block started with {len(current[0][1])}",
                f"{source}:{lineno}",
            )
        current.append((lineno, row))
    if current:
        blocks.append(current)
    if not blocks:
        raise ConfigError("no matrices found", source)
    if len(blocks) % 2:
        raise ConfigError(
            f"odd number of matrix blocks ({len(blocks)}); each subchannel needs p(y|x) and p(z|x)",
            f"{source}:{blocks[-1][0][0]}",
        )
    subs = []
    for yb, zb in zip(blocks[::2], blocks[1::2]):
        if len(yb) != len(zb):
            raise ConfigError(
                f"p(y|x) has {len(yb)} rows but p(z|x) has {len(zb)}", f"{source}:{zb[0][0]}"
            )
        subs.append(DmcWiretap([r for _, r in yb], [r for _, r in zb]))
    return subs


def load_channel_file(path) -> list[DmcWiretap]:
    path = Path(path)
    try:
        text = path.read_text()
    except OSError as exc:
        raise ConfigError(f"cannot read channel file: {exc.strerror}", str(path)) from None
    return parse_channel_text(text, str(path))
