"""Optimal symmetric entry profiles (entry only at an empty queue).

Directing an agent into a non-empty queue is socially wasteful (w > 1), so
an optimal symmetric profile is a vector p_m of entry probabilities for the
states (m, 0).  The total cost then satisfies a one-dimensional recursion:
stage m costs

  [(1-p)^m * m + sum_i pmf(m,i,p) * (w*i*(i-1)/2 + i*(m-i) + OPT(m-i))]
  / (1 - (1-p)^m)

and OPT(m) minimizes this over p in (0, 1].  The continuation values do not
depend on p_m, so stage-wise minimization is globally optimal within this
class of profiles.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import List, Sequence, Tuple

import numpy as np

from .model import (
    DivergentCostError,
    GameParams,
    InvalidParameterError,
    _binom_matrix,
    _binom_row,
    one_minus_pow,
)

__all__ = [
    "OptSolution",
    "StageDiagnostics",
    "opt_stage_cost",
    "solve_opt",
    "opt_closed_form_2p",
    "heuristic_profile_small_w",
    "heuristic_profile_large_w",
    "sc_unrestricted",
]

DEFAULT_GRID_POINTS = 2048
DEFAULT_TOL = 1e-10
_INVPHI = (math.sqrt(5.0) - 1.0) / 2.0


@dataclass(frozen=True)
class StageDiagnostics:
    bracket: Tuple[float, float]
    width: float
    stage_cost: float


@dataclass(frozen=True)
class OptSolution:
    """p[m] is the entry probability with m agents left (p[0] unused, p[1]=1);
    opt[m] is the minimal total cost of serving m agents."""

    params: GameParams
    p: Tuple[float, ...]
    opt: Tuple[float, ...]
    diagnostics: Tuple[StageDiagnostics, ...]

    @property
    def total_cost(self) -> float:
        return self.opt[self.params.n]


def opt_stage_cost(m: int, p: float, w: float, opt_prefix: Sequence[float]) -> float:
    """Expected total cost of stage m at entry probability p.

    ``opt_prefix`` holds the continuation values for 0..m-1 agents
    (index j = cost with j agents left).
    """
    if m < 1:
        raise InvalidParameterError(f"m must be >= 1, got {m}")
    if not 0.0 < p <= 1.0:
        if p == 0.0:
            raise DivergentCostError("stage cost diverges at p = 0")
        raise InvalidParameterError(f"p must be in (0,1], got {p}")
    if len(opt_prefix) < m:
        raise InvalidParameterError(f"opt_prefix must cover 0..{m - 1}")
    row = _binom_row(m, p)
    acc = 0.0
    for i in range(1, m + 1):
        if row[i] > 0.0:
            acc += row[i] * (w * i * (i - 1) / 2.0 + i * (m - i) + opt_prefix[m - i])
    return float((row[0] * m + acc) / one_minus_pow(p, m))


def _stage_cost_grid(
    m: int, ps: np.ndarray, w: float, opt_prefix: Sequence[float]
) -> np.ndarray:
    B = _binom_matrix(m, ps)
    i = np.arange(1, m + 1, dtype=float)
    inc = w * i * (i - 1) / 2.0 + i * (m - i)
    inc += np.asarray([opt_prefix[m - j] for j in range(1, m + 1)])
    num = B[:, 0] * m + B[:, 1:] @ inc
    return num / one_minus_pow(ps, m)


def _golden_min(f, a: float, b: float, tol: float) -> Tuple[float, float]:
    """Golden-section minimum of a unimodal f on [a, b]."""
    c = b - _INVPHI * (b - a)
    d = a + _INVPHI * (b - a)
    fc, fd = f(c), f(d)
    while (b - a) > tol * max(1e-12, abs(a) + abs(b)) and (b - a) > 1e-18:
        if fc <= fd:
            b, d, fd = d, c, fc
            c = b - _INVPHI * (b - a)
            fc = f(c)
        else:
            a, c, fc = c, d, fd
            d = a + _INVPHI * (b - a)
            fd = f(d)
    x = c if fc <= fd else d
    return x, min(fc, fd)


def _stage_grid(m: int, points: int) -> np.ndarray:
    half = points // 2
    lo = 1e-8 / m
    knee = 1.0 / m
    left = np.geomspace(lo, knee, half)
    right = np.linspace(knee, 1.0, points - half)
    return np.unique(np.concatenate([left, right]))


def solve_opt(
    params: GameParams,
    grid_points: int = DEFAULT_GRID_POINTS,
    tol: float = DEFAULT_TOL,
) -> "OptSolution":
    """Bottom-up minimization of the stage recursion for m = 2..n.

    Each stage objective is a ratio of degree-m polynomials and may be
    multimodal, so every local minimum bracket found on a coarse mixed
    log/linear grid is refined by golden section and the global best kept.
    """
    n, w = params.n, params.w
    opt: List[float] = [0.0, 0.0]
    p: List[float] = [math.nan, 1.0]
    diags: List[StageDiagnostics] = [
        StageDiagnostics(bracket=(1.0, 1.0), width=0.0, stage_cost=0.0)
    ]
    for m in range(2, n + 1):
        grid = _stage_grid(m, grid_points)
        vals = _stage_cost_grid(m, grid, w, opt)

        def f(x: float, _m=m) -> float:
            return opt_stage_cost(_m, x, w, opt)

        best_x, best_f = 1.0, float(vals[-1])
        best_bracket = (float(grid[-2]), 1.0)
        mins = [j for j in range(len(grid)) if _is_local_min(vals, j)]
        for j in mins:
            a = float(grid[max(j - 1, 0)])
            b = float(grid[min(j + 1, len(grid) - 1)])
            if a == b:
                x, fx = float(grid[j]), float(vals[j])
            else:
                x, fx = _golden_min(f, a, b, tol)
            if fx < best_f:
                best_x, best_f = x, fx
                best_bracket = (a, b)
        p.append(best_x)
        opt.append(best_f)
        diags.append(
            StageDiagnostics(
                bracket=best_bracket,
                width=best_bracket[1] - best_bracket[0],
                stage_cost=best_f,
            )
        )
    return OptSolution(
        params=params, p=tuple(p[: n + 1]), opt=tuple(opt[: n + 1]), diagnostics=tuple(diags)
    )


def _is_local_min(vals: np.ndarray, j: int) -> bool:
    left = vals[j - 1] if j > 0 else math.inf
    right = vals[j + 1] if j + 1 < len(vals) else math.inf
    return vals[j] <= left and vals[j] <= right


def opt_closed_form_2p(w: float) -> Tuple[float, float]:
    """Two-player optimum: p = (sqrt(2w-1)-1)/(w-1), cost sqrt(2w-1).

    The cost follows from substituting the minimizer into
    1/p + (w*p - 1)/(2 - p), which simplifies exactly to sqrt(2w-1).
    """
    if not w > 1.0:
        raise InvalidParameterError(f"w must be > 1, got {w}")
    s = math.sqrt(2.0 * w - 1.0)
    return (s - 1.0) / (w - 1.0), s


def heuristic_profile_small_w(n: int, w: float) -> Tuple[float, ...]:
    """Entry probabilities p_m = min(1, ln(m)/m * sqrt(2/w)); p_1 = 1.

    Balances collision risk against idle time well when n is large relative
    to w.  Returned as p[0..n] with p[0] unused.
    """
    if n < 2 or not w > 2.0:
        raise InvalidParameterError(f"need n >= 2 and w > 2, got n={n}, w={w}")
    scale = math.sqrt(2.0 / w)
    p = [math.nan, 1.0]
    for m in range(2, n + 1):
        p.append(min(1.0, math.log(m) / m * scale))
    return tuple(p)


def heuristic_profile_large_w(n: int, w: float) -> Tuple[float, ...]:
    """Entry probabilities p_m = min(1, sqrt(2(m-1)/(w-1))/m); p_1 = 1.

    Tuned for w large relative to n.  Returned as p[0..n] with p[0] unused.
    """
    if n < 2 or not w > 1.0:
        raise InvalidParameterError(f"need n >= 2 and w > 1, got n={n}, w={w}")
    p = [math.nan, 1.0]
    for m in range(2, n + 1):
        p.append(min(1.0, math.sqrt(2.0 * (m - 1) / (w - 1.0)) / m))
    return tuple(p)


def sc_unrestricted(n: int) -> float:
    """Minimal social cost without any symmetry restriction: sequential entry."""
    if n < 1:
        raise InvalidParameterError(f"n must be >= 1, got {n}")
    return n * (n - 1) / 2.0
