"""Capability-mixture design by linear programming.

For a target channel quality c, the cheapest mixture (smallest mean
capability) whose DE recursion still contracts is the solution of a small
LP: minimize sum_t tau_t * t subject to sum_t tau_t = 1, tau >= 0, and the
contraction constraint discretized on a grid of M points.  Solutions are
post-verified on a finer grid and by an actual threshold run, since the
discretization admits hairline supercriticality between grid points.
"""

from __future__ import annotations

import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, replace

import numpy as np

from . import de
from .codespec import preset_hpc
from .poisson import (
    CapabilityDistribution,
    initial_loss_mixture,
    poisson_tail_block,
)
from .simplex import INFEASIBLE, OPTIMAL, SimplexResult, solve_lp

STATUS_OPTIMAL = "optimal"
STATUS_INFEASIBLE = "infeasible"
STATUS_DEGENERATE = "degenerate-warning"


@dataclass(frozen=True)
class LpProblem:
    """Discretized mixture-design program."""

    c: float
    grid_m: int
    t_min: int
    t_max: int
    ts: np.ndarray          # capability value per variable
    objective: np.ndarray   # == ts, as floats
    a_ub: np.ndarray        # grid_m x nvars of Poisson tails
    b_ub: np.ndarray        # grid values i / M
    a_eq: np.ndarray        # single all-ones row
    b_eq: np.ndarray


@dataclass(frozen=True)
class LpSolution:
    status: str
    c: float
    grid_m: int
    t_min: int
    t_max: int
    tau: CapabilityDistribution | None
    t_bar: float | None
    raw_weights: np.ndarray | None
    pivots: int
    verified_threshold: float | None = None
    fine_grid_min_slack: float | None = None


def build_lp(c: float, grid_m: int, t_max: int, t_min: int = 1) -> LpProblem:
    """Tabulate the LP: one variable per capability in [t_min, t_max], one
    inequality row per grid point x = i/M, one normalization equality."""
    if grid_m < 10:
        raise ValueError("need at least 10 grid points")
    if not (1 <= t_min <= t_max <= 64):
        raise ValueError(f"need 1 <= t_min <= t_max <= 64, got [{t_min}, {t_max}]")
    if c <= 0.0:
        raise ValueError(f"effective channel quality must be > 0, got {c}")
    ts = np.arange(t_min, t_max + 1, dtype=np.int64)
    a_ub = np.empty((grid_m, ts.size))
    b_ub = np.empty(grid_m)
    for i in range(1, grid_m + 1):
        x = i / grid_m
        tails = poisson_tail_block(t_max, c * x)
        a_ub[i - 1] = [tails[t - 1] for t in ts]
        b_ub[i - 1] = x
    return LpProblem(
        c=c,
        grid_m=grid_m,
        t_min=t_min,
        t_max=t_max,
        ts=ts,
        objective=ts.astype(float),
        a_ub=a_ub,
        b_ub=b_ub,
        a_eq=np.ones((1, ts.size)),
        b_eq=np.ones(1),
    )


def solve(problem: LpProblem) -> LpSolution:
    """Run the two-phase simplex on the tableau.

    The returned mixture has tiny negative weights clipped and is
    renormalized; ``raw_weights`` keeps the untouched solver output so the
    solver-side invariants stay checkable.
    """
    result: SimplexResult = solve_lp(
        problem.objective,
        a_ub=problem.a_ub,
        b_ub=problem.b_ub,
        a_eq=problem.a_eq,
        b_eq=problem.b_eq,
    )
    if result.status == INFEASIBLE:
        return LpSolution(
            status=STATUS_INFEASIBLE,
            c=problem.c,
            grid_m=problem.grid_m,
            t_min=problem.t_min,
            t_max=problem.t_max,
            tau=None,
            t_bar=None,
            raw_weights=None,
            pivots=result.pivots,
        )
    if result.status != OPTIMAL:
        raise RuntimeError(f"simplex failed: {result.status}")
    raw = result.x.copy()
    cleaned = np.clip(raw, 0.0, None)
    cleaned /= cleaned.sum()
    weights = np.zeros(problem.t_max)
    for value, w in zip(problem.ts, cleaned):
        weights[value - 1] = w
    tau = CapabilityDistribution(tuple(weights))
    return LpSolution(
        status=STATUS_OPTIMAL,
        c=problem.c,
        grid_m=problem.grid_m,
        t_min=problem.t_min,
        t_max=problem.t_max,
        tau=tau,
        t_bar=tau.mean(),
        raw_weights=raw,
        pivots=result.pivots,
    )


def post_verify(
    solution: LpSolution,
    c: float | None = None,
    grid_factor: int = 10,
    bracket_tol: float = 0.01,
    ell_max: int = de.DEFAULT_ELL_MAX,
) -> LpSolution:
    """Re-check an optimal mixture at channel quality c.

    Evaluates the contraction slack on a grid ``grid_factor`` times finer
    than the LP's and measures the actual DE threshold; the solution is
    downgraded to a degenerate warning when that threshold falls below c.
    """
    if solution.status != STATUS_OPTIMAL:
        raise ValueError("can only post-verify an optimal solution")
    c = solution.c if c is None else c
    check = de.success_condition(
        solution.tau, c, grid_points=grid_factor * solution.grid_m
    )
    spec = preset_hpc(1000, solution.tau, tau_assignment="random")
    found = de.threshold(spec, bracket_tol=bracket_tol, ell_max=ell_max)
    status = solution.status if found.c_star >= c else STATUS_DEGENERATE
    return replace(
        solution,
        status=status,
        verified_threshold=found.c_star,
        fine_grid_min_slack=check.min_slack,
    )


@dataclass(frozen=True)
class FrontierPoint:
    c: float
    t_bar: float
    gap: float
    loss_at_c: float
    conjecture_rhs: float


def _frontier_point(args: tuple) -> FrontierPoint:
    c, grid_m, t_max, t_min = args
    sol = solve(build_lp(c, grid_m, t_max, t_min))
    if sol.status != STATUS_OPTIMAL:
        return FrontierPoint(c, math.nan, math.nan, math.nan,
                             de.conjectured_capability_floor(c))
    return FrontierPoint(
        c=c,
        t_bar=sol.t_bar,
        gap=2.0 * sol.t_bar - c,
        loss_at_c=initial_loss_mixture(sol.tau, c),
        conjecture_rhs=de.conjectured_capability_floor(c),
    )


def sweep_tradeoff(
    c_grid,
    grid_m: int,
    t_max: int,
    t_min: int = 1,
    jobs: int = 1,
) -> list[FrontierPoint]:
    """Minimal mean capability along a grid of channel qualities."""
    cs = [float(c) for c in c_grid]
    if sorted(cs) != cs:
        raise ValueError("c_grid must be sorted ascending")
    work = [(c, grid_m, t_max, t_min) for c in cs]
    if jobs > 1:
        with ProcessPoolExecutor(max_workers=jobs) as pool:
            return list(pool.map(_frontier_point, work))
    return [_frontier_point(w) for w in work]


def frontier_csv_rows(points: list[FrontierPoint]) -> list[list[str]]:
    rows = [["c", "t_bar", "gap", "loss_at_c", "conjecture_rhs"]]
    for p in points:
        rows.append(
            [repr(p.c), repr(p.t_bar), repr(p.gap), repr(p.loss_at_c),
             repr(p.conjecture_rhs)]
        )
    return rows
