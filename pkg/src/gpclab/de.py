"""Density evolution for deterministic GPC families.

Tracks x_i, the probability that an erased bit touching position i is still
unresolved after a given number of decoding iterations, and z, the fraction
of component codes that would declare failure.  Includes scheduled variants
(frozen positions carry their state forward), threshold search, and the
analytic bounds used to sanity-check and design capability mixtures.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import NamedTuple, Sequence

import numpy as np

from .codespec import GpcSpec, mean_capability, require_valid
from .poisson import (
    CapabilityDistribution,
    initial_loss,
    initial_loss_mixture,
    poisson_tail_block,
)

CONVERGED = "converged_to_zero"
STUCK = "stuck_positive"
ITERATION_CAP = "iteration_cap"

DEFAULT_ELL_MAX = 20000
DEFAULT_SUCCESS_EPSILON = 1e-8
DEFAULT_X_TOLERANCE = 1e-13


@dataclass(frozen=True)
class Schedule:
    """Sequence of active position sets; inactive positions are frozen."""

    active_sets: tuple[frozenset[int], ...]

    def __post_init__(self) -> None:
        object.__setattr__(
            self, "active_sets", tuple(frozenset(s) for s in self.active_sets)
        )
        if any(not s for s in self.active_sets):
            raise ValueError("every active set must be nonempty")

    def covers(self, L: int) -> bool:
        union: set[int] = set()
        for s in self.active_sets:
            union |= s
        return union == set(range(L))

    def __len__(self) -> int:
        return len(self.active_sets)


def full_schedule(L: int, steps: int) -> Schedule:
    return Schedule(tuple(frozenset(range(L)) for _ in range(steps)))


def window_schedule(L: int, width: int, steps_per_slide: int) -> Schedule:
    """Sliding decoding window: [s, s+width) stays active for a fixed number
    of steps, then moves one position to the right until it hits the end."""
    if not (1 <= width <= L) or steps_per_slide < 1:
        raise ValueError("need 1 <= width <= L and steps_per_slide >= 1")
    sets = []
    for s in range(L - width + 1):
        active = frozenset(range(s, s + width))
        sets.extend([active] * steps_per_slide)
    return Schedule(tuple(sets))


@dataclass(frozen=True)
class DeTrajectory:
    """Iteration history of one DE run.

    ``x[k]`` is the length-L vector after k iterations (x[0] is all ones) and
    ``z[k]`` the failure fraction at iteration k, with the convention
    z[0] = 1 (nothing decoded yet).
    """

    x: np.ndarray
    z: np.ndarray
    iterations_run: int
    verdict: str

    @property
    def final_x(self) -> np.ndarray:
        return self.x[-1]

    @property
    def final_z(self) -> float:
        return float(self.z[-1])

    def to_csv_rows(self) -> list[list[str]]:
        L = self.x.shape[1]
        header = ["iteration"] + [f"x_{i+1}" for i in range(L)] + ["z"]
        rows = [header]
        for k in range(self.iterations_run + 1):
            rows.append(
                [str(k)]
                + [repr(float(v)) for v in self.x[k]]
                + [repr(float(self.z[k]))]
            )
        return rows


class _CompiledSpec:
    """Per-position adjacency and capability support lists for fast stepping."""

    __slots__ = ("L", "neighbors", "supports", "t_maxes")

    def __init__(self, spec: GpcSpec):
        self.L = spec.num_positions
        self.neighbors = []
        for i in range(self.L):
            self.neighbors.append(
                [(j, float(spec.gamma[j])) for j in range(self.L) if spec.eta[i, j]]
            )
        self.supports = [d.support() for d in spec.tau]
        self.t_maxes = [d.t_max for d in spec.tau]


def _means(comp: _CompiledSpec, x: Sequence[float], c: float) -> list[float]:
    return [c * sum(w * x[j] for j, w in comp.neighbors[i]) for i in range(comp.L)]


def de_step(spec: GpcSpec, x: Sequence[float], c: float) -> np.ndarray:
    """One collapsed DE iteration: x_i <- sum_t tau_t(i) P(Pois(lam_i) >= t)
    with lam_i = c * sum_j eta_ij gamma_j x_j.  c = 0 is admitted and maps
    everything to zero (an erasure-free channel resolves instantly)."""
    if c < 0.0:
        raise ValueError(f"effective channel quality must be >= 0, got {c}")
    comp = _CompiledSpec(spec)
    lam = _means(comp, x, c)
    out = np.empty(comp.L)
    for i in range(comp.L):
        tails = poisson_tail_block(comp.t_maxes[i], lam[i])
        out[i] = sum(w * tails[t - 1] for t, w in comp.supports[i])
    return out


def failure_probability(spec: GpcSpec, x: Sequence[float], c: float) -> float:
    """Fraction of component codes still failing, given the previous x vector.

    Uses the one-larger tail P(Pois(lam_i) >= t+1): a component fails when
    more than t of its erasures survive the round."""
    comp = _CompiledSpec(spec)
    lam = _means(comp, x, c)
    total = 0.0
    for i in range(comp.L):
        tails = poisson_tail_block(comp.t_maxes[i] + 1, lam[i])
        total += float(spec.gamma[i]) * sum(
            w * tails[t] for t, w in comp.supports[i]
        )
    return total


def de_step_per_type(spec: GpcSpec, x_typed: np.ndarray, c: float) -> np.ndarray:
    """One DE iteration with state resolved per (position, capability) type.

    ``x_typed[i, t-1]`` is the unresolved probability of a type-(i, t) edge.
    The aggregation sum_t tau_t(i) * x_typed[i, t-1] reproduces the collapsed
    recursion exactly.
    """
    if c < 0.0:
        raise ValueError(f"effective channel quality must be >= 0, got {c}")
    L = spec.num_positions
    t_max = spec.t_max
    x_typed = np.asarray(x_typed, dtype=float)
    if x_typed.shape != (L, t_max):
        raise ValueError(f"x_typed must have shape {(L, t_max)}, got {x_typed.shape}")
    out = np.zeros_like(x_typed)
    # collapse the incoming typed state per position, then fan back out
    agg = np.zeros(L)
    for j in range(L):
        for t, w in spec.tau[j].support():
            agg[j] += w * x_typed[j, t - 1]
    for i in range(L):
        lam = c * sum(
            float(spec.gamma[j]) * agg[j] for j in range(L) if spec.eta[i, j]
        )
        tails = poisson_tail_block(t_max, lam)
        for t, _ in spec.tau[i].support():
            out[i, t - 1] = tails[t - 1]
    return out


def de_run(
    spec: GpcSpec,
    c: float,
    ell_max: int = DEFAULT_ELL_MAX,
    schedule: Schedule | None = None,
    x_tolerance: float = DEFAULT_X_TOLERANCE,
    success_epsilon: float = DEFAULT_SUCCESS_EPSILON,
) -> DeTrajectory:
    """Iterate DE until convergence, a stall, or the iteration cap.

    With a schedule, iteration l updates only the active positions; frozen
    positions keep x and their per-position failure term bitwise unchanged,
    and the run executes the whole schedule (stall detection is meaningless
    while positions wait to be activated).
    """
    require_valid(spec)
    if c < 0.0:
        raise ValueError(f"effective channel quality must be >= 0, got {c}")
    comp = _CompiledSpec(spec)
    L = comp.L
    if schedule is not None:
        if not schedule.covers(L):
            raise ValueError("schedule must cover every position")
        steps = min(ell_max, len(schedule))
    else:
        steps = ell_max
    gamma = [float(g) for g in spec.gamma]

    x = [1.0] * L
    z_pos = [1.0] * L  # per-position failure fraction; 1 before any decoding
    xs = [list(x)]
    zs = [1.0]
    verdict = ITERATION_CAP
    it = 0
    for it in range(1, steps + 1):
        active = schedule.active_sets[it - 1] if schedule is not None else None
        lam = _means(comp, x, c)
        new_x = list(x)
        max_change = 0.0
        for i in range(L):
            if active is not None and i not in active:
                continue
            tails = poisson_tail_block(comp.t_maxes[i] + 1, lam[i])
            xi = 0.0
            zi = 0.0
            for t, w in comp.supports[i]:
                xi += w * tails[t - 1]
                zi += w * tails[t]
            new_x[i] = xi
            z_pos[i] = zi
            change = abs(x[i] - xi)
            if change > max_change:
                max_change = change
        x = new_x
        xs.append(list(x))
        zs.append(sum(g * zp for g, zp in zip(gamma, z_pos)))
        x_max = max(x)
        if x_max <= success_epsilon:
            verdict = CONVERGED
            break
        if schedule is None and max_change < x_tolerance * x_max:
            verdict = STUCK
            break
    else:
        it = steps
    return DeTrajectory(
        x=np.array(xs), z=np.array(zs), iterations_run=len(xs) - 1, verdict=verdict
    )


class SuccessCheck(NamedTuple):
    ok: bool
    min_slack: float
    worst_x: float


def success_condition(
    tau: CapabilityDistribution,
    c: float,
    grid_points: int = 10000,
    noise_floor: float = 1e-12,
) -> SuccessCheck:
    """Grid check of the single-position contraction condition.

    Decoding succeeds (threshold >= c) when sum_t tau_t P(Pois(c x) >= t) < x
    on (0, 1].  The check evaluates the slack x - sum(...) at x = i/M; slack
    dips smaller than ``noise_floor`` in magnitude are treated as numerical
    noise (the summands each carry O(1e-16) absolute error), so the verdict
    is min_slack > -noise_floor.
    """
    if grid_points < 2:
        raise ValueError("need at least 2 grid points")
    support = tau.support()
    t_max = tau.t_max
    min_slack = math.inf
    worst_x = math.nan
    for i in range(1, grid_points + 1):
        x = i / grid_points
        tails = poisson_tail_block(t_max, c * x)
        slack = x - sum(w * tails[t - 1] for t, w in support)
        if slack < min_slack:
            min_slack = slack
            worst_x = x
    return SuccessCheck(min_slack > -noise_floor, min_slack, worst_x)


def _collapsed_mixture(spec: GpcSpec) -> CapabilityDistribution | None:
    """For single-position specs, the capability mixture seen by DE."""
    if spec.num_positions != 1:
        return None
    return spec.tau[0]


def _run_converges(
    spec: GpcSpec,
    c: float,
    ell_max: int,
    success_epsilon: float,
    x_tolerance: float,
) -> bool:
    """Convergence classifier used by the threshold bisection.

    A run that hits the iteration cap while still descending is not evidence
    of a positive fixed point.  For single-position specs we settle it with
    the contraction condition restricted to (0, x_end]: the trajectory is
    monotone, so absence of a fixed point below x_end implies convergence.
    """
    traj = de_run(
        spec,
        c,
        ell_max=ell_max,
        x_tolerance=x_tolerance,
        success_epsilon=success_epsilon,
    )
    if traj.verdict == CONVERGED:
        return True
    if traj.verdict == STUCK:
        return False
    tau = _collapsed_mixture(spec)
    if tau is None:
        return False
    x_end = float(traj.final_x[0])
    support = tau.support()
    t_max = tau.t_max
    grid = 2000
    for i in range(1, grid + 1):
        x = x_end * i / grid
        tails = poisson_tail_block(t_max, c * x)
        slack = x - sum(w * tails[t - 1] for t, w in support)
        if slack < -1e-12:
            return False
    return True


@dataclass(frozen=True)
class ThresholdResult:
    """Bisection estimate of the decoding threshold.

    ``c_star`` is the upper end of the final bracket: the smallest tested c
    that failed to converge.  It therefore never under-reports the true
    supremum, which keeps exact-boundary mixtures (e.g. uniform ones) on the
    correct side.  The full bracket is recorded alongside.
    """

    c_star: float
    bracket_lo: float
    bracket_hi: float
    bracket_width: float
    de_params: dict

    @property
    def midpoint(self) -> float:
        return 0.5 * (self.bracket_lo + self.bracket_hi)


class BracketError(RuntimeError):
    """No convergent/non-convergent bracket found in the admissible range."""


def threshold(
    spec: GpcSpec,
    c_lo: float | None = None,
    c_hi: float | None = None,
    bracket_tol: float = 0.01,
    ell_max: int = DEFAULT_ELL_MAX,
    success_epsilon: float = DEFAULT_SUCCESS_EPSILON,
    x_tolerance: float = DEFAULT_X_TOLERANCE,
) -> ThresholdResult:
    """Bisect the largest effective channel quality c with vanishing DE limit.

    Starts from [t_bar/2, 2*t_bar] (the analytic containment bracket) unless
    explicit endpoints are given, expanding by doubling/halving when an
    endpoint is on the wrong side.  Raises BracketError when no sign change
    exists inside [1e-3, 4 * t_max].
    """
    require_valid(spec)
    tbar = mean_capability(spec)
    lo = c_lo if c_lo is not None else tbar / 2.0
    hi = c_hi if c_hi is not None else 2.0 * tbar
    floor, ceil = 1e-3, 4.0 * spec.t_max

    def conv(c: float) -> bool:
        return _run_converges(spec, c, ell_max, success_epsilon, x_tolerance)

    while not conv(lo):
        lo /= 2.0
        if lo < floor:
            raise BracketError(
                f"DE does not converge anywhere above c = {floor}; no threshold bracket"
            )
    while conv(hi):
        hi *= 2.0
        if hi > ceil:
            raise BracketError(
                f"DE still converges at c = {ceil}; no threshold bracket"
            )
    while hi - lo > bracket_tol:
        mid = 0.5 * (lo + hi)
        if conv(mid):
            lo = mid
        else:
            hi = mid
    return ThresholdResult(
        c_star=hi,
        bracket_lo=lo,
        bracket_hi=hi,
        bracket_width=hi - lo,
        de_params={
            "ell_max": ell_max,
            "x_tolerance": x_tolerance,
            "success_epsilon": success_epsilon,
        },
    )


def upper_bound(spec: GpcSpec) -> float:
    """Universal necessary condition: c <= 2 * mean capability."""
    return 2.0 * mean_capability(spec)


def refined_upper_bound(tau: CapabilityDistribution, tol: float = 1e-10) -> float:
    """Largest c satisfying c <= 2*t_bar - 2*initial_loss_mixture(tau, c).

    Accounting for the correction potential wasted before the first round
    tightens the 2*t_bar bound; the gap never closes since the initial loss
    is strictly positive at any finite c.
    """
    tbar = tau.mean()
    top = 2.0 * tbar

    def slack(c: float) -> float:
        return top - 2.0 * initial_loss_mixture(tau, c) - c

    lo = None
    for k in range(1, 80):
        cand = top * (1.0 - 0.5**k)
        if cand <= 0.0:
            break
        if slack(cand) > 0.0:
            lo = cand
            break
    if lo is None:
        return 0.0
    hi = top
    while hi - lo > tol:
        mid = 0.5 * (lo + hi)
        if slack(mid) > 0.0:
            lo = mid
        else:
            hi = mid
    return 0.5 * (lo + hi)


def conjectured_capability_floor(c: float) -> float:
    """Diagnostic only: c/2 + (1/c) * sum_{t=1}^{round(c)} initial_loss(t, c).

    Emitted as a reference column in trade-off reports; nothing asserts it.
    """
    k = max(1, int(round(c)))
    return c / 2.0 + sum(initial_loss(t, c) for t in range(1, k + 1)) / c
