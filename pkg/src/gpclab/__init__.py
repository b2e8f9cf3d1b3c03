"""gpclab: deterministic generalized product codes on the binary erasure channel.

Construction of (eta, gamma, tau) code families, density-evolution analysis,
residual-graph peeling simulation, a branching-process cross-check, and
LP-based design of irregular capability mixtures.
"""

from .poisson import (
    CapabilityDistribution,
    initial_loss,
    initial_loss_mixture,
    poisson_pmf,
    poisson_tail,
    tail_integral,
)
from .codespec import (
    BchComponentParams,
    GpcSpec,
    bch_params,
    block_array_eta,
    cn_degrees,
    code_length,
    erasure_scaling,
    mean_capability,
    preset_braided,
    preset_from_block_array,
    preset_hpc,
    preset_pc,
    preset_staircase,
    rate_lower_bound,
    spec_from_json,
    spec_to_json,
    validate,
)
from .de import (
    DeTrajectory,
    Schedule,
    ThresholdResult,
    de_run,
    de_step,
    de_step_per_type,
    failure_probability,
    refined_upper_bound,
    success_condition,
    threshold,
    upper_bound,
    window_schedule,
)
from .graphsim import (
    PeelingResult,
    ResidualGraph,
    core_oracle,
    hpc_demo_graph,
    monte_carlo,
    peel,
    peel_scheduled,
    sample_residual,
)
from .branching import (
    TypedTree,
    peel_tree,
    sample_tree,
    survival_mc,
    total_progeny_second_moment,
)
from .optimizer import LpSolution, build_lp, post_verify, solve, sweep_tradeoff

__version__ = "0.1.0"
