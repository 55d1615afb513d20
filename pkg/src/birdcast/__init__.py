"""Interest-aware multicast scheduling toolkit.

Builds per-user maps of interest over spatial grids, casts the joint
feature-selection/grouping problem as grid-rate selection under a latency
budget, and solves it with a refined two-pass greedy and an accelerated
lazy-evaluation variant, alongside six baseline schedulers and an exact
oracle for small instances.
"""

from .baselines import (
    BASELINE_IDS,
    BaselineConfig,
    broadcast_solve,
    dp_solve,
    kmeanspp_solve,
    marginal_util_solve,
    unicast_solve,
)
from .channel import (
    DEFAULT_MCS_TABLE,
    McsTable,
    UserChannel,
    decodable_set,
    item_cost,
    max_data_rate,
    max_rate_index,
)
from .instance import (
    CoverageState,
    MulticastPlan,
    PlanEvaluation,
    ProblemInstance,
    Selection,
    evaluate_plan,
    marginal_gain,
    plan_from_selection,
    selection_cost,
    selection_from_plan,
    utility,
)
from .moi import (
    GridMap,
    build_moi,
    confidence_map,
    entropy_map,
    info_mask,
    local_correlation,
)
from .oracle import (
    EnumerationCapExceeded,
    OracleResult,
    brute_force_assignments,
    exact_solve,
    unrestricted_opt,
    verify_equivalence,
)
from .scenario import GenParams, RadioParams, Scene, fig1_instance, generate, snr_for_user
from .solvers import (
    SolveResult,
    accelerated_greedy,
    best_single_item,
    refined_greedy,
    remove_redundant,
)

__version__ = "0.1.0"

__all__ = [
    "BASELINE_IDS",
    "BaselineConfig",
    "CoverageState",
    "DEFAULT_MCS_TABLE",
    "EnumerationCapExceeded",
    "GenParams",
    "GridMap",
    "McsTable",
    "MulticastPlan",
    "OracleResult",
    "PlanEvaluation",
    "ProblemInstance",
    "RadioParams",
    "Scene",
    "Selection",
    "SolveResult",
    "UserChannel",
    "accelerated_greedy",
    "best_single_item",
    "broadcast_solve",
    "brute_force_assignments",
    "build_moi",
    "confidence_map",
    "decodable_set",
    "dp_solve",
    "entropy_map",
    "evaluate_plan",
    "exact_solve",
    "fig1_instance",
    "generate",
    "info_mask",
    "item_cost",
    "kmeanspp_solve",
    "local_correlation",
    "marginal_gain",
    "marginal_util_solve",
    "max_data_rate",
    "max_rate_index",
    "plan_from_selection",
    "refined_greedy",
    "remove_redundant",
    "selection_cost",
    "selection_from_plan",
    "snr_for_user",
    "unicast_solve",
    "unrestricted_opt",
    "utility",
    "verify_equivalence",
]
