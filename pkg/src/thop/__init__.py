"""Route-and-loot optimization toolkit.

A thief walks from the first city to the last one, optionally detouring
through intermediate cities to steal items. Carried weight slows the walk
down linearly, the knapsack has a capacity, and the whole trip must finish
within a deadline. This package bundles:

- a text instance format with parser/serializer (`instance`),
- the exact trip evaluator and solution containers (`evaluation`),
- an exhaustive oracle and a fractional-relaxation upper bound (`bounds`),
- a randomized scoring-based packing heuristic (`packing`),
- a pheromone-guided route builder with bounded trails and local search (`aco`),
- the orchestrating solver with run logs (`solver`),
- a 0/1 constraint model: lifting, verification, LP-style export (`minlp`),
- a CLI covering runs, sweeps, verification and exports (`cli`).
"""

from .aco import (
    LOCAL_SEARCH_KINDS,
    PARAM_DOMAINS,
    AcoParams,
    PheromoneState,
    construct_route,
    fitness,
    local_search,
    update_pheromones,
)
from .bounds import (
    BruteForceGuardError,
    NoFeasibleRouteError,
    brute_force_solve,
    fractional_kp_ub,
)
from .evaluation import (
    EPS_T,
    Evaluation,
    InfeasibleSolutionError,
    PackingPlan,
    Solution,
    evaluate,
    format_solution,
    parse_solution,
    solution_stats,
    speed,
    validate_route,
)
from .instance import (
    Instance,
    InstanceId,
    InstanceParseError,
    Item,
    load_instance,
    parse_instance,
    save_instance,
    serialize_instance,
    to_op_instance,
)
from .minlp import (
    BigM,
    ModelVariables,
    VerificationReport,
    arcs,
    export_model,
    lift_solution,
    read_model,
    verify,
)
from .packing import PackingParams, pack, pack_deterministic
from .solver import (
    STATUS_NO_ROUTE,
    STATUS_OK,
    RunLog,
    SolverConfig,
    default_time_budget,
    nearest_neighbor_route,
    prune_route,
    solve,
)

__version__ = "0.1.0"

__all__ = [
    "AcoParams",
    "BigM",
    "BruteForceGuardError",
    "EPS_T",
    "Evaluation",
    "InfeasibleSolutionError",
    "Instance",
    "InstanceId",
    "InstanceParseError",
    "Item",
    "LOCAL_SEARCH_KINDS",
    "ModelVariables",
    "NoFeasibleRouteError",
    "PARAM_DOMAINS",
    "PackingParams",
    "PackingPlan",
    "PheromoneState",
    "RunLog",
    "STATUS_NO_ROUTE",
    "STATUS_OK",
    "Solution",
    "SolverConfig",
    "VerificationReport",
    "arcs",
    "brute_force_solve",
    "construct_route",
    "default_time_budget",
    "evaluate",
    "export_model",
    "fitness",
    "format_solution",
    "fractional_kp_ub",
    "lift_solution",
    "load_instance",
    "local_search",
    "nearest_neighbor_route",
    "pack",
    "pack_deterministic",
    "parse_instance",
    "parse_solution",
    "prune_route",
    "read_model",
    "save_instance",
    "serialize_instance",
    "solution_stats",
    "solve",
    "speed",
    "to_op_instance",
    "update_pheromones",
    "validate_route",
    "verify",
]
