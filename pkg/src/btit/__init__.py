"""Anytime kinodynamic motion planning for linear systems with quadratic
effort cost, built on batch-informed sampling and bidirectional heuristic
search."""

from .dynamics import (
    LinearSystem,
    SteeringResult,
    TrajectorySamples,
    gramian,
    mat_exp,
    steer,
    steer_batch,
    steer_cost,
    synthesize,
)
from .errors import (
    InfeasibleSpaceError,
    NumericDomainError,
    PreconditionError,
    ScenarioError,
    SingularGramianError,
    UnsteerablePairError,
)
from .geometry import Scenario, load_scenario, scenario_from_dict
from .graph import BWD, FWD, PlanGraph
from .presets import (
    PRESETS,
    get_system,
    make_double_integrator,
    make_quadrotor,
    make_single_integrator,
)
from .sampling import BatchSampler, SpheroidSampler, connection_radius, default_gamma
from .search import (
    CONTROLLER,
    EUCLIDEAN,
    FHAT,
    FIRST_INTERSECTION_PLUS_LB,
    K_NN,
    LB_ONLY,
    MM_MAX,
    R_DISK,
    AnytimeEvent,
    GraphPlanResult,
    PlannerConfig,
    PlanResult,
    plan,
    plan_baseline,
    plan_on_graph,
    queue_key,
)
from .bench import (
    TrialResult,
    default_config,
    run_trials,
    summarize,
    summary_stats,
)

__all__ = [
    "LinearSystem",
    "SteeringResult",
    "TrajectorySamples",
    "gramian",
    "mat_exp",
    "steer",
    "steer_batch",
    "steer_cost",
    "synthesize",
    "PreconditionError",
    "NumericDomainError",
    "SingularGramianError",
    "UnsteerablePairError",
    "InfeasibleSpaceError",
    "ScenarioError",
    "Scenario",
    "load_scenario",
    "scenario_from_dict",
    "PlanGraph",
    "FWD",
    "BWD",
    "BatchSampler",
    "SpheroidSampler",
    "connection_radius",
    "default_gamma",
    "PRESETS",
    "get_system",
    "make_double_integrator",
    "make_quadrotor",
    "make_single_integrator",
    "PlannerConfig",
    "PlanResult",
    "GraphPlanResult",
    "AnytimeEvent",
    "plan",
    "plan_baseline",
    "plan_on_graph",
    "queue_key",
    "TrialResult",
    "default_config",
    "run_trials",
    "summarize",
    "summary_stats",
    "FHAT",
    "MM_MAX",
    "FIRST_INTERSECTION_PLUS_LB",
    "LB_ONLY",
    "R_DISK",
    "K_NN",
    "CONTROLLER",
    "EUCLIDEAN",
]

__version__ = "0.1.0"
