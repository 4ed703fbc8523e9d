"""Top trading cycles for matching markets with distributional objectives,
plus an exact discrete-convexity toolkit and exhaustive property oracles."""

from .convexity import (
    CheckResult,
    ContourSweepResult,
    ConvexityWitness,
    confirm_pseudo_witness,
    confirm_set_witness,
    is_m_convex,
    is_mnat_convex,
    is_pseudo_m_concave,
    is_pseudo_mnat_concave,
    lift_add_unassigned,
    upper_contour_set,
    upper_contours_all_mnat_convex,
)
from .core import (
    OUTSIDE_TOKEN,
    BudgetExceededError,
    Distribution,
    Economy,
    Matching,
    Preference,
    district_totals,
    enumerate_feasible,
    induced_distribution,
    is_feasible,
    is_individually_rational,
    pareto_dominates,
    zero_distribution,
)
from .objectives import (
    NEG_INF,
    ChebyshevObjective,
    DiscreteMetricObjective,
    GoalConstructionError,
    ManhattanObjective,
    Objective,
    PolicyGoal,
    TabulatedObjective,
    build_balanced_exchange_goal,
    build_combined_goal,
    build_district_diversity_goal,
    build_diversity_goal,
    build_exchange_feasibility_goal,
    build_quota_goal,
    chebyshev_distance,
    explicit_goal,
    manhattan_distance,
    weakly_improves,
)
from .ttc import (
    LiftedPreference,
    MechanismInvariantError,
    Option,
    TTCStep,
    TTCTrace,
    is_permissible,
    lift_preference,
    options_for,
    priority_order,
    replay_trace,
    run_ttc,
)
from .verify import (
    VerificationReport,
    enumerate_constrained_efficient_ir,
    enumerate_matchings,
    is_constrained_efficient,
    verify_individual_rationality,
    verify_strategy_proofness,
    verify_weak_improvement,
)

__version__ = "0.1.0"
