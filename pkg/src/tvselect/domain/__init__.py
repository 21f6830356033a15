"""Domain layer: bandit state, oracles, rewards and regret analysis."""

from .models import (
    GOLDEN_COST,
    ArmState,
    BanditState,
    CostParams,
    DataContext,
    ParameterError,
    RewardVector,
    StructuralError,
    SuperArm,
    TVSError,
)
from .ports import FeedbackRule
from .arms import (
    check_conservation,
    choose_single_arm,
    expected_reward,
    expected_reward_setdep,
    global_reward,
    inclusion_probabilities,
    oracle_constrained,
    oracle_unconstrained,
    sample_theta,
    update,
)
from .analysis import (
    RegretLedger,
    SelectionMetrics,
    bound_lemma2,
    bound_lemma3,
    bound_theorem1,
    build_ledger,
    delta_max,
    find_optimal_superarm,
    identifiability_gaps,
    kl_divergence,
    log_fit_r2,
    per_step_regret,
    per_step_regret_dform,
    regret_doubling,
    selection_metrics,
    theorem1_constant,
)

__all__ = [
    # Models
    "GOLDEN_COST",
    "ArmState",
    "BanditState",
    "CostParams",
    "DataContext",
    "ParameterError",
    "RewardVector",
    "StructuralError",
    "SuperArm",
    "TVSError",
    # Ports
    "FeedbackRule",
    # Arms
    "check_conservation",
    "choose_single_arm",
    "expected_reward",
    "expected_reward_setdep",
    "global_reward",
    "inclusion_probabilities",
    "oracle_constrained",
    "oracle_unconstrained",
    "sample_theta",
    "update",
    # Analysis
    "RegretLedger",
    "SelectionMetrics",
    "bound_lemma2",
    "bound_lemma3",
    "bound_theorem1",
    "build_ledger",
    "delta_max",
    "find_optimal_superarm",
    "identifiability_gaps",
    "kl_divergence",
    "log_fit_r2",
    "per_step_regret",
    "per_step_regret_dform",
    "regret_doubling",
    "selection_metrics",
    "theorem1_constant",
]
