"""Infrastructure layer: learners, feedback rules, synthetic data and artifact storage."""

from .forest import FittedForest, ForestParams, RegressionTree, fit_tree, forest_fit
from .lasso import LassoFit, fit_lasso, lambda_max, soft_threshold, standardize
from .feedback import (
    ForestFeedback,
    IdentifiabilityReport,
    LassoFeedback,
    SetDependentBernoulli,
    bernoulli_evaluate,
    forest_evaluate,
    lasso_evaluate,
    validate_strong_identifiability,
)
from .datagen import (
    PRESETS,
    SETUPS,
    BatchPlan,
    Dataset,
    ForestMeanFunction,
    friedman_mean,
    gen_forest,
    gen_friedman,
    gen_liang,
    gen_linear,
    generate,
    liang_mean,
    linear_mean,
    make_batches,
)
from .storage import ArtifactStore, read_dataset, read_trajectory, write_dataset

__all__ = [
    "FittedForest",
    "ForestParams",
    "RegressionTree",
    "fit_tree",
    "forest_fit",
    "LassoFit",
    "fit_lasso",
    "lambda_max",
    "soft_threshold",
    "standardize",
    "ForestFeedback",
    "IdentifiabilityReport",
    "LassoFeedback",
    "SetDependentBernoulli",
    "bernoulli_evaluate",
    "forest_evaluate",
    "lasso_evaluate",
    "validate_strong_identifiability",
    "PRESETS",
    "SETUPS",
    "BatchPlan",
    "Dataset",
    "ForestMeanFunction",
    "friedman_mean",
    "gen_forest",
    "gen_friedman",
    "gen_liang",
    "gen_linear",
    "generate",
    "liang_mean",
    "linear_mean",
    "make_batches",
    "ArtifactStore",
    "read_dataset",
    "read_trajectory",
    "write_dataset",
]
