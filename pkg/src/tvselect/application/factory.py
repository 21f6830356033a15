"""
Builds the run ingredients from a validated RunConfig: random streams, the
dataset, the cost structure and the feedback rule.

Each ingredient draws from its own stream derived from the master seed, so
the dataset does not depend on the feedback rule and the batch plan does not
depend on the bandit draws.
"""

import hashlib
import logging
from dataclasses import dataclass
from typing import Optional

import numpy as np

from ..domain.models import CostLike, CostParams, ParameterError, SuperArm
from ..domain.ports import FeedbackRule
from ..infrastructure.datagen import Dataset, generate
from ..infrastructure.feedback import ForestFeedback, LassoFeedback, SetDependentBernoulli
from ..infrastructure.forest import ForestParams
from ..infrastructure.storage import read_dataset
from .schemas import DataSetup, FeedbackKind, ForestSpec, RunConfig, RunMode

logger = logging.getLogger(__name__)

DEFAULT_ARMS = 20


def derive_seed(master: int, *labels) -> int:
    """Child seed from sha256(master, labels); stable across processes and platforms."""
    hasher = hashlib.sha256()
    hasher.update(str(int(master)).encode("utf-8"))
    for label in labels:
        hasher.update(b"/")
        hasher.update(str(label).encode("utf-8"))
    return int.from_bytes(hasher.digest()[:8], "big")


def stream(master: int, *labels) -> np.random.Generator:
    return np.random.default_rng(derive_seed(master, *labels))


def forest_params(spec: ForestSpec, mode: RunMode) -> ForestParams:
    """Forest settings for a run; unset fields take the preset of the run mode."""
    return ForestParams.for_mode(
        mode.value,
        num_trees=spec.num_trees,
        max_depth=spec.max_depth,
        min_leaf=spec.min_leaf,
        mtry=spec.mtry,
        split_candidates=spec.split_candidates,
        bootstrap=spec.bootstrap,
        importance_threshold=spec.importance_threshold,
        min_gain=spec.min_gain,
        backfit=spec.backfit,
    )


def build_dataset(config: RunConfig) -> Optional[Dataset]:
    """The dataset named by `data`, or None for pure synthetic arms."""
    spec = config.data
    if spec.setup == DataSetup.ARMS:
        return None
    if spec.setup == DataSetup.FILE:
        data = read_dataset(spec.path)
        logger.info(f"Loaded {data.setup_tag} dataset {data.n}x{data.p} from {spec.path}")
        return data
    return generate(
        spec.setup.value,
        stream(config.seed, "data"),
        n=spec.n,
        p=spec.p,
        sigma2=spec.sigma2,
        correlated=spec.correlated,
        num_gen_trees=spec.num_gen_trees,
    )


def num_arms(config: RunConfig, data: Optional[Dataset]) -> int:
    if data is not None:
        return data.p
    return config.data.p or DEFAULT_ARMS


def build_cost(config: RunConfig, p: int) -> CostLike:
    if config.arm_costs is None:
        return CostParams(config.cost)
    if len(config.arm_costs) != p:
        raise ParameterError(f"arm_costs lists {len(config.arm_costs)} costs for p={p} arms")
    return tuple(CostParams(c) for c in config.arm_costs)


def build_arms(config: RunConfig, p: int) -> SetDependentBernoulli:
    """Synthetic Bernoulli arms; the first num_signals arms are the signals."""
    spec = config.data.arms
    if spec.num_signals > p:
        raise ParameterError(f"num_signals={spec.num_signals} exceeds p={p}")
    signals = SuperArm(tuple(range(spec.num_signals)))
    if spec.margin is not None:
        return SetDependentBernoulli.strongly_identifiable(
            p,
            signals,
            spec.margin,
            stream(config.seed, "instance"),
            interaction_scale=spec.interaction_scale,
        )
    base = np.where(signals.mask(p), spec.signal_theta, spec.noise_theta)
    return SetDependentBernoulli(base)


def build_rule(config: RunConfig, p: int) -> FeedbackRule:
    kind = config.feedback.kind
    if kind == FeedbackKind.BERNOULLI:
        return build_arms(config, p)
    if kind == FeedbackKind.FOREST:
        return ForestFeedback(forest_params(config.feedback.forest, config.mode), mode=config.mode.value)
    return LassoFeedback(config.feedback.lasso.lam, bootstrap=config.feedback.lasso.bootstrap)


def true_support(config: RunConfig, data: Optional[Dataset]) -> SuperArm:
    if data is not None and config.feedback.kind != FeedbackKind.BERNOULLI:
        return data.true_support
    return SuperArm(tuple(range(config.data.arms.num_signals)))


@dataclass(frozen=True, eq=False)
class RunPlan:
    """Everything a run needs besides the bandit stream."""

    config: RunConfig
    data: Optional[Dataset]
    rule: FeedbackRule
    cost: CostLike
    p: int
    truth: SuperArm


def plan_run(config: RunConfig) -> RunPlan:
    data = build_dataset(config)
    p = num_arms(config, data)
    return RunPlan(
        config=config,
        data=data,
        rule=build_rule(config, p),
        cost=build_cost(config, p),
        p=p,
        truth=true_support(config, data),
    )
