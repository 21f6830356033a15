"""
Infrastructure Layer: Feedback rule adapters.

These adapters implement the FeedbackRule port: synthetic Bernoulli arms with
optional set-dependent means, randomized-forest split indicators and lasso
support indicators. Rules are immutable after construction; all randomness
comes from the generator passed to `evaluate`.
"""

import logging
from dataclasses import dataclass
from typing import Optional, Union

import numpy as np

from ..domain.analysis import find_optimal_superarm
from ..domain.models import (
    CostLike,
    DataContext,
    ParameterError,
    RewardVector,
    StructuralError,
    SuperArm,
    cost_vectors,
)
from ..domain.ports import FeedbackRule
from .forest import ForestParams, forest_fit
from .lasso import fit_lasso, standardize

logger = logging.getLogger(__name__)

EXHAUSTIVE_ARMS = 20
ENUMERATION_CHUNK = 1 << 15


class SetDependentBernoulli(FeedbackRule):
    """
    Synthetic arms with mean rewards theta_i(S) = clamp(base_i + sum_{j in S, j != i} W_ij).

    Without an interaction matrix this is the independent Bernoulli bandit.
    Clamp bounds are per arm and default to [0, 1].
    """

    def __init__(
        self,
        base,
        interaction: Optional[np.ndarray] = None,
        lo: Optional[np.ndarray] = None,
        hi: Optional[np.ndarray] = None,
    ):
        base = np.asarray(base, dtype=float)
        if base.ndim != 1 or np.any(base < 0) or np.any(base > 1):
            raise ParameterError("Base mean rewards must be a vector in [0, 1]")
        p = base.shape[0]
        if interaction is not None:
            interaction = np.asarray(interaction, dtype=float)
            if interaction.shape != (p, p):
                raise StructuralError(f"Interaction matrix must be {p}x{p}, got {interaction.shape}")
            if not np.allclose(interaction, interaction.T) or np.any(np.diag(interaction) != 0):
                raise ParameterError("Interaction matrix must be symmetric with a zero diagonal")
        self.base = base
        self.interaction = interaction
        self.lo = np.zeros(p) if lo is None else np.asarray(lo, dtype=float)
        self.hi = np.ones(p) if hi is None else np.asarray(hi, dtype=float)
        if np.any(self.lo < 0) or np.any(self.hi > 1) or np.any(self.lo > self.hi):
            raise ParameterError("Clamp bounds must satisfy 0 <= lo <= hi <= 1")

    @classmethod
    def strongly_identifiable(
        cls,
        p: int,
        signals: SuperArm,
        margin: float,
        rng: np.random.Generator,
        interaction_scale: Optional[float] = None,
        slack: float = 0.01,
    ) -> "SetDependentBernoulli":
        """
        Random instance whose signal arms stay above 0.5 + margin and whose noise
        arms stay below 0.5 - margin for every played subset.

        With the default interaction scale margin / (2 (p - 1)) no single arm can
        shift the others' rewards enough to outweigh its own contribution, so the
        optimal super-arm under the golden cost is exactly `signals`.
        """
        if not (0 < margin and margin + slack < 0.5):
            raise ParameterError(f"margin must lie in (0, {0.5 - slack}), got {margin}")
        signals.validate(p)
        if interaction_scale is None:
            interaction_scale = margin / (2.0 * max(p - 1, 1))
        is_signal = signals.mask(p)
        lo = np.where(is_signal, 0.5 + margin + slack, 0.0)
        hi = np.where(is_signal, 1.0, 0.5 - margin - slack)
        base = rng.uniform(lo, hi)
        upper = np.triu(rng.uniform(-interaction_scale, interaction_scale, size=(p, p)), k=1)
        return cls(base, interaction=upper + upper.T, lo=lo, hi=hi)

    @property
    def p(self) -> int:
        return int(self.base.shape[0])

    @property
    def requires_data(self) -> bool:
        return False

    def mean_rewards(self, subset: SuperArm) -> np.ndarray:
        """theta_i(S) for every i in S, in subset order."""
        idx = subset.validate(self.p).as_array()
        theta = self.base[idx]
        if self.interaction is not None and idx.size:
            theta = theta + self.interaction[np.ix_(idx, idx)].sum(axis=1)
        return np.clip(theta, self.lo[idx], self.hi[idx])

    def mean_reward(self, arm: int, subset: SuperArm) -> float:
        theta = self.base[arm]
        if self.interaction is not None:
            others = [j for j in subset.members if j != arm]
            theta += float(self.interaction[arm, others].sum())
        return float(np.clip(theta, self.lo[arm], self.hi[arm]))

    def expected_reward(self, subset: SuperArm, cost: CostLike) -> float:
        if not len(subset):
            return 0.0
        _, gain, penalty = cost_vectors(cost, self.p)
        idx = subset.as_array()
        return float(np.sum(self.mean_rewards(subset) * gain[idx] - penalty[idx]))

    def optimal_superarm(self, cost: CostLike, q_star: Optional[int] = None) -> SuperArm:
        """S* by the closed-form oracle (independent arms) or exhaustive search."""
        if self.interaction is None:
            return find_optimal_superarm(np.clip(self.base, self.lo, self.hi), self.p, cost, q_star)
        return find_optimal_superarm(self.mean_reward, self.p, cost, q_star)

    def evaluate(
        self,
        subset: SuperArm,
        data: Optional[DataContext],
        rng: np.random.Generator,
    ) -> RewardVector:
        theta = self.mean_rewards(subset)
        return RewardVector.for_subset(subset, rng.random(theta.shape[0]) < theta)


def bernoulli_evaluate(
    rule: SetDependentBernoulli, subset: SuperArm, rng: np.random.Generator
) -> RewardVector:
    return rule.evaluate(subset, None, rng)


@dataclass(frozen=True)
class IdentifiabilityReport:
    passed: bool
    alpha: float
    worst_margin: float
    worst_arm: int
    worst_subset: SuperArm
    subsets_checked: int
    exhaustive: bool


def _subset_bits(codes: np.ndarray, width: int) -> np.ndarray:
    return (codes[:, None] >> np.arange(width)) & 1


def validate_strong_identifiability(
    rule: SetDependentBernoulli,
    signal_set: SuperArm,
    alpha: float,
    rng: Optional[np.random.Generator] = None,
    budget: int = 4096,
) -> IdentifiabilityReport:
    """
    Check theta_i(S) > 0.5 + alpha for signal arms and < 0.5 - alpha for noise
    arms over every subset containing the arm (sampled subsets when p > 20).

    The margin of a signal arm is min_S theta_i(S) - 0.5, of a noise arm
    0.5 - max_S theta_i(S); the report carries the worst one.
    """
    p = rule.p
    signal_set.validate(p)
    exhaustive = p <= EXHAUSTIVE_ARMS
    if not exhaustive and rng is None:
        raise ParameterError(f"p={p} exceeds {EXHAUSTIVE_ARMS}; a generator is needed to sample subsets")

    worst_margin, worst_arm, worst_subset, checked = np.inf, -1, SuperArm(), 0
    for arm in range(p):
        others = np.delete(np.arange(p), arm)
        weights = rule.interaction[arm, others] if rule.interaction is not None else np.zeros(p - 1)
        is_signal = arm in signal_set
        if exhaustive:
            total = 1 << (p - 1)
            blocks = (
                _subset_bits(np.arange(start, min(start + ENUMERATION_CHUNK, total)), p - 1)
                for start in range(0, total, ENUMERATION_CHUNK)
            )
        else:
            blocks = iter([rng.integers(0, 2, size=(budget, p - 1))])
        for bits in blocks:
            theta = np.clip(rule.base[arm] + bits @ weights, rule.lo[arm], rule.hi[arm])
            margins = theta - 0.5 if is_signal else 0.5 - theta
            pos = int(np.argmin(margins))
            checked += bits.shape[0]
            if margins[pos] < worst_margin:
                worst_margin = float(margins[pos])
                worst_arm = arm
                worst_subset = SuperArm(tuple(others[bits[pos] == 1].tolist()) + (arm,))

    passed = bool(worst_margin > alpha)
    if not passed:
        logger.info(f"Strong identifiability fails at alpha={alpha}: arm {worst_arm} margin {worst_margin:.4f}")
    return IdentifiabilityReport(
        passed=passed,
        alpha=alpha,
        worst_margin=worst_margin,
        worst_arm=worst_arm,
        worst_subset=worst_subset,
        subsets_checked=checked,
        exhaustive=exhaustive,
    )


class ForestFeedback(FeedbackRule):
    """
    Split indicators of a randomized forest fit on the played variables.

    offline: gamma_i = 1 when variable i is split on at least once;
    online: gamma_i = 1 when its splits per tree reach `importance_threshold`.
    Without explicit params the forest takes the preset of its mode.
    """

    def __init__(self, params: Optional[ForestParams] = None, mode: str = "offline"):
        if mode not in ("offline", "online"):
            raise ParameterError(f"Forest feedback mode must be offline or online, got {mode!r}")
        self.params = params or ForestParams.for_mode(mode)
        self.mode = mode

    def evaluate(
        self,
        subset: SuperArm,
        data: Optional[DataContext],
        rng: np.random.Generator,
    ) -> RewardVector:
        if data is None:
            raise ParameterError("Forest feedback needs a data context")
        if not len(subset):
            return RewardVector()
        forest = forest_fit(data, subset, self.params, rng)
        if self.mode == "offline":
            bits = forest.split_counts >= 1
        else:
            bits = forest.split_counts / forest.num_trees >= self.params.importance_threshold
        return RewardVector.for_subset(subset, bits)


def forest_evaluate(
    subset: SuperArm,
    data: DataContext,
    params: ForestParams,
    rng: np.random.Generator,
    mode: str = "offline",
) -> RewardVector:
    return ForestFeedback(params, mode).evaluate(subset, data, rng)


class LassoFeedback(FeedbackRule):
    """Support indicators of a lasso fit on a bootstrap replicate of the played columns."""

    def __init__(self, lam: Union[float, str] = "auto", bootstrap: bool = True,
                 tol: float = 1e-7, max_sweeps: int = 10_000):
        if lam != "auto" and float(lam) < 0:
            raise ParameterError(f"Lasso penalty must be non-negative or 'auto', got {lam}")
        self.lam = lam
        self.bootstrap = bootstrap
        self.tol = tol
        self.max_sweeps = max_sweeps

    def evaluate(
        self,
        subset: SuperArm,
        data: Optional[DataContext],
        rng: np.random.Generator,
    ) -> RewardVector:
        if data is None:
            raise ParameterError("Lasso feedback needs a data context")
        if not len(subset):
            return RewardVector()
        subset.validate(data.p)
        if data.n < 2:
            raise ParameterError(f"Lasso feedback needs at least 2 rows, got {data.n}")
        rows = rng.integers(0, data.n, size=data.n) if self.bootstrap else np.arange(data.n)
        x, y = standardize(data.x[np.ix_(rows, subset.as_array())], data.y[rows])
        fit = fit_lasso(x, y, self.lam, tol=self.tol, max_sweeps=self.max_sweeps)
        return RewardVector.for_subset(subset, fit.support)


def lasso_evaluate(
    subset: SuperArm,
    data: DataContext,
    lam: Union[float, str],
    rng: np.random.Generator,
    bootstrap: bool = True,
) -> RewardVector:
    return LassoFeedback(lam, bootstrap).evaluate(subset, data, rng)
