"""
Ports (Interface Abstractions) for feedback rules.

A feedback rule maps a played super-arm and data to binary relevance rewards
r(S_t, D) in {0,1}^|S_t|. The engine depends only on this contract, so learners
(forests, lasso, synthetic Bernoulli arms) are interchangeable adapters.
"""

from abc import ABC, abstractmethod
from typing import Optional

import numpy as np

from .models import CostLike, DataContext, RewardVector, SuperArm


class FeedbackRule(ABC):
    """Port for a relevance feedback rule."""

    @abstractmethod
    def evaluate(
        self,
        subset: SuperArm,
        data: Optional[DataContext],
        rng: np.random.Generator,
    ) -> RewardVector:
        """Return rewards indexed exactly by `subset`; deterministic given rng state."""
        pass

    @property
    def requires_data(self) -> bool:
        """Whether the rule reads the data context."""
        return True

    def expected_reward(self, subset: SuperArm, cost: CostLike) -> Optional[float]:
        """Expected global reward of `subset` when mean rewards are known."""
        return None

    def optimal_superarm(self, cost: CostLike, q_star: Optional[int] = None) -> Optional[SuperArm]:
        """The reward-maximizing super-arm S*, or None when it cannot be computed."""
        return None
