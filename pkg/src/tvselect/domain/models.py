"""
Domain layer: value objects for the combinatorial Beta-Bernoulli bandit.

Arms are candidate predictors, super-arms are the variable subsets played at
one iteration, and reward vectors carry the binary relevance feedback for the
played arms only. Value objects validate their invariants on construction.
"""

from dataclasses import dataclass, field, replace
from typing import Iterable, Iterator, Optional, Sequence, Tuple, Union
import math

import numpy as np


GOLDEN_COST = (math.sqrt(5.0) - 1.0) / 2.0


class TVSError(ValueError):
    """Base class for all tvselect errors."""


class ParameterError(TVSError):
    """A parameter is outside its admissible range."""


class StructuralError(TVSError):
    """Index sets of subsets, rewards or arms do not line up."""


@dataclass(frozen=True)
class CostParams:
    """
    Cost C of a false inclusion and the quantities derived from it.

    The threshold is the cut-off of the computational oracle,
    log(1/C) / log((1+C)/C). With the golden cost it equals 0.5 and the
    oracle is the median probability model.
    """

    C: float = GOLDEN_COST
    threshold: float = field(init=False)
    gain: float = field(init=False)
    penalty: float = field(init=False)

    def __post_init__(self):
        if not (0.0 < self.C < 1.0):
            raise ParameterError(f"Cost C must lie in (0, 1), got {self.C}")
        penalty = math.log(1.0 / self.C)
        gain = math.log((self.C + 1.0) / self.C)
        object.__setattr__(self, "penalty", penalty)
        object.__setattr__(self, "gain", gain)
        threshold = penalty / gain
        # the golden cost gives 1/2 analytically; drop the rounding residue
        if abs(threshold - 0.5) < 1e-12:
            threshold = 0.5
        object.__setattr__(self, "threshold", threshold)

    @classmethod
    def golden(cls) -> "CostParams":
        return cls(GOLDEN_COST)


CostLike = Union[CostParams, Sequence[CostParams]]


def cost_vectors(cost: CostLike, p: int) -> Tuple[np.ndarray, np.ndarray, np.ndarray]:
    """Per-arm (threshold, gain, penalty) arrays for a shared or per-arm cost."""
    if isinstance(cost, CostParams):
        return (
            np.full(p, cost.threshold),
            np.full(p, cost.gain),
            np.full(p, cost.penalty),
        )
    costs = list(cost)
    if len(costs) != p:
        raise StructuralError(f"Expected {p} per-arm costs, got {len(costs)}")
    return (
        np.array([c.threshold for c in costs]),
        np.array([c.gain for c in costs]),
        np.array([c.penalty for c in costs]),
    )


def cost_logs(cost: CostLike, members: Sequence[int]) -> Tuple[np.ndarray, np.ndarray]:
    """log(C_i + 1) and log(C_i) for the given arms."""
    if isinstance(cost, CostParams):
        k = len(members)
        return np.full(k, math.log(cost.C + 1.0)), np.full(k, math.log(cost.C))
    costs = [cost[i] for i in members]
    return (
        np.array([math.log(c.C + 1.0) for c in costs]),
        np.array([math.log(c.C) for c in costs]),
    )


@dataclass(frozen=True)
class SuperArm:
    """A sorted set of distinct arm indices played together (a candidate model)."""

    members: Tuple[int, ...] = ()

    def __post_init__(self):
        members = tuple(sorted(int(i) for i in self.members))
        if len(set(members)) != len(members):
            raise StructuralError(f"Super-arm has duplicate indices: {members}")
        if members and members[0] < 0:
            raise StructuralError(f"Super-arm has a negative index: {members[0]}")
        object.__setattr__(self, "members", members)

    @classmethod
    def of(cls, indices: Iterable[int]) -> "SuperArm":
        return cls(tuple(indices))

    @classmethod
    def from_mask(cls, mask: np.ndarray) -> "SuperArm":
        return cls(tuple(np.flatnonzero(mask).tolist()))

    def validate(self, p: int) -> "SuperArm":
        if self.members and self.members[-1] >= p:
            raise StructuralError(
                f"Super-arm index {self.members[-1]} out of range for p={p}"
            )
        return self

    def as_array(self) -> np.ndarray:
        return np.array(self.members, dtype=np.intp)

    def mask(self, p: int) -> np.ndarray:
        out = np.zeros(p, dtype=bool)
        out[self.as_array()] = True
        return out

    def __contains__(self, index: object) -> bool:
        return index in self.members

    def __iter__(self) -> Iterator[int]:
        return iter(self.members)

    def __len__(self) -> int:
        return len(self.members)

    def __or__(self, other: "SuperArm") -> "SuperArm":
        return SuperArm(tuple(set(self.members) | set(other.members)))

    def __and__(self, other: "SuperArm") -> "SuperArm":
        return SuperArm(tuple(set(self.members) & set(other.members)))

    def __sub__(self, other: "SuperArm") -> "SuperArm":
        return SuperArm(tuple(set(self.members) - set(other.members)))


@dataclass(frozen=True)
class RewardVector:
    """Binary rewards for the arms of one played super-arm."""

    members: Tuple[int, ...] = ()
    bits: Tuple[int, ...] = ()

    def __post_init__(self):
        if len(self.members) != len(self.bits):
            raise StructuralError(
                f"Reward vector has {len(self.members)} arms but {len(self.bits)} bits"
            )
        pairs = sorted(zip((int(i) for i in self.members), (int(b) for b in self.bits)))
        if any(b not in (0, 1) for _, b in pairs):
            raise StructuralError("Rewards must be 0 or 1")
        object.__setattr__(self, "members", tuple(i for i, _ in pairs))
        object.__setattr__(self, "bits", tuple(b for _, b in pairs))
        if len(set(self.members)) != len(self.members):
            raise StructuralError("Reward vector has duplicate arm indices")

    @classmethod
    def for_subset(cls, subset: SuperArm, bits: Iterable[int]) -> "RewardVector":
        return cls(subset.members, tuple(int(b) for b in bits))

    def check_matches(self, subset: SuperArm) -> None:
        if self.members != subset.members:
            raise StructuralError(
                f"Rewards indexed by {list(self.members)} but played {list(subset.members)}"
            )

    def as_array(self) -> np.ndarray:
        return np.array(self.bits, dtype=np.int8)

    def __getitem__(self, arm: int) -> int:
        """Reward of arm `arm` (an arm index, not a position)."""
        try:
            return self.bits[self.members.index(arm)]
        except ValueError:
            raise KeyError(arm) from None

    def __len__(self) -> int:
        return len(self.members)


@dataclass(frozen=True)
class ArmState:
    """Beta posterior of a single arm."""

    a: float
    b: float
    a0: float = 1.0
    b0: float = 1.0
    pulls: int = 0

    def __post_init__(self):
        if self.a0 <= 0 or self.b0 <= 0:
            raise ParameterError(f"Prior counts must be positive, got ({self.a0}, {self.b0})")
        if self.a < self.a0 or self.b < self.b0:
            raise ParameterError("Posterior counts fell below the prior")

    @property
    def successes(self) -> int:
        return int(round(self.a - self.a0))

    @property
    def mean(self) -> float:
        return self.a / (self.a + self.b)

    @property
    def empirical_mean(self) -> Optional[float]:
        return self.successes / self.pulls if self.pulls else None

    def record(self, reward: int) -> "ArmState":
        """Count one pull without mutation."""
        if reward:
            return replace(self, a=self.a + 1.0, pulls=self.pulls + 1)
        return replace(self, b=self.b + 1.0, pulls=self.pulls + 1)


@dataclass(frozen=True, eq=False)
class BanditState:
    """
    Vector state of the bandit: Beta counts for p arms plus the iteration.

    Counts are held as arrays so that a Thompson draw over thousands of arms
    is a single vectorised call; `arms` exposes per-arm ArmState views.
    Operations return new states.
    """

    a: np.ndarray
    b: np.ndarray
    a0: np.ndarray
    b0: np.ndarray
    pulls: np.ndarray
    iteration: int = 0
    cost: CostLike = field(default_factory=CostParams.golden)

    @classmethod
    def initial(
        cls,
        p: int,
        a0: Union[float, Sequence[float]] = 1.0,
        b0: Union[float, Sequence[float]] = 1.0,
        cost: Optional[CostLike] = None,
    ) -> "BanditState":
        if p < 0:
            raise ParameterError(f"Number of arms must be non-negative, got {p}")
        a0_arr = np.broadcast_to(np.asarray(a0, dtype=float), (p,)).copy()
        b0_arr = np.broadcast_to(np.asarray(b0, dtype=float), (p,)).copy()
        if np.any(a0_arr <= 0) or np.any(b0_arr <= 0):
            raise ParameterError("Prior counts a0, b0 must be positive")
        if cost is not None and not isinstance(cost, CostParams):
            cost = tuple(cost)
            cost_vectors(cost, p)
        return cls(
            a=a0_arr.copy(),
            b=b0_arr.copy(),
            a0=a0_arr,
            b0=b0_arr,
            pulls=np.zeros(p, dtype=np.int64),
            iteration=0,
            cost=cost if cost is not None else CostParams.golden(),
        )

    @property
    def p(self) -> int:
        return int(self.a.shape[0])

    @property
    def arms(self) -> Tuple[ArmState, ...]:
        return tuple(
            ArmState(float(a), float(b), float(a0), float(b0), int(n))
            for a, b, a0, b0, n in zip(self.a, self.b, self.a0, self.b0, self.pulls)
        )

    def successes(self) -> np.ndarray:
        return np.rint(self.a - self.a0).astype(np.int64)


@dataclass(frozen=True, eq=False)
class DataContext:
    """Design matrix and response handed to a feedback rule (full data or a batch)."""

    x: np.ndarray
    y: np.ndarray

    def __post_init__(self):
        if self.x.ndim != 2 or self.y.ndim != 1 or self.x.shape[0] != self.y.shape[0]:
            raise StructuralError(
                f"Inconsistent data shapes x={self.x.shape}, y={self.y.shape}"
            )

    @property
    def n(self) -> int:
        return int(self.x.shape[0])

    @property
    def p(self) -> int:
        return int(self.x.shape[1])
