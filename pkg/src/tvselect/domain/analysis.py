"""
Regret accounting, regret-bound evaluators and selection metrics.

Bound evaluators are diagnostics: the constants in the published bounds are
existential, so callers pass them explicitly and nothing here asserts that an
empirical regret curve sits below a bound.
"""

import itertools
import logging
import math
from dataclasses import dataclass
from typing import Callable, Mapping, Optional, Union

import numpy as np
from scipy import special, stats

from .arms import expected_reward, expected_reward_setdep, oracle_constrained, oracle_unconstrained
from .models import CostLike, CostParams, ParameterError, SuperArm

logger = logging.getLogger(__name__)

ThetaLike = Union[np.ndarray, Callable[[int, SuperArm], float]]

EXHAUSTIVE_LIMIT = 20


def _reward(subset: SuperArm, theta: ThetaLike, cost: CostLike) -> float:
    if callable(theta):
        return expected_reward_setdep(subset, theta, cost)
    return expected_reward(subset, theta, cost)


@dataclass(frozen=True, eq=False)
class RegretLedger:
    """Per-step and cumulative regret of one run against the optimal super-arm."""

    per_step: np.ndarray
    cumulative: np.ndarray
    delta_max: float
    optimal: SuperArm

    @property
    def horizon(self) -> int:
        return int(self.per_step.shape[0])

    def at(self, t: int) -> float:
        """Reg(t): regret accumulated over the first t iterations."""
        if t <= 0:
            return 0.0
        return float(self.cumulative[t - 1])


@dataclass(frozen=True)
class SelectionMetrics:
    fdp: float
    power: float
    hamming: int
    false_positives: int
    false_negatives: int


def per_step_regret(
    optimal: SuperArm, played: SuperArm, theta: ThetaLike, cost: CostLike
) -> float:
    """r(S*) - r(S_t) under known mean rewards (vector or set-dependent function)."""
    return _reward(optimal, theta, cost) - _reward(played, theta, cost)


def per_step_regret_dform(
    optimal: SuperArm, played: SuperArm, theta: np.ndarray, cost: CostParams
) -> float:
    """
    Regret of independent arms written as D * sum (2 theta_i - 1) over the
    symmetric difference, D = log(1 + C). Exact only at the golden cost,
    where log(1/C) = log(1 + C).
    """
    theta = np.asarray(theta, dtype=float)
    d = math.log(1.0 + cost.C)
    missed = (optimal - played).as_array()
    extra = (played - optimal).as_array()
    return d * (float(np.sum(2.0 * theta[missed] - 1.0)) - float(np.sum(2.0 * theta[extra] - 1.0)))


def find_optimal_superarm(
    theta: ThetaLike, p: int, cost: CostLike, q_star: Optional[int] = None
) -> SuperArm:
    """
    argmax of the expected reward over all subsets (of size <= q_star).

    Independent mean rewards are solved by the closed-form oracle; set-dependent
    ones by exhaustive enumeration, which is limited to p <= 20.
    """
    if not callable(theta):
        if q_star is None:
            return oracle_unconstrained(theta, cost)
        return oracle_constrained(theta, cost, q_star)
    if p > EXHAUSTIVE_LIMIT:
        raise ParameterError(
            f"Exhaustive search needs p <= {EXHAUSTIVE_LIMIT}, got {p}; declare S* instead"
        )
    max_size = p if q_star is None else min(q_star, p)
    best, best_value = SuperArm(), 0.0
    for size in range(1, max_size + 1):
        for members in itertools.combinations(range(p), size):
            subset = SuperArm(members)
            value = expected_reward_setdep(subset, theta, cost)
            if value > best_value:
                best, best_value = subset, value
    return best


def delta_max(optimal: SuperArm, theta: ThetaLike, cost: CostLike) -> float:
    """Largest reward gap, read as the gap to the empty model: r(S*) - r({}) = r(S*)."""
    return _reward(optimal, theta, cost)


def build_ledger(per_step, optimal: SuperArm, max_gap: float) -> RegretLedger:
    per_step = np.asarray(per_step, dtype=float)
    return RegretLedger(
        per_step=per_step,
        cumulative=np.cumsum(per_step),
        delta_max=float(max_gap),
        optimal=optimal,
    )


def log_fit_r2(cumulative, start_fraction: float = 0.1) -> float:
    """R^2 of the least-squares fit Reg(t) ~ a + b log t over t in [start_fraction*T, T]."""
    cumulative = np.asarray(cumulative, dtype=float)
    horizon = cumulative.shape[0]
    t = np.arange(1, horizon + 1)
    window = t >= max(1, int(math.ceil(start_fraction * horizon)))
    if np.count_nonzero(window) < 3:
        raise ParameterError("Need at least three iterations in the fitting window")
    fit = stats.linregress(np.log(t[window]), cumulative[window])
    return float(fit.rvalue**2)


def identifiability_gaps(theta: np.ndarray, optimal: SuperArm) -> dict:
    """Delta_i = min{theta_j : theta_j > theta_i, j in S*} for every arm i outside S*."""
    theta = np.asarray(theta, dtype=float)
    signal = theta[optimal.as_array()] if len(optimal) else np.array([])
    gaps = {}
    for i in range(theta.shape[0]):
        if i in optimal:
            continue
        above = signal[signal > theta[i]]
        if above.size:
            gaps[i] = float(above.min())
    return gaps


def bound_lemma2(
    deltas: Mapping[int, float],
    horizon: float,
    epsilon: float,
    const_C: float,
    p: int,
) -> float:
    """Regret bound for the size-constrained oracle with known q*."""
    if epsilon <= 0:
        raise ParameterError(f"epsilon must be positive, got {epsilon}")
    log_t = math.log(horizon)
    total = 0.0
    for arm, delta in deltas.items():
        if delta <= 2.0 * epsilon:
            raise ParameterError(
                f"Arm {arm}: gap {delta} must exceed 2*epsilon = {2.0 * epsilon}"
            )
        total += (delta - epsilon) * log_t / (delta - 2.0 * epsilon) ** 2
    return total + const_C * p / epsilon**4 + p**2


def bound_lemma3(
    delta_s: Mapping[SuperArm, float],
    q_star: int,
    epsilon: float,
    cost: CostParams,
    const_C: float,
    horizon: float,
    max_gap: float,
    p: int,
) -> float:
    """Regret bound for independent arms and unknown q*."""
    if epsilon <= 0:
        raise ParameterError(f"epsilon must be positive, got {epsilon}")
    B = cost.gain
    margin = 2.0 * B * (q_star**2 + 2) * epsilon
    eta = np.zeros(p)
    for subset, gap in delta_s.items():
        if gap <= margin:
            raise ParameterError(
                f"Subset {list(subset.members)}: gap {gap} must exceed {margin}"
            )
        value = 8.0 * B**2 * len(subset) / (gap - margin)
        for i in subset:
            eta[i] = max(eta[i], value)
    return (
        math.log(horizon) * float(eta.sum())
        + p * (p**2 / epsilon**2 + 3.0) * max_gap
        + const_C
        * (8.0 * max_gap / epsilon**2)
        * (4.0 / epsilon**2 + 1.0) ** q_star
        * math.log(q_star / epsilon**2)
    )


def theorem1_constant(alpha: float, C1: float, C2: float) -> float:
    """c(alpha) of the correlated-arms regret bound."""
    c_tilde = C1 + C2 * (1.0 - 2.0 * alpha) / (32.0 * alpha)
    return (
        c_tilde * math.exp(-4.0 * alpha) / (1.0 - math.exp(-(alpha**2) / 2.0))
        + (8.0 / alpha**2) / (math.exp(2.0 * alpha) - 1.0)
        + math.exp(-1.0) / (1.0 - math.exp(-alpha / 8.0))
        + math.ceil(8.0 / alpha) * (3.0 + 1.0 / alpha)
    )


def bound_theorem1(
    alpha: float,
    p: int,
    q_star: int,
    horizon: float,
    max_gap: float,
    C1: float,
    C2: float,
) -> float:
    """Regret bound for strongly identifiable set-dependent arms."""
    if not (0.0 < alpha < 0.5):
        raise ParameterError(f"alpha must lie in (0, 1/2), got {alpha}")
    if C1 <= 0 or C2 <= 0:
        raise ParameterError("C1 and C2 must be positive")
    return max_gap * (
        8.0 * p * math.log(horizon) / alpha**2
        + theorem1_constant(alpha, C1, C2) * q_star
        + (2.0 + 4.0 / alpha**2) * p
    )


def kl_divergence(a: float, b: float) -> float:
    """Bernoulli Kullback-Leibler divergence d(a, b), with 0 log 0 = 0."""
    return float(special.rel_entr(a, b) + special.rel_entr(1.0 - a, 1.0 - b))


def selection_metrics(selected: SuperArm, truth: SuperArm, p: int) -> SelectionMetrics:
    """False discovery proportion, power and Hamming distance of a selected model."""
    selected.validate(p)
    truth.validate(p)
    false_positives = len(selected - truth)
    false_negatives = len(truth - selected)
    hits = len(selected & truth)
    return SelectionMetrics(
        fdp=false_positives / max(len(selected), 1),
        power=hits / len(truth) if len(truth) else 1.0,
        hamming=false_positives + false_negatives,
        false_positives=false_positives,
        false_negatives=false_negatives,
    )


def regret_doubling(cumulative, t: int) -> tuple:
    """(Reg(2t) - Reg(t), Reg(t)); sublinear growth keeps the first below the second."""
    cumulative = np.asarray(cumulative, dtype=float)
    if t < 1 or 2 * t > cumulative.shape[0]:
        raise ParameterError(f"Need 1 <= t and 2t <= {cumulative.shape[0]}, got t={t}")
    base = float(cumulative[t - 1])
    return float(cumulative[2 * t - 1]) - base, base
