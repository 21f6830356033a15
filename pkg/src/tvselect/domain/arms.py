"""
Domain Services: the combinatorial bandit core.

Thompson draws from the per-arm Beta posteriors, the global reward calculus,
the two computational oracles and the posterior update. Everything here is a
pure function of its inputs (and of the rng state for draws).
"""

from typing import Callable, Sequence

import numpy as np

from .models import (
    BanditState,
    CostLike,
    CostParams,
    RewardVector,
    ParameterError,
    SuperArm,
    cost_logs,
    cost_vectors,
)


def sample_theta(state: BanditState, rng: np.random.Generator) -> np.ndarray:
    """
    Draw theta_i ~ Beta(a_i, b_i) independently for every arm.

    Each Beta variate is a ratio of two Gamma variates (numpy's standard_gamma
    is the Marsaglia-Tsang sampler, boosted for shapes below one).
    """
    g_a = rng.standard_gamma(state.a)
    g_b = rng.standard_gamma(state.b)
    total = g_a + g_b
    # both gammas can underflow to zero for tiny shapes
    degenerate = total == 0.0
    if np.any(degenerate):
        total = np.where(degenerate, 1.0, total)
        return np.where(degenerate, state.a / (state.a + state.b), g_a / total)
    return g_a / total


def oracle_unconstrained(theta: np.ndarray, cost: CostLike) -> SuperArm:
    """Arms whose draw reaches the cost threshold (inclusive)."""
    theta = np.asarray(theta, dtype=float)
    threshold, _, _ = cost_vectors(cost, theta.shape[0])
    return SuperArm.from_mask(theta >= threshold)


def oracle_constrained(theta: np.ndarray, cost: CostLike, q_star: int) -> SuperArm:
    """
    Up to the top q_star arms that pass the threshold.

    Arms are ranked by their contribution to the expected reward, which orders
    them by theta under a shared cost; ties go to the lower index.
    """
    if q_star < 1:
        raise ParameterError(f"q_star must be at least 1, got {q_star}")
    theta = np.asarray(theta, dtype=float)
    p = theta.shape[0]
    threshold, gain, penalty = cost_vectors(cost, p)
    passing = np.flatnonzero(theta >= threshold)
    if passing.size <= q_star:
        return SuperArm(tuple(passing.tolist()))
    contribution = theta[passing] * gain[passing] - penalty[passing]
    order = np.lexsort((passing, -theta[passing], -contribution))
    return SuperArm(tuple(passing[order[:q_star]].tolist()))


def choose_single_arm(state: BanditState, rng: np.random.Generator) -> int:
    """Classic single-play Thompson sampling: the arm with the largest draw."""
    if state.p == 0:
        raise ParameterError("Cannot choose an arm from an empty bandit")
    return int(np.argmax(sample_theta(state, rng)))


def global_reward(subset: SuperArm, rewards: RewardVector, cost: CostLike) -> float:
    """R_C(S) = sum over played arms of log(C + gamma_i)."""
    rewards.check_matches(subset)
    if not len(subset):
        return 0.0
    log_hit, log_miss = cost_logs(cost, subset.members)
    bits = rewards.as_array().astype(bool)
    return float(np.sum(np.where(bits, log_hit, log_miss)))


def expected_reward(subset: SuperArm, theta: np.ndarray, cost: CostLike) -> float:
    """r_C(S) = sum over S of theta_i * log((C+1)/C) - log(1/C)."""
    if not len(subset):
        return 0.0
    theta = np.asarray(theta, dtype=float)
    _, gain, penalty = cost_vectors(cost, theta.shape[0])
    idx = subset.validate(theta.shape[0]).as_array()
    return float(np.sum(theta[idx] * gain[idx] - penalty[idx]))


def expected_reward_setdep(
    subset: SuperArm,
    theta_fn: Callable[[int, SuperArm], float],
    cost: CostLike,
) -> float:
    """Expected reward with set-dependent mean rewards theta_i(S)."""
    if not len(subset):
        return 0.0
    size = subset.members[-1] + 1 if isinstance(cost, CostParams) else len(cost)
    _, gain, penalty = cost_vectors(cost, size)
    theta = np.array([theta_fn(i, subset) for i in subset.members])
    idx = subset.as_array()
    return float(np.sum(theta * gain[idx] - penalty[idx]))


def update(state: BanditState, subset: SuperArm, rewards: RewardVector) -> BanditState:
    """Semi-bandit update: a_i += 1 on a hit, b_i += 1 on a miss, for played arms only."""
    rewards.check_matches(subset)
    subset.validate(state.p)
    a = state.a.copy()
    b = state.b.copy()
    pulls = state.pulls.copy()
    if len(subset):
        idx = subset.as_array()
        bits = rewards.as_array()
        a[idx] += bits
        b[idx] += 1 - bits
        pulls[idx] += 1
    return BanditState(
        a=a,
        b=b,
        a0=state.a0,
        b0=state.b0,
        pulls=pulls,
        iteration=state.iteration + 1,
        cost=state.cost,
    )


def inclusion_probabilities(state: BanditState) -> np.ndarray:
    """pi_i(t) = a_i / (a_i + b_i), the Beta posterior means."""
    return state.a / (state.a + state.b)


def check_conservation(state: BanditState) -> Sequence[int]:
    """Arms whose counts violate a + b = a0 + b0 + pulls (empty when consistent)."""
    drift = np.abs(state.a + state.b - state.a0 - state.b0 - state.pulls)
    return np.flatnonzero(drift > 1e-9).tolist()
