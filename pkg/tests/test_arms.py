"""
Tests for the bandit core: costs, Thompson draws, oracles, reward calculus
and the posterior update.
"""

import math

import numpy as np
import pytest

from tvselect.domain import (
    GOLDEN_COST,
    ArmState,
    BanditState,
    CostParams,
    ParameterError,
    RewardVector,
    StructuralError,
    SuperArm,
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
from tvselect.infrastructure import SetDependentBernoulli

GOLDEN = CostParams.golden()


def all_masks(p):
    codes = np.arange(1 << p)
    return ((codes[:, None] >> np.arange(p)) & 1).astype(bool)


def brute_force_best(contribution, max_size=None):
    masks = all_masks(contribution.shape[0])
    if max_size is not None:
        masks = masks[masks.sum(axis=1) <= max_size]
    return float((masks * contribution).sum(axis=1).max())


class TestCostParams:
    """Threshold, gain and penalty derived from C."""

    def test_golden_cost_is_median_threshold(self):
        assert abs(GOLDEN.threshold - 0.5) < 1e-12
        assert abs(math.log(1 + GOLDEN_COST) + math.log(GOLDEN_COST)) < 1e-12

    def test_threshold_formula(self):
        cost = CostParams(0.9)
        assert cost.threshold == pytest.approx(0.1410042, abs=1e-6)
        assert cost.threshold == pytest.approx(cost.penalty / (cost.penalty + math.log(1.9)))
        assert cost.gain == pytest.approx(math.log(1.9 / 0.9))

    @pytest.mark.parametrize("value", [0.0, 1.0, -0.2, 1.5])
    def test_cost_outside_unit_interval_rejected(self, value):
        with pytest.raises(ParameterError):
            CostParams(value)

    def test_cost_is_immutable(self):
        with pytest.raises(AttributeError):
            GOLDEN.C = 0.5


class TestSuperArm:
    """Subsets are sorted, duplicate-free and range-checked."""

    def test_members_sorted(self):
        assert SuperArm((3, 1, 2)).members == (1, 2, 3)

    def test_duplicates_rejected(self):
        with pytest.raises(StructuralError):
            SuperArm((1, 1))

    def test_out_of_range_index(self):
        with pytest.raises(StructuralError):
            SuperArm((0, 5)).validate(5)

    def test_set_algebra(self):
        a, b = SuperArm((0, 1, 2)), SuperArm((2, 3))
        assert (a | b).members == (0, 1, 2, 3)
        assert (a & b).members == (2,)
        assert (a - b).members == (0, 1)

    def test_mask_roundtrip(self):
        s = SuperArm((0, 3))
        assert SuperArm.from_mask(s.mask(5)) == s


class TestSampleTheta:
    """Independent Beta draws."""

    def test_uniform_prior_mean(self):
        state = BanditState.initial(100_000)
        theta = sample_theta(state, np.random.default_rng(1))
        assert theta.shape == (100_000,)
        assert np.all((theta > 0) & (theta < 1))
        assert abs(theta.mean() - 0.5) < 0.005

    def test_concentrated_posterior(self):
        state = BanditState.initial(10_000, a0=1000.0, b0=1.0)
        theta = sample_theta(state, np.random.default_rng(2))
        assert np.mean(theta > 0.99) >= 0.999
        assert theta.mean() == pytest.approx(1000 / 1001, abs=1e-4)

    def test_reproducible(self):
        state = BanditState.initial(50)
        first = sample_theta(state, np.random.default_rng(7))
        second = sample_theta(state, np.random.default_rng(7))
        np.testing.assert_array_equal(first, second)


class TestOracles:
    """Closed-form oracles against exhaustive search."""

    def test_unconstrained_examples(self):
        assert oracle_unconstrained(np.array([0.9, 0.3]), GOLDEN) == SuperArm((0,))
        assert oracle_unconstrained(np.zeros(4), GOLDEN) == SuperArm()

    def test_threshold_is_inclusive(self):
        assert oracle_unconstrained(np.full(3, 0.5), GOLDEN) == SuperArm((0, 1, 2))

    def test_constrained_examples(self):
        theta = np.array([0.9, 0.8, 0.6, 0.4])
        assert oracle_constrained(theta, GOLDEN, 2) == SuperArm((0, 1))
        assert oracle_constrained(theta, GOLDEN, 10) == SuperArm((0, 1, 2))
        assert oracle_constrained(np.array([0.4, 0.3]), GOLDEN, 2) == SuperArm()

    def test_constrained_ties_go_to_lower_index(self):
        theta = np.array([0.7, 0.9, 0.7, 0.7])
        assert oracle_constrained(theta, GOLDEN, 2) == SuperArm((0, 1))

    def test_constrained_rejects_zero_size(self):
        with pytest.raises(ParameterError):
            oracle_constrained(np.array([0.9]), GOLDEN, 0)

    def test_oracles_match_exhaustive_search(self):
        rng = np.random.default_rng(2024)
        mismatches = 0
        for _ in range(200):
            p = int(rng.integers(1, 13))
            theta = rng.random(p)
            cost = CostParams(float(rng.uniform(0.05, 0.95)))
            contribution = theta * cost.gain - cost.penalty
            best = brute_force_best(contribution)
            got = expected_reward(oracle_unconstrained(theta, cost), theta, cost)
            mismatches += abs(got - best) > 1e-9

            q = int(rng.integers(1, p + 1))
            best_q = brute_force_best(contribution, max_size=q)
            chosen = oracle_constrained(theta, cost, q)
            assert len(chosen) <= q
            mismatches += abs(expected_reward(chosen, theta, cost) - best_q) > 1e-9
        assert mismatches == 0

    def test_per_arm_costs(self):
        costs = [CostParams(0.9), CostParams(0.1)]
        theta = np.array([0.3, 0.3])
        # arm 0 threshold ~0.14, arm 1 threshold ~0.96
        assert oracle_unconstrained(theta, costs) == SuperArm((0,))

    def test_per_arm_cost_count_checked(self):
        with pytest.raises(StructuralError):
            oracle_unconstrained(np.array([0.3, 0.3, 0.3]), [GOLDEN, GOLDEN])


class TestRewards:
    """Global and expected rewards."""

    def test_global_reward_all_hits(self):
        subset = SuperArm((0, 1, 2))
        rewards = RewardVector.for_subset(subset, [1, 1, 1])
        assert global_reward(subset, rewards, GOLDEN) == pytest.approx(1.4436354753, abs=1e-9)

    def test_hit_cancels_miss_at_golden_cost(self):
        subset = SuperArm((0, 1))
        rewards = RewardVector.for_subset(subset, [1, 0])
        assert abs(global_reward(subset, rewards, GOLDEN)) < 1e-12

    def test_rewards_indexed_by_arm(self):
        rewards = RewardVector.for_subset(SuperArm((2, 5, 7)), [0, 1, 1])
        assert (rewards[2], rewards[5], rewards[7]) == (0, 1, 1)
        with pytest.raises(KeyError):
            rewards[0]

    def test_global_reward_empty(self):
        assert global_reward(SuperArm(), RewardVector(), GOLDEN) == 0.0

    def test_global_reward_mismatch(self):
        with pytest.raises(StructuralError):
            global_reward(SuperArm((0, 1)), RewardVector.for_subset(SuperArm((0, 2)), [1, 1]), GOLDEN)

    def test_expected_reward_examples(self):
        assert abs(expected_reward(SuperArm((0,)), np.array([0.5]), GOLDEN)) < 1e-12
        assert expected_reward(SuperArm((0,)), np.array([1.0]), GOLDEN) == pytest.approx(0.4812118251, abs=1e-9)
        value = expected_reward(SuperArm((0, 1)), np.array([0.9, 0.2]), GOLDEN)
        assert value == pytest.approx(0.0962423650, abs=1e-9)

    def test_expected_reward_matches_monte_carlo(self):
        rng = np.random.default_rng(11)
        theta = np.array([0.9, 0.2, 0.6])
        subset = SuperArm((0, 1, 2))
        draws = rng.random((200_000, 3)) < theta
        log_hit, log_miss = math.log(1 + GOLDEN_COST), math.log(GOLDEN_COST)
        samples = np.where(draws, log_hit, log_miss).sum(axis=1)
        se = samples.std() / math.sqrt(samples.size)
        assert abs(samples.mean() - expected_reward(subset, theta, GOLDEN)) < 4 * se

    def test_expected_reward_monotone_and_lipschitz(self):
        rng = np.random.default_rng(5)
        for _ in range(100):
            theta = rng.random(6)
            other = rng.random(6)
            subset = SuperArm.from_mask(rng.random(6) < 0.5)
            bumped = theta.copy()
            bumped[subset.as_array()] += 0.01
            bumped = np.minimum(bumped, 1.0)
            assert expected_reward(subset, bumped, GOLDEN) >= expected_reward(subset, theta, GOLDEN)
            gap = abs(expected_reward(subset, theta, GOLDEN) - expected_reward(subset, other, GOLDEN))
            bound = GOLDEN.gain * np.abs(theta - other)[subset.as_array()].sum()
            assert gap <= bound + 1e-12

    def test_setdep_reduces_to_independent(self):
        theta = np.array([0.8, 0.1, 0.55])
        subset = SuperArm((0, 2))
        value = expected_reward_setdep(subset, lambda i, s: theta[i], GOLDEN)
        assert value == pytest.approx(expected_reward(subset, theta, GOLDEN))
        assert expected_reward_setdep(SuperArm(), lambda i, s: 1.0, GOLDEN) == 0.0

    def test_setdep_matches_monte_carlo(self):
        interaction = np.array(
            [
                [0.0, 0.1, -0.05, 0.2],
                [0.1, 0.0, 0.15, 0.0],
                [-0.05, 0.15, 0.0, -0.1],
                [0.2, 0.0, -0.1, 0.0],
            ]
        )
        rule = SetDependentBernoulli(np.array([0.6, 0.3, 0.5, 0.2]), interaction=interaction)
        subset = SuperArm((0, 1, 2))
        rng = np.random.default_rng(11)
        samples = np.array(
            [global_reward(subset, rule.evaluate(subset, None, rng), GOLDEN) for _ in range(40_000)]
        )
        exact = expected_reward_setdep(subset, rule.mean_reward, GOLDEN)
        assert exact != pytest.approx(expected_reward(subset, rule.base, GOLDEN))
        se = samples.std() / math.sqrt(samples.size)
        assert abs(samples.mean() - exact) < 4 * se


class TestUpdate:
    """Semi-bandit posterior update."""

    def test_success_and_failure(self):
        state = BanditState.initial(3)
        subset = SuperArm((0, 1))
        state = update(state, subset, RewardVector.for_subset(subset, [1, 0]))
        assert state.a.tolist() == [2.0, 1.0, 1.0]
        assert state.b.tolist() == [1.0, 2.0, 1.0]
        assert state.iteration == 1
        assert inclusion_probabilities(state)[0] == pytest.approx(2 / 3)
        assert inclusion_probabilities(state)[2] == 0.5

    def test_update_returns_new_state(self):
        state = BanditState.initial(2)
        subset = SuperArm((0,))
        new = update(state, subset, RewardVector.for_subset(subset, [1]))
        assert state.a[0] == 1.0 and new.a[0] == 2.0

    def test_empty_subset_only_advances_iteration(self):
        state = BanditState.initial(2)
        new = update(state, SuperArm(), RewardVector())
        assert new.iteration == 1
        np.testing.assert_array_equal(new.a, state.a)
        np.testing.assert_array_equal(new.pulls, state.pulls)

    def test_mismatched_rewards(self):
        with pytest.raises(StructuralError):
            update(BanditState.initial(3), SuperArm((0, 1)), RewardVector.for_subset(SuperArm((0,)), [1]))

    def test_inclusion_probability_after_streaks(self):
        state = BanditState.initial(2)
        subset = SuperArm((0, 1))
        for _ in range(300):
            state = update(state, subset, RewardVector.for_subset(subset, [1, 0]))
        pi = inclusion_probabilities(state)
        assert pi[0] == pytest.approx(301 / 302)
        assert pi[0] == pytest.approx(0.99668874, abs=1e-8)
        state = BanditState.initial(1)
        single = SuperArm((0,))
        for _ in range(100):
            state = update(state, single, RewardVector.for_subset(single, [0]))
        assert inclusion_probabilities(state)[0] == pytest.approx(1 / 102)

    def test_count_conservation(self):
        rng = np.random.default_rng(3)
        state = BanditState.initial(8, a0=2.0, b0=0.5)
        for _ in range(200):
            subset = SuperArm.from_mask(rng.random(8) < 0.5)
            bits = rng.integers(0, 2, size=len(subset))
            state = update(state, subset, RewardVector.for_subset(subset, bits))
        assert check_conservation(state) == []
        np.testing.assert_array_equal(state.successes(), np.rint(state.a - 2.0).astype(int))
        for arm in state.arms:
            assert arm.a + arm.b == pytest.approx(arm.a0 + arm.b0 + arm.pulls)


class TestArmState:
    """Single-arm posterior view."""

    def test_record(self):
        arm = ArmState(5.0, 3.0).record(0)
        assert (arm.a, arm.b, arm.pulls) == (5.0, 4.0, 1)

    def test_counts_below_prior_rejected(self):
        with pytest.raises(ParameterError):
            ArmState(0.5, 1.0)

    def test_empirical_mean(self):
        arm = ArmState(1.0, 1.0).record(1).record(1).record(0)
        assert arm.successes == 2
        assert arm.empirical_mean == pytest.approx(2 / 3)
        assert ArmState(1.0, 1.0).empirical_mean is None


class TestSingleArmSampling:
    """Classic one-arm-per-round Thompson sampling."""

    def test_picks_dominant_arm(self):
        state = BanditState.initial(4)
        state = BanditState(
            a=np.array([1.0, 1.0, 5000.0, 1.0]),
            b=np.array([5000.0, 5000.0, 1.0, 5000.0]),
            a0=state.a0,
            b0=state.b0,
            pulls=np.array([4999, 4999, 4999, 4999]),
        )
        assert choose_single_arm(state, np.random.default_rng(0)) == 2

    def test_single_play_loop_finds_best_arm(self):
        rng = np.random.default_rng(9)
        means = np.array([0.2, 0.5, 0.8])
        state = BanditState.initial(3)
        for _ in range(2000):
            arm = choose_single_arm(state, rng)
            subset = SuperArm((arm,))
            state = update(state, subset, RewardVector.for_subset(subset, [rng.random() < means[arm]]))
        assert int(np.argmax(state.pulls)) == 2

    def test_empty_bandit(self):
        with pytest.raises(ParameterError):
            choose_single_arm(BanditState.initial(0), np.random.default_rng(0))
