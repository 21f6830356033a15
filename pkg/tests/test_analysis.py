"""
Tests for regret accounting, bound evaluators and selection metrics.
"""

import math

import numpy as np
import pytest

from tvselect.domain import (
    CostParams,
    ParameterError,
    SuperArm,
    bound_lemma2,
    bound_lemma3,
    bound_theorem1,
    build_ledger,
    delta_max,
    expected_reward,
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

GOLDEN = CostParams.golden()


class TestRegret:
    """Per-step regret, optimal super-arm and the cumulative ledger."""

    def test_regret_of_optimal_play_is_zero(self):
        theta = np.array([0.9, 0.7, 0.2])
        optimal = find_optimal_superarm(theta, 3, GOLDEN)
        assert optimal == SuperArm((0, 1))
        assert per_step_regret(optimal, optimal, theta, GOLDEN) == 0.0

    def test_regret_is_non_negative(self):
        rng = np.random.default_rng(0)
        for _ in range(100):
            theta = rng.random(6)
            optimal = find_optimal_superarm(theta, 6, GOLDEN)
            played = SuperArm.from_mask(rng.random(6) < 0.5)
            assert per_step_regret(optimal, played, theta, GOLDEN) >= -1e-12

    def test_symmetric_difference_form_at_golden_cost(self):
        rng = np.random.default_rng(1)
        for _ in range(100):
            theta = rng.random(8)
            optimal = find_optimal_superarm(theta, 8, GOLDEN)
            played = SuperArm.from_mask(rng.random(8) < 0.5)
            assert per_step_regret_dform(optimal, played, theta, GOLDEN) == pytest.approx(
                per_step_regret(optimal, played, theta, GOLDEN), abs=1e-12
            )

    def test_exhaustive_search_agrees_with_closed_form(self):
        rng = np.random.default_rng(2)
        for _ in range(20):
            theta = rng.random(7)
            by_search = find_optimal_superarm(lambda i, s: theta[i], 7, GOLDEN)
            by_oracle = find_optimal_superarm(theta, 7, GOLDEN)
            assert expected_reward(by_search, theta, GOLDEN) == pytest.approx(
                expected_reward(by_oracle, theta, GOLDEN)
            )

    def test_exhaustive_search_respects_size_limit(self):
        theta = np.array([0.9, 0.8, 0.7, 0.1])
        best = find_optimal_superarm(lambda i, s: theta[i], 4, GOLDEN, q_star=2)
        assert best == SuperArm((0, 1))

    def test_exhaustive_search_limited_to_small_p(self):
        with pytest.raises(ParameterError):
            find_optimal_superarm(lambda i, s: 0.5, 21, GOLDEN)

    def test_delta_max_is_optimal_reward(self):
        theta = np.array([1.0, 0.2])
        assert delta_max(SuperArm((0,)), theta, GOLDEN) == pytest.approx(0.4812118251, abs=1e-9)

    def test_ledger(self):
        ledger = build_ledger([0.5, 0.0, 0.25], SuperArm((0,)), 1.0)
        assert ledger.horizon == 3
        assert ledger.at(0) == 0.0
        assert ledger.at(1) == 0.5
        assert ledger.at(3) == 0.75
        np.testing.assert_allclose(ledger.cumulative, [0.5, 0.5, 0.75])


class TestGrowthChecks:
    """Log-fit and doubling diagnostics on synthetic regret curves."""

    def test_log_curve_fits_perfectly(self):
        t = np.arange(1, 1001)
        assert log_fit_r2(3.0 * np.log(t) + 1.0) == pytest.approx(1.0)

    def test_log_fit_needs_three_points(self):
        with pytest.raises(ParameterError):
            log_fit_r2([0.1, 0.2])

    def test_doubling_on_log_curve(self):
        t = np.arange(1, 1001)
        curve = 5.0 * np.log1p(t)
        increment, base = regret_doubling(curve, 250)
        assert increment < base

    def test_doubling_on_linear_curve(self):
        curve = 0.1 * np.arange(1, 101)
        increment, base = regret_doubling(curve, 50)
        assert increment == pytest.approx(base)

    @pytest.mark.parametrize("t", [0, 51])
    def test_doubling_range(self, t):
        with pytest.raises(ParameterError):
            regret_doubling(np.ones(100), t)


class TestBounds:
    """Bound evaluators reproduce their formulas and reject invalid inputs."""

    def test_identifiability_gaps(self):
        theta = np.array([0.9, 0.8, 0.3, 0.85])
        assert identifiability_gaps(theta, SuperArm((0, 1))) == {2: 0.8, 3: 0.9}

    def test_lemma2_value(self):
        value = bound_lemma2({0: 0.5}, horizon=math.e, epsilon=0.1, const_C=1.0, p=2)
        assert value == pytest.approx(0.4 / 0.09 + 2 / 1e-4 + 4)

    def test_lemma2_gap_must_exceed_twice_epsilon(self):
        with pytest.raises(ParameterError):
            bound_lemma2({0: 0.2}, horizon=100, epsilon=0.1, const_C=1.0, p=2)

    def test_lemma3_log_coefficient(self):
        gaps = {SuperArm((0, 1)): 1.0}
        args = dict(q_star=1, epsilon=0.01, cost=GOLDEN, const_C=1.0, max_gap=1.0, p=3)
        slope = bound_lemma3(gaps, horizon=math.e**2, **args) - bound_lemma3(gaps, horizon=math.e, **args)
        B = GOLDEN.gain
        eta = 8.0 * B**2 * 2 / (1.0 - 2.0 * B * 3 * 0.01)
        assert slope == pytest.approx(2 * eta)

    def test_lemma3_rejects_small_gap(self):
        with pytest.raises(ParameterError):
            bound_lemma3(
                {SuperArm((0,)): 0.01}, q_star=2, epsilon=0.1, cost=GOLDEN,
                const_C=1.0, horizon=100, max_gap=1.0, p=2,
            )

    def test_theorem1_log_coefficient(self):
        args = dict(alpha=0.25, p=10, q_star=3, max_gap=2.0, C1=1.0, C2=1.0)
        slope = bound_theorem1(horizon=math.e**3, **args) - bound_theorem1(horizon=math.e**2, **args)
        assert slope == pytest.approx(2.0 * 8 * 10 / 0.25**2)

    def test_theorem1_intercept(self):
        value = bound_theorem1(0.25, 10, 3, 1.0, 1.0, 1.0, 1.0)
        assert value == pytest.approx(theorem1_constant(0.25, 1.0, 1.0) * 3 + (2 + 4 / 0.0625) * 10)

    @pytest.mark.parametrize("alpha", [0.0, 0.5, -0.1])
    def test_theorem1_alpha_range(self, alpha):
        with pytest.raises(ParameterError):
            bound_theorem1(alpha, 10, 3, 1000, 1.0, 1.0, 1.0)

    def test_theorem1_constant_positive(self):
        assert theorem1_constant(0.2, 1.0, 1.0) > 0


class TestDivergence:
    """Bernoulli KL divergence."""

    def test_zero_on_diagonal(self):
        for a in (0.0, 0.3, 0.5, 1.0):
            assert kl_divergence(a, a) == 0.0

    def test_reference_value(self):
        assert kl_divergence(0.5, 0.7) == pytest.approx(0.0871766936, abs=1e-9)

    def test_boundary_convention(self):
        assert kl_divergence(0.0, 0.3) == pytest.approx(-math.log(0.7))

    def test_pinsker_on_grid(self):
        grid = np.linspace(0.005, 0.995, 100)
        violations = [
            (a, b) for a in grid for b in grid if kl_divergence(a, b) < 2.0 * (a - b) ** 2 - 1e-12
        ]
        assert violations == []


class TestSelectionMetrics:
    """FDP, power and Hamming distance."""

    def test_reference_example(self):
        m = selection_metrics(SuperArm((1, 2, 3, 9)), SuperArm((1, 2, 3, 4, 5)), 10)
        assert m.fdp == pytest.approx(0.25)
        assert m.power == pytest.approx(0.6)
        assert m.hamming == 3

    def test_empty_model(self):
        m = selection_metrics(SuperArm(), SuperArm((0, 1)), 5)
        assert (m.fdp, m.power, m.hamming) == (0.0, 0.0, 2)

    def test_empty_truth(self):
        assert selection_metrics(SuperArm((2,)), SuperArm(), 5).power == 1.0

    def test_hamming_identity(self):
        rng = np.random.default_rng(4)
        for _ in range(200):
            selected = SuperArm.from_mask(rng.random(12) < 0.4)
            truth = SuperArm.from_mask(rng.random(12) < 0.4)
            m = selection_metrics(selected, truth, 12)
            assert m.hamming == m.false_positives + m.false_negatives
            rebuilt = m.fdp * len(selected) + (1 - m.power) * len(truth)
            assert m.hamming == round(rebuilt)
            assert (m.power == 1.0) == (m.false_negatives == 0)
