"""
Tests for the TVS loops, model extraction, stopping and the replication driver.
"""

import itertools

import numpy as np
import pytest

from tvselect.application import (
    RunConfig,
    TVSEngine,
    check_stabilized,
    extract_model,
    plan_run,
    regret_experiment,
    run,
    run_offline,
    run_online,
    simulation_study,
    summarize,
)
from tvselect.application.factory import derive_seed
from tvselect.domain import (
    CostParams,
    ParameterError,
    SuperArm,
    check_conservation,
    inclusion_probabilities,
)
from tvselect.infrastructure import SetDependentBernoulli

GOLDEN = CostParams.golden()


def arms_config(**overrides):
    base = {"horizon": 200, "seed": 3, "data": {"p": 20}}
    base.update(overrides)
    return RunConfig.model_validate(base)


def assert_same_run(first, second):
    assert first.played == second.played
    assert first.rewards == second.rewards
    assert first.models == second.models
    np.testing.assert_array_equal(first.final_state.a, second.final_state.a)
    np.testing.assert_array_equal(first.final_state.b, second.final_state.b)


class TestModelExtraction:
    """The selected model truncates inclusion probabilities at the threshold."""

    def test_median_probability_model(self):
        assert extract_model(np.array([0.7, 0.49, 0.51]), GOLDEN) == SuperArm((0, 2))

    def test_ties_are_included(self):
        assert extract_model(np.full(4, 0.5), GOLDEN) == SuperArm((0, 1, 2, 3))

    def test_high_cost_threshold(self):
        assert extract_model(np.array([0.2, 0.1]), CostParams(0.9)) == SuperArm((0,))


class TestStabilization:
    """First iteration of a run of identical models."""

    def test_constant_models(self):
        models = [SuperArm((1, 2))] * 150
        assert check_stabilized(models, 100) == 0

    def test_alternating_models(self):
        models = [SuperArm((0,)) if t % 2 else SuperArm((1,)) for t in range(150)]
        assert check_stabilized(models, 100) is None

    def test_change_point(self):
        models = [SuperArm((0, 1, 5))] * 37 + [SuperArm((0, 1))] * 113
        assert check_stabilized(models, 100) == 37

    def test_too_short(self):
        assert check_stabilized([SuperArm()] * 5, 10) is None
        assert check_stabilized([], 10) is None

    def test_window_must_be_positive(self):
        with pytest.raises(ParameterError):
            check_stabilized([SuperArm()], 0)


class TestOfflineRun:
    """Offline loop over synthetic arms."""

    def test_zero_horizon_keeps_the_prior(self):
        record = run_offline(arms_config(horizon=0, data={"p": 10}))
        assert record.iterations == 0
        np.testing.assert_array_equal(record.final_pi, np.full(10, 0.5))
        assert record.final_model == SuperArm(tuple(range(10)))
        assert not record.converged
        assert record.snapshots == []

    def test_same_seed_same_record(self):
        config = arms_config()
        assert_same_run(run_offline(config), run_offline(config))

    def test_other_seed_other_record(self):
        assert run_offline(arms_config(seed=1)).played != run_offline(arms_config(seed=2)).played

    def test_models_follow_inclusion_probabilities(self):
        record = run_offline(arms_config(early_stop=False, horizon=60))
        for snap in record.snapshots:
            assert record.models[snap.t] == extract_model(snap.a / (snap.a + snap.b), GOLDEN)
        assert record.models[-1] == record.final_model

    def test_counts_are_conserved(self):
        record = run_offline(arms_config(early_stop=False))
        assert check_conservation(record.final_state) == []
        assert record.final_state.iteration == record.iterations
        pulls = np.zeros(20, dtype=int)
        for subset in record.played:
            pulls[subset.as_array()] += 1
        np.testing.assert_array_equal(record.final_state.pulls, pulls)

    def test_rewards_index_played_arms(self):
        record = run_offline(arms_config(horizon=50))
        assert all(r.members == s.members for r, s in zip(record.rewards, record.played))

    def test_near_deterministic_arms_recovered(self):
        config = arms_config(
            horizon=500, stop_window=20, data={"p": 50, "arms": {"signal_theta": 0.99, "noise_theta": 0.01}}
        )
        record = run_offline(config)
        assert record.final_model == SuperArm((0, 1, 2, 3, 4))
        assert record.converged
        assert record.iterations == record.convergence_iteration + 20
        assert len(set(record.models[record.convergence_iteration:])) == 1

    def test_q_star_bounds_every_play(self):
        record = run_offline(arms_config(q_star=3, horizon=100))
        assert max(len(s) for s in record.played) <= 3

    def test_first_play_cap(self):
        record = run_offline(arms_config(first_play_cap=2, horizon=10, early_stop=False))
        assert len(record.played[0]) <= 2

    def test_regret_is_tracked_for_known_means(self):
        record = run_offline(arms_config(early_stop=False))
        ledger = record.ledger()
        assert ledger.optimal == SuperArm((0, 1, 2, 3, 4))
        assert ledger.horizon == 200
        assert np.all(ledger.per_step >= -1e-12)
        assert np.all(np.diff(ledger.cumulative) >= -1e-12)
        assert ledger.delta_max == pytest.approx(5 * (0.7 * GOLDEN.gain - GOLDEN.penalty))

    def test_snapshot_thinning(self):
        record = run_offline(arms_config(horizon=50, early_stop=False, max_trajectory_entries=100))
        assert record.snapshot_stride == 10
        assert [s.t for s in record.snapshots] == [0, 10, 20, 30, 40, 49]
        np.testing.assert_array_equal(record.snapshots[-1].a, record.final_state.a)
        assert record.pi_at(5) is None

    def test_summary(self):
        config = arms_config(early_stop=False, horizon=100)
        plan = plan_run(config)
        record = run_offline(config)
        summary = summarize(record, config, plan.truth)
        assert summary.iterations == 100
        assert summary.final_model == list(record.final_model.members)
        assert summary.true_support == [0, 1, 2, 3, 4]
        assert summary.cumulative_regret == pytest.approx(float(np.sum(record.regret)))


class TestEmptyPlays:
    """Empty super-arms count as iterations without rewards."""

    def test_empty_superarm(self):
        engine = TVSEngine(
            SetDependentBernoulli(np.zeros(3)), 3, GOLDEN, prior_a=0.01, prior_b=1000.0, early_stop=False
        )
        record = engine.run(itertools.repeat(None), 5, np.random.default_rng(0))
        assert record.iterations == 5
        assert all(len(s) == 0 and len(r) == 0 for s, r in zip(record.played, record.rewards))
        np.testing.assert_array_equal(record.final_state.a, np.full(3, 0.01))
        assert record.final_state.iteration == 5
        assert record.regret == [0.0] * 5

    def test_engine_validates_window(self):
        with pytest.raises(ParameterError):
            TVSEngine(SetDependentBernoulli([0.5]), 1, GOLDEN, stop_window=0)


class TestOnlineRun:
    """Streaming loop over mini-batches."""

    def test_single_batch_equals_one_offline_iteration(self):
        data = {"setup": "linear", "n": 60, "p": 8}
        online = run_online(
            RunConfig.model_validate(
                {"mode": "online", "batch_size": 60, "feedback": {"kind": "lasso"}, "data": data, "seed": 4}
            )
        )
        offline = run_offline(
            RunConfig.model_validate({"horizon": 1, "feedback": {"kind": "lasso"}, "data": data, "seed": 4})
        )
        assert online.iterations == 1
        assert_same_run(online, offline)

    def test_data_free_rule_matches_offline(self):
        data = {"setup": "linear", "n": 100, "p": 12}
        online = run(RunConfig.model_validate({"mode": "online", "batch_size": 10, "data": data, "seed": 8}))
        offline = run(RunConfig.model_validate({"horizon": 10, "data": data, "seed": 8}))
        assert online.iterations == 10
        assert_same_run(online, offline)

    def test_posterior_carries_over_rounds(self):
        config = RunConfig.model_validate(
            {
                "mode": "online",
                "batch_size": 1000,
                "rounds": 2,
                "data": {"setup": "liang", "n": 20_000, "p": 10},
            }
        )
        record = run_online(config)
        assert record.iterations == 40
        assert check_conservation(record.final_state) == []
        assert record.final_state.pulls.max() <= 40

    def test_online_requires_batch_size(self):
        with pytest.raises(ValueError):
            RunConfig.model_validate({"mode": "online", "data": {"setup": "linear"}})


class TestForestPlanning:
    """The forest rule takes its mode and shape from the run configuration."""

    DATA = {"setup": "linear", "n": 60, "p": 6}

    def test_online_run_builds_online_forest(self):
        config = RunConfig.model_validate(
            {"mode": "online", "batch_size": 20, "feedback": {"kind": "forest"}, "data": self.DATA}
        )
        rule = plan_run(config).rule
        assert rule.mode == "online"
        assert rule.params.backfit is False
        assert rule.params.max_depth == 6

    def test_offline_run_builds_backfitted_forest(self):
        config = RunConfig.model_validate({"feedback": {"kind": "forest"}, "data": self.DATA})
        rule = plan_run(config).rule
        assert rule.mode == "offline"
        assert rule.params.backfit is True
        assert rule.params.max_depth == 2

    def test_explicit_shape_beats_preset(self):
        config = RunConfig.model_validate(
            {
                "mode": "online",
                "batch_size": 20,
                "feedback": {"kind": "forest", "forest": {"max_depth": 4, "backfit": True}},
                "data": self.DATA,
            }
        )
        rule = plan_run(config).rule
        assert rule.mode == "online"
        assert (rule.params.max_depth, rule.params.backfit) == (4, True)

    def test_forest_mode_key_is_rejected(self):
        with pytest.raises(ValueError):
            RunConfig.model_validate({"feedback": {"kind": "forest", "forest": {"mode": "online"}}})


class TestReplications:
    """Replications use derived seeds and keep their order."""

    def test_child_seeds_are_stable(self):
        assert derive_seed(7, "replication", 0) == derive_seed(7, "replication", 0)
        assert derive_seed(7, "replication", 0) != derive_seed(7, "replication", 1)

    def test_regret_experiment_ignores_worker_count(self):
        config = arms_config(horizon=40, data={"p": 8})
        serial = regret_experiment(config, 3, workers=1)
        parallel = regret_experiment(config, 3, workers=2)
        assert serial.curves.shape == (3, 40)
        np.testing.assert_array_equal(serial.curves, parallel.curves)
        assert serial.optimal == SuperArm((0, 1, 2, 3, 4))

    def test_regret_needs_known_means(self):
        config = RunConfig.model_validate(
            {"horizon": 5, "feedback": {"kind": "lasso"}, "data": {"setup": "linear", "n": 40, "p": 6}}
        )
        with pytest.raises(ParameterError):
            regret_experiment(config, 1)

    def test_simulation_study(self):
        config = RunConfig.model_validate(
            {
                "horizon": 30,
                "feedback": {"kind": "lasso"},
                "data": {"setup": "linear", "n": 100, "p": 15},
            }
        )
        rows, summary = simulation_study(config, 3)
        assert [r.replication for r in rows] == [0, 1, 2]
        assert len({r.seed for r in rows}) == 3
        assert summary.replications == 3
        assert summary.mean["fdp"] == pytest.approx(np.mean([r.fdp for r in rows]))
        assert 0.0 <= summary.mean["power"] <= 1.0

    def test_inclusion_probabilities_stay_in_unit_interval(self):
        record = run_offline(arms_config(horizon=80))
        pi = inclusion_probabilities(record.final_state)
        assert np.all((pi > 0) & (pi < 1))
