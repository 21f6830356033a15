"""
Application Layer: the TVS outer loops.

Each iteration draws theta from the Beta posteriors, plays the oracle's
super-arm, collects rewards from the feedback rule and updates the played
arms. Offline runs show the rule the full dataset every iteration; online runs
show it one mini-batch per iteration and carry the posterior across batches
and rounds.

An empty super-arm is a legal play: the iteration counts, no rewards are
collected and the state only advances its iteration counter.
"""

import logging
import math
import time
from dataclasses import dataclass, field
from typing import Iterable, Iterator, List, NamedTuple, Optional, Sequence, Union

import numpy as np

from ..domain.analysis import RegretLedger, build_ledger, selection_metrics
from ..domain.arms import (
    inclusion_probabilities,
    oracle_constrained,
    oracle_unconstrained,
    sample_theta,
    update,
)
from ..domain.models import (
    BanditState,
    CostLike,
    DataContext,
    ParameterError,
    RewardVector,
    SuperArm,
    TVSError,
)
from ..domain.ports import FeedbackRule
from ..infrastructure.datagen import make_batches
from .factory import RunPlan, plan_run, stream
from .schemas import RunConfig, RunMode, RunSummary

logger = logging.getLogger(__name__)


class Snapshot(NamedTuple):
    """Beta counts after the update of iteration t."""

    t: int
    a: np.ndarray
    b: np.ndarray


@dataclass(eq=False)
class RunRecord:
    """Trajectory and outcome of one TVS run; positions are 0-based iterations."""

    p: int
    cost: CostLike
    initial_state: BanditState
    final_state: BanditState
    played: List[SuperArm] = field(default_factory=list)
    rewards: List[RewardVector] = field(default_factory=list)
    models: List[SuperArm] = field(default_factory=list)
    snapshots: List[Snapshot] = field(default_factory=list)
    regret: Optional[List[float]] = None
    optimal: Optional[SuperArm] = None
    delta_max: Optional[float] = None
    converged: bool = False
    convergence_iteration: Optional[int] = None
    wall_time: float = 0.0
    snapshot_stride: int = 1

    @property
    def iterations(self) -> int:
        return len(self.played)

    @property
    def final_pi(self) -> np.ndarray:
        return inclusion_probabilities(self.final_state)

    @property
    def final_model(self) -> SuperArm:
        return extract_model(self.final_pi, self.cost)

    def pi_at(self, t: int) -> Optional[np.ndarray]:
        """pi(t) when iteration t was snapshotted."""
        for snap in self.snapshots:
            if snap.t == t:
                return snap.a / (snap.a + snap.b)
        return None

    def ledger(self) -> Optional[RegretLedger]:
        if self.regret is None:
            return None
        return build_ledger(self.regret, self.optimal, self.delta_max)


def extract_model(pi: np.ndarray, cost: CostLike) -> SuperArm:
    """The selected model: arms whose inclusion probability reaches the cost threshold."""
    return oracle_unconstrained(pi, cost)


def check_stabilized(record: Union[RunRecord, Sequence[SuperArm]], window: int) -> Optional[int]:
    """First t with the same model at t, t+1, ..., t+window-1; None if no such run."""
    if window < 1:
        raise ParameterError(f"window must be at least 1, got {window}")
    models = record.models if isinstance(record, RunRecord) else list(record)
    start = 0
    for t in range(len(models)):
        if t > 0 and models[t] != models[t - 1]:
            start = t
        if t - start + 1 >= window:
            return start
    return None


class TVSEngine:
    """
    Sequential Choose / Reward / Update loop over a stream of data contexts.

    The engine never reads the data itself; each context (None for data-free
    rules) is handed to the feedback rule for one iteration.
    """

    def __init__(
        self,
        rule: FeedbackRule,
        p: int,
        cost: CostLike,
        prior_a: float = 1.0,
        prior_b: float = 1.0,
        q_star: Optional[int] = None,
        stop_window: int = 100,
        early_stop: bool = True,
        first_play_cap: Optional[int] = None,
        max_trajectory_entries: int = 10_000_000,
    ):
        if stop_window < 1:
            raise ParameterError(f"stop_window must be at least 1, got {stop_window}")
        if q_star is not None and q_star < 1:
            raise ParameterError(f"q_star must be at least 1, got {q_star}")
        self.rule = rule
        self.p = p
        self.cost = cost
        self.prior_a = prior_a
        self.prior_b = prior_b
        self.q_star = q_star
        self.stop_window = stop_window
        self.early_stop = early_stop
        self.first_play_cap = first_play_cap
        self.max_trajectory_entries = max_trajectory_entries

    def choose(self, state: BanditState, rng: np.random.Generator) -> SuperArm:
        theta = sample_theta(state, rng)
        cap = self.q_star
        if state.iteration == 0 and self.first_play_cap is not None:
            cap = self.first_play_cap if cap is None else min(cap, self.first_play_cap)
        if cap is None:
            return oracle_unconstrained(theta, self.cost)
        return oracle_constrained(theta, self.cost, cap)

    def _optimal(self):
        try:
            optimal = self.rule.optimal_superarm(self.cost, self.q_star)
        except TVSError as e:
            logger.warning(f"Regret not tracked: {e}")
            return None, None
        if optimal is None:
            return None, None
        return optimal, float(self.rule.expected_reward(optimal, self.cost))

    def run(
        self,
        contexts: Iterable[Optional[DataContext]],
        horizon: int,
        rng: np.random.Generator,
    ) -> RunRecord:
        """Run at most `horizon` iterations, one per context."""
        state = BanditState.initial(self.p, self.prior_a, self.prior_b, self.cost)
        stride = max(1, math.ceil(self.p * horizon / self.max_trajectory_entries))
        if stride > 1:
            logger.warning(
                f"Trajectory of {self.p}x{horizon} entries exceeds {self.max_trajectory_entries}; "
                f"keeping every {stride}-th snapshot"
            )
        optimal, best = self._optimal()
        record = RunRecord(
            p=self.p,
            cost=self.cost,
            initial_state=state,
            final_state=state,
            regret=[] if optimal is not None else None,
            optimal=optimal,
            delta_max=best,
            snapshot_stride=stride,
        )

        start_time = time.perf_counter()
        streak_start = 0
        for t, context in zip(range(horizon), contexts):
            subset = self.choose(state, rng)
            if len(subset):
                rewards = self.rule.evaluate(subset, context, rng)
                rewards.check_matches(subset)
            else:
                rewards = RewardVector()
            state = update(state, subset, rewards)
            model = extract_model(inclusion_probabilities(state), self.cost)

            record.played.append(subset)
            record.rewards.append(rewards)
            record.models.append(model)
            if t % stride == 0:
                record.snapshots.append(Snapshot(t, state.a, state.b))
            if record.regret is not None:
                record.regret.append(best - float(self.rule.expected_reward(subset, self.cost)))
            logger.debug(f"t={t} played {len(subset)} arms, {sum(rewards.bits)} rewarded, model size {len(model)}")

            if t > 0 and model != record.models[t - 1]:
                streak_start = t
            if self.early_stop and t - streak_start + 1 >= self.stop_window:
                record.converged = True
                record.convergence_iteration = streak_start
                logger.info(f"Model stable for {self.stop_window} iterations since t={streak_start}; stopping")
                break

        record.wall_time = time.perf_counter() - start_time
        record.final_state = state
        last = record.iterations - 1
        if last >= 0 and record.snapshots[-1].t != last:
            record.snapshots.append(Snapshot(last, state.a, state.b))
        if not record.converged:
            record.convergence_iteration = check_stabilized(record, self.stop_window)
            record.converged = record.convergence_iteration is not None
            if self.early_stop and record.iterations >= self.stop_window and not record.converged:
                logger.warning(f"Model never stayed fixed for {self.stop_window} iterations")
        return record


def engine_for(plan: RunPlan, early_stop: Optional[bool] = None) -> TVSEngine:
    config = plan.config
    return TVSEngine(
        rule=plan.rule,
        p=plan.p,
        cost=plan.cost,
        prior_a=config.prior.a,
        prior_b=config.prior.b,
        q_star=config.q_star,
        stop_window=config.stop_window,
        early_stop=config.early_stop if early_stop is None else early_stop,
        first_play_cap=config.first_play_cap,
        max_trajectory_entries=config.max_trajectory_entries,
    )


def _repeat(context: Optional[DataContext]) -> Iterator[Optional[DataContext]]:
    while True:
        yield context


def run_offline_plan(plan: RunPlan, early_stop: Optional[bool] = None) -> RunRecord:
    config = plan.config
    context = plan.data.context() if plan.data is not None else None
    if context is None and plan.rule.requires_data:
        raise ParameterError("The feedback rule needs a dataset")
    logger.info(f"Offline run: p={plan.p}, T={config.horizon}, seed={config.seed}")
    record = engine_for(plan, early_stop).run(_repeat(context), config.horizon, stream(config.seed, "bandit"))
    logger.info(f"Offline run finished after {record.iterations} iterations in {record.wall_time:.2f}s")
    return record


def run_offline(config: RunConfig) -> RunRecord:
    """T iterations, each evaluating the rule on the full dataset (or on no data)."""
    return run_offline_plan(plan_run(config))


def run_online_plan(plan: RunPlan, early_stop: Optional[bool] = None) -> RunRecord:
    config = plan.config
    if plan.data is None:
        raise ParameterError("Online runs need a dataset")
    if config.batch_size is None:
        raise ParameterError("Online runs need batch_size")
    batches = make_batches(plan.data, config.batch_size, config.rounds, stream(config.seed, "batches"))
    logger.info(
        f"Online run: p={plan.p}, {len(batches)} batches of {config.batch_size} over {config.rounds} rounds"
    )
    contexts = (batch.slice(plan.data) for batch in batches)
    record = engine_for(plan, early_stop).run(contexts, len(batches), stream(config.seed, "bandit"))
    logger.info(f"Online run finished after {record.iterations} iterations in {record.wall_time:.2f}s")
    return record


def run_online(config: RunConfig) -> RunRecord:
    """One iteration per mini-batch; the posterior carries over batches and rounds."""
    return run_online_plan(plan_run(config))


def run(config: RunConfig) -> RunRecord:
    return run_online(config) if config.mode == RunMode.ONLINE else run_offline(config)


def summarize(record: RunRecord, config: RunConfig, truth: Optional[SuperArm] = None) -> RunSummary:
    model = record.final_model
    metrics = selection_metrics(model, truth, record.p) if truth is not None else None
    return RunSummary(
        mode=config.mode,
        seed=config.seed,
        p=record.p,
        iterations=record.iterations,
        converged=record.converged,
        convergence_iteration=record.convergence_iteration,
        wall_time_seconds=record.wall_time,
        final_model=list(model.members),
        final_pi=record.final_pi.tolist(),
        true_support=list(truth.members) if truth is not None else None,
        fdp=metrics.fdp if metrics else None,
        power=metrics.power if metrics else None,
        hamming=metrics.hamming if metrics else None,
        optimal=list(record.optimal.members) if record.optimal is not None else None,
        cumulative_regret=float(np.sum(record.regret)) if record.regret is not None else None,
        snapshot_stride=record.snapshot_stride,
    )
