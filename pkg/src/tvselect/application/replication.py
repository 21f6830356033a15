"""
Replication driver: many independent runs of one configuration.

Replication i runs with seed derive_seed(master, "replication", i), and
results come back in replication order, so the worker count never changes
an output.
"""

import logging
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass
from typing import Callable, List, Optional, Tuple, TypeVar

import numpy as np

from ..domain.analysis import selection_metrics
from ..domain.models import ParameterError, SuperArm
from .engine import run_offline_plan, run_online_plan
from .factory import derive_seed, plan_run
from .schemas import RunConfig, RunMode, StudyRow, StudySummary

logger = logging.getLogger(__name__)

T = TypeVar("T")

STUDY_METRICS = ("fdp", "power", "hamming", "model_size", "iterations", "wall_time_seconds")


def child_config(config: RunConfig, index: int) -> RunConfig:
    return config.model_copy(update={"seed": derive_seed(config.seed, "replication", index)})


def run_replications(
    task: Callable[[RunConfig], T],
    config: RunConfig,
    replications: int,
    workers: int = 1,
) -> List[T]:
    """Apply `task` to every child config; a process pool when workers > 1."""
    if replications < 1:
        raise ParameterError(f"replications must be at least 1, got {replications}")
    if workers < 1:
        raise ParameterError(f"workers must be at least 1, got {workers}")
    configs = [child_config(config, i) for i in range(replications)]
    logger.info(f"Running {replications} replications on {workers} worker(s)")
    if workers == 1:
        return [task(c) for c in configs]
    with ProcessPoolExecutor(max_workers=workers) as pool:
        return list(pool.map(task, configs))


def _execute(config: RunConfig, early_stop: Optional[bool] = None):
    plan = plan_run(config)
    if config.mode == RunMode.ONLINE:
        return plan, run_online_plan(plan, early_stop)
    return plan, run_offline_plan(plan, early_stop)


def regret_task(config: RunConfig) -> Tuple[np.ndarray, SuperArm, float]:
    """Cumulative regret of one full-horizon run (early stopping off)."""
    _, record = _execute(config, early_stop=False)
    ledger = record.ledger()
    if ledger is None:
        raise ParameterError("Regret needs a feedback rule with known mean rewards")
    return ledger.cumulative, ledger.optimal, ledger.delta_max


@dataclass(frozen=True, eq=False)
class RegretExperiment:
    curves: np.ndarray  # replications x horizon
    optimal: SuperArm
    delta_max: float

    @property
    def mean_curve(self) -> np.ndarray:
        return self.curves.mean(axis=0)


def regret_experiment(config: RunConfig, replications: int, workers: int = 1) -> RegretExperiment:
    results = run_replications(regret_task, config, replications, workers)
    curves = np.vstack([r[0] for r in results])
    return RegretExperiment(curves=curves, optimal=results[0][1], delta_max=results[0][2])


def study_task(config: RunConfig) -> StudyRow:
    """One replication of a simulation study: fresh dataset, one run, selection metrics."""
    plan, record = _execute(config)
    model = record.final_model
    metrics = selection_metrics(model, plan.truth, plan.p)
    return StudyRow(
        replication=0,
        seed=config.seed,
        fdp=metrics.fdp,
        power=metrics.power,
        hamming=metrics.hamming,
        model_size=len(model),
        iterations=record.iterations,
        converged=record.converged,
        wall_time_seconds=record.wall_time,
    )


def simulation_study(
    config: RunConfig, replications: int, workers: int = 1
) -> Tuple[List[StudyRow], StudySummary]:
    """Regenerate the dataset per replication, run TVS and average FDP, power and Hamming."""
    rows = run_replications(study_task, config, replications, workers)
    rows = [row.model_copy(update={"replication": i}) for i, row in enumerate(rows)]
    table = np.array([[float(getattr(r, m)) for m in STUDY_METRICS] for r in rows])
    sd = table.std(axis=0, ddof=1) if len(rows) > 1 else np.zeros(len(STUDY_METRICS))
    summary = StudySummary(
        setup=config.data.setup.value,
        replications=len(rows),
        mean=dict(zip(STUDY_METRICS, table.mean(axis=0).tolist())),
        sd=dict(zip(STUDY_METRICS, sd.tolist())),
    )
    logger.info(
        f"Study over {len(rows)} datasets: mean FDP {summary.mean['fdp']:.3f}, "
        f"power {summary.mean['power']:.3f}, Hamming {summary.mean['hamming']:.2f}"
    )
    return rows, summary
