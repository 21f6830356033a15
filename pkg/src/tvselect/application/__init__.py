"""Application layer: run configuration, the TVS loops and replication drivers."""

from .schemas import (
    DataSetup,
    FeedbackKind,
    RunConfig,
    RunMode,
    RunSummary,
    StudyRow,
    StudySummary,
)
from .factory import RunPlan, derive_seed, plan_run, stream
from .engine import (
    RunRecord,
    Snapshot,
    TVSEngine,
    check_stabilized,
    extract_model,
    run,
    run_offline,
    run_online,
    summarize,
)
from .replication import RegretExperiment, regret_experiment, run_replications, simulation_study

__all__ = [
    "DataSetup",
    "FeedbackKind",
    "RunConfig",
    "RunMode",
    "RunSummary",
    "StudyRow",
    "StudySummary",
    "RunPlan",
    "derive_seed",
    "plan_run",
    "stream",
    "RunRecord",
    "Snapshot",
    "TVSEngine",
    "check_stabilized",
    "extract_model",
    "run",
    "run_offline",
    "run_online",
    "summarize",
    "RegretExperiment",
    "regret_experiment",
    "run_replications",
    "simulation_study",
]
