# tvselect - Thompson Variable Selection

__version__ = "0.1.0"

# Primary CLI entry point
from .cli import main

# Domain models
from .domain.models import (
    GOLDEN_COST,
    ArmState,
    BanditState,
    CostParams,
    ParameterError,
    RewardVector,
    StructuralError,
    SuperArm,
    TVSError,
)

# Domain ports (interfaces)
from .domain.ports import FeedbackRule

# Runs
from .application.schemas import RunConfig
from .application.engine import RunRecord, check_stabilized, extract_model, run_offline, run_online
from .config import load_run_config

__all__ = [
    "__version__",
    "main",
    "GOLDEN_COST",
    "ArmState",
    "BanditState",
    "CostParams",
    "ParameterError",
    "RewardVector",
    "StructuralError",
    "SuperArm",
    "TVSError",
    "FeedbackRule",
    "RunConfig",
    "RunRecord",
    "check_stabilized",
    "extract_model",
    "run_offline",
    "run_online",
    "load_run_config",
]
