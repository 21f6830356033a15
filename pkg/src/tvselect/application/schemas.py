"""
Configuration and report schemas.

Run configurations are validated strictly: unknown keys anywhere in the tree
are rejected and the error names them. Reports are the structured payloads
written to summary files.
"""

from enum import Enum
from typing import Dict, List, Literal, Optional, Union

from pydantic import BaseModel, ConfigDict, Field, field_validator, model_validator

from ..domain.models import GOLDEN_COST


class StrictModel(BaseModel):
    model_config = ConfigDict(extra="forbid")


class RunMode(str, Enum):
    """Outer loop of a TVS run."""

    OFFLINE = "offline"  # full dataset every iteration
    ONLINE = "online"  # one mini-batch per iteration


class FeedbackKind(str, Enum):
    BERNOULLI = "bernoulli"
    FOREST = "forest"
    LASSO = "lasso"


class DataSetup(str, Enum):
    FRIEDMAN = "friedman"
    LINEAR = "linear"
    LIANG = "liang"
    FOREST = "forest"
    FILE = "file"  # a dataset written by gen-data
    ARMS = "arms"  # synthetic arms only, no data


class PriorSpec(StrictModel):
    a: float = Field(default=1.0, gt=0.0, description="Prior successes a0")
    b: float = Field(default=1.0, gt=0.0, description="Prior failures b0")


class ForestSpec(StrictModel):
    """
    Forest feedback settings. The reward rule follows the run mode; `max_depth`
    and `backfit` left unset take the preset of that mode.
    """

    num_trees: int = Field(default=10, ge=1)
    max_depth: Optional[int] = Field(default=None, ge=1, description="2 offline, 6 online when unset")
    min_leaf: int = Field(default=5, ge=1)
    mtry: Union[int, Literal["sqrt", "all"]] = Field(default="all")
    split_candidates: int = Field(default=32, ge=1)
    bootstrap: bool = True
    importance_threshold: float = Field(default=1.0, ge=0.0)
    min_gain: float = Field(default=0.01, ge=0.0, description="Fraction of the root sum of squares")
    backfit: Optional[bool] = Field(default=None, description="Sum of trees on residuals; on offline when unset")

    @field_validator("mtry")
    @classmethod
    def _positive_mtry(cls, value):
        if isinstance(value, int) and value < 1:
            raise ValueError("mtry must be positive")
        return value


class LassoSpec(StrictModel):
    lam: Union[float, Literal["auto"]] = Field(default="auto", description="Penalty or 'auto' (half of lambda_max)")
    bootstrap: bool = True

    @field_validator("lam")
    @classmethod
    def _non_negative(cls, value):
        if value != "auto" and value < 0:
            raise ValueError("lam must be non-negative")
        return value


class FeedbackSpec(StrictModel):
    kind: FeedbackKind = FeedbackKind.BERNOULLI
    forest: ForestSpec = Field(default_factory=ForestSpec)
    lasso: LassoSpec = Field(default_factory=LassoSpec)


class ArmsSpec(StrictModel):
    """
    Synthetic arms for the Bernoulli rule; the first `num_signals` arms are signals.

    With `margin` set the arms form a random strongly identifiable set-dependent
    instance; otherwise they are independent with the two fixed means.
    """

    num_signals: int = Field(default=5, ge=0)
    signal_theta: float = Field(default=0.7, ge=0.0, le=1.0)
    noise_theta: float = Field(default=0.3, ge=0.0, le=1.0)
    margin: Optional[float] = Field(default=None, gt=0.0, lt=0.5)
    interaction_scale: Optional[float] = Field(default=None, ge=0.0)


class DataSpec(StrictModel):
    setup: DataSetup = DataSetup.ARMS
    n: Optional[int] = Field(default=None, ge=1)
    p: Optional[int] = Field(default=None, ge=1)
    sigma2: Optional[float] = Field(default=None, ge=0.0)
    correlated: bool = False
    num_gen_trees: int = Field(default=200, ge=0)
    path: Optional[str] = None
    arms: ArmsSpec = Field(default_factory=ArmsSpec)

    @model_validator(mode="after")
    def _path_for_files(self):
        if self.setup == DataSetup.FILE and not self.path:
            raise ValueError("data.path is required when data.setup is 'file'")
        return self


class OutputSpec(StrictModel):
    directory: Optional[str] = None


class RunConfig(StrictModel):
    """Everything needed to reproduce one TVS run."""

    mode: RunMode = RunMode.OFFLINE
    horizon: int = Field(default=500, ge=0, description="Iterations T (offline)")
    cost: float = Field(default=GOLDEN_COST, gt=0.0, lt=1.0, description="Cost C of a false inclusion")
    arm_costs: Optional[List[float]] = Field(default=None, description="Per-arm costs C_i")
    prior: PriorSpec = Field(default_factory=PriorSpec)
    q_star: Optional[int] = Field(default=None, ge=1, description="Known model size bound")
    stop_window: int = Field(default=100, ge=1)
    early_stop: bool = True
    first_play_cap: Optional[int] = Field(default=None, ge=1, description="Top-k draws played at iteration 0")
    seed: int = Field(default=0, ge=0)
    batch_size: Optional[int] = Field(default=None, ge=1)
    rounds: int = Field(default=1, ge=1)
    max_trajectory_entries: int = Field(default=10_000_000, ge=1)
    feedback: FeedbackSpec = Field(default_factory=FeedbackSpec)
    data: DataSpec = Field(default_factory=DataSpec)
    output: OutputSpec = Field(default_factory=OutputSpec)

    @field_validator("arm_costs")
    @classmethod
    def _costs_in_range(cls, value):
        if value is not None and any(not (0.0 < c < 1.0) for c in value):
            raise ValueError("every arm cost must lie in (0, 1)")
        return value

    @model_validator(mode="after")
    def _consistent(self):
        needs_data = self.feedback.kind != FeedbackKind.BERNOULLI or self.mode == RunMode.ONLINE
        if needs_data and self.data.setup == DataSetup.ARMS:
            raise ValueError(
                f"{self.mode.value} runs with {self.feedback.kind.value} feedback need a dataset, "
                "not data.setup 'arms'"
            )
        if self.mode == RunMode.ONLINE and self.batch_size is None:
            raise ValueError("online runs require batch_size")
        return self


class RunSummary(BaseModel):
    """Contents of summary.yaml for one run."""

    mode: RunMode
    seed: int
    p: int
    iterations: int = Field(ge=0, description="Iterations executed")
    converged: bool
    convergence_iteration: Optional[int] = None
    wall_time_seconds: float = Field(ge=0.0)
    final_model: List[int]
    final_pi: List[float]
    true_support: Optional[List[int]] = None
    fdp: Optional[float] = Field(default=None, ge=0.0, le=1.0)
    power: Optional[float] = Field(default=None, ge=0.0, le=1.0)
    hamming: Optional[int] = Field(default=None, ge=0)
    optimal: Optional[List[int]] = None
    cumulative_regret: Optional[float] = None
    snapshot_stride: int = Field(default=1, ge=1)


class StudyRow(BaseModel):
    replication: int = Field(ge=0)
    seed: int
    fdp: float = Field(ge=0.0, le=1.0)
    power: float = Field(ge=0.0, le=1.0)
    hamming: int = Field(ge=0)
    model_size: int = Field(ge=0)
    iterations: int = Field(ge=0)
    converged: bool
    wall_time_seconds: float = Field(ge=0.0)


class StudySummary(BaseModel):
    """Mean and standard deviation of the selection metrics over replications."""

    setup: str
    replications: int = Field(ge=1)
    mean: Dict[str, float]
    sd: Dict[str, float]
