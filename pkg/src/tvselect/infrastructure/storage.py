"""
Artifact persistence: dataset files, trajectory and regret CSVs, YAML summaries.

CSV floats are written with the shortest repr that round-trips and read back
with pandas' round-trip parser, so every artifact parses back losslessly.
"""

import logging
from pathlib import Path
from typing import Any, Dict, Iterable, List, Mapping, Sequence, Tuple

import numpy as np
import pandas as pd
import yaml

from ..domain.models import RewardVector, StructuralError, SuperArm
from .datagen import Dataset

logger = logging.getLogger(__name__)

TRAJECTORY_COLUMNS = ["t", "arm", "a", "b", "pi", "in_S", "reward"]

Snapshot = Tuple[int, np.ndarray, np.ndarray]


def write_dataset(path, data: Dataset) -> Path:
    """Header `n,p,sigma2,setup,support=<list>` followed by rows of p features and y."""
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    support = ",".join(str(i) for i in data.true_support)
    frame = pd.DataFrame(np.column_stack([data.x, data.y]))
    with open(path, "w", newline="") as f:
        f.write(f"{data.n},{data.p},{data.sigma2!r},{data.setup_tag},support={support}\n")
        frame.to_csv(f, header=False, index=False)
    logger.info(f"Wrote {data.setup_tag} dataset ({data.n}x{data.p}) to {path}")
    return path


def read_dataset(path) -> Dataset:
    path = Path(path)
    if not path.exists():
        raise FileNotFoundError(f"Dataset file not found: {path}")
    with open(path, "r") as f:
        header = f.readline().rstrip("\n")
        fields = header.split(",", 4)
        if len(fields) != 5 or not fields[4].startswith("support="):
            raise StructuralError(f"{path}: malformed dataset header {header!r}")
        try:
            n, p, sigma2 = int(fields[0]), int(fields[1]), float(fields[2])
        except ValueError as e:
            raise StructuralError(f"{path}: malformed dataset header {header!r}") from e
        listed = fields[4][len("support="):]
        support = SuperArm(tuple(int(i) for i in listed.split(",") if i))
        body = pd.read_csv(f, header=None, dtype=float, float_precision="round_trip")
    values = body.to_numpy()
    if values.shape != (n, p + 1):
        raise StructuralError(f"{path}: header says {n}x{p + 1} values, file holds {values.shape}")
    return Dataset(
        x=np.ascontiguousarray(values[:, :p]),
        y=np.ascontiguousarray(values[:, p]),
        true_support=support,
        sigma2=sigma2,
        setup_tag=fields[3],
    )


def trajectory_frame(
    snapshots: Sequence[Snapshot],
    played: Sequence[SuperArm],
    rewards: Sequence[RewardVector],
) -> pd.DataFrame:
    """Long format: one row per (recorded iteration, arm); reward is NA when unplayed."""
    blocks = []
    for t, a, b in snapshots:
        p = a.shape[0]
        in_s = played[t].mask(p)
        reward = np.full(p, np.nan)
        if len(rewards[t]):
            reward[np.array(rewards[t].members)] = rewards[t].as_array()
        blocks.append(
            pd.DataFrame(
                {
                    "t": np.full(p, t, dtype=np.int64),
                    "arm": np.arange(p, dtype=np.int64),
                    "a": a,
                    "b": b,
                    "pi": a / (a + b),
                    "in_S": in_s.astype(np.int64),
                    "reward": pd.array(reward, dtype="Float64").astype("Int64"),
                }
            )
        )
    if not blocks:
        return pd.DataFrame({c: pd.Series(dtype="int64") for c in TRAJECTORY_COLUMNS})
    return pd.concat(blocks, ignore_index=True)


def read_trajectory(path) -> pd.DataFrame:
    return pd.read_csv(
        path,
        dtype={"t": "int64", "arm": "int64", "in_S": "int64", "reward": "Int64"},
        float_precision="round_trip",
    )


def regret_frame(cumulative: Sequence[float]) -> pd.DataFrame:
    """`t,reg` with Reg(t) for t = 1..T."""
    cumulative = np.asarray(cumulative, dtype=float)
    return pd.DataFrame({"t": np.arange(1, cumulative.shape[0] + 1), "reg": cumulative})


def aggregate_regret(curves: Sequence[Sequence[float]]) -> pd.DataFrame:
    """`t,mean,se` across replications; se is the sample sd over sqrt(R)."""
    matrix = np.asarray(curves, dtype=float)
    if matrix.ndim != 2:
        raise StructuralError("Regret curves must share one horizon")
    reps = matrix.shape[0]
    se = matrix.std(axis=0, ddof=1) / np.sqrt(reps) if reps > 1 else np.zeros(matrix.shape[1])
    return pd.DataFrame(
        {"t": np.arange(1, matrix.shape[1] + 1), "mean": matrix.mean(axis=0), "se": se}
    )


def _plain(value: Any) -> Any:
    """Convert numpy scalars, arrays and tuples into YAML-safe builtins."""
    if isinstance(value, Mapping):
        return {str(k): _plain(v) for k, v in value.items()}
    if isinstance(value, SuperArm):
        return list(value.members)
    if isinstance(value, (list, tuple)):
        return [_plain(v) for v in value]
    if isinstance(value, np.ndarray):
        return [_plain(v) for v in value.tolist()]
    if isinstance(value, np.generic):
        return value.item()
    if isinstance(value, Path):
        return str(value)
    return value


def write_yaml(path, payload: Mapping[str, Any]) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, "w") as f:
        yaml.safe_dump(_plain(payload), f, default_flow_style=False, sort_keys=False)
    return path


def read_yaml(path) -> Dict[str, Any]:
    with open(path, "r") as f:
        return yaml.safe_load(f) or {}


class ArtifactStore:
    """
    Output directory for one invocation.

    Layout: config_used.yaml, trajectory.csv, summary.yaml for single runs;
    regret/rep_<i>.csv plus regret_mean.csv for regret experiments;
    study.csv plus study_summary.yaml for simulation studies.
    """

    def __init__(self, base_dir):
        self.base_dir = Path(base_dir).expanduser()
        self.base_dir.mkdir(parents=True, exist_ok=True)

    def path(self, *parts: str) -> Path:
        target = self.base_dir.joinpath(*parts)
        target.parent.mkdir(parents=True, exist_ok=True)
        return target

    def write_summary(self, summary: Mapping[str, Any], name: str = "summary.yaml") -> Path:
        target = write_yaml(self.path(name), summary)
        logger.info(f"Wrote summary to {target}")
        return target

    def write_trajectory(
        self,
        snapshots: Sequence[Snapshot],
        played: Sequence[SuperArm],
        rewards: Sequence[RewardVector],
        name: str = "trajectory.csv",
    ) -> Path:
        target = self.path(name)
        trajectory_frame(snapshots, played, rewards).to_csv(target, index=False)
        logger.info(f"Wrote trajectory ({len(snapshots)} snapshots) to {target}")
        return target

    def write_regret_runs(self, curves: Sequence[Sequence[float]]) -> List[Path]:
        paths = []
        for index, curve in enumerate(curves):
            target = self.path("regret", f"rep_{index:04d}.csv")
            regret_frame(curve).to_csv(target, index=False)
            paths.append(target)
        mean_path = self.path("regret_mean.csv")
        aggregate_regret(curves).to_csv(mean_path, index=False)
        logger.info(f"Wrote {len(curves)} regret curves and their mean to {self.base_dir}")
        return paths + [mean_path]

    def write_table(self, rows: Iterable[Mapping[str, Any]], name: str) -> Path:
        target = self.path(name)
        pd.DataFrame([_plain(dict(r)) for r in rows]).to_csv(target, index=False)
        return target
