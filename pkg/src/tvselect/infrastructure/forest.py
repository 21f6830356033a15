"""
Randomized regression forest used as a stochastic relevance learner.

Trees are grown greedily by variance reduction over sample-quantile cut points,
each on its own bootstrap resample and rng substream. The forest is meant to be
weak: few trees, shallow depth and a minimum split gain, so that a variable is
used only when it explains a visible share of the response variance.

Independent trees all fit the response. Backfitted trees form a sum of trees,
each fit to the residual the earlier ones leave, like one draw of a
sum-of-trees model.
"""

import logging
import math
from dataclasses import dataclass
from typing import List, Optional, Union

import numpy as np

from ..domain.models import DataContext, ParameterError, SuperArm

logger = logging.getLogger(__name__)

LEAF = -1

# Shape of the forest per feedback mode when the configuration leaves it open.
MODE_PRESETS = {
    "offline": {"max_depth": 2, "backfit": True},
    "online": {"max_depth": 6, "backfit": False},
}


@dataclass(frozen=True)
class ForestParams:
    num_trees: int = 10
    max_depth: int = 6
    min_leaf: int = 5
    mtry: Union[int, str] = "all"
    split_candidates: int = 32
    bootstrap: bool = True
    importance_threshold: float = 1.0
    min_gain: float = 0.01
    backfit: bool = False

    def __post_init__(self):
        if self.num_trees < 1:
            raise ParameterError(f"num_trees must be at least 1, got {self.num_trees}")
        if self.max_depth < 1 or self.min_leaf < 1 or self.split_candidates < 1:
            raise ParameterError("max_depth, min_leaf and split_candidates must be positive")
        if isinstance(self.mtry, str):
            if self.mtry not in ("sqrt", "all"):
                raise ParameterError(f"mtry must be a positive integer, 'sqrt' or 'all', got {self.mtry!r}")
        elif self.mtry < 1:
            raise ParameterError(f"mtry must be positive, got {self.mtry}")
        if self.importance_threshold < 0 or self.min_gain < 0:
            raise ParameterError("importance_threshold and min_gain must be non-negative")

    def resolve_mtry(self, num_features: int) -> int:
        """Features tried per node, clamped to the number of played variables."""
        if self.mtry == "all":
            return num_features
        if self.mtry == "sqrt":
            return max(1, int(math.sqrt(num_features)))
        return min(int(self.mtry), num_features)

    @classmethod
    def for_mode(cls, mode: str, **overrides) -> "ForestParams":
        """Preset for a feedback mode; overrides that are not None win."""
        if mode not in MODE_PRESETS:
            raise ParameterError(f"Forest feedback mode must be offline or online, got {mode!r}")
        values = dict(MODE_PRESETS[mode])
        values.update({key: value for key, value in overrides.items() if value is not None})
        return cls(**values)


@dataclass(frozen=True, eq=False)
class RegressionTree:
    """Array-encoded binary tree; `feature` is LEAF for terminal nodes."""

    feature: np.ndarray
    threshold: np.ndarray
    left: np.ndarray
    right: np.ndarray
    value: np.ndarray

    @property
    def num_splits(self) -> int:
        return int(np.count_nonzero(self.feature != LEAF))

    def split_counts(self, num_features: int) -> np.ndarray:
        used = self.feature[self.feature != LEAF]
        return np.bincount(used, minlength=num_features)

    def predict(self, x: np.ndarray) -> np.ndarray:
        node = np.zeros(x.shape[0], dtype=np.intp)
        while True:
            feature = self.feature[node]
            internal = feature != LEAF
            if not np.any(internal):
                return self.value[node]
            rows = np.flatnonzero(internal)
            go_left = x[rows, feature[rows]] <= self.threshold[node[rows]]
            node[rows] = np.where(go_left, self.left[node[rows]], self.right[node[rows]])


class _TreeBuilder:
    """Growable node arrays for one tree."""

    def __init__(self):
        self.feature: List[int] = []
        self.threshold: List[float] = []
        self.left: List[int] = []
        self.right: List[int] = []
        self.value: List[float] = []

    def add_leaf(self, value: float) -> int:
        self.feature.append(LEAF)
        self.threshold.append(0.0)
        self.left.append(LEAF)
        self.right.append(LEAF)
        self.value.append(float(value))
        return len(self.feature) - 1

    def make_split(self, node: int, feature: int, threshold: float, left: int, right: int):
        self.feature[node] = feature
        self.threshold[node] = float(threshold)
        self.left[node] = left
        self.right[node] = right

    def build(self) -> RegressionTree:
        return RegressionTree(
            feature=np.array(self.feature, dtype=np.intp),
            threshold=np.array(self.threshold, dtype=float),
            left=np.array(self.left, dtype=np.intp),
            right=np.array(self.right, dtype=np.intp),
            value=np.array(self.value, dtype=float),
        )


def _best_split(x: np.ndarray, y: np.ndarray, features: np.ndarray, params: ForestParams):
    """Best (gain, feature, cut) over the given features and their quantile cuts."""
    m = y.shape[0]
    xs = x[:, features]
    levels = np.linspace(0.0, 1.0, params.split_candidates + 2)[1:-1]
    cuts = np.quantile(xs, levels, axis=0)
    goes_left = (xs[:, None, :] <= cuts[None, :, :]).astype(float)
    n_left = goes_left.sum(axis=0)
    s_left = np.tensordot(y, goes_left, axes=(0, 0))
    n_right = m - n_left
    total = float(y.sum())
    s_right = total - s_left
    valid = (n_left >= params.min_leaf) & (n_right >= params.min_leaf)
    with np.errstate(divide="ignore", invalid="ignore"):
        gain = s_left**2 / n_left + s_right**2 / n_right - total**2 / m
    gain = np.where(valid, gain, -np.inf)
    flat = int(np.argmax(gain))
    c, f = np.unravel_index(flat, gain.shape)
    return float(gain[c, f]), int(features[f]), float(cuts[c, f])


def fit_tree(
    x: np.ndarray,
    y: np.ndarray,
    params: ForestParams,
    rng: np.random.Generator,
    reference_sse: Optional[float] = None,
) -> RegressionTree:
    """
    Grow one greedy tree on (x, y), resampling rows first when bootstrap is on.

    Splits must gain more than min_gain times `reference_sse`, which defaults to
    the sum of squares of the (resampled) response at the root.
    """
    n, k = x.shape
    if params.bootstrap:
        rows = rng.integers(0, n, size=n)
        x, y = x[rows], y[rows]
    mtry = params.resolve_mtry(k)
    root_sse = float(np.sum((y - y.mean()) ** 2)) if reference_sse is None else reference_sse
    required = params.min_gain * root_sse

    builder = _TreeBuilder()
    root = builder.add_leaf(y.mean())
    stack = [(root, np.arange(n), 0)]
    while stack:
        node, idx, depth = stack.pop()
        if depth >= params.max_depth or idx.shape[0] < 2 * params.min_leaf:
            continue
        y_node = y[idx]
        features = np.arange(k) if mtry == k else np.sort(rng.choice(k, size=mtry, replace=False))
        gain, feature, cut = _best_split(x[idx], y_node, features, params)
        floor = 1e-9 * (float(np.dot(y_node, y_node)) + 1.0)
        if not np.isfinite(gain) or gain <= max(required, floor):
            continue
        go_left = x[idx, feature] <= cut
        left_idx, right_idx = idx[go_left], idx[~go_left]
        left = builder.add_leaf(y[left_idx].mean())
        right = builder.add_leaf(y[right_idx].mean())
        builder.make_split(node, feature, cut, left, right)
        stack.append((right, right_idx, depth + 1))
        stack.append((left, left_idx, depth + 1))
    return builder.build()


@dataclass(frozen=True, eq=False)
class FittedForest:
    members: SuperArm
    trees: List[RegressionTree]
    split_counts: np.ndarray
    additive: bool = False

    @property
    def num_trees(self) -> int:
        return len(self.trees)

    def counts(self) -> dict:
        return dict(zip(self.members.members, self.split_counts.tolist()))

    def predict(self, x: np.ndarray) -> np.ndarray:
        """Sum (backfitted) or average (independent) of the tree predictions; `x` holds all p columns."""
        local = x[:, self.members.as_array()]
        predictions = [tree.predict(local) for tree in self.trees]
        return np.sum(predictions, axis=0) if self.additive else np.mean(predictions, axis=0)


def forest_fit(
    data: DataContext, subset: SuperArm, params: ForestParams, rng: np.random.Generator
) -> FittedForest:
    """
    Fit a forest on the columns in `subset` and count splits per variable.

    Each tree draws its own seed from `rng` before any fitting starts, so the
    per-tree substreams are fixed by the caller's stream alone. With backfit
    each tree fits the residual of the trees before it, and min_gain stays
    relative to the sum of squares of the original response.
    """
    if not len(subset):
        raise ParameterError("Cannot fit a forest on an empty subset")
    subset.validate(data.p)
    if data.n < 2 * params.min_leaf:
        raise ParameterError(
            f"Need at least {2 * params.min_leaf} rows for min_leaf={params.min_leaf}, got {data.n}"
        )
    x = data.x[:, subset.as_array()]
    seeds = rng.integers(0, np.iinfo(np.int64).max, size=params.num_trees)
    if params.backfit:
        residual = data.y.astype(float)
        reference = float(np.sum((residual - residual.mean()) ** 2))
        trees = []
        for s in seeds:
            tree = fit_tree(x, residual, params, np.random.default_rng(int(s)), reference_sse=reference)
            residual = residual - tree.predict(x)
            trees.append(tree)
    else:
        trees = [fit_tree(x, data.y, params, np.random.default_rng(int(s))) for s in seeds]
    counts = np.sum([tree.split_counts(len(subset)) for tree in trees], axis=0)
    logger.debug(f"Forest on {len(subset)} variables used {int(counts.sum())} splits")
    return FittedForest(
        members=subset, trees=trees, split_counts=counts.astype(np.int64), additive=params.backfit
    )
