"""
Synthetic regression setups, mini-batch partitioning and bootstrap passes.

Every generator draws covariates first, then the mean function (forest setup
only), then the noise, all from the one generator it is given, so a seed fixes
the dataset bit for bit. The first five columns carry the signal.
"""

import logging
from dataclasses import dataclass
from typing import Callable, Dict, List, Optional

import numpy as np
from scipy.stats import norm

from ..domain.models import DataContext, ParameterError, SuperArm
from .forest import LEAF, RegressionTree

logger = logging.getLogger(__name__)

NUM_SIGNALS = 5
FRIEDMAN_LATENT_RHO = 0.3
LINEAR_RHO = 0.9
FOREST_RHO = 0.3
GEN_TREE_MAX_DEPTH = 6

SETUPS = ("friedman", "linear", "liang", "forest")

# (n, p, sigma2) used when a config leaves them out
PRESETS: Dict[str, Dict[str, float]] = {
    "friedman": {"n": 300, "p": 10_000, "sigma2": 1.0},
    "linear": {"n": 300, "p": 1_000, "sigma2": 5.0},
    "liang": {"n": 20_000, "p": 1_000, "sigma2": 0.5},
    "forest": {"n": 300, "p": 1_000, "sigma2": 0.5},
}


@dataclass(frozen=True, eq=False)
class Dataset:
    """Design matrix, response and the known support of a synthetic setup."""

    x: np.ndarray
    y: np.ndarray
    true_support: SuperArm
    sigma2: float
    setup_tag: str
    f0: Optional[np.ndarray] = None
    mean_fn: Optional[Callable[[np.ndarray], np.ndarray]] = None

    def __post_init__(self):
        if self.x.ndim != 2 or self.y.shape != (self.x.shape[0],):
            raise ParameterError(f"Inconsistent dataset shapes x={self.x.shape}, y={self.y.shape}")
        self.true_support.validate(self.x.shape[1])

    @property
    def n(self) -> int:
        return int(self.x.shape[0])

    @property
    def p(self) -> int:
        return int(self.x.shape[1])

    def context(self) -> DataContext:
        return DataContext(self.x, self.y)


@dataclass(frozen=True, eq=False)
class BatchPlan:
    """One mini-batch view: rows `order` of the dataset, in pass `round`."""

    batch_size: int
    num_batches: int
    order: np.ndarray
    round: int
    index: int = 0

    def slice(self, data: Dataset) -> DataContext:
        return DataContext(data.x[self.order], data.y[self.order])


def _check_p(p: int) -> None:
    if p < NUM_SIGNALS:
        raise ParameterError(f"Synthetic setups need p >= {NUM_SIGNALS}, got {p}")


def _check_n(n: int) -> None:
    if n < 1:
        raise ParameterError(f"Sample size must be positive, got {n}")


def _ar1_gaussian(n: int, p: int, rho: float, rng: np.random.Generator) -> np.ndarray:
    """Rows iid N(0, Sigma) with Sigma_jk = rho^|j-k|, built column by column."""
    eps = rng.standard_normal((n, p))
    x = np.empty((n, p))
    x[:, 0] = eps[:, 0]
    scale = np.sqrt(1.0 - rho**2)
    for j in range(1, p):
        x[:, j] = rho * x[:, j - 1] + scale * eps[:, j]
    return x


def _finish(x, mean_fn, sigma2, tag, rng) -> Dataset:
    if sigma2 < 0:
        raise ParameterError(f"Noise variance must be non-negative, got {sigma2}")
    f0 = mean_fn(x)
    y = f0 + np.sqrt(sigma2) * rng.standard_normal(x.shape[0])
    logger.debug(f"Generated {tag} dataset n={x.shape[0]} p={x.shape[1]} sigma2={sigma2}")
    return Dataset(
        x=x,
        y=y,
        true_support=SuperArm(tuple(range(NUM_SIGNALS))),
        sigma2=float(sigma2),
        setup_tag=tag,
        f0=f0,
        mean_fn=mean_fn,
    )


def friedman_mean(x: np.ndarray) -> np.ndarray:
    """10 sin(pi x1 x2) + 20 (x3 - 0.5)^2 + 10 x4 + 5 x5."""
    x = np.atleast_2d(x)
    return (
        10.0 * np.sin(np.pi * x[:, 0] * x[:, 1])
        + 20.0 * (x[:, 2] - 0.5) ** 2
        + 10.0 * x[:, 3]
        + 5.0 * x[:, 4]
    )


def linear_mean(x: np.ndarray) -> np.ndarray:
    x = np.atleast_2d(x)
    return x[:, :NUM_SIGNALS] @ np.array([1.0, 2.0, 3.0, -2.0, -1.0])


def liang_mean(x: np.ndarray) -> np.ndarray:
    """10 x2 / (1 + x1^2) + 5 sin(x3 x4) + 2 x5."""
    x = np.atleast_2d(x)
    return 10.0 * x[:, 1] / (1.0 + x[:, 0] ** 2) + 5.0 * np.sin(x[:, 2] * x[:, 3]) + 2.0 * x[:, 4]


def gen_friedman(
    n: int = 300,
    p: int = 10_000,
    sigma2: float = 1.0,
    correlated: bool = False,
    rng: Optional[np.random.Generator] = None,
) -> Dataset:
    """
    Friedman benchmark on the unit cube.

    With `correlated` the covariates come from an equicorrelated Gaussian latent
    (correlation 0.3) pushed through the standard normal CDF.
    """
    _check_p(p)
    _check_n(n)
    rng = rng if rng is not None else np.random.default_rng()
    if correlated:
        common = rng.standard_normal((n, 1))
        latent = np.sqrt(FRIEDMAN_LATENT_RHO) * common + np.sqrt(1.0 - FRIEDMAN_LATENT_RHO) * rng.standard_normal((n, p))
        x = norm.cdf(latent)
    else:
        x = rng.random((n, p))
    return _finish(x, friedman_mean, sigma2, "friedman", rng)


def gen_linear(
    n: int = 300,
    p: int = 1_000,
    sigma2: float = 5.0,
    rng: Optional[np.random.Generator] = None,
) -> Dataset:
    _check_p(p)
    _check_n(n)
    rng = rng if rng is not None else np.random.default_rng()
    x = _ar1_gaussian(n, p, LINEAR_RHO, rng)
    return _finish(x, linear_mean, sigma2, "linear", rng)


def gen_liang(
    n: int = 20_000,
    p: int = 1_000,
    sigma2: float = 0.5,
    rng: Optional[np.random.Generator] = None,
) -> Dataset:
    """Covariates (e_i + z_ij) / 2 share a common factor, pairwise correlation 0.5."""
    _check_p(p)
    _check_n(n)
    rng = rng if rng is not None else np.random.default_rng()
    e = rng.standard_normal((n, 1))
    z = rng.standard_normal((n, p))
    x = (e + z) / 2.0
    return _finish(x, liang_mean, sigma2, "liang", rng)


@dataclass(frozen=True, eq=False)
class ForestMeanFunction:
    """Sum of random trees over the signal columns, scaled to unit sample sd."""

    trees: List[RegressionTree]
    scale: float = 1.0

    def __call__(self, x: np.ndarray) -> np.ndarray:
        x = np.atleast_2d(x)
        if not self.trees:
            return np.zeros(x.shape[0])
        total = np.zeros(x.shape[0])
        for tree in self.trees:
            total += tree.predict(x)
        return self.scale * total


def _random_tree(x: np.ndarray, leaf_sd: float, rng: np.random.Generator) -> RegressionTree:
    """
    One tree from a BART-like prior: a node at depth d splits with probability
    0.95 (1 + d)^-2 on a signal column, at a random marginal sample quantile.
    """
    feature, threshold, left, right, value = [], [], [], [], []

    def new_node() -> int:
        feature.append(LEAF)
        threshold.append(0.0)
        left.append(LEAF)
        right.append(LEAF)
        value.append(0.0)
        return len(feature) - 1

    stack = [(new_node(), 0)]
    while stack:
        node, depth = stack.pop()
        if depth < GEN_TREE_MAX_DEPTH and rng.random() < 0.95 * (1.0 + depth) ** -2:
            column = int(rng.integers(0, NUM_SIGNALS))
            cut = float(np.quantile(x[:, column], rng.uniform(0.05, 0.95)))
            lo, hi = new_node(), new_node()
            feature[node], threshold[node], left[node], right[node] = column, cut, lo, hi
            stack.append((hi, depth + 1))
            stack.append((lo, depth + 1))
        else:
            value[node] = float(rng.normal(0.0, leaf_sd))
    return RegressionTree(
        feature=np.array(feature, dtype=np.intp),
        threshold=np.array(threshold, dtype=float),
        left=np.array(left, dtype=np.intp),
        right=np.array(right, dtype=np.intp),
        value=np.array(value, dtype=float),
    )


def gen_forest(
    n: int = 300,
    p: int = 1_000,
    sigma2: float = 0.5,
    num_gen_trees: int = 200,
    rng: Optional[np.random.Generator] = None,
) -> Dataset:
    """
    Mean function drawn as a sum of `num_gen_trees` random trees on the first
    five columns (leaf sd 1/sqrt(num_gen_trees)), then rescaled to unit sample
    standard deviation. Covariates are AR(1) Gaussian with correlation 0.3.
    """
    _check_p(p)
    _check_n(n)
    if num_gen_trees < 0:
        raise ParameterError(f"num_gen_trees must be non-negative, got {num_gen_trees}")
    rng = rng if rng is not None else np.random.default_rng()
    x = _ar1_gaussian(n, p, FOREST_RHO, rng)
    leaf_sd = 1.0 / np.sqrt(max(num_gen_trees, 1))
    trees = [_random_tree(x, leaf_sd, rng) for _ in range(num_gen_trees)]
    mean_fn = ForestMeanFunction(trees)
    raw = mean_fn(x)
    sd = float(raw.std())
    if sd > 0:
        mean_fn = ForestMeanFunction(trees, scale=1.0 / sd)
    return _finish(x, mean_fn, sigma2, "forest", rng)


GENERATORS: Dict[str, Callable[..., Dataset]] = {
    "friedman": gen_friedman,
    "linear": gen_linear,
    "liang": gen_liang,
    "forest": gen_forest,
}


def generate(setup: str, rng: np.random.Generator, **params) -> Dataset:
    """Dispatch on the setup tag, filling missing (n, p, sigma2) from PRESETS."""
    if setup not in GENERATORS:
        raise ParameterError(f"Unknown setup {setup!r}; expected one of {', '.join(SETUPS)}")
    kwargs = dict(PRESETS[setup])
    kwargs.update({k: v for k, v in params.items() if v is not None})
    if setup != "friedman":
        kwargs.pop("correlated", None)
    if setup != "forest":
        kwargs.pop("num_gen_trees", None)
    return GENERATORS[setup](rng=rng, **kwargs)


def make_batches(data: Dataset, s: int, rounds: int, rng: np.random.Generator) -> List[BatchPlan]:
    """
    Mini-batches for `rounds` passes over the data.

    Pass 1 chops the rows in their original order into floor(n/s) disjoint
    batches; every later pass chops a bootstrap resample of all n rows.
    Leftover rows of a pass are not used.
    """
    n = data.n
    if s < 1 or s > n:
        raise ParameterError(f"Batch size must lie in [1, n={n}], got {s}")
    if rounds < 1:
        raise ParameterError(f"rounds must be at least 1, got {rounds}")
    num_batches = n // s
    plans = []
    for r in range(1, rounds + 1):
        rows = np.arange(n) if r == 1 else rng.integers(0, n, size=n)
        for t in range(num_batches):
            plans.append(
                BatchPlan(
                    batch_size=s,
                    num_batches=num_batches,
                    order=rows[t * s:(t + 1) * s],
                    round=r,
                    index=t,
                )
            )
    logger.debug(f"Planned {len(plans)} batches of {s} rows over {rounds} rounds")
    return plans
