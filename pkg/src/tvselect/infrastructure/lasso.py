"""Cyclic coordinate-descent lasso on standardized columns."""

import logging
from dataclasses import dataclass
from typing import Union

import numpy as np

from ..domain.models import ParameterError

logger = logging.getLogger(__name__)

AUTO_FRACTION = 0.5


def soft_threshold(z: float, t: float) -> float:
    return float(np.sign(z) * max(abs(z) - t, 0.0))


@dataclass(frozen=True, eq=False)
class LassoFit:
    beta: np.ndarray
    lam: float
    lambda_max: float
    sweeps: int
    converged: bool

    @property
    def support(self) -> np.ndarray:
        return self.beta != 0.0


def standardize(x: np.ndarray, y: np.ndarray):
    """Center and scale columns to unit (population) variance and center y."""
    center = x.mean(axis=0)
    scale = x.std(axis=0)
    scale = np.where(scale > 0, scale, 1.0)
    return (x - center) / scale, y - y.mean()


def lambda_max(x: np.ndarray, y: np.ndarray) -> float:
    """Smallest penalty at which the null model satisfies the KKT conditions."""
    return float(np.max(np.abs(x.T @ y)) / x.shape[0]) if x.shape[1] else 0.0


def fit_lasso(
    x: np.ndarray,
    y: np.ndarray,
    lam: Union[float, str] = "auto",
    tol: float = 1e-7,
    max_sweeps: int = 10_000,
) -> LassoFit:
    """
    Minimize ||y - x beta||^2 / (2n) + lam ||beta||_1 by cyclic coordinate descent.

    Expects standardized columns and centered y. "auto" uses half of lambda_max.
    Stops when the largest coefficient change in a sweep drops below `tol`.
    """
    n, k = x.shape
    if n < 2:
        raise ParameterError(f"Lasso needs at least 2 rows, got {n}")
    top = lambda_max(x, y)
    if lam == "auto":
        lam = AUTO_FRACTION * top
    lam = float(lam)
    if lam < 0:
        raise ParameterError(f"Lasso penalty must be non-negative, got {lam}")

    beta = np.zeros(k)
    if lam >= top:
        # at or above lambda_max the null model is the exact solution
        return LassoFit(beta=beta, lam=lam, lambda_max=top, sweeps=0, converged=True)

    col_norm = np.einsum("ij,ij->j", x, x) / n
    residual = y.astype(float).copy()
    converged = False
    sweeps = 0
    for sweeps in range(1, max_sweeps + 1):
        max_change = 0.0
        for j in range(k):
            if col_norm[j] == 0.0:
                continue
            old = beta[j]
            z = x[:, j] @ residual / n + col_norm[j] * old
            new = soft_threshold(z, lam) / col_norm[j]
            if new != old:
                residual -= x[:, j] * (new - old)
                beta[j] = new
                max_change = max(max_change, abs(new - old))
        if max_change < tol:
            converged = True
            break
    if not converged:
        logger.warning(f"Lasso hit the sweep cap ({max_sweeps}) at lambda={lam:.4g}; using last iterate")
    return LassoFit(beta=beta, lam=lam, lambda_max=top, sweeps=sweeps, converged=converged)
