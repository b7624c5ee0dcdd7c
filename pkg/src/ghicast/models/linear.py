"""Per-(site, issue hour, horizon) linear ARX model.

Ridge-penalized least squares solved through the normal equations with a
Cholesky factorization; lambda = 0 recovers ordinary least squares. The
intercept is never penalized.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from ..errors import ParameterError, SingularMatrixError


@dataclass(frozen=True)
class LinearArxModel:
    coefficients: np.ndarray  # (d,)
    intercept: float
    key: tuple | None = None  # (site_id, issue_hour_of_day, horizon)

    def __post_init__(self) -> None:
        if not np.all(np.isfinite(self.coefficients)) or not np.isfinite(self.intercept):
            raise ParameterError("linear model has non-finite parameters")

    def predict(self, x: np.ndarray) -> np.ndarray:
        return np.asarray(x) @ self.coefficients + self.intercept


def fit_linear_arx(
    x: np.ndarray, y: np.ndarray, ridge_lambda: float = 0.0, key: tuple | None = None
) -> LinearArxModel:
    """Fit one scalar-target ARX model.

    Requires at least max(10, 2*dim) samples. A rank-deficient design with
    lambda = 0 raises SingularMatrixError (advising a positive penalty).
    """
    x = np.asarray(x, dtype=np.float64)
    y = np.asarray(y, dtype=np.float64).ravel()
    if x.ndim != 2 or len(x) != len(y):
        raise ParameterError("design matrix and target shapes do not match")
    if ridge_lambda < 0.0:
        raise ParameterError("ridge penalty must be >= 0")
    n, d = x.shape
    if n < max(10, 2 * d):
        raise ParameterError(f"need at least {max(10, 2 * d)} samples for {d} features, got {n}")

    a = np.concatenate([x, np.ones((n, 1))], axis=1)
    gram = a.T @ a
    if ridge_lambda > 0.0:
        gram[np.arange(d), np.arange(d)] += ridge_lambda
    rhs = a.T @ y
    try:
        chol = np.linalg.cholesky(gram)
    except np.linalg.LinAlgError:
        raise SingularMatrixError(
            "normal equations are singular; use ridge_lambda > 0"
        ) from None
    # rank-deficiency shows up as a collapsed Cholesky pivot
    pivots = np.diag(chol) ** 2
    tol = (d + 1) * np.finfo(np.float64).eps * float(np.max(np.diag(gram)))
    if ridge_lambda == 0.0 and float(np.min(pivots)) <= tol:
        raise SingularMatrixError("normal equations are singular; use ridge_lambda > 0")
    beta = np.linalg.solve(chol.T, np.linalg.solve(chol, rhs))
    if not np.all(np.isfinite(beta)):
        raise SingularMatrixError("normal equations are ill-conditioned; use ridge_lambda > 0")
    return LinearArxModel(coefficients=beta[:d], intercept=float(beta[d]), key=key)
