"""Fitted-value shrinkage (FVS) estimator.

The fitted values are the convex combination

    X b(gamma) = gamma * P_X y + (1 - gamma) * P_0 y

where ``P_0`` projects onto the ones vector (the default target) or onto the
span of a submodel's columns.  Coefficients are the minimum-norm
representative ``X^- (fitted)``.  Because ``P_X`` depends on ``X`` only
through its column span, the fitted values do not change when ``X`` is
replaced by ``X T`` for an invertible ``T``.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Optional

import numpy as np

from .errors import InputError, ParameterError, RankError
from .linalg import DesignMatrix, as_design


@dataclass(frozen=True)
class ShrinkageFit:
    gamma: float
    coefficients: np.ndarray
    fitted: np.ndarray
    target: str | tuple[int, ...] = "intercept"
    sigma_hat2: Optional[float] = None
    rank: int = 0


def _check_gamma(gamma) -> float:
    gamma = float(gamma)
    if not 0.0 <= gamma <= 1.0:
        raise ParameterError(f"gamma must lie in [0, 1], got {gamma}")
    return gamma


def _check_y(x: DesignMatrix, y) -> np.ndarray:
    y = np.asarray(y, dtype=float)
    if y.ndim != 1 or y.shape[0] != x.n:
        raise InputError(f"y must be a vector of length {x.n}, got shape {y.shape}")
    if not np.all(np.isfinite(y)):
        raise InputError("y contains non-finite entries")
    return y


def _residual_variance(x: DesignMatrix, y: np.ndarray, fitted_ls: np.ndarray):
    if x.n <= x.rank:
        return None
    return float(np.sum((y - fitted_ls) ** 2) / (x.n - x.rank))


def fit_fvs(x, y, gamma: float) -> ShrinkageFit:
    """Shrink least-squares fitted values toward the intercept-only fit."""
    x = as_design(x)
    y = _check_y(x, y)
    gamma = _check_gamma(gamma)
    if x.rank < 2:
        raise RankError(f"FVS needs rank(X) >= 2, got {x.rank}")
    ybar = y.mean()
    fitted_ls = x.project(y)
    fitted = gamma * fitted_ls + (1.0 - gamma) * ybar
    coef = x.pinv_apply(gamma * y + (1.0 - gamma) * ybar)
    return ShrinkageFit(gamma=gamma, coefficients=coef, fitted=fitted,
                        sigma_hat2=_residual_variance(x, y, fitted_ls), rank=x.rank)


def submodel_design(x: DesignMatrix, submodel_cols) -> DesignMatrix:
    """Validate a submodel column set and return its design ``X_0``.

    Columns are zero-based; the set must contain the intercept column 0 and
    be a proper subset of ``range(p)``.
    """
    cols = sorted({int(c) for c in submodel_cols})
    if not cols or cols[0] != 0:
        raise InputError("submodel must contain the intercept column 0")
    if cols[-1] >= x.p:
        raise InputError(f"submodel column {cols[-1]} out of range for p={x.p}")
    if len(cols) >= x.p:
        raise InputError("submodel must be a proper subset of the columns of X")
    x0 = DesignMatrix(x.data[:, cols], require_intercept=False, rtol=x.rtol)
    if x.rank - x0.rank < 1:
        raise RankError(f"rank(X) - rank(X0) must be >= 1, got "
                        f"{x.rank} - {x0.rank}")
    return x0


def fit_fvs_submodel(x, submodel_cols, y, gamma: float) -> ShrinkageFit:
    """Shrink least-squares fitted values toward a submodel's fitted values."""
    x = as_design(x)
    y = _check_y(x, y)
    gamma = _check_gamma(gamma)
    x0 = submodel_design(x, submodel_cols)
    fitted_ls = x.project(y)
    fitted = gamma * fitted_ls + (1.0 - gamma) * x0.project(y)
    cols = tuple(sorted({int(c) for c in submodel_cols}))
    return ShrinkageFit(gamma=gamma, coefficients=x.pinv_apply(fitted),
                        fitted=fitted, target="intercept" if cols == (0,) else cols,
                        sigma_hat2=_residual_variance(x, y, fitted_ls), rank=x.rank)


def predict(fit: ShrinkageFit, x_new) -> np.ndarray:
    """Predict from the minimum-norm coefficient vector.

    Unlike in-sample fitted values, predictions at new rows depend on the
    parametrization of ``X`` when ``rank(X) < p``.
    """
    x_new = np.asarray(x_new.data if isinstance(x_new, DesignMatrix) else x_new,
                       dtype=float)
    x_new = np.atleast_2d(x_new)
    if x_new.shape[1] != fit.coefficients.shape[0]:
        raise InputError(f"X_new has {x_new.shape[1]} columns, expected "
                         f"{fit.coefficients.shape[0]}")
    return x_new @ fit.coefficients
