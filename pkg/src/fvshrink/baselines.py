"""Comparison estimators: OLS and intercept-unpenalized ridge.

Ridge solves ``min_b ||y - X b||^2 + lambda ||b_{-1}||^2``.  The intercept is
handled by centering ``y`` and the non-intercept columns, so one SVD of the
centered block serves the whole ``lambda`` path.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Optional

import numpy as np

from .errors import InputError, ParameterError, SingularityError
from .linalg import DesignMatrix, reduced_svd
from .shrinkage import ShrinkageFit, fit_fvs
from .tuning import fold_partition

# {10^(-7 + 0.25 j) : j = 0..44}
DEFAULT_LAMBDA_GRID = tuple(10.0 ** (-7 + 0.25 * j) for j in range(45))


@dataclass(frozen=True)
class RidgePathFit:
    lambdas: np.ndarray
    coefficients: np.ndarray  # (len(lambdas), p)
    fitted: np.ndarray  # (len(lambdas), n)
    standardized: bool
    transform: Optional[np.ndarray] = None

    def at(self, index: int) -> tuple[np.ndarray, np.ndarray]:
        return self.coefficients[index], self.fitted[index]


def _raw(x) -> np.ndarray:
    return np.asarray(x.data if isinstance(x, DesignMatrix) else x, dtype=float)


def ols_fit(x, y) -> ShrinkageFit:
    """Minimum-norm least squares ``X^- y``; the ``gamma = 1`` FVS fit."""
    return fit_fvs(x, y, 1.0)


def standardization_transform(x) -> np.ndarray:
    """``T`` such that the non-intercept columns of ``X T`` have mean 0, SD 1.

    The SD uses the ``n - 1`` divisor.  Row 0 holds ``-mean_j / sd_j`` and
    the diagonal holds ``1 / sd_j``.
    """
    data = _raw(x)
    n, p = data.shape
    if n < 2:
        raise InputError("standardization needs at least two rows")
    t = np.eye(p)
    means = data[:, 1:].mean(axis=0)
    sds = data[:, 1:].std(axis=0, ddof=1)
    for j, sd in enumerate(sds, start=1):
        if not sd > 1e-12:
            raise SingularityError(f"column {j} is constant and cannot be standardized")
    t[0, 1:] = -means / sds
    t[np.arange(1, p), np.arange(1, p)] = 1.0 / sds
    return t


def ridge_path(x, y, lambdas=DEFAULT_LAMBDA_GRID, standardize: bool = False) -> RidgePathFit:
    """Intercept-unpenalized ridge along a grid of ``lambda`` values.

    With ``standardize`` the fit is computed on ``X T`` (see
    :func:`standardization_transform`) and mapped back through
    ``b = T b_std`` so that ``X b`` equals the standardized fit.
    """
    data = _raw(x)
    y = np.asarray(y, dtype=float)
    n, p = data.shape
    if y.shape != (n,):
        raise InputError(f"y must have length {n}")
    lambdas = np.asarray(lambdas, dtype=float)
    if lambdas.ndim != 1 or lambdas.size == 0 or np.any(lambdas <= 0):
        raise ParameterError("lambda grid must be non-empty and strictly positive")
    t = standardization_transform(data) if standardize else None
    work = data @ t if standardize else data

    ybar = y.mean()
    coefs = np.zeros((lambdas.size, p))
    fitted = np.full((lambdas.size, n), ybar)
    if p > 1:
        means = work[:, 1:].mean(axis=0)
        centered = work[:, 1:] - means
        svd = reduced_svd(centered) if np.any(centered) else None
        if svd is not None:
            uy = svd.u.T @ (y - ybar)
            # (L, q) spectral coefficients d / (d^2 + lambda)
            filt = svd.d[None, :] / (svd.d[None, :] ** 2 + lambdas[:, None])
            slopes = (filt * uy[None, :]) @ svd.v.T
            coefs[:, 1:] = slopes
            coefs[:, 0] = ybar - slopes @ means
            fitted = ybar + (filt * svd.d[None, :] * uy[None, :]) @ svd.u.T
        else:
            coefs[:, 0] = ybar
    else:
        coefs[:, 0] = ybar
    if standardize:
        coefs = coefs @ t.T
    return RidgePathFit(lambdas=lambdas, coefficients=coefs, fitted=fitted,
                        standardized=standardize, transform=t)


def ridge_cv_errors(x, y, lambdas=DEFAULT_LAMBDA_GRID, folds=10, rng=None,
                    standardize: bool = True) -> np.ndarray:
    """Total held-out squared error for every ``lambda``; standardization is
    recomputed on each training fold."""
    data = _raw(x)
    y = np.asarray(y, dtype=float)
    lambdas = np.asarray(lambdas, dtype=float)
    parts = fold_partition(data.shape[0], folds, rng if rng is not None else 0) \
        if isinstance(folds, (int, np.integer)) else [np.asarray(f) for f in folds]
    total = np.zeros(lambdas.size)
    mask = np.zeros(data.shape[0], dtype=bool)
    for test in parts:
        mask[:] = True
        mask[test] = False
        path = ridge_path(data[mask], y[mask], lambdas, standardize=standardize)
        pred = path.coefficients @ data[test].T
        total += np.sum((y[test][None, :] - pred) ** 2, axis=1)
    return total


def ridge_cv(x, y, lambdas=DEFAULT_LAMBDA_GRID, folds=10, rng=None,
             standardize: bool = True) -> tuple[float, np.ndarray, np.ndarray]:
    """Cross-validated ridge: ``(lambda, coefficients, fitted)`` on the full data."""
    lambdas = np.asarray(lambdas, dtype=float)
    errors = ridge_cv_errors(x, y, lambdas, folds, rng, standardize)
    best = int(np.argmin(errors))
    path = ridge_path(x, y, lambdas[best:best + 1], standardize=standardize)
    return float(lambdas[best]), path.coefficients[0], path.fitted[0]
