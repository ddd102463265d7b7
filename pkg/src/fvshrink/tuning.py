"""Selectors for the shrinkage weight ``gamma``.

The expected same-X risk of the FVS fit is

    sigma^2 (gamma^2 r + 1 - gamma^2) + (1 - gamma)^2 delta^2,

with ``r = rank(X)`` and ``delta^2 = ||mu - P_1 mu||^2``; it is minimized
at ``gamma_opt = delta^2 / (sigma^2 (r - 1) + delta^2)``.  Everything here
estimates that quantity: F-ratio plug-ins when ``n > rank(X)``, plug-ins
built on a ridge-type variance estimate when ``rank(X) = n``, and k-fold
cross-validation.
"""

from __future__ import annotations

import math
from dataclasses import asdict, dataclass, field
from enum import Enum
from typing import Optional, Sequence

import numpy as np

from .errors import InputError, NumericalError, ParameterError, RankError, RegimeError
from .linalg import DesignMatrix, PenalizedGram, as_design
from .probability import as_generator, f_quantile
from .shrinkage import submodel_design


class Method(str, Enum):
    ORACLE = "oracle"
    F_RATIO = "f_ratio"
    F_RATIO_Q90 = "f_ratio_q90"
    F_RATIO_Q95 = "f_ratio_q95"
    F_RATIO_REP = "f_ratio_rep"
    CV = "cv"
    HIGHDIM_BAR = "highdim_bar"
    HIGHDIM_BAR_CORRECTED = "highdim_bar_corrected"
    SUBMODEL_F_RATIO = "submodel_f_ratio"
    SUBMODEL_ORACLE = "submodel_oracle"


F_BASED = {Method.F_RATIO, Method.F_RATIO_Q90, Method.F_RATIO_Q95,
           Method.F_RATIO_REP, Method.SUBMODEL_F_RATIO}
HIGH_DIM = {Method.HIGHDIM_BAR, Method.HIGHDIM_BAR_CORRECTED, Method.F_RATIO_REP}

LEVELS = {"q90": 0.9, "q95": 0.95}

# default CV grid {k / 99 : k = 0..99}
DEFAULT_CV_GRID = tuple(k / 99 for k in range(100))


class InfiniteFError(NumericalError):
    """The residual variance is zero while the regression sum of squares is not."""


@dataclass(frozen=True)
class TuningResult:
    gamma: float
    method: Method
    f_stat: Optional[float] = None
    sigma2_estimate: Optional[float] = None
    alpha: Optional[float] = None
    clamped: bool = False
    extras: dict = field(default_factory=dict)

    def to_dict(self) -> dict:
        out = asdict(self)
        out["method"] = self.method.value
        if out["f_stat"] is not None and math.isinf(out["f_stat"]):
            out["f_stat"] = "inf"
        return out


def _check_y(x: DesignMatrix, y) -> np.ndarray:
    y = np.asarray(y, dtype=float)
    if y.ndim != 1 or y.shape[0] != x.n:
        raise InputError(f"y must be a vector of length {x.n}, got shape {y.shape}")
    return y


def _negligible(value: float, y: np.ndarray) -> bool:
    # sums of squares at rounding level relative to ||y||^2
    return value <= (1e-13 * float(np.linalg.norm(y))) ** 2 * max(len(y), 1)


# --- low-dimensional F-based selectors --------------------------------------

def sigma_hat2(x, y) -> float:
    """Unbiased residual variance ``||y - P_X y||^2 / (n - rank(X))``."""
    x = as_design(x)
    y = _check_y(x, y)
    if x.n <= x.rank:
        raise RegimeError(f"residual variance unavailable: n={x.n} <= rank(X)={x.rank}")
    return float(np.sum((y - x.project(y)) ** 2) / (x.n - x.rank))


def _f_from_parts(between: float, rss: float, df1: int, df2: int, y) -> float:
    if _negligible(between, y):
        return 0.0
    if _negligible(rss, y):
        raise InfiniteFError("zero residual variance: the F statistic is infinite")
    return (between / df1) / (rss / df2)


def f_statistic(x, y) -> float:
    """F statistic of the full model against the intercept-only model."""
    x = as_design(x)
    y = _check_y(x, y)
    if x.rank < 2:
        raise RankError(f"F statistic needs rank(X) >= 2, got {x.rank}")
    if x.n <= x.rank:
        raise RegimeError(f"F statistic unavailable: n={x.n} <= rank(X)={x.rank}")
    fitted = x.project(y)
    between = float(np.sum((fitted - y.mean()) ** 2))
    rss = float(np.sum((y - fitted) ** 2))
    return _f_from_parts(between, rss, x.rank - 1, x.n - x.rank, y)


def gamma_hat(f: float) -> float:
    """``(1 - 1/F) 1(F > 1)``; ``F = inf`` maps to 1."""
    f = float(f)
    if f < 0 or math.isnan(f):
        raise ParameterError(f"F must be nonnegative, got {f}")
    if f <= 1.0:
        return 0.0
    return 1.0 - 1.0 / f


def gamma_hat_thresholded(f: float, level, d1: int, d2: int) -> float:
    """``(1 - 1/F) 1(F >= f_q)`` with ``f_q`` the central F quantile.

    ``level`` is ``"q90"``, ``"q95"`` or a probability in ``(0, 1)``.
    """
    f = float(f)
    if f < 0 or math.isnan(f):
        raise ParameterError(f"F must be nonnegative, got {f}")
    q = LEVELS.get(level, level)
    threshold = f_quantile(float(q), d1, d2)
    if f >= threshold and f > 0:
        return 1.0 - 1.0 / f
    return 0.0


def gamma_opt(delta2: float, sigma2: float, r: int) -> float:
    """Risk-minimizing weight ``delta2 / (sigma2 (r - 1) + delta2)``."""
    if r < 2:
        raise ParameterError(f"r must be >= 2, got {r}")
    if delta2 < 0 or not sigma2 > 0:
        raise ParameterError("need delta2 >= 0 and sigma2 > 0")
    return float(delta2 / (sigma2 * (r - 1) + delta2))


def gamma_opt_submodel(delta2: float, sigma2: float, r: int, r0: int) -> float:
    """Submodel analogue of :func:`gamma_opt` with ``r - r0`` degrees of freedom."""
    if r - r0 < 1:
        raise ParameterError(f"need rank gap r - r0 >= 1, got {r - r0}")
    if delta2 < 0 or not sigma2 > 0:
        raise ParameterError("need delta2 >= 0 and sigma2 > 0")
    return float(delta2 / (sigma2 * (r - r0) + delta2))


def fvs_risk(gamma, delta2: float, sigma2: float, r: int, r0: int = 1):
    """Expected ``||X b(gamma) - mu||^2`` (not divided by n)."""
    gamma = np.asarray(gamma, dtype=float)
    return sigma2 * (gamma ** 2 * r + (1 - gamma ** 2) * r0) + (1 - gamma) ** 2 * delta2


def select_f_ratio(x, y, level=None) -> TuningResult:
    """``gamma_hat`` or its thresholded variants as a :class:`TuningResult`."""
    x = as_design(x)
    y = _check_y(x, y)
    method = {None: Method.F_RATIO, "q90": Method.F_RATIO_Q90,
              "q95": Method.F_RATIO_Q95}.get(level)
    if method is None:
        raise ParameterError(f"unknown threshold level {level!r}")
    s2 = sigma_hat2(x, y)
    try:
        f = f_statistic(x, y)
    except InfiniteFError:
        return TuningResult(1.0, method, f_stat=math.inf, sigma2_estimate=s2)
    if level is None:
        g = gamma_hat(f)
    else:
        g = gamma_hat_thresholded(f, level, x.rank - 1, x.n - x.rank)
    return TuningResult(g, method, f_stat=f, sigma2_estimate=s2)


def gamma_tilde_submodel(x, submodel_cols, y, thresholded=None) -> TuningResult:
    """F-ratio selector for shrinkage toward a submodel's fitted values."""
    x = as_design(x)
    y = _check_y(x, y)
    x0 = submodel_design(x, submodel_cols)
    if x.n <= x.rank:
        raise RegimeError(f"F statistic unavailable: n={x.n} <= rank(X)={x.rank}")
    fitted = x.project(y)
    between = float(np.sum((fitted - x0.project(y)) ** 2))
    rss = float(np.sum((y - fitted) ** 2))
    df1, df2 = x.rank - x0.rank, x.n - x.rank
    s2 = rss / df2
    extras = {"rank_submodel": x0.rank}
    if thresholded is not None:
        extras["level"] = thresholded
    try:
        f = _f_from_parts(between, rss, df1, df2, y)
    except InfiniteFError:
        return TuningResult(1.0, Method.SUBMODEL_F_RATIO, f_stat=math.inf,
                            sigma2_estimate=s2, extras=extras)
    if thresholded is None:
        g = gamma_hat(f)
    else:
        g = gamma_hat_thresholded(f, thresholded, df1, df2)
    return TuningResult(g, Method.SUBMODEL_F_RATIO, f_stat=f, sigma2_estimate=s2,
                        extras=extras)


# --- high-dimensional selectors ---------------------------------------------

def k_matrix_apply(x, alpha: float, y) -> np.ndarray:
    """``K y`` for ``K = X (X'X + 2 n alpha M)^-1 X'``."""
    x = as_design(x)
    y = _check_y(x, y)
    gram = PenalizedGram(x, alpha)
    return x.data @ gram.solve(x.data.T @ y)


def k_trace(x, alpha: float) -> float:
    return PenalizedGram(as_design(x), alpha).trace


def sigma_check2(x, y, alpha: float, corrected: bool = False) -> float:
    """Ridge-type variance estimate ``n^-1 y'(I - K) y``.

    With ``corrected`` the estimate is divided by ``C = 1 - tr(K)/rank(X)``.
    """
    x = as_design(x)
    y = _check_y(x, y)
    gram = PenalizedGram(x, alpha)
    s2 = gram.residual_quadform(y) / x.n
    if corrected:
        c = 1.0 - gram.trace / x.rank
        if c <= 1e-10:
            raise NumericalError(f"bias correction degenerate: C = {c:.3g}")
        s2 /= c
    return s2


def alpha_schedule(t: float, y, n: int | None = None) -> float:
    """``alpha = n^t / (2 ||y - ybar 1||^2)``."""
    y = np.asarray(y, dtype=float)
    n = len(y) if n is None else n
    ss = float(np.sum((y - y.mean()) ** 2))
    if _negligible(ss, y) or ss == 0.0:
        raise ZeroDivisionError("alpha schedule undefined for a constant response")
    return float(n) ** float(t) / (2.0 * ss)


def gamma_bar(x, y, alpha: float, corrected: bool = False) -> TuningResult:
    """Plug-in ``gamma_opt`` estimate built on :func:`sigma_check2`.

    Uncorrected::

        y'(I - P_1 - (r-1)/r (I - K)) y / y'(I - P_1) y

    Corrected replaces ``(r-1)/r`` by ``(r-1)/(r - tr K)`` and truncates at
    zero.  Both are clamped at one; ``clamped`` records when that happened.
    """
    x = as_design(x)
    y = _check_y(x, y)
    r = x.rank
    if r < 2:
        raise RankError(f"need rank(X) >= 2, got {r}")
    ss = float(np.sum((y - y.mean()) ** 2))
    if ss == 0.0 or _negligible(ss, y):
        raise ZeroDivisionError("gamma_bar undefined for a constant response")
    gram = PenalizedGram(x, alpha)
    resid = gram.residual_quadform(y)
    tr = gram.trace
    if corrected:
        if r - tr <= 1e-10:
            raise NumericalError(f"rank(X) - tr(K) = {r - tr:.3g} is degenerate")
        value = 1.0 - (r - 1) / (r - tr) * resid / ss
        method = Method.HIGHDIM_BAR_CORRECTED
        s2 = resid / x.n / (1.0 - tr / r)
    else:
        value = 1.0 - (r - 1) / r * resid / ss
        method = Method.HIGHDIM_BAR
        s2 = resid / x.n
    clamped = value > 1.0
    g = min(max(value, 0.0), 1.0)
    return TuningResult(g, method, sigma2_estimate=s2, alpha=float(alpha),
                        clamped=clamped, extras={"trace_k": tr, "raw": value})


def gamma_rep_lowdim(x, y, alpha: float) -> TuningResult:
    """``max(0, 1 - 1/F_rep)`` where ``F_rep`` uses :func:`sigma_check2`.

    ``F_rep = ||P_X y - P_1 y||^2 / (sigma_check2 (r - 1))``.  When
    ``rank(X) = n`` this coincides with the uncorrected plug-in of
    :func:`gamma_bar` up to the ``n`` versus ``r`` normalisation.
    """
    x = as_design(x)
    y = _check_y(x, y)
    if x.rank < 2:
        raise RankError(f"need rank(X) >= 2, got {x.rank}")
    s2 = sigma_check2(x, y, alpha)
    between = float(np.sum((x.project(y) - y.mean()) ** 2))
    if _negligible(between, y):
        return TuningResult(0.0, Method.F_RATIO_REP, f_stat=0.0, sigma2_estimate=s2,
                            alpha=float(alpha))
    if s2 <= 0:
        return TuningResult(1.0, Method.F_RATIO_REP, f_stat=math.inf,
                            sigma2_estimate=s2, alpha=float(alpha))
    f = between / (s2 * (x.rank - 1))
    return TuningResult(max(0.0, 1.0 - 1.0 / f), Method.F_RATIO_REP, f_stat=f,
                        sigma2_estimate=s2, alpha=float(alpha))


# --- cross-validation --------------------------------------------------------

def fold_partition(n: int, folds: int, rng) -> list[np.ndarray]:
    """Random partition of ``range(n)`` into ``folds`` near-equal parts."""
    if folds < 2:
        raise ParameterError(f"need at least 2 folds, got {folds}")
    if n < folds:
        raise ParameterError(f"n={n} is smaller than the number of folds {folds}")
    perm = as_generator(rng).permutation(n)
    return [np.sort(part) for part in np.array_split(perm, folds)]


def cv_errors(x, y, folds: int | Sequence[np.ndarray], grid, rng=None) -> np.ndarray:
    """Total held-out squared error at every grid value of ``gamma``.

    Each fold is fit on its complement; held-out predictions use the
    minimum-norm coefficients of the training fit.
    """
    x = as_design(x)
    y = _check_y(x, y)
    grid = np.asarray(grid, dtype=float)
    parts = fold_partition(x.n, folds, rng) if isinstance(folds, (int, np.integer)) \
        else [np.asarray(f) for f in folds]
    total = np.zeros(grid.shape[0])
    mask = np.zeros(x.n, dtype=bool)
    for k, test in enumerate(parts):
        mask[:] = True
        mask[test] = False
        train = DesignMatrix(x.data[mask], require_intercept=False, rtol=x.rtol)
        if train.rank < 2:
            raise RankError(f"training design for fold {k} has rank {train.rank} < 2")
        ytr = y[mask]
        b_ls = train.pinv_apply(ytr)
        b_mean = train.pinv_apply(np.full(ytr.shape[0], ytr.mean()))
        x_te = x.data[test]
        pred_ls, pred_mean = x_te @ b_ls, x_te @ b_mean
        pred = grid[:, None] * pred_ls[None, :] + (1 - grid[:, None]) * pred_mean[None, :]
        total += np.sum((y[test][None, :] - pred) ** 2, axis=1)
    return total


def cv_gamma(x, y, folds: int = 10, grid=DEFAULT_CV_GRID, rng=None) -> TuningResult:
    """k-fold cross-validated ``gamma``; ties go to the smaller value."""
    grid = np.sort(np.asarray(grid, dtype=float))
    if grid.size == 0 or grid[0] < 0 or grid[-1] > 1:
        raise ParameterError("gamma grid must be non-empty and inside [0, 1]")
    if rng is None:
        rng = 0
    errors = cv_errors(x, y, folds, grid, rng)
    # rounding-level differences count as ties
    floor = errors.min()
    tie = floor * (1 + 1e-10) + 1e-12 * float(np.sum(np.asarray(y, float) ** 2)) / len(y)
    best = int(np.flatnonzero(errors <= tie)[0])
    return TuningResult(float(grid[best]), Method.CV,
                        extras={"cv_error": float(errors[best]),
                                "folds": folds if isinstance(folds, int) else len(folds)})
