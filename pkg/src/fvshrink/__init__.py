"""Fitted-value shrinkage for linear regression.

The estimator shrinks least-squares fitted values toward the intercept-only
fit (or toward a submodel's fit) by a weight ``gamma`` in ``[0, 1]``.  Its
fitted values are invariant to invertible linear transformations of the
design, which ridge regression's are not.
"""

from .baselines import DEFAULT_LAMBDA_GRID, ols_fit, ridge_cv, ridge_path, \
    standardization_transform
from .errors import (FVSError, InputError, NumericalError, ParameterError, RankError,
                     RegimeError, SingularityError)
from .linalg import DesignMatrix, PenalizedGram, gram_schmidt, penalized_gram_solve, \
    reduced_svd
from .probability import RngStream, f_cdf, f_quantile
from .shrinkage import ShrinkageFit, fit_fvs, fit_fvs_submodel, predict
from .tuning import (Method, TuningResult, alpha_schedule, cv_gamma, f_statistic,
                     fvs_risk, gamma_bar, gamma_hat, gamma_hat_thresholded, gamma_opt,
                     gamma_opt_submodel, gamma_rep_lowdim, gamma_tilde_submodel,
                     k_trace, select_f_ratio, sigma_check2, sigma_hat2)

__version__ = "0.1.0"

__all__ = [
    "DEFAULT_LAMBDA_GRID", "DesignMatrix", "FVSError", "InputError", "Method",
    "NumericalError", "ParameterError", "PenalizedGram", "RankError", "RegimeError",
    "RngStream", "ShrinkageFit", "SingularityError", "TuningResult", "alpha_schedule",
    "cv_gamma", "f_cdf", "f_quantile", "f_statistic", "fit_fvs", "fit_fvs_submodel",
    "fvs_risk", "gamma_bar", "gamma_hat", "gamma_hat_thresholded", "gamma_opt",
    "gamma_opt_submodel", "gamma_rep_lowdim", "gamma_tilde_submodel", "gram_schmidt",
    "k_trace", "ols_fit", "penalized_gram_solve", "predict", "reduced_svd", "ridge_cv",
    "ridge_path", "select_f_ratio", "sigma_check2", "sigma_hat2",
    "standardization_transform",
]
