"""Named estimators evaluated inside a replication.

An estimator maps ``(instance, stream, folds)`` to ``(fitted, tuning)``
where ``tuning`` is the selected ``gamma`` (or ``lambda`` for ridge).  The
random stream is only consumed by cross-validation.
"""

from __future__ import annotations

from typing import Callable

import numpy as np

from ..baselines import ridge_cv
from ..errors import InputError
from ..shrinkage import fit_fvs, fit_fvs_submodel
from ..tuning import (alpha_schedule, cv_gamma, gamma_bar, gamma_rep_lowdim,
                      gamma_tilde_submodel, select_f_ratio)

# (t, corrected) for the high-dimensional alpha schedules
REP_SCHEDULES = {"rep1": (1.0, False), "rep2": (1.5, True), "rep3": (2.0, False),
                 "rep4": (3.0, False)}


def _fvs(inst, gamma):
    return fit_fvs(inst.x, inst.y, gamma).fitted, float(gamma)


def _fvs_sub(inst, gamma):
    if inst.submodel_cols is None:
        raise InputError("instance carries no submodel")
    return fit_fvs_submodel(inst.x, inst.submodel_cols, inst.y, gamma).fitted, float(gamma)


def _ols(inst, stream, folds):
    return _fvs(inst, 1.0)


def _oracle(inst, stream, folds):
    return _fvs(inst, inst.gamma_opt)


def _es(level):
    def est(inst, stream, folds):
        return _fvs(inst, select_f_ratio(inst.x, inst.y, level).gamma)
    return est


def _rep(inst, stream, folds):
    res = gamma_rep_lowdim(inst.x, inst.y, alpha_schedule(1.0, inst.y))
    return _fvs(inst, res.gamma)


def _rep_highdim(t, corrected):
    def est(inst, stream, folds):
        res = gamma_bar(inst.x, inst.y, alpha_schedule(t, inst.y), corrected=corrected)
        return _fvs(inst, res.gamma)
    return est


def _cv(inst, stream, folds):
    return _fvs(inst, cv_gamma(inst.x, inst.y, folds=folds, rng=stream).gamma)


def _ridge_cv(inst, stream, folds):
    lam, _, fitted = ridge_cv(inst.x, inst.y, folds=folds, rng=stream)
    return fitted, lam


def _oracle_sb(inst, stream, folds):
    return _fvs_sub(inst, inst.gamma_opt_submodel)


def _es_sb(level):
    def est(inst, stream, folds):
        res = gamma_tilde_submodel(inst.x, inst.submodel_cols, inst.y, thresholded=level)
        return _fvs_sub(inst, res.gamma)
    return est


ESTIMATORS: dict[str, Callable] = {
    "ols": _ols,
    "oracle": _oracle,
    "es": _es(None),
    "es90": _es("q90"),
    "es95": _es("q95"),
    "rep": _rep,
    "cv": _cv,
    "ridge_cv": _ridge_cv,
    "oracle_sb": _oracle_sb,
    "es_sb": _es_sb(None),
    "es95_sb": _es_sb("q95"),
    **{name: _rep_highdim(*sched) for name, sched in REP_SCHEDULES.items()},
}


def resolve(name: str) -> Callable:
    """Look up an estimator; ``fvs@0.3`` means FVS at the fixed ``gamma = 0.3``."""
    if name in ESTIMATORS:
        return ESTIMATORS[name]
    if name.startswith("fvs@"):
        try:
            gamma = float(name[4:])
        except ValueError:
            raise InputError(f"cannot parse gamma in estimator name {name!r}") from None
        if not 0 <= gamma <= 1:
            raise InputError(f"fixed gamma must lie in [0, 1], got {gamma}")
        return lambda inst, stream, folds: _fvs(inst, gamma)
    known = ", ".join(sorted(ESTIMATORS))
    raise InputError(f"unknown estimator {name!r}; known: {known}, fvs@<gamma>")


def evaluate(name: str, inst, stream, folds: int) -> tuple[np.ndarray, float]:
    return resolve(name)(inst, stream, folds)
