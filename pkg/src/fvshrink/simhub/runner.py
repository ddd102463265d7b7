"""Deterministic replication runner, summary tables and risk curves.

Replication ``r`` owns the stream ``(seed, r)``: the instance is drawn from
its child 0 and each estimator gets a child keyed by a checksum of its name.
Nothing depends on the worker count or on execution order.
"""

from __future__ import annotations

import csv
import io
import math
import zlib
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from typing import Optional, Sequence

import numpy as np
import scipy.stats

from ..baselines import DEFAULT_LAMBDA_GRID, ridge_path
from ..errors import FVSError, InputError, ParameterError
from ..probability import RngStream
from . import estimators as est_mod
from .generators import generate, same_x_loss
from .scenario import SimulationScenario

_RECOVERABLE = (FVSError, ArithmeticError, ValueError, np.linalg.LinAlgError)


def _fmt(v) -> str:
    if v is None:
        return ""
    v = float(v)
    return "nan" if math.isnan(v) else format(v, ".17g")


def _estimator_stream(rep_stream: RngStream, name: str) -> RngStream:
    return rep_stream.child(1).child(zlib.crc32(name.encode()))


@dataclass
class ReplicationReport:
    scenario: SimulationScenario
    estimators: list[str]
    seed: int
    losses: np.ndarray  # (replications, estimators), nan = missing
    tuning: np.ndarray  # selected gamma (lambda for ridge)
    gamma_opt: np.ndarray
    delta2: np.ndarray
    failures: list = field(default_factory=list)

    def _col(self, name: str) -> np.ndarray:
        if name not in self.estimators:
            raise InputError(f"estimator {name!r} not in report")
        return self.losses[:, self.estimators.index(name)]

    def mean(self, name: str) -> float:
        col = self._col(name)
        ok = col[~np.isnan(col)]
        return float(ok.mean()) if ok.size else math.nan

    def se(self, name: str) -> float:
        """Sample SD over sqrt(count); nan when fewer than two values exist."""
        col = self._col(name)
        ok = col[~np.isnan(col)]
        if ok.size < 2:
            return math.nan
        return float(ok.std(ddof=1) / math.sqrt(ok.size))

    def n_missing(self, name: str) -> int:
        return int(np.isnan(self._col(name)).sum())

    @property
    def replications(self) -> int:
        return self.losses.shape[0]

    @property
    def has_missing(self) -> bool:
        return bool(np.isnan(self.losses).any())

    def summary_rows(self) -> list[dict]:
        return [{"scenario": self.scenario.label, "estimator": name,
                 "mean": self.mean(name), "se": self.se(name),
                 "se_defined": self.replications >= 2 and not math.isnan(self.se(name)),
                 "n_missing": self.n_missing(name), "replications": self.replications}
                for name in self.estimators]

    def to_csv(self, fh=None) -> str:
        """One row per estimator; returns the text and writes it to ``fh`` if given."""
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(["scenario", "estimator", "mean", "se", "n_missing", "replications"])
        for row in self.summary_rows():
            w.writerow([row["scenario"], row["estimator"], _fmt(row["mean"]),
                        _fmt(row["se"]), row["n_missing"], row["replications"]])
        text = buf.getvalue()
        if fh is not None:
            fh.write(text)
        return text

    def per_replication_csv(self, fh=None) -> str:
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(["replication", "delta2", "gamma_opt"] + self.estimators
                   + [f"{e}_tuning" for e in self.estimators])
        for r in range(self.replications):
            w.writerow([r, _fmt(self.delta2[r]), _fmt(self.gamma_opt[r])]
                       + [_fmt(v) for v in self.losses[r]]
                       + [_fmt(v) for v in self.tuning[r]])
        text = buf.getvalue()
        if fh is not None:
            fh.write(text)
        return text


def _replicate(args):
    scenario_dict, names, seed, r = args
    scenario = SimulationScenario.from_dict(scenario_dict)
    stream = RngStream(seed, r)
    losses = np.full(len(names), np.nan)
    tuning = np.full(len(names), np.nan)
    failures = []
    try:
        inst = generate(scenario, stream.child(0))
    except _RECOVERABLE as exc:
        return r, losses, tuning, math.nan, math.nan, [(r, "*", f"generation: {exc}")]
    for k, name in enumerate(names):
        try:
            fitted, tune = est_mod.evaluate(name, inst, _estimator_stream(stream, name),
                                            scenario.folds)
            losses[k] = same_x_loss(fitted, inst.mu)
            tuning[k] = tune
        except _RECOVERABLE as exc:
            failures.append((r, name, f"{type(exc).__name__}: {exc}"))
    return r, losses, tuning, inst.gamma_opt, inst.delta2, failures


def run_replications(scenario: SimulationScenario, estimators: Optional[Sequence[str]] = None,
                     seed: Optional[int] = None, workers: int = 1) -> ReplicationReport:
    """Evaluate every estimator on the same instances, one per replication.

    Estimator failures are recorded as missing cells (see
    ``report.failures``) rather than raised.
    """
    names = list(estimators if estimators is not None else scenario.estimators)
    if not names:
        raise InputError("estimator set is empty")
    for name in names:
        est_mod.resolve(name)
    seed = scenario.seed if seed is None else int(seed)
    if workers < 1:
        raise ParameterError(f"workers must be >= 1, got {workers}")
    R = scenario.replications
    jobs = [(scenario.to_dict(), names, seed, r) for r in range(R)]
    if workers == 1 or R == 1:
        results = [_replicate(j) for j in jobs]
    else:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            results = list(pool.map(_replicate, jobs, chunksize=max(1, R // (4 * workers))))
    losses = np.full((R, len(names)), np.nan)
    tuning = np.full((R, len(names)), np.nan)
    gopt = np.full(R, np.nan)
    d2 = np.full(R, np.nan)
    failures = []
    for r, lo, tu, g, d, fails in results:
        losses[r], tuning[r], gopt[r], d2[r] = lo, tu, g, d
        failures.extend(fails)
    failures.sort()
    return ReplicationReport(scenario=scenario, estimators=names, seed=seed, losses=losses,
                             tuning=tuning, gamma_opt=gopt, delta2=d2, failures=failures)


@dataclass(frozen=True)
class PairedInterval:
    mean: float
    lower: float
    upper: float
    n: int
    degenerate: bool


def paired_interval(report: ReplicationReport, estimator_a: str, estimator_b: str,
                    level: float = 0.95) -> PairedInterval:
    """Paired-t interval for ``E[loss_a - loss_b]`` over common replications."""
    diff = report._col(estimator_a) - report._col(estimator_b)
    return paired_interval_from_differences(diff[~np.isnan(diff)], level)


def paired_interval_from_differences(diff, level: float = 0.95) -> PairedInterval:
    diff = np.asarray(diff, dtype=float)
    m = diff.size
    if m < 2:
        raise ParameterError(f"paired interval needs at least 2 replications, got {m}")
    mean = float(diff.mean())
    sd = float(diff.std(ddof=1))
    half = float(scipy.stats.t.ppf(0.5 + level / 2, m - 1)) * sd / math.sqrt(m)
    return PairedInterval(mean, mean - half, mean + half, m, degenerate=half == 0.0)


@dataclass(frozen=True)
class RiskCurve:
    lambdas: np.ndarray
    fvs_mean: np.ndarray
    fvs_se: np.ndarray
    ridge_mean: np.ndarray
    ridge_se: np.ndarray

    def to_csv(self, fh=None) -> str:
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(["lambda", "gamma", "fvs_mean", "fvs_se", "ridge_mean", "ridge_se"])
        for i, lam in enumerate(self.lambdas):
            w.writerow([_fmt(lam), _fmt(1 / (1 + lam)), _fmt(self.fvs_mean[i]),
                        _fmt(self.fvs_se[i]), _fmt(self.ridge_mean[i]),
                        _fmt(self.ridge_se[i])])
        text = buf.getvalue()
        if fh is not None:
            fh.write(text)
        return text


def risk_curve(scenario: SimulationScenario, lambda_grid=DEFAULT_LAMBDA_GRID,
               seed: Optional[int] = None, standardize: bool = True) -> RiskCurve:
    """Average same-X loss of FVS at ``gamma = 1/(1+lambda)`` and of ridge at
    ``lambda``, over the scenario's replications."""
    lambdas = np.asarray(lambda_grid, dtype=float)
    if lambdas.ndim != 1 or lambdas.size == 0 or np.any(lambdas <= 0):
        raise ParameterError("lambda grid must be non-empty and strictly positive")
    seed = scenario.seed if seed is None else int(seed)
    gammas = 1.0 / (1.0 + lambdas)
    R = scenario.replications
    fvs = np.empty((R, lambdas.size))
    ridge = np.empty((R, lambdas.size))
    for r in range(R):
        inst = generate(scenario, RngStream(seed, r).child(0))
        ls = inst.x.project(inst.y)
        ybar = inst.y.mean()
        fits = gammas[:, None] * ls[None, :] + (1 - gammas[:, None]) * ybar
        fvs[r] = np.mean((fits - inst.mu) ** 2, axis=1)
        path = ridge_path(inst.x, inst.y, lambdas, standardize=standardize)
        ridge[r] = np.mean((path.fitted - inst.mu) ** 2, axis=1)
    se = (lambda a: a.std(axis=0, ddof=1) / math.sqrt(R)) if R > 1 \
        else (lambda a: np.full(lambdas.size, np.nan))
    return RiskCurve(lambdas, fvs.mean(axis=0), se(fvs), ridge.mean(axis=0), se(ridge))
