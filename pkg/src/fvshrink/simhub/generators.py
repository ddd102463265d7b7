"""Random problem generators for the simulation families.

Every generator takes a random source (an :class:`RngStream`, a numpy
``Generator`` or an integer seed) and returns a :class:`GeneratedInstance`
holding the design, the true mean ``mu = X beta``, one noisy response and
the oracle quantities ``delta2`` and ``gamma_opt`` evaluated at that ``mu``.
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass, field, replace
from typing import Optional

import numpy as np

from ..errors import InputError, ParameterError, RankError
from ..linalg import DesignMatrix, gram_schmidt
from ..probability import (RngStream, ar1_chol, as_generator, sample_gaussian_rows,
                           sample_multinomial_categories)
from ..tuning import gamma_opt, gamma_opt_submodel

RHO = 0.5
CATEGORICAL_MASK = np.array([1, 2, 0, 0, 0, 2, 1, 0, 0, 0, 2, 1], dtype=float)
CATEGORICAL_LEVELS = 5
CATEGORICAL_REFERENCES = {1: (1, 1, 1), 2: (2, 3, 5)}
MAX_ATTEMPTS = 10


@dataclass(frozen=True, eq=False)
class GeneratedInstance:
    x: DesignMatrix
    beta: np.ndarray
    mu: np.ndarray
    y: np.ndarray
    sigma: float
    delta2: float
    gamma_opt: float
    submodel_cols: Optional[tuple[int, ...]] = None
    delta2_submodel: Optional[float] = None
    gamma_opt_submodel: Optional[float] = None
    meta: dict = field(default_factory=dict)

    @property
    def n(self) -> int:
        return self.x.n

    def with_noise(self, rng) -> "GeneratedInstance":
        """Same design and mean with a fresh noise draw."""
        eps = as_generator(rng).standard_normal(self.n)
        return replace(self, y=self.mu + self.sigma * eps)


def same_x_loss(fitted, mu) -> float:
    """``n^-1 ||fitted - mu||^2``."""
    fitted = np.asarray(fitted, dtype=float)
    mu = np.asarray(mu, dtype=float)
    if fitted.shape != mu.shape or fitted.ndim != 1:
        raise InputError(f"shape mismatch: fitted {fitted.shape} vs mu {mu.shape}")
    return float(np.mean((fitted - mu) ** 2))


def _centered_norm2(v: np.ndarray) -> float:
    return float(np.sum((v - v.mean()) ** 2))


def _gaussian_design(g: np.random.Generator, n: int, p: int, rho: float) -> np.ndarray:
    block = sample_gaussian_rows(g, n, ar1_chol(p - 1, rho))
    return np.hstack([np.ones((n, 1)), block])


def _finish(x: DesignMatrix, beta, g, sigma, **kw) -> GeneratedInstance:
    mu = x.data @ beta
    y = mu + sigma * g.standard_normal(x.n)
    delta2 = kw.pop("delta2", None)
    if delta2 is None:
        delta2 = _centered_norm2(mu)
    return GeneratedInstance(x=x, beta=beta, mu=mu, y=y, sigma=float(sigma),
                             delta2=float(delta2),
                             gamma_opt=gamma_opt(delta2, sigma ** 2, x.rank), **kw)


def gen_lowdim(n: int, p: int, tau: float, sigma: float, rng,
               rho: float = RHO) -> GeneratedInstance:
    """Intercept plus AR(1) Gaussian predictors, ``beta = X^-(1 + tau Z)``.

    ``Z`` is standard normal of length ``n`` so that ``mu - P_1 mu =
    tau (P_X - P_1) Z``.
    """
    if n <= p:
        warnings.warn(f"gen_lowdim called with n={n} <= p={p}", stacklevel=2)
    if tau < 0 or not sigma > 0:
        raise ParameterError("need tau >= 0 and sigma > 0")
    g = as_generator(rng)
    x = DesignMatrix(_gaussian_design(g, n, p, rho))
    z = g.standard_normal(n)
    beta = x.pinv_apply(1.0 + tau * z)
    pz = x.project(z)
    delta2 = tau ** 2 * _centered_norm2(pz)
    return _finish(x, beta, g, sigma, delta2=delta2, meta={"family": "lowdim", "tau": tau})


def gen_highdim(n: int, p: int, tau: float, sigma: float, rng,
                rho: float = RHO) -> GeneratedInstance:
    """The :func:`gen_lowdim` construction, typically with ``p > n``."""
    if tau < 0 or not sigma > 0:
        raise ParameterError("need tau >= 0 and sigma > 0")
    g = as_generator(rng)
    x = DesignMatrix(_gaussian_design(g, n, p, rho))
    z = g.standard_normal(n)
    beta = x.pinv_apply(1.0 + tau * z)
    delta2 = tau ** 2 * _centered_norm2(x.project(z))
    return _finish(x, beta, g, sigma, delta2=delta2, meta={"family": "highdim", "tau": tau})


# --- categorical family ------------------------------------------------------

def reference_dummies(codes, levels, reference) -> np.ndarray:
    """Indicator columns for every level except ``reference``, in level order."""
    codes = np.asarray(codes)
    levels = list(levels)
    if reference not in levels:
        raise InputError(f"reference level {reference!r} not among {levels}")
    return np.column_stack([(codes == lev).astype(float)
                            for lev in levels if lev != reference])


def categorical_design(numeric: np.ndarray, cats: np.ndarray, coding: int) -> np.ndarray:
    """``[1 | numeric | dummies | last numeric x dummies]`` for one coding."""
    if coding not in CATEGORICAL_REFERENCES:
        raise ParameterError(f"coding must be 1 or 2, got {coding}")
    refs = CATEGORICAL_REFERENCES[coding]
    levels = range(1, CATEGORICAL_LEVELS + 1)
    dummies = np.hstack([reference_dummies(cats[:, k], levels, refs[k])
                         for k in range(cats.shape[1])])
    inter = numeric[:, [-1]] * dummies
    return np.hstack([np.ones((numeric.shape[0], 1)), numeric, dummies, inter])


def gen_categorical(tau_c: float, tau_f: float, coding: int, rng, n: int = 100,
                    sigma: float = 1.0, rho: float = RHO) -> GeneratedInstance:
    """25 numeric and 3 five-level categorical predictors with interactions.

    The mean is built on the first coding; ``coding=2`` re-references the
    same data and expresses the same ``mu`` in the new columns.  A draw with
    an empty category level is discarded and redrawn, at most
    ``MAX_ATTEMPTS`` times.
    """
    if coding not in CATEGORICAL_REFERENCES:
        raise ParameterError(f"coding must be 1 or 2, got {coding}")
    if tau_c < 0 or tau_f < 0 or not sigma > 0:
        raise ParameterError("need tau_c, tau_f >= 0 and sigma > 0")
    for attempt in range(MAX_ATTEMPTS):
        g = rng.child(attempt).generator() if isinstance(rng, RngStream) \
            else as_generator(rng)
        numeric = sample_gaussian_rows(g, n, ar1_chol(25, rho))
        cats = np.column_stack([sample_multinomial_categories(g, n, CATEGORICAL_LEVELS)
                                for _ in range(3)])
        if all(np.unique(cats[:, k]).size == CATEGORICAL_LEVELS for k in range(3)):
            break
    else:
        raise RankError(f"every one of {MAX_ATTEMPTS} categorical draws had an empty level")

    x1 = categorical_design(numeric, cats, 1)
    xc = DesignMatrix(x1[:, :26])
    zc = g.standard_normal(n)
    beta_c = xc.pinv_apply(1.0 + tau_c * zc)
    f = sample_gaussian_rows(g, 24, ar1_chol(24, rho))
    zf = g.standard_normal(24)
    beta_f = tau_f * np.linalg.lstsq(f, zf, rcond=None)[0] * np.tile(CATEGORICAL_MASK, 2)
    beta1 = np.concatenate([beta_c, beta_f])
    mu = x1 @ beta1

    x = DesignMatrix(x1 if coding == 1 else categorical_design(numeric, cats, 2))
    beta = beta1 if coding == 1 else x.pinv_apply(mu)
    y = mu + sigma * g.standard_normal(n)
    delta2 = _centered_norm2(mu)
    return GeneratedInstance(
        x=x, beta=beta, mu=mu, y=y, sigma=float(sigma), delta2=delta2,
        gamma_opt=gamma_opt(delta2, sigma ** 2, x.rank),
        meta={"family": "categorical", "coding": coding, "attempts": attempt + 1,
              "numeric": numeric, "categories": cats})


def recode_categorical(inst: GeneratedInstance, coding: int) -> GeneratedInstance:
    """The same categorical instance expressed in another reference coding."""
    if inst.meta.get("family") != "categorical":
        raise InputError("instance was not produced by gen_categorical")
    x = DesignMatrix(categorical_design(inst.meta["numeric"], inst.meta["categories"],
                                        coding))
    return replace(inst, x=x, beta=x.pinv_apply(inst.mu),
                   meta={**inst.meta, "coding": coding})


def recoding_transform(x_from: DesignMatrix, x_to: DesignMatrix, atol: float = 1e-8
                       ) -> np.ndarray:
    """The matrix ``T`` with ``x_to = x_from @ T``; raises if none exists."""
    t = x_from.pinv_apply(x_to.data)
    err = np.max(np.abs(x_from.data @ t - x_to.data))
    if err > atol * max(1.0, np.max(np.abs(x_to.data))):
        raise InputError(f"designs are not linearly related (residual {err:.3g})")
    return t


# --- full-rank coefficient families -------------------------------------------

def random_rotation(p: int, rng) -> np.ndarray:
    """``blockdiag(1, Q)`` with ``Q`` the Gram-Schmidt orthonormalization of a
    ``(p-1) x (p-1)`` standard normal matrix; the intercept column is kept."""
    g = as_generator(rng)
    t = np.eye(p)
    t[1:, 1:] = gram_schmidt(g.standard_normal((p - 1, p - 1)))
    return t


def gen_fullrank(n: int, p: int, s: float, sigma: float, rng, psi: float = 0.0,
                 u_range: Optional[tuple[float, float]] = None, coding: int = 1,
                 rho: float = RHO) -> GeneratedInstance:
    """``beta = u * v`` with ``u`` uniform and ``v = (1, Bernoulli(s), ...)``.

    ``u`` is uniform on ``(2^(-psi-1), 2^-psi)`` unless ``u_range`` is given.
    With ``coding=2`` the design is rotated by :func:`random_rotation`.
    """
    if not 0 <= s <= 1 or not sigma > 0:
        raise ParameterError("need 0 <= s <= 1 and sigma > 0")
    lo, hi = u_range if u_range is not None else (2.0 ** (-psi - 1), 2.0 ** (-psi))
    g = as_generator(rng)
    x = DesignMatrix(_gaussian_design(g, n, p, rho))
    u = g.uniform(lo, hi, size=p)
    v = np.concatenate([[1.0], (g.random(p - 1) < s).astype(float)])
    family = "fullrank_lowdim" if n > p else "fullrank_highdim"
    inst = _finish(x, u * v, g, sigma, meta={"family": family, "coding": 1})
    if coding == 2:
        inst = gen_fullrank_transform(inst, g)
    elif coding != 1:
        raise ParameterError(f"coding must be 1 or 2, got {coding}")
    return inst


def gen_fullrank_transform(base: GeneratedInstance, rng,
                           transform: Optional[np.ndarray] = None) -> GeneratedInstance:
    """Re-express ``base`` on ``X T``; ``y`` and ``mu`` are untouched."""
    t = random_rotation(base.x.p, rng) if transform is None \
        else np.asarray(transform, dtype=float)
    x = base.x.transform(t, require_intercept=bool(np.all(t[:, 0] == np.eye(t.shape[0])[0])))
    beta = np.linalg.solve(t, base.beta)
    return replace(base, x=x, beta=beta, meta={**base.meta, "coding": 2, "transform": t})


# --- submodel family ------------------------------------------------------------

def gen_submodel_sim(p0: int, R1: float, R2: float, rng, n: int = 100, p: int = 75,
                     sigma: float = 1.0, rho: float = RHO) -> GeneratedInstance:
    """Design ``[X0 | (I - P_X0) X1]`` with signal split between the blocks.

    ``tau0`` and ``tau1`` are set so that ``||mu - P_X0 mu||^2 = R1 (r - r0)``
    and ``||mu - P_1 mu||^2 = R2 (r - 1)``.
    """
    if not 1 <= p0 < p:
        raise ParameterError(f"need 1 <= p0 < p, got p0={p0}, p={p}")
    if not R2 > R1 > 0:
        raise ParameterError("need R2 > R1 > 0")
    g = as_generator(rng)
    raw = _gaussian_design(g, n, p, rho)
    x0 = DesignMatrix(raw[:, :p0])
    x1s = raw[:, p0:] - x0.project(raw[:, p0:])
    x = DesignMatrix(np.hstack([raw[:, :p0], x1s]))
    x1 = DesignMatrix(x1s, require_intercept=False)
    r, r0 = x.rank, x0.rank

    z = g.standard_normal(n)
    z1 = g.standard_normal(n)
    pz0 = x0.project(z)
    pz0 -= pz0.mean()
    pz1 = x1.project(z1)
    a1 = float(pz1 @ pz1)
    b0 = float(pz0 @ pz0)
    tau1_sq = R1 * (r - r0) / a1
    tau0_sq = (R2 * (r - 1) - R1 * (r - r0)) / b0
    if tau0_sq < 0:
        raise ParameterError(f"infeasible targets: R2 (r - 1) = {R2 * (r - 1):.4g} < "
                             f"R1 (r - r0) = {R1 * (r - r0):.4g}")
    tau0, tau1 = np.sqrt(tau0_sq), np.sqrt(tau1_sq)
    beta = np.concatenate([x0.pinv_apply(1.0 + tau0 * z), tau1 * x1.pinv_apply(z1)])
    mu = x.data @ beta
    y = mu + sigma * g.standard_normal(n)
    delta2 = _centered_norm2(mu)
    delta2_sub = float(np.sum((mu - x0.project(mu)) ** 2))
    cols = tuple(range(p0))
    return GeneratedInstance(
        x=x, beta=beta, mu=mu, y=y, sigma=float(sigma), delta2=delta2,
        gamma_opt=gamma_opt(delta2, sigma ** 2, r), submodel_cols=cols,
        delta2_submodel=delta2_sub,
        gamma_opt_submodel=gamma_opt_submodel(delta2_sub, sigma ** 2, r, r0),
        meta={"family": "submodel", "tau0": float(tau0), "tau1": float(tau1),
              "rank_submodel": r0, "decomposition": (tau0_sq * b0, tau1_sq * a1)})


def generate(scenario, rng) -> GeneratedInstance:
    """Dispatch on ``scenario.family``."""
    fam = scenario.family
    if fam == "lowdim":
        return gen_lowdim(scenario.n, scenario.p, scenario.tau, scenario.sigma, rng,
                          scenario.rho)
    if fam == "highdim":
        return gen_highdim(scenario.n, scenario.p, scenario.tau, scenario.sigma, rng,
                           scenario.rho)
    if fam == "categorical":
        return gen_categorical(scenario.tau_c, scenario.tau_f, scenario.coding, rng,
                               n=scenario.n, sigma=scenario.sigma, rho=scenario.rho)
    if fam == "fullrank_lowdim":
        return gen_fullrank(scenario.n, scenario.p, scenario.s, scenario.sigma, rng,
                            psi=scenario.psi, coding=scenario.coding, rho=scenario.rho)
    if fam == "fullrank_highdim":
        return gen_fullrank(scenario.n, scenario.p, scenario.s, scenario.sigma, rng,
                            u_range=(scenario.u_low, scenario.u_high),
                            coding=scenario.coding, rho=scenario.rho)
    if fam == "submodel":
        return gen_submodel_sim(scenario.p0, scenario.R1, scenario.R2, rng, n=scenario.n,
                                p=scenario.p, sigma=scenario.sigma, rho=scenario.rho)
    raise InputError(f"unknown family {fam!r}")
