"""Seeded sampling and the central F distribution.

Random streams are identified by ``(seed, stream_id, path)`` and mapped onto
numpy's ``SeedSequence`` spawn keys, so a replication's draws depend only on
its own key and never on execution order or worker count.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import InputError, NumericalError, ParameterError

_MASK64 = (1 << 64) - 1


@dataclass(frozen=True)
class RngStream:
    """An immutable handle on an independent random stream.

    Calling :meth:`generator` always returns a fresh generator positioned at
    the start of the stream.  Use :meth:`child` to derive sub-streams, e.g.
    one per estimator inside a replication.
    """

    seed: int
    stream_id: int = 0
    path: tuple[int, ...] = ()

    def generator(self) -> np.random.Generator:
        key = (self.stream_id & _MASK64,) + tuple(k & _MASK64 for k in self.path)
        ss = np.random.SeedSequence(self.seed & _MASK64, spawn_key=key)
        return np.random.Generator(np.random.PCG64(ss))

    def child(self, index: int) -> "RngStream":
        return RngStream(self.seed, self.stream_id, self.path + (int(index),))


def as_generator(rng) -> np.random.Generator:
    """Accept an :class:`RngStream`, a ``Generator`` or an integer seed."""
    if isinstance(rng, np.random.Generator):
        return rng
    if isinstance(rng, RngStream):
        return rng.generator()
    if isinstance(rng, (int, np.integer)):
        return RngStream(int(rng)).generator()
    raise InputError(f"cannot build a random generator from {type(rng).__name__}")


def ar1_chol(p: int, rho: float) -> np.ndarray:
    """Lower Cholesky factor of the AR(1) correlation ``rho**|j-k|``.

    The factor has the closed form ``L[i, 0] = rho**i`` and
    ``L[i, j] = rho**(i-j) * sqrt(1 - rho**2)`` for ``1 <= j <= i``.
    """
    if p < 1:
        raise ParameterError(f"p must be >= 1, got {p}")
    if not abs(rho) < 1:
        raise ParameterError(f"|rho| must be < 1, got {rho}")
    idx = np.arange(p)
    lag = idx[:, None] - idx[None, :]
    with np.errstate(invalid="ignore"):
        powers = np.where(lag >= 0, float(rho) ** np.maximum(lag, 0), 0.0)
    chol = powers * math.sqrt(1.0 - rho * rho)
    chol[:, 0] = powers[:, 0]
    return chol


def ar1_sample(rng, n: int, p: int, rho: float) -> np.ndarray:
    """Rows iid ``N_p(0, Sigma)`` with AR(1) correlation, by recursion.

    Distributionally identical to ``sample_gaussian_rows(rng, n,
    ar1_chol(p, rho))`` but costs ``O(np)``.
    """
    if not abs(rho) < 1:
        raise ParameterError(f"|rho| must be < 1, got {rho}")
    z = as_generator(rng).standard_normal((n, p))
    if p == 0:
        return z
    scale = math.sqrt(1.0 - rho * rho)
    out = np.empty_like(z)
    out[:, 0] = z[:, 0]
    for j in range(1, p):
        out[:, j] = rho * out[:, j - 1] + scale * z[:, j]
    return out


def sample_gaussian_rows(rng, n: int, chol) -> np.ndarray:
    """``n`` iid rows from ``N(0, chol @ chol.T)``."""
    chol = np.atleast_2d(np.asarray(chol, dtype=float))
    if chol.shape[0] != chol.shape[1]:
        raise InputError(f"factor must be square, got {chol.shape}")
    z = as_generator(rng).standard_normal((n, chol.shape[0]))
    return z @ chol.T


def sample_multinomial_categories(rng, n: int, k: int, probs=None) -> np.ndarray:
    """``n`` iid labels in ``1..k`` with the given level probabilities."""
    if k < 1:
        raise ParameterError(f"k must be >= 1, got {k}")
    probs = np.full(k, 1.0 / k) if probs is None else np.asarray(probs, dtype=float)
    if probs.shape != (k,):
        raise InputError(f"probs must have length {k}")
    if np.any(probs < 0):
        raise ParameterError("probabilities must be nonnegative")
    if abs(probs.sum() - 1.0) > 1e-12:
        raise ParameterError(f"probabilities sum to {probs.sum()!r}, not 1")
    return as_generator(rng).choice(k, size=n, p=probs) + 1


# --- regularized incomplete beta and the F distribution -------------------

def _log_beta(a: float, b: float) -> float:
    return math.lgamma(a) + math.lgamma(b) - math.lgamma(a + b)


def _beta_cf(a: float, b: float, x: float) -> float:
    """Continued fraction for the incomplete beta (modified Lentz)."""
    tiny = 1e-300
    qab, qap, qam = a + b, a + 1.0, a - 1.0
    c = 1.0
    d = 1.0 - qab * x / qap
    if abs(d) < tiny:
        d = tiny
    d = 1.0 / d
    h = d
    for m in range(1, 20000):
        m2 = 2 * m
        aa = m * (b - m) * x / ((qam + m2) * (a + m2))
        d = 1.0 + aa * d
        d = tiny if abs(d) < tiny else d
        c = 1.0 + aa / c
        c = tiny if abs(c) < tiny else c
        d = 1.0 / d
        h *= d * c
        aa = -(a + m) * (qab + m) * x / ((a + m2) * (qap + m2))
        d = 1.0 + aa * d
        d = tiny if abs(d) < tiny else d
        c = 1.0 + aa / c
        c = tiny if abs(c) < tiny else c
        d = 1.0 / d
        delta = d * c
        h *= delta
        if abs(delta - 1.0) < 1e-16:
            return h
    raise NumericalError(f"incomplete beta continued fraction did not converge "
                         f"(a={a}, b={b}, x={x})")


def betainc_reg(a: float, b: float, x: float) -> float:
    """Regularized incomplete beta function ``I_x(a, b)``."""
    if a <= 0 or b <= 0:
        raise ParameterError("beta parameters must be positive")
    if x <= 0.0:
        return 0.0
    if x >= 1.0:
        return 1.0
    log_front = a * math.log(x) + b * math.log1p(-x) - _log_beta(a, b)
    if x < (a + 1.0) / (a + b + 2.0):
        return math.exp(log_front) * _beta_cf(a, b, x) / a
    return 1.0 - math.exp(log_front) * _beta_cf(b, a, 1.0 - x) / b


def _beta_logpdf(a: float, b: float, x: float) -> float:
    return (a - 1.0) * math.log(x) + (b - 1.0) * math.log1p(-x) - _log_beta(a, b)


def _betainc_inv(a: float, b: float, target: float) -> float:
    """Solve ``I_x(a, b) = target`` by Newton steps inside a bisection bracket."""
    lo, hi = 0.0, 1.0
    # start from the mean; the bracket keeps Newton honest
    x = a / (a + b)
    for _ in range(400):
        g = betainc_reg(a, b, x) - target
        if g == 0.0:
            return x
        if g > 0:
            hi = x
        else:
            lo = x
        step = None
        logpdf = _beta_logpdf(a, b, x)
        if logpdf > -700:
            step = g / math.exp(logpdf)
        new = x - step if step is not None else None
        if new is None or not (lo < new < hi):
            new = 0.5 * (lo + hi)
        if abs(new - x) <= 4e-16 * max(x, 1e-300) or hi - lo <= 4e-16 * hi:
            return new
        x = new
    raise NumericalError(f"incomplete beta inversion did not converge "
                         f"(a={a}, b={b}, target={target})")


def f_cdf(x: float, d1: float, d2: float) -> float:
    """CDF of the central F distribution with ``(d1, d2)`` degrees of freedom."""
    if d1 <= 0 or d2 <= 0:
        raise ParameterError("degrees of freedom must be positive")
    if x <= 0:
        return 0.0
    if math.isinf(x):
        return 1.0
    t = d1 * x / (d1 * x + d2)
    if t < 0.5:
        return betainc_reg(d1 / 2.0, d2 / 2.0, t)
    return 1.0 - betainc_reg(d2 / 2.0, d1 / 2.0, d2 / (d1 * x + d2))


def f_quantile(q: float, d1: float, d2: float) -> float:
    """Quantile of the central F distribution.

    Inverts the regularized incomplete beta function; upper-tail levels
    are solved on the complementary variable ``d2 / (d2 + d1 x)`` so that
    quantiles far in the tail keep full relative accuracy.
    """
    if not 0.0 < q < 1.0:
        raise ParameterError(f"q must lie in (0, 1), got {q}")
    if d1 <= 0 or d2 <= 0:
        raise ParameterError("degrees of freedom must be positive")
    a, b = d1 / 2.0, d2 / 2.0
    if q <= 0.5:
        t = _betainc_inv(a, b, q)
        return d2 * t / (d1 * (1.0 - t))
    y = _betainc_inv(b, a, 1.0 - q)
    return d2 * (1.0 - y) / (d1 * y)
