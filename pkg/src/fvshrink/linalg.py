"""Dense linear-algebra kernel.

Everything downstream works from a reduced SVD ``X = U diag(d) V'`` that is
computed once per design and then reused: pseudoinverse solves, orthogonal
projections and the intercept-unpenalized ridge solves needed by the
high-dimensional variance estimator.  Projection matrices are never formed;
only matrix-vector products are exposed.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
import scipy.linalg

from .errors import InputError, NumericalError, RankError, SingularityError

# Default relative rank threshold: max(n, p) * 2**-45 times the largest
# singular value.
RANK_EPS = 2.0 ** -45


@dataclass(frozen=True)
class SvdFactors:
    """Reduced SVD ``A = u @ diag(d) @ v.T`` truncated at ``rank_tol``."""

    u: np.ndarray
    d: np.ndarray
    v: np.ndarray
    rank_tol: float

    @property
    def rank(self) -> int:
        return int(self.d.shape[0])

    @property
    def shape(self) -> tuple[int, int]:
        return self.u.shape[0], self.v.shape[0]

    def reconstruct(self) -> np.ndarray:
        return (self.u * self.d) @ self.v.T


def _as_matrix(a, name="A") -> np.ndarray:
    a = np.asarray(a, dtype=float)
    if a.ndim != 2:
        raise InputError(f"{name} must be 2-dimensional, got shape {a.shape}")
    if a.shape[0] < 1 or a.shape[1] < 1:
        raise InputError(f"{name} must be non-empty, got shape {a.shape}")
    if not np.all(np.isfinite(a)):
        raise InputError(f"{name} contains non-finite entries")
    return a


def reduced_svd(a, rtol: float | None = None) -> SvdFactors:
    """Reduced SVD of ``a`` with numerically-zero singular values dropped.

    Parameters
    ----------
    a : array_like, shape (n, p)
    rtol : float, optional
        Relative rank threshold; singular values ``<= rtol * d_max`` are
        discarded.  Defaults to ``max(n, p) * 2**-45``.

    Returns
    -------
    SvdFactors
    """
    a = _as_matrix(a)
    n, p = a.shape
    if rtol is None:
        rtol = max(n, p) * RANK_EPS
    if rtol < 0:
        raise InputError("rtol must be nonnegative")
    # Decompose the wide case through the transpose so LAPACK always sees a
    # tall matrix.
    transpose = p > n
    work = a.T if transpose else a
    try:
        u, d, vt = scipy.linalg.svd(work, full_matrices=False, check_finite=False,
                                    lapack_driver="gesdd")
    except np.linalg.LinAlgError:
        try:
            u, d, vt = scipy.linalg.svd(work, full_matrices=False,
                                        check_finite=False, lapack_driver="gesvd")
        except np.linalg.LinAlgError as exc:
            raise NumericalError(f"SVD did not converge for a {n}x{p} matrix") from exc
    v = vt.T
    if transpose:
        u, v = v, u
    tol = float(rtol * d[0]) if d.size else 0.0
    keep = d > tol
    return SvdFactors(u=np.ascontiguousarray(u[:, keep]), d=d[keep].copy(),
                      v=np.ascontiguousarray(v[:, keep]), rank_tol=tol)


def _check_len(y, n, what="y") -> np.ndarray:
    y = np.asarray(y, dtype=float)
    if y.shape[0] != n:
        raise InputError(f"{what} has length {y.shape[0]}, expected {n}")
    return y


def pseudoinverse_apply(svd: SvdFactors, y) -> np.ndarray:
    """Minimum-norm least-squares solution ``V D^-1 U' y``."""
    y = _check_len(y, svd.u.shape[0])
    return svd.v @ ((svd.u.T @ y) / (svd.d if y.ndim == 1 else svd.d[:, None]))


def projector_apply(svd: SvdFactors, y) -> np.ndarray:
    """Orthogonal projection of ``y`` onto the column space, ``U (U' y)``."""
    y = _check_len(y, svd.u.shape[0])
    return svd.u @ (svd.u.T @ y)


def mean_projector_apply(y) -> np.ndarray:
    """Projection onto the all-ones vector: every entry replaced by the mean."""
    y = np.asarray(y, dtype=float)
    return np.full_like(y, y.mean())


@dataclass(frozen=True, eq=False)
class DesignMatrix:
    """An ``n x p`` design whose first column is the intercept.

    The reduced SVD is computed eagerly at construction, so instances are
    immutable and can be shared between threads.

    Parameters
    ----------
    data : array_like, shape (n, p)
    require_intercept : bool
        If true (the default) the first column must be identically one.
        Transformed designs ``X T`` generally lose that column while keeping
        the ones vector in their span; pass ``False`` for those.
    rtol : float, optional
        Relative rank threshold forwarded to :func:`reduced_svd`.
    """

    data: np.ndarray
    require_intercept: bool = True
    rtol: float | None = None
    svd: SvdFactors = field(init=False, repr=False)

    def __post_init__(self):
        data = _as_matrix(self.data, "X")
        if self.require_intercept and not np.all(data[:, 0] == 1.0):
            raise InputError("first column of the design must be identically 1")
        data = data.copy()
        data.flags.writeable = False
        object.__setattr__(self, "data", data)
        svd = reduced_svd(data, self.rtol)
        if svd.rank < 1:
            raise RankError("design matrix has rank 0")
        object.__setattr__(self, "svd", svd)

    @property
    def n(self) -> int:
        return self.data.shape[0]

    @property
    def p(self) -> int:
        return self.data.shape[1]

    @property
    def rank(self) -> int:
        return self.svd.rank

    def project(self, y) -> np.ndarray:
        return projector_apply(self.svd, y)

    def pinv_apply(self, y) -> np.ndarray:
        return pseudoinverse_apply(self.svd, y)

    def transform(self, t, require_intercept: bool = False) -> "DesignMatrix":
        """The design ``X @ t`` for a ``p x p`` matrix ``t``."""
        t = _as_matrix(t, "T")
        if t.shape != (self.p, self.p):
            raise InputError(f"transform must be {self.p}x{self.p}, got {t.shape}")
        return DesignMatrix(self.data @ t, require_intercept=require_intercept,
                            rtol=self.rtol)

    def columns(self, cols) -> "DesignMatrix":
        cols = list(cols)
        return DesignMatrix(self.data[:, cols],
                            require_intercept=self.require_intercept and cols[0] == 0,
                            rtol=self.rtol)

    def rows(self, idx) -> "DesignMatrix":
        return DesignMatrix(self.data[idx], require_intercept=self.require_intercept,
                            rtol=self.rtol)


def as_design(x) -> DesignMatrix:
    return x if isinstance(x, DesignMatrix) else DesignMatrix(x)


def gram_schmidt(a, tol: float = 1e-12) -> np.ndarray:
    """Orthonormalize the columns of a square matrix.

    Modified Gram-Schmidt with one full re-orthogonalization pass per column,
    which keeps ``T'T = I`` to rounding error even for ``p`` in the hundreds.
    Column ``j`` of the output spans the same space as the first ``j + 1``
    input columns minus the previous ones.

    Raises
    ------
    SingularityError
        If a column is (numerically) in the span of the preceding ones; the
        message names the zero-based column index.
    """
    a = _as_matrix(a)
    if a.shape[0] != a.shape[1]:
        raise InputError(f"gram_schmidt expects a square matrix, got {a.shape}")
    q = a.copy()
    p = q.shape[1]
    scale = max(np.linalg.norm(a, axis=0).max(), 1.0)
    for j in range(p):
        col = q[:, j]
        norm0 = np.linalg.norm(col)
        for _ in range(2):
            for k in range(j):
                col -= (q[:, k] @ col) * q[:, k]
        norm = np.linalg.norm(col)
        if norm <= tol * scale or norm <= tol * norm0:
            raise SingularityError(f"gram_schmidt: column {j} is linearly dependent "
                                   f"on the preceding columns")
        q[:, j] = col / norm
    return q


class PenalizedGram:
    """Spectral form of ``(X'X + 2 n alpha M)`` with ``M = diag(0, 1, ..., 1)``.

    Writes the system matrix as ``R - c e1 e1'`` with ``R = X'X + c I`` and
    ``c = 2 n alpha``.  ``R`` is inverted through the cached SVD and the
    rank-one downdate through Sherman-Morrison.  The downdate denominator is
    evaluated as ``sum_j v1j^2 d_j^2 / (d_j^2 + c)`` which avoids the
    cancellation in ``1 - c e1' R^-1 e1``.
    """

    def __init__(self, x: DesignMatrix, alpha: float):
        if not alpha > 0 or not np.isfinite(alpha):
            raise InputError(f"alpha must be positive and finite, got {alpha}")
        self.x = x
        self.alpha = float(alpha)
        self.c = 2.0 * x.n * self.alpha
        svd = x.svd
        d2 = svd.d ** 2
        self._d2c = d2 + self.c
        self._shrink = d2 / self._d2c
        self._v1 = svd.v[0]
        self.denominator = float(self._v1 ** 2 @ self._shrink)
        if self.denominator <= 1e-12:
            raise NumericalError("penalized Gram downdate is degenerate: the "
                                 "intercept direction is (numerically) outside "
                                 "the row space of X")
        # K = U [diag(s) + c w w' / den] U'
        self._w = self._v1 * svd.d / self._d2c

    def _ridge_solve(self, b: np.ndarray) -> np.ndarray:
        v = self.x.svd.v
        vb = v.T @ b
        return v @ (vb / self._d2c) + (b - v @ vb) / self.c

    def solve(self, b) -> np.ndarray:
        b = _check_len(b, self.x.p, "b")
        e1 = np.zeros(self.x.p)
        e1[0] = 1.0
        rb = self._ridge_solve(b)
        re = self._ridge_solve(e1)
        return rb + self.c * re * (rb[0] / self.denominator)

    def smoother_apply(self, y) -> np.ndarray:
        """``K y`` with ``K = X (X'X + 2 n alpha M)^-1 X'``."""
        y = _check_len(y, self.x.n)
        a = self.x.svd.u.T @ y
        coef = self._shrink * a + self.c * self._w * ((self._w @ a) / self.denominator)
        return self.x.svd.u @ coef

    @property
    def trace(self) -> float:
        """``tr(K)``: ridge part plus the rank-one downdate correction."""
        return float(self._shrink.sum() + self.c * (self._w @ self._w) / self.denominator)

    def residual_quadform(self, y) -> float:
        """``y'(I - K) y`` without forming ``y - K y``."""
        y = _check_len(y, self.x.n)
        u = self.x.svd.u
        a = u.T @ y
        outside = float(np.sum((y - u @ a) ** 2))
        inside = float(np.sum(self.c / self._d2c * a ** 2)
                       - self.c * (self._w @ a) ** 2 / self.denominator)
        return outside + max(inside, 0.0)


def penalized_gram_solve(x: DesignMatrix, alpha: float, b) -> np.ndarray:
    """Solve ``(X'X + 2 n alpha M) z = b`` with ``M = diag(0, 1, ..., 1)``."""
    return PenalizedGram(x, alpha).solve(b)
