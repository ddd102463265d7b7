import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from fvshrink.errors import InputError, NumericalError, RankError, SingularityError
from fvshrink.linalg import (DesignMatrix, PenalizedGram, gram_schmidt,
                             mean_projector_apply, penalized_gram_solve, reduced_svd)


def _design(rng, n, p):
    return np.hstack([np.ones((n, 1)), rng.standard_normal((n, p - 1))])


def _dense_k(x, alpha):
    n, p = x.shape
    m = np.eye(p)
    m[0, 0] = 0.0
    a = x.T @ x + 2 * n * alpha * m
    return a, x @ np.linalg.solve(a, x.T)


@pytest.mark.parametrize("shape", [(20, 5), (5, 20), (7, 7)])
def test_reduced_svd_reconstructs(shape):
    a = np.random.default_rng(0).standard_normal(shape)
    svd = reduced_svd(a)
    assert svd.rank == min(shape)
    assert np.allclose(svd.reconstruct(), a, atol=1e-12)
    assert np.allclose(svd.u.T @ svd.u, np.eye(svd.rank), atol=1e-12)


def test_reduced_svd_detects_rank_deficiency():
    rng = np.random.default_rng(1)
    a = rng.standard_normal((30, 4)) @ rng.standard_normal((4, 10))
    assert reduced_svd(a).rank == 4


def test_reduced_svd_rejects_nonfinite():
    a = np.ones((3, 2))
    a[1, 1] = np.nan
    with pytest.raises(InputError):
        reduced_svd(a)


def test_pinv_and_projection_match_numpy():
    rng = np.random.default_rng(2)
    x = _design(rng, 15, 25)
    d = DesignMatrix(x)
    y = rng.standard_normal(15)
    assert np.allclose(d.pinv_apply(y), np.linalg.pinv(x) @ y, atol=1e-10)
    xr = _design(rng, 40, 6)
    dr = DesignMatrix(xr)
    y = rng.standard_normal(40)
    proj = xr @ np.linalg.lstsq(xr, y, rcond=None)[0]
    assert np.allclose(dr.project(y), proj, atol=1e-10)
    assert np.allclose(dr.project(dr.project(y)), dr.project(y), atol=1e-12)


def test_mean_projector():
    y = np.array([1.0, 2.0, 6.0])
    assert np.allclose(mean_projector_apply(y), 3.0)


def test_design_requires_intercept():
    with pytest.raises(InputError):
        DesignMatrix(np.random.default_rng(0).standard_normal((5, 2)))
    DesignMatrix(np.random.default_rng(0).standard_normal((5, 2)), require_intercept=False)


def test_design_is_read_only():
    d = DesignMatrix(_design(np.random.default_rng(3), 6, 3))
    with pytest.raises(ValueError):
        d.data[0, 0] = 2.0


def test_zero_design_has_no_rank():
    with pytest.raises(RankError):
        DesignMatrix(np.zeros((4, 3)), require_intercept=False)


def test_gram_schmidt_orthonormal():
    a = np.random.default_rng(4).standard_normal((8, 8))
    q = gram_schmidt(a)
    assert np.allclose(q.T @ q, np.eye(8), atol=1e-13)
    # same column spans, column by column
    r = q.T @ a
    assert np.allclose(np.tril(r, -1), 0.0, atol=1e-12)


def test_gram_schmidt_names_dependent_column():
    a = np.random.default_rng(5).standard_normal((4, 4))
    a[:, 2] = a[:, 0] + a[:, 1]
    with pytest.raises(SingularityError, match="column 2"):
        gram_schmidt(a)


@pytest.mark.parametrize("n,p", [(12, 5), (6, 10), (20, 15), (3, 2)])
def test_penalized_gram_matches_dense(n, p):
    rng = np.random.default_rng(n * 100 + p)
    x = _design(rng, n, p)
    alpha = 0.37
    a, k = _dense_k(x, alpha)
    b = rng.standard_normal(p)
    y = rng.standard_normal(n)
    d = DesignMatrix(x)
    gram = PenalizedGram(d, alpha)
    assert np.allclose(penalized_gram_solve(d, alpha, b), np.linalg.solve(a, b), rtol=1e-9)
    assert gram.trace == pytest.approx(np.trace(k), rel=1e-10)
    assert gram.residual_quadform(y) == pytest.approx(y @ y - y @ k @ y, rel=1e-9)
    assert np.allclose(gram.smoother_apply(y), k @ y, atol=1e-10)


def test_penalized_gram_singular_without_intercept_signal():
    # intercept column zero: X'X + 2 n alpha M is singular
    x = np.hstack([np.zeros((5, 1)), np.random.default_rng(0).standard_normal((5, 2))])
    with pytest.raises(NumericalError):
        PenalizedGram(DesignMatrix(x, require_intercept=False), 0.5)


@settings(max_examples=40, deadline=None)
@given(n=st.integers(3, 20), p=st.integers(2, 15), seed=st.integers(0, 2 ** 32 - 1),
       log_alpha=st.floats(-4, 2))
def test_trace_k_bounded_by_rank(n, p, seed, log_alpha):
    rng = np.random.default_rng(seed)
    d = DesignMatrix(_design(rng, n, p))
    tr = PenalizedGram(d, 10.0 ** log_alpha).trace
    # the intercept direction is never shrunk
    assert 1.0 - 1e-9 <= tr <= d.rank + 1e-9
