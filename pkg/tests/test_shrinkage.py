import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from fvshrink.errors import InputError, ParameterError, RankError
from fvshrink.linalg import DesignMatrix
from fvshrink.shrinkage import fit_fvs, fit_fvs_submodel, predict, submodel_design


def _problem(seed, n=30, p=6):
    rng = np.random.default_rng(seed)
    x = np.hstack([np.ones((n, 1)), rng.standard_normal((n, p - 1))])
    return DesignMatrix(x), x @ rng.standard_normal(p) + rng.standard_normal(n)


def test_gamma_one_is_ols():
    x, y = _problem(0)
    fit = fit_fvs(x, y, 1.0)
    b = np.linalg.lstsq(x.data, y, rcond=None)[0]
    assert np.allclose(fit.coefficients, b, atol=1e-10)
    assert np.allclose(fit.fitted, x.data @ b, atol=1e-10)
    rss = np.sum((y - x.data @ b) ** 2)
    assert fit.sigma_hat2 == pytest.approx(rss / (30 - 6))


def test_gamma_zero_is_intercept_only():
    x, y = _problem(1)
    fit = fit_fvs(x, y, 0.0)
    assert np.allclose(fit.fitted, y.mean())
    assert np.allclose(fit.coefficients, [y.mean(), 0, 0, 0, 0, 0], atol=1e-10)


def test_coefficients_reproduce_fitted_values():
    x, y = _problem(2, n=10, p=25)
    for g in (0.0, 0.3, 1.0):
        fit = fit_fvs(x, y, g)
        assert np.allclose(x.data @ fit.coefficients, fit.fitted, atol=1e-9)
        # minimum norm: orthogonal to the null space of X
        assert np.allclose(fit.coefficients, x.pinv_apply(x.data @ fit.coefficients),
                           atol=1e-9)
    assert fit_fvs(x, y, 0.5).sigma_hat2 is None


@settings(max_examples=30, deadline=None)
@given(seed=st.integers(0, 2 ** 32 - 1), gamma=st.floats(0, 1),
       n=st.integers(4, 25), p=st.integers(2, 30))
def test_fitted_values_invariant_to_invertible_transform(seed, gamma, n, p):
    rng = np.random.default_rng(seed)
    x = DesignMatrix(np.hstack([np.ones((n, 1)), rng.standard_normal((n, p - 1))]))
    y = rng.standard_normal(n) * 3
    t = rng.standard_normal((p, p)) + 2 * np.eye(p)
    if np.linalg.cond(t) > 1e6:
        return
    f1 = fit_fvs(x, y, gamma).fitted
    f2 = fit_fvs(x.transform(t), y, gamma).fitted
    assert np.max(np.abs(f1 - f2)) <= 1e-7 * max(1.0, np.max(np.abs(y)))


def test_input_validation():
    x, y = _problem(3)
    with pytest.raises(ParameterError):
        fit_fvs(x, y, 1.2)
    with pytest.raises(InputError):
        fit_fvs(x, y[:-1], 0.5)
    bad = y.copy()
    bad[0] = np.inf
    with pytest.raises(InputError):
        fit_fvs(x, bad, 0.5)
    with pytest.raises(RankError):
        fit_fvs(DesignMatrix(np.ones((5, 2))), np.arange(5.0), 0.5)


def test_submodel_intercept_equals_default_target():
    x, y = _problem(4)
    a = fit_fvs_submodel(x, [0], y, 0.4)
    b = fit_fvs(x, y, 0.4)
    assert a.target == "intercept"
    assert np.allclose(a.fitted, b.fitted, atol=1e-12)


def test_submodel_shrinks_toward_submodel_fit():
    x, y = _problem(5)
    fit = fit_fvs_submodel(x, [0, 2], y, 0.0)
    x0 = x.data[:, [0, 2]]
    assert fit.target == (0, 2)
    assert np.allclose(fit.fitted, x0 @ np.linalg.lstsq(x0, y, rcond=None)[0], atol=1e-10)


@pytest.mark.parametrize("cols,err", [([1, 2], InputError), ([0, 9], InputError),
                                      ([0, 1, 2, 3, 4, 5], InputError)])
def test_submodel_validation(cols, err):
    x, _ = _problem(6)
    with pytest.raises(err):
        submodel_design(x, cols)


def test_submodel_requires_rank_gap():
    rng = np.random.default_rng(7)
    a = rng.standard_normal(20)
    x = DesignMatrix(np.column_stack([np.ones(20), a, 2 * a]))
    with pytest.raises(RankError):
        submodel_design(x, [0, 1])


def test_predict_uses_coefficients():
    x, y = _problem(8)
    fit = fit_fvs(x, y, 0.7)
    new = np.array([[1.0, 0.1, 0.2, 0.3, 0.4, 0.5]])
    assert predict(fit, new) == pytest.approx(new @ fit.coefficients)
    with pytest.raises(InputError):
        predict(fit, np.ones((1, 3)))
