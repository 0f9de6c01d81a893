import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st
from scipy.stats import binom

from durtrial.errors import DomainError
from durtrial.glm import (DesignMatrix, binomial_deviance, fit_logistic, predict_many,
                          predict_probability, score_vector)


def _design(durations, n, y, powers=(1,)):
    d = np.asarray(durations, float)
    X = np.column_stack([np.ones_like(d)] + [d ** p for p in powers])
    return DesignMatrix(X, np.asarray(n, float), np.asarray(y, float))


def _loglik(beta0, beta1, d, n, y):
    eta = beta0[..., None] + beta1[..., None] * d
    return np.sum(y * eta - n * np.logaddexp(0, eta), axis=-1)


def _grid_oracle(d, n, y):
    # Successively finer grid search for the maximum-likelihood (beta0, beta1).
    c0, c1, half, step = 0.0, 0.0, 10.0, 0.1
    for _ in range(4):
        b0 = np.arange(c0 - half, c0 + half + step / 2, step)
        b1 = np.arange(c1 - half / 10, c1 + half / 10 + step / 20, step / 10)
        B0, B1 = np.meshgrid(b0, b1, indexing="ij")
        ll = _loglik(B0, B1, d, n, y)
        i, j = np.unravel_index(np.argmax(ll), ll.shape)
        c0, c1 = B0[i, j], B1[i, j]
        half, step = 20 * step, step / 10
    return c0, c1


def test_intercept_only_is_logit_of_pooled_rate():
    n = np.full(7, 72.0)
    y = np.array([40, 50, 55, 57, 60, 57, 59], float)
    fit = fit_logistic(DesignMatrix(np.ones((7, 1)), n, y))
    p = y.sum() / n.sum()
    assert fit.coefficients[0] == pytest.approx(math.log(p / (1 - p)), abs=1e-8)
    sat = 2 * np.sum(binom.logpmf(y, n, y / n) - binom.logpmf(y, n, p))
    assert fit.deviance == pytest.approx(sat, abs=1e-8)


def test_intercept_only_ln3():
    fit = fit_logistic(DesignMatrix(np.ones((3, 1)), [100.0] * 3, [75.0] * 3))
    assert fit.coefficients[0] == pytest.approx(math.log(3), abs=1e-8)


def test_irls_matches_grid_oracle():
    d, n, y = np.array([10.0, 15, 20]), np.array([100.0] * 3), np.array([60.0, 75, 88])
    fit = fit_logistic(_design(d, n, y))
    b0, b1 = _grid_oracle(d, n, y)
    assert fit.coefficients == pytest.approx([b0, b1], abs=2e-3)


def test_score_vanishes_at_solution():
    X = _design([10, 12, 14, 16, 20], [80] * 5, [50, 60, 62, 70, 77], powers=(1, 2))
    fit = fit_logistic(X)
    assert fit.converged and not fit.ridged
    assert np.max(np.abs(score_vector(fit, X))) < 1e-6 * 400


def test_saturated_model_has_zero_deviance():
    fit = fit_logistic(_design([10, 15, 20], [50] * 3, [20, 31, 44], powers=(1, 2)))
    assert fit.deviance == pytest.approx(0.0, abs=1e-8)


@given(st.lists(st.integers(5, 45), min_size=4, max_size=7),
       st.floats(-3, 3), st.floats(0.1, 5))
@settings(max_examples=40, deadline=None)
def test_affine_invariance(counts, shift, scale):
    k = len(counts)
    d = np.linspace(10, 20, k)
    n = np.full(k, 50.0)
    y = np.asarray(counts, float)
    base = fit_logistic(_design(d, n, y))
    moved = fit_logistic(_design(scale * d + shift, n, y))
    raw = fit_logistic(_design(d, n, y), standardize=False)
    grid = np.linspace(10, 20, 11)
    p_base = predict_many(base.coefficients, np.column_stack([np.ones(11), grid]))
    p_moved = predict_many(moved.coefficients, np.column_stack([np.ones(11), scale * grid + shift]))
    p_raw = predict_many(raw.coefficients, np.column_stack([np.ones(11), grid]))
    np.testing.assert_allclose(p_moved, p_base, atol=1e-10)
    np.testing.assert_allclose(p_raw, p_base, atol=1e-10)


def test_row_order_invariance():
    d, n, y = [10, 12, 15, 17, 20], [60] * 5, [30, 41, 45, 52, 55]
    a = fit_logistic(_design(d, n, y, powers=(1, 2)))
    perm = [3, 0, 4, 2, 1]
    b = fit_logistic(_design(np.take(d, perm), np.take(n, perm), np.take(y, perm), powers=(1, 2)))
    np.testing.assert_allclose(a.coefficients, b.coefficients, rtol=1e-9, atol=1e-9)
    assert a.deviance == pytest.approx(b.deviance, abs=1e-10)


def test_collinear_columns_are_ridged():
    d = np.array([10.0, 15, 20])
    X = DesignMatrix(np.column_stack([np.ones(3), d, 2 * d]), np.full(3, 50.0), np.array([20.0, 30, 40]))
    fit = fit_logistic(X)
    assert fit.ridged and np.all(np.isfinite(fit.coefficients))
    assert not fit_logistic(_design(d, [50] * 3, [20, 30, 40])).ridged


def test_quasi_separation_stays_finite():
    fit = fit_logistic(_design([10, 15, 20], [50] * 3, [0, 25, 50]))
    assert np.all(np.isfinite(fit.coefficients))
    p = predict_many(fit.coefficients, np.column_stack([np.ones(3), [10, 15, 20]]))
    assert p[0] < 0.01 and p[2] > 0.99


def test_predict_examples():
    fit = fit_logistic(DesignMatrix(np.ones((3, 1)), [100.0] * 3, [75.0] * 3))
    assert predict_probability(fit, [1.0]) == pytest.approx(0.75, abs=1e-10)
    with pytest.raises(DomainError):
        predict_probability(fit, [1.0, 2.0])
    assert predict_many([0.0], np.ones((2, 1))).tolist() == [0.5, 0.5]


def test_design_matrix_validation():
    with pytest.raises(DomainError):
        DesignMatrix(np.array([[1.0, np.nan]]), [1.0], [0.0])
    with pytest.raises(DomainError):
        DesignMatrix(np.array([[2.0, 1.0]]), [1.0], [0.0])
    with pytest.raises(DomainError):
        DesignMatrix(np.ones((1, 1)), [3.0], [4.0])


def test_binomial_deviance_oracle():
    y, n, mu = np.array([0.0, 3, 10]), np.array([10.0, 10, 10]), np.array([0.2, 0.4, 0.9])
    expected = 2 * np.sum(binom.logpmf(y, n, y / n) - binom.logpmf(y, n, mu))
    assert binomial_deviance(y, n, mu) == pytest.approx(expected, abs=1e-10)
