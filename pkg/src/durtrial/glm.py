"""Weighted binomial logistic regression by IRLS.

The heavy lifting happens in the kernel chosen by ``_backend``; this module
handles column standardisation, back-transformation and prediction.
"""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from ._backend import irls_subsets
from .errors import DomainError

ETA_CLAMP = 30.0
RIDGE = 1e-6
MAX_ITER = 50
TOL = 1e-8
RANK_RTOL = 1e-8


@dataclass(frozen=True)
class DesignMatrix:
    """Per-arm design: basis columns (intercept first), arm sizes and cure counts."""

    X: np.ndarray
    weights: np.ndarray
    responses: np.ndarray

    def __post_init__(self):
        X = np.atleast_2d(np.asarray(self.X, dtype=float))
        w = np.asarray(self.weights, dtype=float).ravel()
        y = np.asarray(self.responses, dtype=float).ravel()
        object.__setattr__(self, "X", X)
        object.__setattr__(self, "weights", w)
        object.__setattr__(self, "responses", y)
        if not (np.all(np.isfinite(X)) and np.all(np.isfinite(w)) and np.all(np.isfinite(y))):
            raise DomainError("design matrix contains non-finite entries")
        if X.shape[0] != w.size or w.size != y.size:
            raise DomainError("row counts of X, weights and responses differ")
        if X.shape[1] < 1 or not np.all(X[:, 0] == 1.0):
            raise DomainError("first column of X must be the intercept (all ones)")
        if np.any(w <= 0) or np.any(y < 0) or np.any(y > w):
            raise DomainError("need weights > 0 and 0 <= responses <= weights")


@dataclass(frozen=True)
class GlmFit:
    coefficients: np.ndarray
    deviance: float
    converged: bool
    iterations: int
    ridged: bool = False
    column_transform: tuple[np.ndarray, np.ndarray] | None = field(default=None, repr=False)

    @property
    def hit_max_iter(self) -> bool:
        return not self.converged and self.iterations >= MAX_ITER


def column_transform(columns: np.ndarray, standardize: bool = True):
    """Centering and scaling constants for non-intercept columns."""
    columns = np.asarray(columns, dtype=float)
    if not standardize or columns.shape[1] == 0:
        return np.zeros(columns.shape[1]), np.ones(columns.shape[1])
    means = columns.mean(axis=0)
    scales = columns.std(axis=0)
    scales[scales == 0.0] = 1.0
    return means, scales


def fit_subsets(columns, subsets, responses, weights, standardize=True):
    """Fit an intercept plus each subset of ``columns`` in one kernel call.

    Args:
        columns: raw basis values, one row per arm, intercept excluded.
        subsets: integer array, one row of column indices per candidate model.

    Returns:
        ``(coefficients, deviance, converged, ridged, iterations)``;
        coefficients are on the raw column scale, intercept first.
    """
    columns = np.asarray(columns, dtype=float)
    subsets = np.ascontiguousarray(np.atleast_2d(subsets), dtype=np.intp)
    means, scales = column_transform(columns, standardize)
    Z = np.ascontiguousarray((columns - means) / scales)
    beta, dev, conv, ridged, iters = irls_subsets(
        Z, subsets, np.ascontiguousarray(responses, dtype=float),
        np.ascontiguousarray(weights, dtype=float), RIDGE, MAX_ITER, TOL, RANK_RTOL)
    raw = np.empty_like(beta)
    raw[:, 1:] = beta[:, 1:] / scales[subsets]
    raw[:, 0] = beta[:, 0] - np.sum(raw[:, 1:] * means[subsets], axis=1)
    return raw, dev, conv.astype(bool), ridged.astype(bool), iters


def fit_logistic(X: DesignMatrix, standardize: bool = True) -> GlmFit:
    """Maximum-likelihood logistic fit of ``X.responses`` out of ``X.weights``.

    Columns are standardised internally unless ``standardize`` is false;
    coefficients are always reported on the original column scale. A
    rank-deficient or non-converging problem is refitted with a small ridge
    penalty and flagged ``ridged``.
    """
    cols = X.X[:, 1:]
    subsets = np.arange(cols.shape[1], dtype=np.intp)[None, :]
    beta, dev, conv, ridged, iters = fit_subsets(cols, subsets, X.responses, X.weights,
                                                 standardize)
    return GlmFit(beta[0], float(dev[0]), bool(conv[0]), int(iters[0]), bool(ridged[0]),
                  column_transform(cols, standardize))


def inverse_logit(eta):
    eta = np.clip(eta, -ETA_CLAMP, ETA_CLAMP)
    return 1.0 / (1.0 + np.exp(-eta))


def predict_probability(fit: GlmFit, basis_row) -> float:
    row = np.asarray(basis_row, dtype=float).ravel()
    if row.size != fit.coefficients.size:
        raise DomainError(f"basis row has {row.size} entries, expected {fit.coefficients.size}")
    return float(inverse_logit(row @ fit.coefficients))


def predict_many(coefficients, basis) -> np.ndarray:
    """Vectorised prediction for a basis matrix with one row per duration."""
    return inverse_logit(np.asarray(basis, dtype=float) @ coefficients)


def binomial_deviance(y, n, mu) -> float:
    y = np.asarray(y, float)
    n = np.asarray(n, float)
    mu = np.asarray(mu, float)
    f = n - y
    with np.errstate(divide="ignore", invalid="ignore"):
        a = np.where(y > 0, y * np.log(y / (n * mu)), 0.0)
        b = np.where(f > 0, f * np.log(f / (n * (1.0 - mu))), 0.0)
    return 2.0 * float(np.sum(a + b))


def score_vector(fit: GlmFit, X: DesignMatrix) -> np.ndarray:
    """Gradient of the binomial log-likelihood at the fitted coefficients."""
    mu = predict_many(fit.coefficients, X.X)
    return X.X.T @ (X.responses - X.weights * mu)
