"""Pure numpy implementation of the IRLS kernel.

Same algorithm and signature as the compiled ``_kernels.irls_subsets``; used
when the extension is unavailable or ``DURTRIAL_BACKEND=python`` is set.
"""
from __future__ import annotations

import numpy as np

ETA_CLAMP = 30.0
MAX_HALVINGS = 10


def _expit(x):
    return 1.0 / (1.0 + np.exp(-x))


def _deviance(y, n, mu):
    f = n - y
    with np.errstate(divide="ignore", invalid="ignore"):
        a = np.where(y > 0, y * np.log(y / (n * mu)), 0.0)
        b = np.where(f > 0, f * np.log(f / (n * (1.0 - mu))), 0.0)
    return 2.0 * float(np.sum(a + b))


def _rank_deficient(X, rtol):
    k, p = X.shape
    if p > k:
        return True
    cn = np.linalg.norm(X, axis=0)
    if np.any(cn == 0.0):
        return True
    r = np.linalg.qr(X, mode="r")
    return bool(np.any(np.abs(np.diag(r)) <= rtol * cn))


def _solve(A, b):
    q, r = np.linalg.qr(A)
    d = np.diag(r)
    if np.any(d == 0.0):
        return None
    return _back_substitute(r, q.T @ b)


def _back_substitute(r, rhs):
    p = r.shape[0]
    x = np.empty(p)
    for j in range(p - 1, -1, -1):
        x[j] = (rhs[j] - r[j, j + 1:] @ x[j + 1:]) / r[j, j]
    return x


def _objective(X, beta, y, n, ridge):
    eta = np.clip(X @ beta, -ETA_CLAMP, ETA_CLAMP)
    mu = _expit(eta)
    dev = _deviance(y, n, mu)
    return dev + ridge * float(beta[1:] @ beta[1:]), dev, eta, mu


def irls(X, y, n, ridge, max_iter, tol):
    """Fit one problem; ``X`` carries the intercept in column 0.

    Returns ``(beta, deviance, converged, iterations)``.
    """
    k, p = X.shape
    mu = (y + 0.5) / (n + 1.0)
    eta = np.log(mu / (1.0 - mu))
    dev = _deviance(y, n, mu)
    obj_old = dev
    beta = np.zeros(p)
    pen_rows = np.zeros((p - 1, p))
    pen_rows[np.arange(p - 1), np.arange(1, p)] = np.sqrt(ridge)
    converged = False
    it = 0
    while it < max_iter:
        it += 1
        v = mu * (1.0 - mu)
        sw = np.sqrt(n * v)
        z = eta + (y / n - mu) / v
        A = sw[:, None] * X
        b = sw * z
        if ridge > 0:
            A = np.vstack([A, pen_rows])
            b = np.concatenate([b, np.zeros(p - 1)])
        bnew = _solve(A, b)
        if bnew is None:
            break
        obj_new, dev, eta, mu = _objective(X, bnew, y, n, ridge)
        if it > 1:
            h = 0
            while obj_new > obj_old and h < MAX_HALVINGS:
                bnew = 0.5 * (bnew + beta)
                obj_new, dev, eta, mu = _objective(X, bnew, y, n, ridge)
                h += 1
        beta = bnew
        if abs(obj_new - obj_old) < tol:
            converged = True
            break
        obj_old = obj_new
    return beta, dev, converged, it


def irls_subsets(X, subsets, y, n, ridge=1e-6, max_iter=50, tol=1e-8, rank_rtol=1e-8):
    X = np.ascontiguousarray(X, dtype=float)
    subsets = np.asarray(subsets, dtype=np.intp)
    y = np.asarray(y, dtype=float)
    n = np.asarray(n, dtype=float)
    k = X.shape[0]
    c, q = subsets.shape
    p = q + 1
    beta = np.zeros((c, p))
    dev = np.zeros(c)
    conv = np.zeros(c, dtype=np.int8)
    ridged = np.zeros(c, dtype=np.int8)
    iters = np.zeros(c, dtype=np.int32)
    for s in range(c):
        Xc = np.empty((k, p))
        Xc[:, 0] = 1.0
        Xc[:, 1:] = X[:, subsets[s]]
        ok = False
        if not _rank_deficient(Xc, rank_rtol):
            b, d, ok, it = irls(Xc, y, n, 0.0, max_iter, tol)
        if not ok:
            b, d, ok, it = irls(Xc, y, n, ridge, max_iter, tol)
            ridged[s] = 1
        beta[s], dev[s], conv[s], iters[s] = b, d, ok, it
    return beta, dev, conv, ridged, iters
