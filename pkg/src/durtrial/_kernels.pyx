# cython: language_level=3, boundscheck=False, wraparound=False, cdivision=True, initializedcheck=False
"""Compiled IRLS kernel for small binomial logistic problems.

Mirrors ``_kernels_py`` operation for operation; the two are compared in
tests and in ``benchmarks/bench_kernels.py``.
"""
import numpy as np
cimport numpy as cnp
from libc.math cimport exp, log, fabs, sqrt
from libc.stdlib cimport malloc, free

cnp.import_array()

DEF MAXP = 64

cdef double ETA_CLAMP = 30.0
cdef int MAX_HALVINGS = 10


cdef inline double _clamp(double x) noexcept nogil:
    if x > ETA_CLAMP:
        return ETA_CLAMP
    if x < -ETA_CLAMP:
        return -ETA_CLAMP
    return x


cdef inline double _expit(double x) noexcept nogil:
    return 1.0 / (1.0 + exp(-x))


cdef double _deviance(const double* y, const double* n, const double* mu, int k) noexcept nogil:
    cdef double total = 0.0, yi, fi
    cdef int i
    for i in range(k):
        yi = y[i]
        fi = n[i] - yi
        if yi > 0:
            total += yi * log(yi / (n[i] * mu[i]))
        if fi > 0:
            total += fi * log(fi / (n[i] * (1.0 - mu[i])))
    return 2.0 * total


cdef int _qr_solve(double* A, double* b, int r, int c, double* x, double rtol) noexcept nogil:
    """Householder least squares on row-major ``A`` (r x c), in place.

    Returns 1 when a pivot falls below ``rtol`` times its column norm.
    """
    cdef double cn[MAXP]
    cdef double rdiag[MAXP]
    cdef int i, j, l
    cdef double s, norm, alpha, vtv, dot, f, v0
    for j in range(c):
        s = 0.0
        for i in range(r):
            s += A[i * c + j] * A[i * c + j]
        cn[j] = sqrt(s)
    for j in range(c):
        s = 0.0
        for i in range(j, r):
            s += A[i * c + j] * A[i * c + j]
        norm = sqrt(s)
        if norm <= rtol * cn[j] or norm == 0.0:
            return 1
        alpha = -norm if A[j * c + j] > 0 else norm
        v0 = A[j * c + j] - alpha
        A[j * c + j] = v0
        vtv = s - (v0 + alpha) * (v0 + alpha) + v0 * v0
        for l in range(j + 1, c):
            dot = 0.0
            for i in range(j, r):
                dot += A[i * c + j] * A[i * c + l]
            f = 2.0 * dot / vtv
            for i in range(j, r):
                A[i * c + l] -= f * A[i * c + j]
        dot = 0.0
        for i in range(j, r):
            dot += A[i * c + j] * b[i]
        f = 2.0 * dot / vtv
        for i in range(j, r):
            b[i] -= f * A[i * c + j]
        rdiag[j] = alpha
    for j in range(c - 1, -1, -1):
        s = b[j]
        for l in range(j + 1, c):
            s -= A[j * c + l] * x[l]
        x[j] = s / rdiag[j]
    return 0


cdef double _objective(const double* X, const double* beta, const double* y, const double* n,
                       int k, int p, double ridge, double* eta, double* mu,
                       double* dev) noexcept nogil:
    cdef int i, j
    cdef double s, pen = 0.0
    for i in range(k):
        s = 0.0
        for j in range(p):
            s += X[i * p + j] * beta[j]
        eta[i] = _clamp(s)
        mu[i] = _expit(eta[i])
    dev[0] = _deviance(y, n, mu, k)
    for j in range(1, p):
        pen += beta[j] * beta[j]
    return dev[0] + ridge * pen


cdef int _irls(const double* X, const double* y, const double* n, int k, int p,
               double ridge, int max_iter, double tol,
               double* beta, double* dev_out, int* iters_out, double* work) noexcept nogil:
    """Fit one problem. ``X`` is row-major k x p with the intercept in column 0."""
    cdef int rows = k + (p - 1 if ridge > 0 else 0)
    cdef double* A = work
    cdef double* b = A + rows * p
    cdef double* eta = b + rows
    cdef double* mu = eta + k
    cdef double* bnew = mu + k
    cdef int i, j, it, h, converged = 0
    cdef double w, sw, obj_old, obj_new, dev, m0, sr = sqrt(ridge)

    for i in range(k):
        m0 = (y[i] + 0.5) / (n[i] + 1.0)
        mu[i] = m0
        eta[i] = log(m0 / (1.0 - m0))
    dev = _deviance(y, n, mu, k)
    obj_old = dev
    for j in range(p):
        beta[j] = 0.0

    it = 0
    while it < max_iter:
        it += 1
        for i in range(k):
            w = n[i] * mu[i] * (1.0 - mu[i])
            sw = sqrt(w)
            for j in range(p):
                A[i * p + j] = sw * X[i * p + j]
            b[i] = sw * (eta[i] + (y[i] / n[i] - mu[i]) / (mu[i] * (1.0 - mu[i])))
        for i in range(k, rows):
            for j in range(p):
                A[i * p + j] = 0.0
            A[i * p + (i - k + 1)] = sr
            b[i] = 0.0
        if _qr_solve(A, b, rows, p, bnew, 0.0):
            break
        obj_new = _objective(X, bnew, y, n, k, p, ridge, eta, mu, &dev)
        if it > 1:
            h = 0
            while obj_new > obj_old and h < MAX_HALVINGS:
                for j in range(p):
                    bnew[j] = 0.5 * (bnew[j] + beta[j])
                obj_new = _objective(X, bnew, y, n, k, p, ridge, eta, mu, &dev)
                h += 1
        for j in range(p):
            beta[j] = bnew[j]
        if fabs(obj_new - obj_old) < tol:
            converged = 1
            obj_old = obj_new
            break
        obj_old = obj_new
    dev_out[0] = dev
    iters_out[0] = it
    return converged


def irls_subsets(double[:, ::1] X, cnp.intp_t[:, ::1] subsets, double[::1] y, double[::1] n,
                 double ridge=1e-6, int max_iter=50, double tol=1e-8, double rank_rtol=1e-8):
    """Fit an intercept plus each row of ``subsets`` (column indices into ``X``).

    Returns ``(beta, deviance, converged, ridged, iterations)`` with one row
    per subset; ``beta[:, 0]`` is the intercept.
    """
    cdef int k = X.shape[0]
    cdef int c = subsets.shape[0]
    cdef int q = subsets.shape[1]
    cdef int p = q + 1
    cdef int s, i, j, conv, rank_def
    if p > MAXP:
        raise ValueError("too many columns")
    beta_arr = np.zeros((c, p))
    dev_arr = np.zeros(c)
    conv_arr = np.zeros(c, dtype=np.int8)
    ridged_arr = np.zeros(c, dtype=np.int8)
    iter_arr = np.zeros(c, dtype=np.int32)
    cdef double[:, ::1] beta = beta_arr
    cdef double[::1] dev = dev_arr
    cdef cnp.int8_t[::1] cv = conv_arr
    cdef cnp.int8_t[::1] rg = ridged_arr
    cdef cnp.int32_t[::1] its = iter_arr
    cdef double* Xc = <double*> malloc(k * p * sizeof(double))
    cdef double* work = <double*> malloc(((k + p) * p + (k + p) + 2 * k + p + 1) * sizeof(double))
    cdef double* tmp = <double*> malloc((p + 1) * sizeof(double))
    cdef double* bcopy = <double*> malloc(k * sizeof(double))
    cdef int iters
    cdef double dv
    try:
        with nogil:
            for s in range(c):
                for i in range(k):
                    Xc[i * p] = 1.0
                    for j in range(q):
                        Xc[i * p + j + 1] = X[i, subsets[s, j]]
                if p > k:
                    rank_def = 1
                else:
                    for i in range(k * p):
                        work[i] = Xc[i]
                    for i in range(k):
                        bcopy[i] = 0.0
                    rank_def = _qr_solve(work, bcopy, k, p, tmp, rank_rtol)
                conv = 0
                if not rank_def:
                    conv = _irls(Xc, &y[0], &n[0], k, p, 0.0, max_iter, tol,
                                 &beta[s, 0], &dv, &iters, work)
                if conv:
                    rg[s] = 0
                else:
                    conv = _irls(Xc, &y[0], &n[0], k, p, ridge, max_iter, tol,
                                 &beta[s, 0], &dv, &iters, work)
                    rg[s] = 1
                cv[s] = conv
                dev[s] = dv
                its[s] = iters
    finally:
        free(Xc)
        free(work)
        free(tmp)
        free(bcopy)
    return beta_arr, dev_arr, conv_arr, ridged_arr, iter_arr
