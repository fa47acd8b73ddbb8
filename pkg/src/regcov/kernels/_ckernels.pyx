# cython: language_level=3, boundscheck=False, wraparound=False, cdivision=True
"""Compiled inner loops. Same signatures and semantics as ``_pykernels``."""

import numpy as np
cimport numpy as cnp
from libc.math cimport log1p, fabs

cnp.import_array()

def _scatter_real(const double[:, ::1] X, const double[::1] w, bint normalize):
    cdef Py_ssize_t n = X.shape[0], d = X.shape[1]
    cdef Py_ssize_t r, i, j
    cdef double wr, xi
    out = np.zeros((d, d), dtype=np.float64)
    cdef double[:, ::1] S = out
    with nogil:
        for r in range(n):
            wr = w[r]
            if normalize:
                xi = 0.0
                for i in range(d):
                    xi = xi + X[r, i] * X[r, i]
                wr = wr / xi
            for i in range(d):
                xi = X[r, i] * wr
                for j in range(i + 1):
                    S[i, j] = S[i, j] + xi * X[r, j]
        for i in range(d):
            for j in range(i):
                S[j, i] = S[i, j]
    return out


def _scatter_complex(const double[:, ::1] X, const double[::1] w, bint normalize):
    # X is the float64 view of a complex (n, d) array: columns alternate re, im.
    cdef Py_ssize_t n = X.shape[0], d = X.shape[1] // 2
    cdef Py_ssize_t r, i, j
    cdef double wr, ar, ai, br, bi
    re = np.zeros((d, d), dtype=np.float64)
    im = np.zeros((d, d), dtype=np.float64)
    cdef double[:, ::1] Sr = re
    cdef double[:, ::1] Si = im
    with nogil:
        for r in range(n):
            wr = w[r]
            if normalize:
                ar = 0.0
                for i in range(2 * d):
                    ar = ar + X[r, i] * X[r, i]
                wr = wr / ar
            for i in range(d):
                ar = X[r, 2 * i] * wr
                ai = X[r, 2 * i + 1] * wr
                for j in range(i + 1):
                    br = X[r, 2 * j]
                    bi = X[r, 2 * j + 1]
                    Sr[i, j] = Sr[i, j] + ar * br + ai * bi
                    Si[i, j] = Si[i, j] + ai * br - ar * bi
        for i in range(d):
            Si[i, i] = 0.0
            for j in range(i):
                Sr[j, i] = Sr[i, j]
                Si[j, i] = -Si[i, j]
    return re + 1j * im


def _scatter(X, w, normalize):
    X = np.ascontiguousarray(X)
    w = np.ascontiguousarray(w, dtype=np.float64)
    if np.iscomplexobj(X):
        X = np.ascontiguousarray(X, dtype=np.complex128)
        return _scatter_complex(X.view(np.float64), w, normalize)
    return _scatter_real(np.ascontiguousarray(X, dtype=np.float64), w, normalize)


def weighted_scatter(X, w):
    """Return ``sum_n w[n] x_n x_n^H`` for the rows ``x_n`` of `X`."""
    return _scatter(X, w, False)


def normalized_scatter(X, w=None):
    """Return ``sum_n w[n] x_n x_n^H / (x_n^H x_n)`` (unit weights by default)."""
    if w is None:
        w = np.ones(np.shape(X)[0])
    return _scatter(X, w, True)


def _quad_real(const double[:, ::1] X, const double[:, ::1] A):
    cdef Py_ssize_t n = X.shape[0], d = X.shape[1]
    cdef Py_ssize_t r, i, j
    cdef double acc, inner
    out = np.empty(n, dtype=np.float64)
    cdef double[::1] q = out
    with nogil:
        for r in range(n):
            acc = 0.0
            for i in range(d):
                inner = 0.0
                for j in range(d):
                    inner = inner + A[i, j] * X[r, j]
                acc = acc + X[r, i] * inner
            q[r] = acc
    return out


def _quad_complex(const double[:, ::1] X, const double[:, ::1] A):
    # Float64 views of complex X (n, d) and A (d, d); only Re(x^H A x) is formed.
    cdef Py_ssize_t n = X.shape[0], d = X.shape[1] // 2
    cdef Py_ssize_t r, i, j
    cdef double acc, vr, vi
    out = np.empty(n, dtype=np.float64)
    cdef double[::1] q = out
    with nogil:
        for r in range(n):
            acc = 0.0
            for i in range(d):
                vr = 0.0
                vi = 0.0
                for j in range(d):
                    vr = vr + A[i, 2 * j] * X[r, 2 * j] - A[i, 2 * j + 1] * X[r, 2 * j + 1]
                    vi = vi + A[i, 2 * j] * X[r, 2 * j + 1] + A[i, 2 * j + 1] * X[r, 2 * j]
                acc = acc + X[r, 2 * i] * vr + X[r, 2 * i + 1] * vi
            q[r] = acc
    return out


def quad_forms(X, A):
    """Return ``x_n^H A x_n`` (real part) for every row of `X`."""
    if np.iscomplexobj(X) or np.iscomplexobj(A):
        X = np.ascontiguousarray(X, dtype=np.complex128)
        A = np.ascontiguousarray(A, dtype=np.complex128)
        return _quad_complex(X.view(np.float64), A.view(np.float64))
    return _quad_real(np.ascontiguousarray(X, dtype=np.float64),
                      np.ascontiguousarray(A, dtype=np.float64))


def shift_mc_eigs(z2, lam):
    """Exchangeable-shift Monte-Carlo estimate of the anscm eigenvalues.

    For every row ``g`` of squared moduli and every cyclic shift ``s`` the
    ratio ``lam[k] g[(k+s)%d] / sum_m lam[m] g[(m+s)%d]`` is accumulated into
    ``mu[k]``; the result is averaged over rows and shifts.
    """
    cdef const double[:, ::1] G = np.ascontiguousarray(z2, dtype=np.float64)
    cdef const double[::1] L = np.ascontiguousarray(lam, dtype=np.float64)
    cdef Py_ssize_t n = G.shape[0], d = G.shape[1]
    cdef Py_ssize_t r, s, k, idx
    cdef double den
    out = np.zeros(d, dtype=np.float64)
    cdef double[::1] mu = out
    cdef double[::1] tmp = np.empty(d, dtype=np.float64)
    with nogil:
        for r in range(n):
            for s in range(d):
                den = 0.0
                for k in range(d):
                    idx = k + s
                    if idx >= d:
                        idx = idx - d
                    tmp[k] = L[k] * G[r, idx]
                    den = den + tmp[k]
                for k in range(d):
                    mu[k] = mu[k] + tmp[k] / den
    return out / (n * d)


def anscm_closed_eigs(lam):
    """Double-precision ``mu = E c`` and the cancellation magnitude ``max_i sum_j |E_ij c_j|``."""
    cdef const double[::1] L = np.ascontiguousarray(lam, dtype=np.float64)
    cdef Py_ssize_t d = L.shape[0]
    cdef Py_ssize_t i, j, k
    cdef double r, a, b, cj, row, worst = 0.0
    out = np.zeros(d, dtype=np.float64)
    cdef double[::1] mu = out
    cdef double[::1] c = np.empty(d, dtype=np.float64)
    with nogil:
        for j in range(d):
            cj = 1.0
            for k in range(d):
                if k != j:
                    cj = cj / (1.0 - L[k] / L[j])
            c[j] = cj
        for i in range(d):
            row = 0.0
            for j in range(d):
                if i == j:
                    continue
                r = (L[j] - L[i]) / L[i]
                a = log1p(r) / r
                b = L[i] / L[j]
                mu[i] = mu[i] + (a - b) * c[j]
                row = row + (fabs(a) + b) * fabs(c[j])
            if row > worst:
                worst = row
    return out, worst
