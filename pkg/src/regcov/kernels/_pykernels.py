"""Pure-numpy implementations of the compiled kernels."""

import numpy as np


def weighted_scatter(X, w):
    """Return ``sum_n w[n] x_n x_n^H`` for the rows ``x_n`` of `X`."""
    X = np.asarray(X)
    w = np.asarray(w, dtype=np.float64)
    S = (X * w[:, None]).T @ X.conj()
    return (S + S.conj().T) / 2


def normalized_scatter(X, w=None):
    """Return ``sum_n w[n] x_n x_n^H / (x_n^H x_n)`` (unit weights by default)."""
    X = np.asarray(X)
    nrm = np.sum(np.abs(X) ** 2, axis=1)
    w = 1.0 / nrm if w is None else np.asarray(w, dtype=np.float64) / nrm
    return weighted_scatter(X, w)


def quad_forms(X, A):
    """Return ``x_n^H A x_n`` (real part) for every row of `X`."""
    X = np.asarray(X)
    return np.einsum("ni,ij,nj->n", X.conj(), A, X).real


def shift_mc_eigs(z2, lam):
    """Exchangeable-shift Monte-Carlo estimate of the anscm eigenvalues."""
    G = np.asarray(z2, dtype=np.float64)
    lam = np.asarray(lam, dtype=np.float64)
    n, d = G.shape
    mu = np.zeros(d)
    for s in range(d):
        T = lam * np.roll(G, -s, axis=1)
        mu += np.sum(T / T.sum(axis=1, keepdims=True), axis=0)
    return mu / (n * d)


def anscm_closed_eigs(lam):
    """Double-precision ``mu = E c`` and a rounding-error scale for it.

    The scale is ``max_i sum_j (|log-term| + |ratio-term|) |c_j|``.
    """
    lam = np.asarray(lam, dtype=np.float64)
    d = lam.size
    off = ~np.eye(d, dtype=bool)
    ratio = lam[None, :] / lam[:, None]  # ratio[j, k] = lam_k / lam_j
    with np.errstate(divide="ignore", invalid="ignore"):
        c = np.prod(np.where(off, 1.0 / (1.0 - ratio), 1.0), axis=1)
        r = (lam[None, :] - lam[:, None]) / lam[:, None]
        a = np.where(off, np.log1p(r) / r, 0.0)
        b = np.where(off, lam[:, None] / lam[None, :], 0.0)
    mu = ((a - b) * c[None, :]).sum(axis=1)
    scale = ((np.abs(a) + b) * np.abs(c)[None, :]).sum(axis=1)
    return mu, float(scale.max())
