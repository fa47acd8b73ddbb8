"""Independent reference computations used only by the tests."""

import numpy as np


def anscm_eigs_quadrature(lam, field="complex", h=0.05):
    """anscm eigenvalues from a one-dimensional Laplace-type integral.

    With ``g_m`` the squared moduli of a standard Gaussian draw,
    ``1/S = int_0^inf exp(-t S) dt`` gives

        mu_i = lam_i int_0^inf phi_i(t) prod_m psi_m(t) dt

    where for complex-circular data ``psi_m = 1/(1 + lam_m t)`` and
    ``phi_i = 1/(1 + lam_i t)``, and for real data ``psi_m = (1 + 2 lam_m t)^-1/2``
    and ``phi_i = (1 + 2 lam_i t)^-1``. The integral is evaluated with the
    trapezoid rule in ``v = log t``, which converges geometrically for this
    analytic, exponentially decaying integrand. Ties need no special care.
    """
    lam = np.asarray(lam, dtype=float)
    v = np.arange(-60.0 - np.log(lam.max()), 60.0 - np.log(lam.min()), h)
    t = np.exp(v)[:, None]
    if field == "complex":
        psi = 1.0 / (1.0 + lam * t)
        phi = psi
    else:
        psi = 1.0 / np.sqrt(1.0 + 2.0 * lam * t)
        phi = psi**2
    prod = np.prod(psi, axis=1, keepdims=True)
    integrand = lam * phi * prod * t  # dt = t dv
    return h * integrand.sum(axis=0)


def anscm_eigs_hand_d2(l1, l2):
    """Closed form evaluated by hand for d = 2 (complex)."""
    r = l2 / l1
    e12 = np.log(r) / (r - 1) - 1 / r
    e21 = np.log(1 / r) / (1 / r - 1) - r
    c1 = 1 / (1 - l2 / l1)
    c2 = 1 / (1 - l1 / l2)
    return np.array([e12 * c2, e21 * c1])


def cg_rhs(Sigma, prior, X, alpha):
    """Right-hand side of the complex-circular Gaussian fixed-point equation."""
    d = prior.shape[0]
    N = X.shape[0]
    Sinv = np.linalg.inv(Sigma)
    tau = np.einsum("ni,ij,nj->n", X.conj(), Sinv, X).real
    w = 1.0 - 1.0 / (2.0 * tau)
    S = (X.T * w) @ X.conj() / N
    out = ((1.0 - alpha) * prior + alpha * S) / (1.0 - alpha / (2.0 * d))
    return (out + out.conj().T) / 2


def picard_cg(prior, X, alpha, tol=1e-13, max_iter=20000):
    """Plain Picard iteration Sigma <- RHS(Sigma) from the identity."""
    Sigma = np.eye(prior.shape[0], dtype=prior.dtype) * np.trace(prior).real / prior.shape[0]
    for _ in range(max_iter):
        new = cg_rhs(Sigma, prior, X, alpha)
        if np.linalg.norm(new - Sigma) <= tol * np.linalg.norm(Sigma):
            return new
        Sigma = new
    raise RuntimeError("Picard iteration did not converge")


def tyler_rhs(R, X):
    """Normalized Tyler map T(R)/tr(T(R)) with T = (d/N) sum x x^H / (x^H R^-1 x)."""
    Rinv = np.linalg.inv(R)
    tau = np.einsum("ni,ij,nj->n", X.conj(), Rinv, X).real
    T = (X.T / tau) @ X.conj()
    T = (T + T.conj().T) / 2
    return T / np.trace(T).real


def brute_force_kept(keys, n_keep):
    """Smallest keys by exhaustive comparison (ties by index)."""
    ranked = sorted(range(len(keys)), key=lambda i: (keys[i], i))
    return sorted(ranked[:n_keep])
