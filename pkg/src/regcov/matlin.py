"""Hermitian linear-algebra primitives shared by the estimators.

Matrices are plain :class:`numpy.ndarray` objects. The scalar field is read
from the dtype: complex dtypes are treated as complex-circular, everything
else as real. All spectral functions (square root, inverse square root,
exponential) go through a single eigendecomposition so their outputs are
exactly Hermitian.
"""

from typing import NamedTuple

import numpy as np
from scipy.linalg import solve_triangular

from .exceptions import DomainError, ValidationError

HERMITIAN_RTOL = 1e-12
PD_RTOL = 1e-12

REAL = "real"
COMPLEX = "complex"


class EigenPair(NamedTuple):
    """Ascending eigenvalues and the matching unitary eigenvector matrix."""

    values: np.ndarray
    vectors: np.ndarray


def field_of(a) -> str:
    return COMPLEX if np.iscomplexobj(a) else REAL


def as_hermitian(M, name="matrix"):
    """Validate that `M` is square and Hermitian and return its symmetrized copy.

    Asymmetry below ``HERMITIAN_RTOL`` (relative to the Frobenius norm) is
    absorbed by returning ``(M + M^H) / 2``; anything larger is an error.
    """
    M = np.asarray(M)
    if M.ndim != 2 or M.shape[0] != M.shape[1] or M.shape[0] == 0:
        raise ValidationError(f"{name} must be a non-empty square matrix, got shape {M.shape}")
    if not np.issubdtype(M.dtype, np.number) or np.issubdtype(M.dtype, np.integer):
        M = M.astype(np.complex128 if np.iscomplexobj(M) else np.float64)
    if not np.all(np.isfinite(M)):
        raise ValidationError(f"{name} has non-finite entries")
    dtype = np.complex128 if np.iscomplexobj(M) else np.float64
    M = M.astype(dtype, copy=False)
    MH = M.conj().T
    scale = np.linalg.norm(M)
    if np.linalg.norm(M - MH) > HERMITIAN_RTOL * max(scale, np.finfo(float).tiny):
        raise ValidationError(f"{name} is not Hermitian")
    return (M + MH) / 2


def as_hpd(M, name="matrix"):
    """Validate that `M` is Hermitian positive definite; return the symmetrized copy."""
    M = as_hermitian(M, name)
    lam = np.linalg.eigvalsh(M)
    d = M.shape[0]
    floor = PD_RTOL * abs(np.trace(M).real) / d
    if lam[0] <= floor:
        raise DomainError(f"{name} is not positive definite (min eigenvalue {lam[0]:.3e})")
    return M


def _fix_phases(U):
    # Make the largest-modulus entry of every column real and positive so
    # the eigenvector matrix does not depend on LAPACK's sign/phase choice.
    idx = np.argmax(np.abs(U), axis=0)
    pivots = U[idx, np.arange(U.shape[1])]
    return U * (np.abs(pivots) / pivots)


def eigh(M) -> EigenPair:
    """Eigendecomposition of a Hermitian matrix with ascending eigenvalues.

    Eigenvector phases are normalized (largest-modulus component real
    positive), which makes the output a deterministic function of `M`.
    """
    M = as_hermitian(M)
    lam, U = np.linalg.eigh(M)
    return EigenPair(lam, _fix_phases(U))


def _spectral(M, fn, *, positive):
    lam, U = eigh(M)
    if positive:
        d = len(lam)
        if lam[0] <= PD_RTOL * abs(lam.sum()) / d or lam[0] <= 0:
            raise DomainError(f"matrix is not positive definite (min eigenvalue {lam[0]:.3e})")
    out = (U * fn(lam)) @ U.conj().T
    return (out + out.conj().T) / 2


def sqrt_psd(M):
    """Principal square root of an HPD matrix."""
    return _spectral(M, np.sqrt, positive=True)


def inv_sqrt_psd(M):
    """Inverse of the principal square root of an HPD matrix."""
    return _spectral(M, lambda lam: 1.0 / np.sqrt(lam), positive=True)


def sqrt_pair(M):
    """Return ``(sqrt(M), inv(sqrt(M)))`` from a single eigendecomposition."""
    lam, U = eigh(M)
    d = len(lam)
    if lam[0] <= PD_RTOL * abs(lam.sum()) / d or lam[0] <= 0:
        raise DomainError(f"matrix is not positive definite (min eigenvalue {lam[0]:.3e})")
    r = np.sqrt(lam)
    UH = U.conj().T
    half = (U * r) @ UH
    ihalf = (U / r) @ UH
    return (half + half.conj().T) / 2, (ihalf + ihalf.conj().T) / 2


def expm_herm(M):
    """Matrix exponential of a Hermitian matrix (any sign of spectrum)."""
    return _spectral(M, np.exp, positive=False)


def inv_hpd(M):
    M = as_hpd(M)
    out = np.linalg.inv(M)
    return (out + out.conj().T) / 2


def trace_normalize(M, target=1.0):
    """Rescale `M` so that its trace equals `target`."""
    M = np.asarray(M)
    return M * (target / np.trace(M).real)


def det_normalize(M):
    """Rescale an HPD matrix to unit determinant."""
    M = np.asarray(M)
    sign, logdet = np.linalg.slogdet(M)
    if np.real(sign) <= 0:
        raise DomainError("matrix is not positive definite")
    return M * np.exp(-logdet / M.shape[0])


def convergence_residual(M_prev, M) -> float:
    """``tr((M_prev^-1 M - I)^2)``, the stopping criterion of every iteration.

    Evaluated in the whitened form ``||L^-1 M L^-H - I||_F^2`` with ``L`` the
    Cholesky factor of `M_prev`; the two expressions are similar matrices so
    the traces agree, and the whitened one is non-negative by construction.
    """
    M_prev = np.asarray(M_prev)
    M = np.asarray(M)
    if M_prev.shape != M.shape:
        raise ValidationError(f"dimension mismatch: {M_prev.shape} vs {M.shape}")
    try:
        L = np.linalg.cholesky(M_prev)
    except np.linalg.LinAlgError as exc:
        raise DomainError("previous iterate is not positive definite") from exc
    A = solve_triangular(L, M, lower=True)
    W = solve_triangular(L, A.conj().T, lower=True).conj().T
    W = W - np.eye(M.shape[0])
    return float(np.sum(np.abs(W) ** 2))
