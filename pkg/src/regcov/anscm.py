"""Expected normalized sample covariance, ``anscm(S) = E[y y^H / (y^H y)]``.

For an elliptical vector ``y`` with scatter proportional to ``S`` this
expectation does not depend on the radial law. It shares the eigenvectors
of ``S``; only its eigenvalues ``mu`` need computing.

* Complex-circular data has a closed form ``mu = E c`` in terms of the
  eigenvalue ratios. The closed form needs distinct eigenvalues, which
  :func:`respace` enforces, and it cancels catastrophically when eigenvalues
  cluster. It is therefore evaluated in double precision when a rounding
  bound allows and otherwise re-evaluated with mpmath at the precision the
  bound demands.
* Real data has no closed form and uses Monte-Carlo integration.
"""

from functools import lru_cache
import math

import mpmath
import numpy as np

from . import kernels
from .exceptions import DegenerateSpectrumError, DomainError, ValidationError
from .matlin import COMPLEX, REAL, as_hpd, eigh, field_of, sqrt_psd

CLOSED = "closed"
MC = "mc"

EPS_SPACING = 1e-12
DEGENERATE_RTOL = 1e-14
CLOSED_FORM_ATOL = 1e-13
MIN_MC_SAMPLES = 1000


def respace(lam, eps):
    """Enforce a minimum ratio ``1 + eps`` between consecutive sorted eigenvalues.

    Values keep their positions; in ascending order every value is raised to
    at least ``(1 + eps)`` times its predecessor. Well-spaced inputs are
    returned unchanged, and the map is idempotent.

    >>> respace([1.0, 1.0, 1.0], 0.01).round(6).tolist()
    [1.0, 1.01, 1.0201]
    """
    lam = np.array(lam, dtype=np.float64)
    if lam.ndim != 1:
        raise ValidationError("eigenvalues must be a 1-D sequence")
    if eps <= 0:
        raise DomainError("eps must be positive")
    if np.any(~np.isfinite(lam)) or np.any(lam <= 0):
        raise DomainError("eigenvalues must be finite and strictly positive")
    order = np.argsort(lam, kind="stable")
    for prev, cur in zip(order[:-1], order[1:]):
        floor = (1.0 + eps) * lam[prev]
        if lam[cur] < floor:
            lam[cur] = floor
    return lam


def _check_distinct(lam):
    s = np.sort(lam)
    if np.any(s[1:] / s[:-1] - 1.0 <= DEGENERATE_RTOL):
        raise DegenerateSpectrumError(
            "eigenvalues are (numerically) repeated; apply respace() before the closed form"
        )


def _closed_eigs_mp(lam, dps):
    with mpmath.workdps(dps):
        L = [mpmath.mpf(float(x)) for x in lam]
        d = len(L)
        c = []
        for j in range(d):
            cj = mpmath.mpf(1)
            for k in range(d):
                if k != j:
                    cj /= 1 - L[k] / L[j]
            c.append(cj)
        mu = []
        for i in range(d):
            acc = mpmath.mpf(0)
            for j in range(d):
                if j != i:
                    r = L[j] / L[i]
                    acc += (mpmath.log(r) / (r - 1) - L[i] / L[j]) * c[j]
            mu.append(float(acc))
    return np.array(mu)


def anscm_eigs_complex(lam, atol=CLOSED_FORM_ATOL):
    """Closed-form anscm eigenvalues for complex-circular data.

    ``mu = E c`` with ``E_ij = log(l_j/l_i)/(l_j/l_i - 1) - l_i/l_j`` off the
    diagonal, ``E_ii = 0``, and ``c_j = prod_{k != j} 1/(1 - l_k/l_j)``.

    Parameters
    ----------
    lam : array_like
        Pairwise distinct positive eigenvalues (run :func:`respace` first).
    atol : float
        Absolute accuracy target. When the double-precision rounding bound
        exceeds it, the same formula is re-evaluated with mpmath.

    Returns
    -------
    ndarray
        ``mu`` in the order of `lam`; sums to one.
    """
    lam = np.asarray(lam, dtype=np.float64)
    if lam.ndim != 1 or lam.size == 0:
        raise ValidationError("eigenvalues must be a non-empty 1-D sequence")
    if np.any(lam <= 0) or not np.all(np.isfinite(lam)):
        raise DomainError("eigenvalues must be finite and strictly positive")
    if lam.size == 1:
        return np.ones(1)
    _check_distinct(lam)
    mu, magnitude = kernels.anscm_closed_eigs(lam)
    if lam.size * np.finfo(float).eps * magnitude > atol:
        dps = int(math.ceil(math.log10(magnitude))) + int(math.ceil(-math.log10(atol))) + 10
        mu = _closed_eigs_mp(lam, max(dps, 30))
    return mu


@lru_cache(maxsize=8)
def _squared_moduli(n, d, field, seed):
    rng = np.random.default_rng(seed)
    if field == COMPLEX:
        g = 0.5 * (rng.standard_normal((n, d)) ** 2 + rng.standard_normal((n, d)) ** 2)
    else:
        g = rng.standard_normal((n, d)) ** 2
    g.setflags(write=False)
    return g


def anscm_eigs_mc(lam, field, n, seed):
    """Monte-Carlo anscm eigenvalues, exact for an isotropic spectrum.

    Draws ``n`` Gaussian vectors and averages ``l_k g_k / sum_m l_m g_m``
    (``g`` the squared moduli) over all cyclic relabelings of the draw. The
    relabeled draws are equally distributed, so the estimate is unbiased,
    and equal eigenvalues always give exactly ``1/d``. Repeated calls with
    the same ``(n, d, field, seed)`` reuse the same draws.
    """
    lam = np.asarray(lam, dtype=np.float64)
    if n < MIN_MC_SAMPLES:
        raise ValidationError(f"mc_samples must be at least {MIN_MC_SAMPLES}")
    g = _squared_moduli(int(n), lam.size, field, int(seed))
    mu = kernels.shift_mc_eigs(g, lam / lam.max())
    return mu / mu.sum()


def anscm(Sigma, method=CLOSED, mc_samples=100_000, seed=0, eps_spacing=EPS_SPACING):
    """Return ``anscm(Sigma)`` with trace exactly one.

    Parameters
    ----------
    Sigma : ndarray
        HPD scatter matrix; a complex dtype selects the complex-circular model.
    method : {"closed", "mc"}
        ``"closed"`` is only available for complex input.
    mc_samples, seed : int
        Monte-Carlo sample count and seed (``"mc"`` only).
    eps_spacing : float
        Minimum relative eigenvalue gap enforced before the closed form.
    """
    Sigma = as_hpd(Sigma, "Sigma")
    field = field_of(Sigma)
    lam, U = eigh(Sigma)
    if method == CLOSED:
        if field != COMPLEX:
            raise ValidationError(
                "the closed-form anscm exists only for complex-circular data; use method='mc'"
            )
        mu = anscm_eigs_complex(respace(lam, eps_spacing))
    elif method == MC:
        mu = anscm_eigs_mc(lam, field, mc_samples, seed)
    else:
        raise ValidationError(f"unknown anscm method {method!r}")
    out = (U * mu) @ U.conj().T
    out = (out + out.conj().T) / 2
    return out / np.trace(out).real


def anscm_mc(Sigma, n, seed):
    """Plain Monte-Carlo average of ``y y^H / (y^H y)`` with ``y ~ N(0, Sigma)``.

    Works entry-wise on the full matrix without using the eigenbasis
    structure, which makes it a check on :func:`anscm` rather than a second
    copy of it. The trace is renormalized to one.
    """
    Sigma = as_hpd(Sigma, "Sigma")
    if n < MIN_MC_SAMPLES:
        raise ValidationError(f"n must be at least {MIN_MC_SAMPLES}")
    d = Sigma.shape[0]
    rng = np.random.default_rng(seed)
    if field_of(Sigma) == COMPLEX:
        z = (rng.standard_normal((n, d)) + 1j * rng.standard_normal((n, d))) / np.sqrt(2)
    else:
        z = rng.standard_normal((n, d))
    y = z @ sqrt_psd(Sigma).T  # row n holds Sigma^{1/2} z_n
    out = kernels.normalized_scatter(y) / n
    return out / np.trace(out).real


__all__ = [
    "CLOSED",
    "MC",
    "REAL",
    "COMPLEX",
    "respace",
    "anscm_eigs_complex",
    "anscm_eigs_mc",
    "anscm",
    "anscm_mc",
]
