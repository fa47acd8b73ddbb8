"""Regularized maximum-likelihood scatter and covariance estimators.

Every estimator blends a prior matrix (weight ``1 - alpha``) with a batch of
new samples (weight ``alpha``). Samples are the rows of an ``(N, d)`` array.
The partial variants keep only the ``ceil(p N)`` best-fitting samples at
every iteration and report which ones they kept.

Tyler-type estimators (``reg_tyler``, ``reg_ptyler``) return trace-one
correlation matrices. Gaussian ones (``reg_scm``, ``reg_partial_scm``,
``reg_cg_cov``, ``reg_pcg_cov``) return covariance matrices.

Indices reported in ``kept_indices`` are zero-based.
"""

from dataclasses import dataclass
import math
from typing import Optional

import numpy as np
from scipy.linalg import solve_triangular

from . import kernels
from .anscm import CLOSED, EPS_SPACING, MC, anscm
from .exceptions import EstimatorError, ValidationError
from .matlin import (
    COMPLEX,
    as_hpd,
    convergence_residual,
    det_normalize,
    expm_herm,
    field_of,
    sqrt_pair,
)

TYLER_EPS = 1e-9
CG_EPS = 1e-8


@dataclass(frozen=True)
class EstimatorConfig:
    """Tuning of an estimator run.

    Parameters
    ----------
    alpha : float
        Integration factor in ``[0, 1]``: weight of the new samples.
    p : float
        Partial order in ``(0, 1]``; ignored by the full estimators.
    eps : float, optional
        Convergence threshold on :func:`~regcov.matlin.convergence_residual`.
        Defaults to 1e-9 for Tyler-type and 1e-8 for Gaussian estimators.
    k_max : int
        Iteration cap.
    mc_samples, seed : int
        Monte-Carlo draws used by the real-field anscm. The same draws are
        reused at every iteration so the iteration map stays deterministic.
    eps_spacing : float
        Eigenvalue spacing for the complex closed-form anscm.
    normalization : {"trace", "det"}
        Output scale of Tyler-type estimators.
    """

    alpha: float = 0.25
    p: float = 1.0
    eps: Optional[float] = None
    k_max: int = 100
    mc_samples: int = 100_000
    seed: int = 0
    eps_spacing: float = EPS_SPACING
    normalization: str = "trace"

    def __post_init__(self):
        if not 0.0 <= self.alpha <= 1.0:
            raise ValidationError(f"alpha must lie in [0, 1], got {self.alpha}")
        if not 0.0 < self.p <= 1.0:
            raise ValidationError(f"p must lie in (0, 1], got {self.p}")
        if self.eps is not None and not self.eps > 0:
            raise ValidationError("eps must be positive")
        if int(self.k_max) != self.k_max or self.k_max < 1:
            raise ValidationError("k_max must be a positive integer")
        if self.normalization not in ("trace", "det"):
            raise ValidationError("normalization must be 'trace' or 'det'")

    def eps_or(self, default):
        return default if self.eps is None else self.eps


@dataclass
class EstimateResult:
    matrix: np.ndarray
    iterations: int
    final_residual: float
    converged: bool
    kept_indices: Optional[np.ndarray] = None


def alpha_remap_complex(alpha, d):
    """Integration factor to pass to the real Tyler iteration for complex-circular data.

    >>> round(alpha_remap_complex(0.5, 8), 6)
    0.482759
    """
    if d < 2:
        raise ValidationError("d must be at least 2")
    return alpha * (d - 1) / (d - 0.5 * (1.0 + alpha))


def n_kept(p, n):
    """``ceil(p * n)``, insensitive to the last-bit error in the product."""
    return max(1, min(n, math.ceil(round(p * n, 9))))


def as_samples(X, prior):
    """Validate a sample batch against the prior: shape, field, no zero rows."""
    X = np.asarray(X)
    if X.ndim != 2 or X.shape[0] < 1:
        raise ValidationError(f"samples must be an (N, d) array with N >= 1, got shape {X.shape}")
    d = prior.shape[0]
    if X.shape[1] != d:
        raise ValidationError(f"samples have dimension {X.shape[1]}, prior has {d}")
    if field_of(X) != field_of(prior):
        raise ValidationError(
            f"samples are {field_of(X)} but prior is {field_of(prior)}; fields must match"
        )
    if not np.all(np.isfinite(X)):
        raise ValidationError("samples contain non-finite values")
    norms = np.sum(np.abs(X) ** 2, axis=1)
    zero = np.flatnonzero(norms == 0)
    if zero.size:
        raise ValidationError(f"sample {int(zero[0])} is identically zero")
    dtype = np.complex128 if np.iscomplexobj(X) else np.float64
    return np.ascontiguousarray(X, dtype=dtype)


def select_kept(keys, n_keep):
    """Indices of the `n_keep` smallest keys, returned in increasing index order.

    Ties are broken by the original index (stable sort). Returning the set in
    index order makes every downstream sum independent of the ranking order.
    """
    order = np.argsort(keys, kind="stable")
    return np.sort(order[:n_keep])


def _finish(R, normalization):
    R = (R + R.conj().T) / 2
    if normalization == "det":
        return det_normalize(R)
    return R / np.trace(R).real


def _whiten(X, R_ihalf):
    # rows hold R^{-1/2} x_n (R^{-1/2} is Hermitian)
    return X @ R_ihalf.T


# --------------------------------------------------------------------------
# Tyler-type
# --------------------------------------------------------------------------


class _TylerStep:
    """One iteration of the regularized (partial) Tyler fixed point."""

    def __init__(self, prior, X, cfg, partial):
        self.X = X
        self.d = prior.shape[0]
        self.field = field_of(prior)
        self.prior = prior / np.trace(prior).real
        alpha = cfg.alpha
        if self.field == COMPLEX:
            alpha = alpha_remap_complex(alpha, self.d)
        self.alpha = alpha
        self.n_keep = n_kept(cfg.p, X.shape[0]) if partial else X.shape[0]
        self.cfg = cfg

    def _anscm(self, M):
        if self.field == COMPLEX:
            return anscm(M, CLOSED, eps_spacing=self.cfg.eps_spacing)
        return anscm(M, MC, mc_samples=self.cfg.mc_samples, seed=self.cfg.seed)

    def keys(self, R):
        _, R_ihalf = sqrt_pair(R)
        Y = _whiten(self.X, R_ihalf)
        return np.sum(np.abs(Y) ** 2, axis=1)

    def __call__(self, R):
        d = self.d
        R_half, R_ihalf = sqrt_pair(R)
        Y = _whiten(self.X, R_ihalf)
        tau = np.sum(np.abs(Y) ** 2, axis=1)
        kept = select_kept(tau, self.n_keep)
        S = np.zeros((d, d), dtype=R.dtype)
        if self.alpha < 1.0:
            M = R_ihalf @ self.prior @ R_ihalf
            S = S + (1.0 - self.alpha) * self._anscm((M + M.conj().T) / 2)
        if self.alpha > 0.0:
            S = S + (self.alpha / self.n_keep) * kernels.weighted_scatter(Y[kept], 1.0 / tau[kept])
        S = S * (d / np.trace(S).real)
        R_new = R_half @ expm_herm(S - np.eye(d)) @ R_half
        R_new = (R_new + R_new.conj().T) / 2
        return R_new / np.trace(R_new).real, kept


# --------------------------------------------------------------------------
# Complex-circular Gaussian (cg) type
# --------------------------------------------------------------------------


class _CgStep:
    """One iteration of the regularized (partial) complex-circular Gaussian fixed point."""

    def __init__(self, prior, X, cfg, partial):
        self.X = X
        self.d = prior.shape[0]
        self.prior = prior
        self.alpha = cfg.alpha
        self.partial = partial
        self.n_keep = n_kept(cfg.p, X.shape[0]) if partial else X.shape[0]

    def _rank(self, tau):
        if self.partial:
            return tau - 0.5 * np.log(tau)
        return tau

    def keys(self, Sigma):
        _, S_ihalf = sqrt_pair(Sigma)
        tau = np.sum(np.abs(_whiten(self.X, S_ihalf)) ** 2, axis=1)
        return self._rank(tau)

    def __call__(self, Sigma):
        d, alpha = self.d, self.alpha
        S_half, S_ihalf = sqrt_pair(Sigma)
        tau = np.sum(np.abs(_whiten(self.X, S_ihalf)) ** 2, axis=1)
        kept = select_kept(self._rank(tau), self.n_keep)
        S = (1.0 - alpha) * self.prior
        if alpha > 0.0:
            w = 1.0 - 0.5 / tau[kept]
            S = S + (alpha / self.n_keep) * kernels.weighted_scatter(self.X[kept], w)
            S = S / (1.0 - alpha / (2 * d))
            if np.any(w < 0) and np.linalg.eigvalsh(S)[0] <= 0:
                raise EstimatorError(
                    "fixed-point right-hand side is not positive definite "
                    "(samples with x^H Sigma^-1 x < 1/2 dominate the batch)"
                )
        M = S_ihalf @ S @ S_ihalf
        M = (M + M.conj().T) / 2
        Sigma_new = S_half @ expm_herm(M - np.eye(d)) @ S_half
        return (Sigma_new + Sigma_new.conj().T) / 2, kept


def _iterate(step, R0, eps, k_max, check_kept):
    R = R0
    res = math.inf
    kept = None
    for k in range(1, k_max + 1):
        try:
            R_new, kept = step(R)
        except EstimatorError as exc:
            exc.iteration = k
            raise
        res = convergence_residual(R, R_new)
        R = R_new
        if res <= eps:
            if check_kept and not np.array_equal(select_kept(step.keys(R), step.n_keep), kept):
                continue
            return R, k, res, True, kept
    return R, k_max, res, False, kept


def _prepare(prior, samples):
    prior = as_hpd(prior, "prior")
    X = as_samples(samples, prior)
    return prior, X


def reg_tyler(prior, samples, cfg=EstimatorConfig()) -> EstimateResult:
    """Regularized Tyler estimator of a correlation (shape) matrix.

    Iterates ``R <- R^{1/2} exp(S - I) R^{1/2}`` (then trace-normalizes), where
    ``S`` is the trace-``d`` normalization of

        (1 - a) anscm(R^{-1/2} R_prior R^{-1/2}) + (a / N) sum_n y_n y_n^H / |y_n|^2,

    ``y_n = R^{-1/2} x_n``. For complex data ``a`` is
    :func:`alpha_remap_complex` of ``cfg.alpha`` and anscm uses its closed
    form; real data uses the Monte-Carlo anscm.
    """
    prior, X = _prepare(prior, samples)
    step = _TylerStep(prior, X, cfg, partial=False)
    if cfg.alpha == 0.0:
        # the prior term alone is minimized by the prior itself
        return EstimateResult(_finish(step.prior, cfg.normalization), 0, 0.0, True)
    R, k, res, ok, _ = _iterate(step, step.prior, cfg.eps_or(TYLER_EPS), cfg.k_max, False)
    return EstimateResult(_finish(R, cfg.normalization), k, res, ok)


def reg_ptyler(prior, samples, cfg=EstimatorConfig()) -> EstimateResult:
    """Partial regularized Tyler estimator.

    Same update as :func:`reg_tyler`, but every iteration ranks the samples
    by ``x^H R^-1 x`` and only the ``ceil(p N)`` smallest enter the sample
    term. Convergence additionally requires the kept set to be stable at the
    returned matrix.
    """
    prior, X = _prepare(prior, samples)
    step = _TylerStep(prior, X, cfg, partial=True)
    if cfg.alpha == 0.0:
        kept = select_kept(step.keys(step.prior), step.n_keep)
        return EstimateResult(_finish(step.prior, cfg.normalization), 0, 0.0, True, kept)
    R, k, res, ok, kept = _iterate(step, step.prior, cfg.eps_or(TYLER_EPS), cfg.k_max, True)
    return EstimateResult(_finish(R, cfg.normalization), k, res, ok, kept)


def _scm_blend(prior, X, alpha):
    n = X.shape[0]
    return (1.0 - alpha) * prior + (alpha / n) * kernels.weighted_scatter(X, np.ones(n))


def reg_scm(prior, samples, alpha):
    """Closed-form regularized sample covariance ``(1-a) prior + (a/N) sum x x^H``."""
    if not 0.0 <= alpha <= 1.0:
        raise ValidationError(f"alpha must lie in [0, 1], got {alpha}")
    prior, X = _prepare(prior, samples)
    out = _scm_blend(prior, X, alpha)
    return as_hpd(out, "regularized SCM")


def reg_partial_scm(prior, samples, cfg=EstimatorConfig()) -> EstimateResult:
    """Partial regularized SCM.

    Alternates between ranking the samples by ``x^H Sigma^-1 x`` and the
    closed-form blend over the ``ceil(p N)`` lowest-ranked ones, until the
    kept set stops changing.
    """
    prior, X = _prepare(prior, samples)
    alpha = cfg.alpha
    n_keep = n_kept(cfg.p, X.shape[0])

    def keys(Sigma):
        return kernels.quad_forms(X, np.linalg.inv(Sigma))

    kept = select_kept(keys(prior), n_keep)
    Sigma_prev = prior
    for k in range(1, cfg.k_max + 1):
        Sigma = as_hpd(_scm_blend(prior, X[kept], alpha), "regularized SCM")
        new_kept = select_kept(keys(Sigma), n_keep)
        if np.array_equal(new_kept, kept):
            return EstimateResult(Sigma, k, 0.0, True, kept)
        res = convergence_residual(Sigma_prev, Sigma)
        Sigma_prev = Sigma
        kept = new_kept
    return EstimateResult(Sigma, cfg.k_max, res, False, kept)


def _cg_init(prior, X, alpha):
    try:
        return as_hpd(_scm_blend(prior, X, alpha), "initial estimate")
    except Exception as exc:
        raise ValidationError(
            "initial blend of prior and SCM is not positive definite (alpha = 1 with N < d?)"
        ) from exc


def _require_complex(prior, name):
    if field_of(prior) != COMPLEX:
        raise ValidationError(f"{name} is defined for complex-circular data only")


def reg_cg_cov(prior, samples, cfg=EstimatorConfig()) -> EstimateResult:
    """Regularized complex-circular Gaussian covariance.

    Starting from the regularized SCM, iterates
    ``Sigma <- Sigma^{1/2} exp(Sigma^{-1/2} S Sigma^{-1/2} - I) Sigma^{1/2}`` with

        S = ((1 - a) Sigma_prior + (a/N) sum_n (1 - 1/(2 tau_n)) x_n x_n^H) / (1 - a/(2d)),

    ``tau_n = x_n^H Sigma^-1 x_n``.
    """
    prior, X = _prepare(prior, samples)
    _require_complex(prior, "reg_cg_cov")
    step = _CgStep(prior, X, cfg, partial=False)
    S0 = _cg_init(prior, X, cfg.alpha)
    S, k, res, ok, _ = _iterate(step, S0, cfg.eps_or(CG_EPS), cfg.k_max, False)
    return EstimateResult(S, k, res, ok)


def reg_pcg_cov(prior, samples, cfg=EstimatorConfig()) -> EstimateResult:
    """Partial version of :func:`reg_cg_cov`.

    Samples are ranked by ``tau - log(tau)/2`` and the ``ceil(p N)`` smallest
    are kept at each iteration. The starting point is the regularized SCM of
    the samples kept under the same ranking at the prior.
    """
    prior, X = _prepare(prior, samples)
    _require_complex(prior, "reg_pcg_cov")
    step = _CgStep(prior, X, cfg, partial=True)
    # Start from the blend over the samples ranked best at the prior; a
    # full-batch start lets outliers inflate Sigma until the clean samples
    # get negative weights and the right-hand side turns indefinite.
    tau0 = kernels.quad_forms(X, np.linalg.inv(prior))
    kept0 = select_kept(tau0 - 0.5 * np.log(tau0), step.n_keep)
    S0 = _cg_init(prior, X[kept0], cfg.alpha)
    S, k, res, ok, kept = _iterate(step, S0, cfg.eps_or(CG_EPS), cfg.k_max, True)
    return EstimateResult(S, k, res, ok, kept)


def gaussian_kl(Sigma1, Sigma2):
    """Relative entropy of ``N(0, Sigma1)`` with respect to ``N(0, Sigma2)``.

    Complex-circular models count twice the real value (two real degrees of
    freedom per coordinate).
    """
    S1 = as_hpd(Sigma1, "Sigma1")
    S2 = as_hpd(Sigma2, "Sigma2")
    if S1.shape != S2.shape:
        raise ValidationError(f"dimension mismatch: {S1.shape} vs {S2.shape}")
    if field_of(S1) != field_of(S2):
        raise ValidationError("field mismatch between Sigma1 and Sigma2")
    c = 2.0 if field_of(S1) == COMPLEX else 1.0
    d = S1.shape[0]
    L = np.linalg.cholesky(S2)
    A = solve_triangular(L, S1, lower=True)
    W = solve_triangular(L, A.conj().T, lower=True)
    tr = np.trace(W).real
    _, ld1 = np.linalg.slogdet(S1)
    _, ld2 = np.linalg.slogdet(S2)
    return max(0.0, 0.5 * c * (tr + ld2 - ld1 - d))


ITERATIVE = {
    "tyler": reg_tyler,
    "ptyler": reg_ptyler,
    "pscm": reg_partial_scm,
    "cg": reg_cg_cov,
    "pcg": reg_pcg_cov,
}
METHODS = ("tyler", "ptyler", "scm", "pscm", "cg", "pcg")


def estimate(method, prior, samples, cfg=EstimatorConfig()) -> EstimateResult:
    """Dispatch by short method name (``tyler``, ``ptyler``, ``scm``, ``pscm``, ``cg``, ``pcg``)."""
    if method == "scm":
        return EstimateResult(reg_scm(prior, samples, cfg.alpha), 1, 0.0, True)
    try:
        fn = ITERATIVE[method]
    except KeyError:
        raise ValidationError(f"unknown method {method!r}") from None
    return fn(prior, samples, cfg)


def update_step(method, prior, samples, matrix, cfg=EstimatorConfig()):
    """Apply one iteration of `method` to `matrix` and return the new matrix.

    For Tyler-type methods the output is trace-normalized; ``scm`` and
    ``pscm`` re-evaluate the closed-form blend on the kept set at `matrix`.
    """
    prior, X = _prepare(prior, samples)
    matrix = as_hpd(matrix, "matrix")
    if method in ("tyler", "ptyler"):
        step = _TylerStep(prior, X, cfg, partial=method == "ptyler")
        return step(matrix / np.trace(matrix).real)[0]
    if method in ("cg", "pcg"):
        _require_complex(prior, method)
        return _CgStep(prior, X, cfg, partial=method == "pcg")(matrix)[0]
    if method == "scm":
        return _scm_blend(prior, X, cfg.alpha)
    if method == "pscm":
        n_keep = n_kept(cfg.p, X.shape[0])
        kept = select_kept(kernels.quad_forms(X, np.linalg.inv(matrix)), n_keep)
        return _scm_blend(prior, X[kept], cfg.alpha)
    raise ValidationError(f"unknown method {method!r}")


__all__ = [
    "EstimatorConfig",
    "EstimateResult",
    "alpha_remap_complex",
    "n_kept",
    "select_kept",
    "reg_tyler",
    "reg_ptyler",
    "reg_scm",
    "reg_partial_scm",
    "reg_cg_cov",
    "reg_pcg_cov",
    "gaussian_kl",
    "estimate",
    "update_step",
    "METHODS",
]
