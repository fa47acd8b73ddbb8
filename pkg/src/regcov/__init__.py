"""Regularized robust covariance and scatter estimation.

Tyler-type and Gaussian regularized estimators that blend a prior matrix
with a new sample batch, their partial (outlier-trimming) variants, the
expected normalized sample covariance they depend on, and a Monte-Carlo
harness for adaptive detection built on sequential estimation.
"""

from .anscm import anscm, anscm_mc, respace
from .detect_sim import (
    DetectionCurve,
    Scenario,
    calibrate_threshold,
    contaminate,
    detection_curve,
    gen_noise,
    inject_target,
    mf_stat,
    nmf_stat,
    sequential_stream,
)
from .estimators import (
    EstimateResult,
    EstimatorConfig,
    alpha_remap_complex,
    estimate,
    gaussian_kl,
    reg_cg_cov,
    reg_partial_scm,
    reg_pcg_cov,
    reg_ptyler,
    reg_scm,
    reg_tyler,
)
from .exceptions import (
    DegenerateSpectrumError,
    DomainError,
    EstimatorError,
    RegcovError,
    ValidationError,
)
from .kernels import BACKEND

__version__ = "0.1.0"
