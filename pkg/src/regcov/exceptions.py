"""Exception types raised by regcov."""


class RegcovError(Exception):
    """Base class for all regcov errors."""


class ValidationError(RegcovError, ValueError):
    """Input does not satisfy a structural precondition (shape, symmetry, field)."""


class DomainError(RegcovError, ValueError):
    """Input lies outside the domain of a spectral function (e.g. non-positive eigenvalue)."""


class DegenerateSpectrumError(RegcovError, ValueError):
    """Eigenvalues too close for the closed-form anscm; apply ``respace`` first."""


class EstimatorError(RegcovError, RuntimeError):
    """A fixed-point iteration hit a state it cannot continue from."""

    def __init__(self, message, iteration=None):
        super().__init__(message)
        self.iteration = iteration
