"""Exception types shared across the package."""


class OrbitraceError(Exception):
    """Base class for all package errors."""


class ResourceLimitError(OrbitraceError):
    """A search or enumeration would exceed its configured cap."""


class ConsistencyError(OrbitraceError):
    """An internal numerical or combinatorial consistency check failed."""


class ParseError(OrbitraceError, ValueError):
    """Malformed input file."""


class IntegrationError(OrbitraceError):
    """ODE or quadrature failed to converge."""


class ConditioningError(OrbitraceError):
    """A linear solve is too ill-conditioned to trust.

    The estimated condition number is stored on ``cond``.
    """

    def __init__(self, message, cond=float("nan")):
        super().__init__(message)
        self.cond = cond


class ClassificationError(OrbitraceError):
    """An isometry sits too close to a type boundary to classify reliably."""


class CoverageError(OrbitraceError):
    """An enumeration radius is too small to certify a census."""
