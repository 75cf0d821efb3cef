"""Exception types shared across the package."""


class DeconvoError(Exception):
    """Base class for all package errors."""


class InvalidInputError(DeconvoError, ValueError):
    """Rejected input: bad dimensions, out-of-range parameters, zero vectors."""


class PartitionFailureError(DeconvoError):
    """Partition search exhausted its tries, or a block Gram matrix is singular.

    Carries the best spectral deviation found so that callers can decide
    whether to proceed with an inadmissible partition.
    """

    def __init__(self, message, best_alpha=None, tries=None):
        super().__init__(message)
        self.best_alpha = best_alpha
        self.tries = tries


class IllConditionedTangentError(DeconvoError):
    """Tangent-restricted operator too far from identity (delta >= 3/4)."""

    def __init__(self, message, delta=None):
        super().__init__(message)
        self.delta = delta


class SolveFailureError(DeconvoError):
    """A dense linear solve left a residual above the accepted threshold."""


class DegenerateSubspaceError(DeconvoError):
    """Numerical basis construction produced a rank-deficient subspace."""
