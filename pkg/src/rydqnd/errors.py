"""Exception types shared across the package."""


class DomainError(ValueError):
    """Arguments violate a documented precondition (bad n/N/j, negative time, ...)."""


class ResourceError(RuntimeError):
    """Request exceeds a hard resource guard (dense N > 6, 2^T enumeration, ...)."""


class IntegratorError(RuntimeError):
    """Propagation finished outside the requested tolerance."""

    def __init__(self, message: str, residual: float | None = None):
        super().__init__(message)
        self.residual = residual


class PreconditionError(ValueError):
    """State handed to an operation is not of the required form."""


class ImpossibleOutcomeError(RuntimeError):
    """A zero-probability measurement branch was requested."""


class InconsistentRecordError(RuntimeError):
    """Every candidate assigns zero likelihood to the measurement record."""


class ScheduleExhaustedError(RuntimeError):
    """A precomputed drive-time list ran out before the protocol finished."""
