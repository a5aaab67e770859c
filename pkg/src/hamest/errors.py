"""Exception types shared across the package."""


class HamestError(Exception):
    """Base class for all package-specific errors."""


class ValidationError(HamestError, ValueError):
    """An input violates a documented precondition or invariant."""


class BranchCutError(HamestError):
    """A unitary has an eigenphase too close to the principal-log branch cut."""


class ResourceLimitError(HamestError):
    """A requested computation exceeds the configured memory/size budget."""


class DegenerateProjectionError(HamestError):
    """Postselection probability is numerically zero."""


class PostselectionStarvedError(HamestError):
    """Postselection acceptance rate fell below the workable threshold."""


class InversionUnstableError(HamestError):
    """Reduced-state coefficients are too unbalanced for parameter inversion."""


class AuditFailure(HamestError):
    """A numerically audited inequality was violated.

    Carries the grid time at which the violation occurred, if applicable.
    """

    def __init__(self, message, time=None):
        super().__init__(message)
        self.time = time
