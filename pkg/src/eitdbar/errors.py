"""Exception types shared across the package."""


class ValidationError(ValueError):
    """Input violates a documented contract (bad shape, range, or state)."""


class ConvergenceError(RuntimeError):
    """An iterative solve failed to reach the requested tolerance.

    Carries the final relative residual so callers can decide whether to
    retry, mask, or abort.
    """

    def __init__(self, message, residual=None):
        super().__init__(message)
        self.residual = residual
