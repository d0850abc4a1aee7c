"""Exception types shared across the package."""


class ValidationError(ValueError):
    """Input data violates a documented invariant."""


class ParameterError(ValidationError):
    """A scalar parameter (order, exponent, tolerance) is out of range."""


class SizeError(ValidationError):
    """A dense oracle was requested on a grid that is too large."""


class ConvergenceError(RuntimeError):
    """An iterative method exhausted its budget.

    ``diagnostics`` carries whatever the solver knew when it gave up
    (iteration count, last residual, ...).
    """

    def __init__(self, message, **diagnostics):
        super().__init__(message)
        self.diagnostics = diagnostics


class PremiseError(ValidationError):
    """An experiment's standing hypothesis failed (e.g. a sign condition)."""
