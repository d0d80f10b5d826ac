"""Exception types shared across the package."""


class ValidationError(ValueError):
    """Input data violates a documented invariant (bad coefficient, dimension
    mismatch, malformed file, ...). Maps to CLI exit code 2."""


class InsufficientSamplesError(ValidationError):
    """Fewer benchmark samples than the fit requires."""


class DegenerateDesignError(ValidationError):
    """All benchmark samples share one work value; the fit is rank deficient."""


class NonpositiveSlopeError(ValidationError):
    """The fitted per-unit latency came out non-positive."""


class InfeasibleError(Exception):
    """No feasible point exists for the problem as posed."""


class UnboundedError(Exception):
    """The objective can be driven to -infinity."""


class NoSolutionError(Exception):
    """A plan was requested from a solver result that carries no solution."""
