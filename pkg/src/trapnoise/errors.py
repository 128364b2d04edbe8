"""Exception types shared across the package."""


class TrapNoiseError(ValueError):
    """Base class for all errors raised by this package."""


class InvalidInputError(TrapNoiseError):
    """A physical quantity or data record violates its preconditions."""


class GeometryError(TrapNoiseError):
    """A polygon or electrode layout is degenerate or out of domain."""


class FitError(TrapNoiseError):
    """A fit cannot be set up or did not converge."""
