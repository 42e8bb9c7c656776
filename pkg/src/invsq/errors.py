"""Exception types shared across the package."""


class ParameterError(ValueError):
    """Raised when an argument violates a documented precondition."""


class ConstructionError(RuntimeError):
    """Raised when a derived object fails its build-time self checks."""
