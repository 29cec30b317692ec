"""Exception types shared across the package."""


class ConfigurationError(ValueError):
    """Raised when a scenario or sweep configuration is invalid."""


class InfeasibleError(RuntimeError):
    """Raised when no feasible point exists for the requested problem."""
