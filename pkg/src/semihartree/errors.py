"""Exception types shared across the package."""


class ConfigError(ValueError):
    """Invalid configuration or input validation failure."""


class NumericalError(RuntimeError):
    """A solver produced non-finite values, breached its boundary guard,
    or failed a convergence gate."""
