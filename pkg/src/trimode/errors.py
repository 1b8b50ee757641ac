EXIT_OK = 0
EXIT_FAILURE = 1
EXIT_CONFIG = 2
EXIT_VALIDATION = 3
EXIT_TRUNCATION = 4


class TrimodeError(Exception):
    """Base class for every error raised by trimode."""


class ConfigError(TrimodeError):
    """Scenario configuration could not be parsed or is inconsistent."""

    def __init__(self, message: str, line: int | None = None):
        self.line = line
        if line is not None:
            message = f"line {line}: {message}"
        super().__init__(message)


class DimensionError(TrimodeError, ValueError):
    """Operands live on different truncated spaces, or a mode index is invalid."""


class TruncationError(TrimodeError):
    """A coherent state loses more tail mass than the leakage budget allows."""

    def __init__(self, message: str, required_dim: int):
        self.required_dim = required_dim
        super().__init__(f"{message} (need at least {required_dim} levels)")


class SeriesOverflowError(TrimodeError):
    """The Poisson window is larger than the configured term limit."""


class ConvergenceError(TrimodeError):
    """Halving the integration step moved the result beyond tolerance."""
