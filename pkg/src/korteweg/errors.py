"""Exception types shared across the package."""


class KortewegError(Exception):
    """Base class for all package errors."""


class RangeError(KortewegError, ValueError):
    """A block index or parameter is outside its admissible range."""


class ArgumentError(KortewegError, ValueError):
    """Inconsistent arguments (exponent ordering, mismatched grids, ...)."""


class DomainError(KortewegError, ValueError):
    """An operation was asked for outside its mathematical domain."""


class ModelError(KortewegError, ValueError):
    """Physical coefficients violate a structural hypothesis."""


class ConfigError(KortewegError, ValueError):
    """A run configuration could not be parsed or validated."""


class SolverError(KortewegError, RuntimeError):
    """Time integration failed (positivity loss, overflow)."""

    def __init__(self, message: str, step: int, time: float):
        super().__init__(f"{message} (step {step}, t={time:.6g})")
        self.step = step
        self.time = time
