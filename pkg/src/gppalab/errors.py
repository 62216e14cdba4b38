"""Exception hierarchy shared by every gppalab module."""


class GPPAError(Exception):
    """Base class for all errors raised by gppalab."""


class NotMonotone(GPPAError):
    pass


class InvalidSpec(GPPAError):
    pass


class DimensionMismatch(GPPAError, ValueError):
    pass


class SolveFailure(GPPAError):
    """The linear system behind a resolvent is numerically singular."""


class NoZeroSetInfo(GPPAError):
    pass


class NotAZero(GPPAError):
    pass


class ZeroSetNotSingleton(GPPAError):
    pass


class RangeViolation(GPPAError, ValueError):
    pass


class DomainError(GPPAError, ValueError):
    pass


class PolicyViolation(GPPAError, ValueError):
    """An inexactness parameter pair violates ``eta * eps < 1``."""


class HypothesisViolation(GPPAError, ValueError):
    pass


class NonContractive(GPPAError):
    pass


class DivergenceError(GPPAError):
    """Iterates left the ball of radius 1e12."""


class MetricUnavailable(GPPAError):
    pass


class MetricMismatch(GPPAError):
    pass


class TooShort(GPPAError):
    pass


class ConfigError(GPPAError):
    """Invalid experiment configuration; ``path`` names the offending field."""

    def __init__(self, path, message):
        self.path = path
        super().__init__(f"{path}: {message}")
