"""Exception types shared across the package."""


class DomainError(ValueError):
    """An argument lies outside the domain of the operation (e.g. r <= 0)."""


class LemmaHypothesisError(ValueError):
    """The trajectory-bound formulas only apply for w < 0 and l > 0."""


class IntegrationError(RuntimeError):
    """Raised when a characteristic cannot be continued.

    The partially integrated record is kept on ``record`` so callers can
    inspect how far the trajectory got.
    """

    def __init__(self, message, record=None, index=None):
        super().__init__(message)
        self.record = record
        self.index = index


class PlanningError(RuntimeError):
    """A certification inequality failed for the planned parameters."""

    def __init__(self, message, failed=()):
        super().__init__(message)
        self.failed = tuple(failed)


class SamplingError(RuntimeError):
    pass


class DepositionError(ValueError):
    pass


class ResolutionError(ValueError):
    """Grid too coarse for the requested finite-difference order."""


class ConfigError(ValueError):
    """Invalid scenario configuration; ``key`` names the offending entry."""

    def __init__(self, message, key=None):
        super().__init__(message if key is None else f"{key}: {message}")
        self.key = key
