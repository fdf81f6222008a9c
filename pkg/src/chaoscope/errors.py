"""Exception hierarchy shared by all chaoscope modules."""


class ChaoscopeError(Exception):
    """Base class for every error raised by the package."""


class IntegrationDiverged(ChaoscopeError):
    """A state component became non-finite or exceeded the blow-up bound."""

    def __init__(self, last_time: float, message: str | None = None):
        self.last_time = float(last_time)
        super().__init__(message or f"integration diverged after t={self.last_time:.6g}")


class RootNotFound(ChaoscopeError):
    pass


class NondifferentiablePoint(ChaoscopeError, ValueError):
    pass


class DegenerateVacuum(ChaoscopeError, ValueError):
    pass


class InvalidSeed(ChaoscopeError, ValueError):
    def __init__(self, index: int, seed, reason: str):
        self.index = index
        self.seed = seed
        super().__init__(f"invalid seed #{index} {seed!r}: {reason}")


class EigensolverError(ChaoscopeError):
    pass


class UnfoldingFailed(ChaoscopeError):
    pass


class FitDegenerate(ChaoscopeError):
    pass


class ConfigError(ChaoscopeError, ValueError):
    pass
