"""Exception hierarchy shared by all frictio modules."""

from __future__ import annotations


class FrictioError(Exception):
    """Base class for every error raised by frictio."""


class MismatchedHorizon(FrictioError, ValueError):
    pass


class OutOfRange(FrictioError, ValueError):
    pass


class NonConvergence(FrictioError, RuntimeError):
    """A fixed-point or inner iteration did not reach its tolerance.

    ``last`` carries the last iterate (solver specific) so callers can
    report residuals instead of discarding the attempt.
    """

    def __init__(self, message: str, iterations: int = 0, last=None):
        super().__init__(message)
        self.iterations = iterations
        self.last = last


class NotCritical(FrictioError, ValueError):
    pass


class NonPositiveLoad(FrictioError, ValueError):
    pass


class SupercriticalFriction(FrictioError, ValueError):
    pass


class SubcriticalFriction(FrictioError, ValueError):
    pass


class InadmissibleInitialCondition(FrictioError, ValueError):
    pass


class DegenerateTriangle(FrictioError, ValueError):
    pass


class SingularSystem(FrictioError, ValueError):
    pass


class InfeasibleGrid(FrictioError, ValueError):
    pass


class NonMonotoneReparam(FrictioError, ValueError):
    pass


class ConfigError(FrictioError, ValueError):
    pass
