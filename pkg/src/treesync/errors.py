"""Exception hierarchy.

Validation errors (bad input) and numerical errors (solver or integrator
failures) are kept apart so the CLI can map them to distinct exit codes.
"""


class TreeSyncError(Exception):
    """Base class for every error raised by the package."""


class ValidationError(TreeSyncError, ValueError):
    """Input violates a precondition."""


class NumericalError(TreeSyncError, ArithmeticError):
    """A computation failed or produced an inconsistent result."""


class GraphError(ValidationError):
    pass


class SelfLoop(GraphError):
    pass


class DuplicateEdge(GraphError):
    pass


class CycleDetected(GraphError):
    pass


class Disconnected(GraphError):
    pass


class DimensionMismatch(ValidationError):
    pass


class InvalidFrequency(ValidationError):
    pass


class DegenerateEpsilon(ValidationError):
    pass


class NotAStar(ValidationError):
    pass


class ConfigError(ValidationError):
    pass


class NotSymmetric(ValidationError):
    pass


class NoConvergence(NumericalError):
    pass


class SandwichViolation(NumericalError):
    pass


class NonFiniteState(NumericalError):
    """Integration diverged.  ``time`` holds the simulated time of detection."""

    def __init__(self, message: str, time: float):
        super().__init__(message)
        self.time = time


class AlternationViolation(NumericalError):
    pass
