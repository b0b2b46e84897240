"""Exception hierarchy shared by every module."""


class MagicRectError(Exception):
    """Base class for all errors raised by this package."""


class ParityError(MagicRectError, ValueError):
    """The row and column sign parameters multiply to +1."""


class DimensionError(MagicRectError, ValueError):
    """Dimensions or sequence lengths are inconsistent."""


class InvalidOutcome(MagicRectError, ValueError):
    """An outcome lies outside the natural alphabet of its player."""


class BudgetExceeded(MagicRectError):
    """The requested instance is larger than the configured search cap."""


class ValidationError(MagicRectError):
    """A quantum strategy violates its algebraic invariants."""


class LabelMismatch(MagicRectError, ValueError):
    """Certificate labels do not cover the alphabets of a behavior."""


class NotUsable(MagicRectError, ValueError):
    """A game dimension gives no certified randomness."""


class InfeasibleDetected(MagicRectError):
    """The optimization problem has no feasible point."""


class NotConverged(MagicRectError):
    """The solver hit its iteration cap; ``solution`` holds the best iterate."""

    def __init__(self, message, solution=None):
        super().__init__(message)
        self.solution = solution
