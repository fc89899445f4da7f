"""Exception hierarchy.

Precondition failures derive from :class:`PreconditionError` so the CLI can map
them to exit code 3; numerical failures derive from :class:`NumericalError`
(exit code 4).
"""


class HardyOptError(Exception):
    """Base class for all library errors."""


class PreconditionError(HardyOptError, ValueError):
    """An operation was called outside the hypotheses it is valid for."""


class NumericalError(HardyOptError, ArithmeticError):
    """A numerical procedure failed to produce a trustworthy value."""


class UnsupportedCombination(PreconditionError):
    pass


class NonLebesgueMeasure(PreconditionError):
    pass


class WrongClassification(PreconditionError):
    pass


class GammaMismatch(PreconditionError):
    pass


class AlphaOutOfRange(PreconditionError):
    pass


class EndLimitMismatch(PreconditionError):
    pass


class VanishingDerivative(PreconditionError):
    pass


class DerivativeVanishes(PreconditionError):
    pass


class SignConditionViolated(PreconditionError):
    pass


class MissingSecondDerivative(PreconditionError):
    pass


class LevelOutOfRange(PreconditionError):
    pass


class SupportNotCompact(PreconditionError):
    pass


class NegativeNodalValue(PreconditionError):
    pass


class ZeroDenominator(PreconditionError):
    pass


class GridTooNarrow(PreconditionError):
    pass


class SuperharmonicityFails(PreconditionError):
    def __init__(self, message: str, radius: float | None = None):
        super().__init__(message)
        self.radius = radius


class ResidualTooLarge(PreconditionError):
    """A user-supplied profile is not p-harmonic to the requested tolerance."""


class NonFiniteIntegrand(NumericalError):
    pass


class NoConvergence(NumericalError):
    pass
