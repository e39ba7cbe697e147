"""Exception hierarchy.

Every error carries a short machine-readable ``kind`` string; the CLI
reports it verbatim in its error object.
"""


class SplitKleinianError(Exception):
    kind = "error"

    def __init__(self, message=None, **details):
        super().__init__(message or self.kind)
        self.details = details


class ConfigError(SplitKleinianError, ValueError):
    kind = "config error"


class NumericalError(SplitKleinianError, ArithmeticError):
    kind = "numeric failure"


class NotHyperbolicError(NumericalError):
    kind = "not hyperbolic"


class NotStableError(NumericalError):
    kind = "not stable"


class ConditioningError(NumericalError):
    kind = "conditioning failure"

    def __init__(self, message=None, condition=None):
        super().__init__(message, condition=condition)
        self.condition = condition


class MagnitudeOverflowError(NumericalError, OverflowError):
    kind = "magnitude overflow"


class NotInvertibleError(NumericalError):
    kind = "not invertible"


class NoRealLogarithmError(NumericalError):
    kind = "no real logarithm found"


class NotUnimodularError(NumericalError):
    kind = "not unimodular"


class NotInSLError(NumericalError):
    kind = "not in SL(N,Z)"


class DomainError(SplitKleinianError, ValueError):
    """An argument lies outside the domain of the operation."""

    kind = "domain error"


class PointAtInfinityError(DomainError):
    kind = "point at infinity"


class InvalidStableVectorError(DomainError):
    kind = "invalid stable vector"


class NotOnSphereError(DomainError):
    kind = "not on sphere"


class NotInUMinusError(DomainError):
    kind = "not in U-minus"


class NotInUPlusError(DomainError):
    kind = "not in U-plus"


class WrongRegionsError(DomainError):
    kind = "wrong regions"


class SplitMismatchError(DomainError):
    kind = "split mismatch"


class EmptySweepError(DomainError):
    kind = "empty sweep"
