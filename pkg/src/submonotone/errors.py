"""Exception types raised across the package."""


class SubmonotoneError(Exception):
    """Base class for all package errors."""


class NonConvergence(SubmonotoneError):
    """Quadrature could not reach the requested tolerance within its budget."""


class NotStrictlyPositive(SubmonotoneError):
    pass


class NotPositiveOnPrefix(SubmonotoneError):
    pass


class UnsupportedPhi(SubmonotoneError):
    pass


class UnsupportedStatement(SubmonotoneError):
    pass


class UnsupportedFunctional(SubmonotoneError):
    pass


class ParameterOutOfRange(SubmonotoneError, ValueError):
    pass


class HypothesisUnsatisfied(SubmonotoneError):
    """A proof-step checker received inputs violating the step's preconditions."""


class MissingInput(SubmonotoneError, KeyError):
    pass


class MissingUpperBound(SubmonotoneError):
    pass


class AllRatiosDegenerate(SubmonotoneError):
    pass


class InvalidConfig(SubmonotoneError, ValueError):
    pass
