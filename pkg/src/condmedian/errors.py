"""Exception hierarchy shared by every module."""


class CondMedianError(Exception):
    """Base class for all errors raised by the package."""


class InvalidArgumentError(CondMedianError, ValueError):
    """An argument is non-finite or outside the mathematically valid range."""


class DomainError(CondMedianError, ValueError):
    """An argument lies outside the domain where the implementation is accurate."""


class ModelError(CondMedianError):
    """A prior/noise combination is unsupported or a density is not normalizable."""


class NumericalError(CondMedianError, ArithmeticError):
    """A numerical cross-check or consistency certificate failed."""
