"""Exception types shared across the package."""


class AggrolabError(Exception):
    """Base class for all package errors."""


class SpecError(AggrolabError, ValueError):
    """A parameter or spec violates its documented domain."""


class ResourceCapError(AggrolabError):
    """A requested computation would exceed a configured size limit."""


class NumericalError(AggrolabError, ArithmeticError):
    """An estimator or solver could not produce a valid result."""
