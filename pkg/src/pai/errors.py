"""Exception types shared across the package.

``InputError`` marks violated input contracts (bad shapes, non-finite data,
unparseable files); ``NumericError`` marks failures inside otherwise valid
numerical routines (e.g. a factorization that cannot proceed). The CLI maps
the two onto distinct exit codes.
"""


class PaiError(Exception):
    """Base class for all package-specific errors."""


class InputError(PaiError, ValueError):
    """An argument or data file violates a documented precondition."""


class NumericError(PaiError, ArithmeticError):
    """A numerical routine failed on structurally valid input."""
