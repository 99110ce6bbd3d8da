"""Exception hierarchy.

Numeric failures (``NumericalError`` and subclasses) map to CLI exit code 2.
"""


class LpRecoverError(Exception):
    """Base class for all package errors."""


class NumericalError(LpRecoverError):
    pass


class SingularProjectionError(NumericalError):
    """A A^T is singular or too badly conditioned to project onto {Ay = b}."""


class DivergenceError(NumericalError):
    """The smoothed objective became non-finite."""


class ConditionNotSatisfiedError(NumericalError, ValueError):
    """The recovery condition P(k, S, p) does not hold, so C1/C2 are undefined."""


class TooLargeForExhaustiveError(LpRecoverError, ValueError):
    """An exhaustive enumeration would exceed its configured cap."""


class ProfileTooShortError(LpRecoverError, ValueError):
    """A delta profile does not reach any admissible (kS, (k+1)S) pair."""
