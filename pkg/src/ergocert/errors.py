"""Error types shared across the library.

Every unbounded search is guarded by an explicit budget; running out raises
BudgetExceededError instead of silently returning a wrong answer.
"""


class ErgocertError(Exception):
    """Base class for all library errors."""


class BudgetExceededError(ErgocertError):
    """A configured work bound (steps, cylinders, segments) was exhausted."""


class PrecisionStallError(ErgocertError):
    """An enclosure straddles a discontinuity and cannot be refined further."""


class UnsupportedInstanceError(ErgocertError):
    """No exact measure oracle exists for the requested instance."""


class UnsupportedPairError(ErgocertError):
    """No exact oracle exists for this (system, observable) pair."""


class InvalidNestingError(ErgocertError):
    """A refinement ball is not contained in its predecessor."""


class NoMassError(ErgocertError):
    """The target ball has measure zero."""


class InputError(ErgocertError):
    """Malformed user input (CLI / JSON)."""
