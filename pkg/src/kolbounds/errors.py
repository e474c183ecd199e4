"""Exception hierarchy for kolbounds.

Every error raised on purpose by this package derives from KolboundsError so
callers (and the CLI) can separate our diagnostics from genuine bugs.
"""

from __future__ import annotations


class KolboundsError(Exception):
    """Base class for all kolbounds errors."""


class InputError(KolboundsError):
    """Malformed or inconsistent user input (files, matrices, laws, flags)."""


class DomainError(KolboundsError):
    """An operation was called outside its mathematical domain.

    Examples: a negative operator power on a non-centered functional, a
    gradient at a coordinate the space does not have.
    """


class SpaceTooLargeError(KolboundsError):
    """The product outcome space exceeds the enumeration cap (2**18 points)."""


class DegenerateError(KolboundsError):
    """A quantity required to be positive vanished (zero variance, empty graph)."""
