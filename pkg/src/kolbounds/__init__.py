"""kolbounds: exact enumeration and certified normal-approximation bounds for
functionals of independent finite discrete randomness."""

from .dist import Distribution, MomentTable, three_point
from .errors import (
    DegenerateError,
    DomainError,
    InputError,
    KolboundsError,
    SpaceTooLargeError,
)
from .space import OutcomeSpace, RandomFunctional

__version__ = "0.1.0"

__all__ = [
    "Distribution",
    "MomentTable",
    "three_point",
    "OutcomeSpace",
    "RandomFunctional",
    "KolboundsError",
    "InputError",
    "DomainError",
    "DegenerateError",
    "SpaceTooLargeError",
    "__version__",
]
