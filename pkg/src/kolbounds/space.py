"""Product outcome spaces and exactly-enumerated random functionals.

An OutcomeSpace is a finite product of independent discrete laws, one per
coordinate. A RandomFunctional is an arbitrary real function of the outcome,
stored densely as one value per outcome in lexicographic (C) order of the atom
indices. Everything downstream (chaos grades, gradients, bounds, exact
Kolmogorov distances) reduces to weighted sums over this grid.

The enumeration cap is 2**18 outcomes; larger spaces raise SpaceTooLargeError
at construction so the failure happens early and loudly.
"""

from __future__ import annotations

from typing import Iterable, Sequence

import numpy as np

from .dist import Distribution
from .errors import DomainError, InputError, SpaceTooLargeError

SIZE_CAP = 2**18


class OutcomeSpace:
    """A finite product of independent discrete coordinate laws."""

    def __init__(self, laws: Iterable[Distribution]):
        self.laws: tuple[Distribution, ...] = tuple(laws)
        if not self.laws:
            raise InputError("an outcome space needs at least one coordinate")
        self.shape: tuple[int, ...] = tuple(law.n_atoms for law in self.laws)
        size = 1
        for m in self.shape:
            size *= m
        if size > SIZE_CAP:
            raise SpaceTooLargeError(
                f"outcome space has {size} points, cap is {SIZE_CAP}"
            )
        self.size: int = size
        self.n: int = len(self.laws)
        self.values: tuple[np.ndarray, ...] = tuple(law.values_array() for law in self.laws)
        self.probs: tuple[np.ndarray, ...] = tuple(law.probs_array() for law in self.laws)
        self._joint: np.ndarray | None = None

    @staticmethod
    def iid(law: Distribution, n: int) -> "OutcomeSpace":
        return OutcomeSpace([law] * n)

    def __eq__(self, other: object) -> bool:
        return isinstance(other, OutcomeSpace) and self.laws == other.laws

    def __repr__(self) -> str:
        return f"OutcomeSpace(n={self.n}, shape={self.shape})"

    @property
    def joint_probs(self) -> np.ndarray:
        """The full product probability tensor, cached after first use."""
        if self._joint is None:
            p = np.array(1.0)
            for k in range(self.n):
                p = np.multiply.outer(p, self.probs[k])
            p = p.reshape(self.shape)
            p.flags.writeable = False
            self._joint = p
        return self._joint

    def axis_probs(self, k: int) -> np.ndarray:
        """probs of coordinate k shaped for broadcasting against the grid."""
        shape = [1] * self.n
        shape[k] = self.shape[k]
        return self.probs[k].reshape(shape)

    def check_coordinate(self, k: int) -> None:
        if not 0 <= k < self.n:
            raise DomainError(f"coordinate {k} outside 0..{self.n - 1}")

    # ------------------------------------------------------------ functionals

    def functional(self, values: np.ndarray | Sequence[float]) -> "RandomFunctional":
        """Wrap dense values (flat in enumeration order, or grid-shaped)."""
        arr = np.asarray(values, dtype=float)
        if arr.shape == self.shape:
            arr = arr.reshape(-1)
        if arr.shape != (self.size,):
            raise InputError(
                f"functional values have shape {arr.shape}, expected ({self.size},) or {self.shape}"
            )
        return RandomFunctional(self, arr.copy())

    def constant(self, c: float) -> "RandomFunctional":
        return RandomFunctional(self, np.full(self.size, float(c)))

    def coordinate(self, k: int) -> "RandomFunctional":
        """The projection onto coordinate k as a functional."""
        self.check_coordinate(k)
        shape = [1] * self.n
        shape[k] = self.shape[k]
        grid = np.broadcast_to(self.values[k].reshape(shape), self.shape)
        return RandomFunctional(self, grid.reshape(-1).copy())


class RandomFunctional:
    """A real function of the outcome, one value per point of the space.

    Values are stored flat in lexicographic order of atom indices and are
    immutable; all operations return new functionals.
    """

    __slots__ = ("space", "values")

    def __init__(self, space: OutcomeSpace, values: np.ndarray):
        self.space = space
        v = np.asarray(values, dtype=float).reshape(-1)
        if v.shape != (space.size,):
            raise InputError("value vector does not match the space size")
        v.flags.writeable = False
        self.values = v

    @property
    def grid(self) -> np.ndarray:
        return self.values.reshape(self.space.shape)

    # ------------------------------------------------------------- moments

    def expectation(self) -> float:
        return float(np.dot(self.values, self.space.joint_probs.reshape(-1)))

    def moment(self, k: int) -> float:
        return float(np.dot(self.values**k, self.space.joint_probs.reshape(-1)))

    def variance(self) -> float:
        m = self.expectation()
        return max(self.moment(2) - m * m, 0.0)

    def centered(self) -> "RandomFunctional":
        return RandomFunctional(self.space, self.values - self.expectation())

    def is_centered(self, tol: float = 1e-10) -> bool:
        return abs(self.expectation()) <= tol

    # -------------------------------------------------------- conditioning

    def axis_mean(self, k: int) -> np.ndarray:
        """E over coordinate k only; grid with axis k of length 1 (keepdims)."""
        self.space.check_coordinate(k)
        return np.sum(self.grid * self.space.axis_probs(k), axis=k, keepdims=True)

    def replace_grid(self, k: int, t_index: int) -> np.ndarray:
        """Grid of X(omega with coordinate k forced to atom t); keepdims on axis k."""
        self.space.check_coordinate(k)
        if not 0 <= t_index < self.space.shape[k]:
            raise DomainError(f"atom index {t_index} outside coordinate {k}'s support")
        return np.take(self.grid, [t_index], axis=k)

    def conditional(self, subset: Sequence[int]) -> "RandomFunctional":
        """E[X | coordinates in subset], as a functional on the full space."""
        keep = set(subset)
        for k in keep:
            self.space.check_coordinate(k)
        g = self.grid
        for k in range(self.space.n):
            if k not in keep:
                g = np.sum(g * self.space.axis_probs(k), axis=k, keepdims=True)
        return RandomFunctional(self.space, np.broadcast_to(g, self.space.shape).reshape(-1).copy())

    def grad_grid(self, k: int, t_index: int) -> np.ndarray:
        """The discrete gradient at (k, t): replace minus the axis mean (keepdims)."""
        return self.replace_grid(k, t_index) - self.axis_mean(k)

    # ----------------------------------------------------------- arithmetic

    def _coerce(self, other) -> np.ndarray:
        if isinstance(other, RandomFunctional):
            if not (other.space is self.space or other.space == self.space):
                raise DomainError("functionals live on different outcome spaces")
            return other.values
        if isinstance(other, (int, float, np.floating, np.integer)):
            return np.asarray(float(other))
        return NotImplemented  # type: ignore[return-value]

    def __add__(self, other):
        v = self._coerce(other)
        if v is NotImplemented:
            return NotImplemented
        return RandomFunctional(self.space, self.values + v)

    __radd__ = __add__

    def __sub__(self, other):
        v = self._coerce(other)
        if v is NotImplemented:
            return NotImplemented
        return RandomFunctional(self.space, self.values - v)

    def __rsub__(self, other):
        v = self._coerce(other)
        if v is NotImplemented:
            return NotImplemented
        return RandomFunctional(self.space, v - self.values)

    def __mul__(self, other):
        v = self._coerce(other)
        if v is NotImplemented:
            return NotImplemented
        return RandomFunctional(self.space, self.values * v)

    __rmul__ = __mul__

    def __pow__(self, k: int):
        return RandomFunctional(self.space, self.values**k)

    def __neg__(self):
        return RandomFunctional(self.space, -self.values)

    def __repr__(self) -> str:
        return f"RandomFunctional(space={self.space!r}, mean={self.expectation():.6g})"
