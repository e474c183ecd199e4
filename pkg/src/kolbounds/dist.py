"""Finite discrete laws and their moment tables.

A Distribution is a finite list of (value, probability) atoms in strictly
increasing value order. Moments up to order eight are computed exactly by
direct summation; they feed every closed-form rate in the package.
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from fractions import Fraction
from typing import Iterable, Sequence

import numpy as np

from .errors import InputError

_PROB_SUM_TOL = 1e-12


@dataclass(frozen=True)
class MomentTable:
    """Exact moments of a finite law.

    mu[k] is E[X^k] for k = 0..8 (mu[0] = 1). mu_tilde4/6/8 are the centered
    square moments E[(X^2 - mu2)^k] for k = 2, 3, 4, and abs3 is E[|X|^3].
    """

    mu: tuple[float, ...]
    mu_tilde4: float
    mu_tilde6: float
    mu_tilde8: float
    abs3: float

    def mu_tilde(self, k: int) -> float:
        if k == 4:
            return self.mu_tilde4
        if k == 6:
            return self.mu_tilde6
        if k == 8:
            return self.mu_tilde8
        raise InputError(f"mu_tilde is tabulated for k in {{4, 6, 8}}, got {k}")


@dataclass(frozen=True)
class Distribution:
    """A finite discrete law: atoms in strictly increasing value order."""

    values: tuple[float, ...]
    probs: tuple[float, ...]

    def __post_init__(self) -> None:
        if len(self.values) != len(self.probs) or not self.values:
            raise InputError("a law needs matching, non-empty value and probability lists")
        if any(p <= 0.0 for p in self.probs):
            raise InputError("atom probabilities must be strictly positive")
        total = float(sum(self.probs))
        if abs(total - 1.0) > _PROB_SUM_TOL:
            raise InputError(f"atom probabilities sum to {total!r}, not 1")
        if any(b <= a for a, b in zip(self.values, self.values[1:])):
            raise InputError("atom values must be strictly increasing; use finite() to sort/merge")
        if abs(total - 1.0) > 0.0:
            # Kill the residual drift so downstream exact sums stay clean.
            object.__setattr__(self, "probs", tuple(p / total for p in self.probs))

    # ------------------------------------------------------------------ build

    @staticmethod
    def finite(atoms: Iterable[tuple[float, float]]) -> "Distribution":
        """Build from (value, prob) pairs; sorts by value and merges duplicates."""
        merged: dict[float, float] = {}
        for v, p in atoms:
            v = float(v)
            merged[v] = merged.get(v, 0.0) + float(p)
        vals = tuple(sorted(merged))
        return Distribution(vals, tuple(merged[v] for v in vals))

    @staticmethod
    def rademacher() -> "Distribution":
        """The symmetric two-point law on {-1, +1}."""
        return Distribution((-1.0, 1.0), (0.5, 0.5))

    @staticmethod
    def from_json(obj: object) -> "Distribution":
        """Parse {"type": "finite", "atoms": [[v, p], ...]} or {"type": "rademacher"}.

        Probabilities may be numbers or decimal strings; strings are resolved
        through Fraction so "1/3"-style and "0.25"-style entries stay exact.
        """
        if not isinstance(obj, dict) or "type" not in obj:
            raise InputError("law JSON must be an object with a 'type' field")
        kind = obj["type"]
        if kind == "rademacher":
            return Distribution.rademacher()
        if kind != "finite":
            raise InputError(f"unknown law type {kind!r}")
        raw = obj.get("atoms")
        if not isinstance(raw, list) or not raw:
            raise InputError("finite law JSON needs a non-empty 'atoms' list")
        pairs = []
        for entry in raw:
            if not isinstance(entry, (list, tuple)) or len(entry) != 2:
                raise InputError(f"bad atom entry {entry!r}; expected [value, prob]")
            v, p = entry
            pairs.append((_as_float(v), _as_float(p)))
        return Distribution.finite(pairs)

    @staticmethod
    def load(path: str) -> "Distribution":
        with open(path, "r", encoding="utf-8") as fh:
            return Distribution.from_json(json.load(fh))

    def to_json(self) -> dict:
        return {"type": "finite", "atoms": [[v, p] for v, p in zip(self.values, self.probs)]}

    # ------------------------------------------------------------------ query

    @property
    def n_atoms(self) -> int:
        return len(self.values)

    def values_array(self) -> np.ndarray:
        return np.asarray(self.values, dtype=float)

    def probs_array(self) -> np.ndarray:
        return np.asarray(self.probs, dtype=float)

    def mean(self) -> float:
        return float(np.dot(self.values_array(), self.probs_array()))

    def moments(self) -> MomentTable:
        """Moments mu_1..mu_8, the centered-square moments, and E|X|^3."""
        v = self.values_array()
        p = self.probs_array()
        mu = [1.0] + [float(np.dot(v**k, p)) for k in range(1, 9)]
        sq = v**2 - mu[2]
        return MomentTable(
            mu=tuple(mu),
            mu_tilde4=float(np.dot(sq**2, p)),
            mu_tilde6=float(np.dot(sq**3, p)),
            mu_tilde8=float(np.dot(sq**4, p)),
            abs3=float(np.dot(np.abs(v) ** 3, p)),
        )

    def centered(self) -> "Distribution":
        """The same law shifted to mean zero."""
        m = self.mean()
        return Distribution(tuple(v - m for v in self.values), self.probs)

    def is_centered(self, tol: float = 1e-12) -> bool:
        return abs(self.mean()) <= tol

    # ----------------------------------------------------------------- sample

    def sample(self, rng: np.random.Generator, size: int | None = None):
        """Inverse-CDF draw(s). Deterministic given the generator state."""
        cdf = np.cumsum(self.probs_array())
        cdf[-1] = 1.0
        u = rng.random(size if size is not None else 1)
        idx = np.searchsorted(cdf, u, side="right")
        idx = np.minimum(idx, self.n_atoms - 1)
        out = self.values_array()[idx]
        return out if size is not None else float(out[0])


def _as_float(x: object) -> float:
    if isinstance(x, str):
        try:
            return float(Fraction(x))
        except (ValueError, ZeroDivisionError) as exc:
            raise InputError(f"cannot parse numeric string {x!r}") from exc
    if isinstance(x, (int, float)):
        return float(x)
    raise InputError(f"expected a number, got {type(x).__name__}")


def three_point() -> Distribution:
    """The law {-1: 1/4, 0: 1/2, +1: 1/4}; handy because mu4 = 2*mu2^2 exactly."""
    return Distribution((-1.0, 0.0, 1.0), (0.25, 0.5, 0.25))
