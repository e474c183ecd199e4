"""Explicit-constant normal-approximation bounds, evaluated exactly.

Every function here returns a certified upper bound for the Kolmogorov
distance between a (near) unit-variance centered functional and the standard
normal, computed term by term from discrete gradients and gradewise operator
powers. Constants are fixed by the package's weight convention (each
coordinate carries weight 2 in full-weight integrals, weight 1 in half-weight
ones; see the chaos module docstring) and are not adjustable.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from . import hoeffding
from .chaos import DiscreteGradient, apply_L_power, gradient
from .errors import DomainError
from .space import RandomFunctional


@dataclass(frozen=True)
class FourthMomentCheck:
    """lhs = E[X^4]; rhs = 36 a + 15 b + 2 c with the gradient ingredients."""

    lhs: float
    rhs: float
    grad_sq_term: float
    grad_quartic_term: float
    second_moment_sq: float

    @property
    def holds(self) -> bool:
        return self.lhs <= self.rhs * (1.0 + 1e-12) + 1e-12


def fourth_moment_check(X: RandomFunctional) -> FourthMomentCheck:
    """E[X^4] against 36 E[(full-weight grad square integral)^2]
    + 15 E[full-weight grad quartic integral] + 2 (E[X^2])^2."""
    g = gradient(X)
    int2 = g.power_int_full(2)
    a = int2.moment(2)
    b = g.expected_power_full(4)
    c = X.moment(2) ** 2
    return FourthMomentCheck(
        lhs=X.moment(4),
        rhs=36.0 * a + 15.0 * b + 2.0 * c,
        grad_sq_term=a,
        grad_quartic_term=b,
        second_moment_sq=c,
    )


@dataclass(frozen=True)
class MasterBound:
    """The four-term general bound; total is their sum."""

    total: float
    second_moment_gap: float
    variance_term: float
    gradient_fourth_term: float
    squared_gradient_term: float

    def terms(self) -> dict[str, float]:
        return {
            "second_moment_gap": self.second_moment_gap,
            "variance_term": self.variance_term,
            "gradient_fourth_term": self.gradient_fourth_term,
            "squared_gradient_term": self.squared_gradient_term,
        }


def _shifted_square_factor(g: DiscreteGradient) -> float:
    """Full-weight integral over (k, t) of E[((I + 2 sqrt(number op)) (grad^2))^2].

    The operator acts on the squared gradient component as a functional of the
    outcome; order d parts pick up a factor 1 + 2 sqrt(d).
    """
    space = g.space
    n = space.n
    coeffs = [0.0] + [math.sqrt(d) for d in range(1, n + 1)]
    total = 0.0
    for k in range(n):
        probs = space.probs[k]
        for t in range(space.shape[k]):
            sq = np.broadcast_to(g.stacks[k][t] ** 2, space.shape)
            Y = RandomFunctional(space, sq.reshape(-1).copy())
            Z = Y + 2.0 * hoeffding.scale_grades(Y, coeffs)
            total += 2.0 * probs[t] * Z.moment(2)
    return total


def master_bound(X: RandomFunctional) -> MasterBound:
    """Certified Kolmogorov-distance bound for any centered functional.

    total = |1 - E[X^2]|
          + sqrt(Var(half-weight integral of grad X * grad X1))
          + (3/2) sqrt(E int (grad X)^4 full) *
              [ (E[X^4] E[(int (grad X1)^2 full)^2])^(1/4)
                + (sqrt(pi)/2) sqrt(E[X_half^2]) ]
          + 4 (shifted-square factor of X * shifted-square factor of X1)^(1/4)

    with X1 the inverse number operator applied to X and X_half the
    inverse square-root power.
    """
    scale = max(1.0, float(np.max(np.abs(X.values))))
    if abs(X.expectation()) > 1e-9 * scale:
        raise DomainError("the master bound needs a centered functional")
    Xm1 = apply_L_power(X, -1.0)
    Xmh = apply_L_power(X, -0.5)
    gX = gradient(X)
    gXm1 = gradient(Xm1)

    t1 = abs(1.0 - X.moment(2))
    t2 = math.sqrt(max(gX.pair_int_half(gXm1).variance(), 0.0))
    q4 = gX.expected_power_full(4)
    b2 = gXm1.power_int_full(2)
    t3 = 1.5 * math.sqrt(q4) * (
        (X.moment(4) * b2.moment(2)) ** 0.25
        + (math.sqrt(math.pi) / 2.0) * math.sqrt(Xmh.moment(2))
    )
    t4 = 4.0 * (_shifted_square_factor(gX) * _shifted_square_factor(gXm1)) ** 0.25
    return MasterBound(
        total=t1 + t2 + t3 + t4,
        second_moment_gap=t1,
        variance_term=t2,
        gradient_fourth_term=t3,
        squared_gradient_term=t4,
    )


def single_order_bounds(X: RandomFunctional, d: int) -> tuple[float, float]:
    """The two certified bounds for a pure order-d multiple sum.

    first  = gap + (1/d) sqrt(Var(int (grad X)^2 half))
                + ((12 + 5 E[X^4]^(1/4)) / sqrt(d)) sqrt(E int (grad X)^4 full)
    second = gap + sqrt(Var(int (grad X)^2 half)) + 24 sqrt(E int (grad X)^4 full)
    """
    if d < 1:
        raise DomainError("order must be at least 1")
    g = gradient(X)
    gap = abs(1.0 - X.moment(2))
    var_half = math.sqrt(max(g.power_int_half(2).variance(), 0.0))
    q4 = math.sqrt(g.expected_power_full(4))
    first = gap + var_half / d + (12.0 + 5.0 * X.moment(4) ** 0.25) / math.sqrt(d) * q4
    second = gap + var_half + 24.0 * q4
    return first, second


def degenerate_gradient_bound(X: RandomFunctional) -> float:
    """sqrt(Var(int (grad X)^2 half)) + 24 sqrt(E int (grad X)^4 full).

    Valid as a Kolmogorov bound for unit-variance single-order X; equals the
    conditional-moment form sqrt(var_term) + 24 sqrt(2 fourth_term) from
    hoeffding.rate_degenerate.
    """
    if abs(X.moment(2) - 1.0) > 1e-8:
        raise DomainError("degenerate bound needs a unit-variance input")
    g = gradient(X)
    return math.sqrt(max(g.power_int_half(2).variance(), 0.0)) + 24.0 * math.sqrt(
        g.expected_power_full(4)
    )
