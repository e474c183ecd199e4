"""Seeded identity and inequality suite on a small exact space.

Runs the package's core algebraic identities (isometry, product formula,
covariance identity, decomposition round trip) and its explicit-constant
inequalities (fourth-moment bound, the full distance bound, the single-order
and degenerate-pair bounds) against exact enumeration on a four-coordinate
three-point space. Every check reports its worst residual; inequalities
report the worst violation, so zero means they held with slack.

The corrupt switch deliberately breaks the first kernel's slotwise centering
so downstream consumers can test their failure paths.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from . import bounds, chaos, mc
from .dist import three_point
from .errors import DomainError
from .space import OutcomeSpace, RandomFunctional

DEFAULT_TOL = 1e-10


@dataclass(frozen=True)
class CheckResult:
    name: str
    residual: float
    tolerance: float

    @property
    def passed(self) -> bool:
        return self.residual <= self.tolerance

    def to_json(self) -> dict:
        # A residual of inf marks a check whose hypotheses already failed;
        # JSON has no inf, so it becomes null with passed=false.
        return {
            "name": self.name,
            "residual": self.residual if math.isfinite(self.residual) else None,
            "tolerance": self.tolerance,
            "passed": bool(self.passed),
        }


def _normalized(X: RandomFunctional) -> RandomFunctional:
    Xc = X.centered()
    v = Xc.variance()
    if v <= 0.0:
        raise ValueError("cannot normalize a constant functional")
    return Xc * (1.0 / np.sqrt(v))


def run_suite(seed: int = 0, n_kernels: int = 50, corrupt: bool = False) -> list[CheckResult]:
    law = three_point()
    space = OutcomeSpace.iid(law, 4)
    rng = np.random.default_rng(seed)
    kernels = [chaos.random_kernel(space, 1 + (i % 3), rng) for i in range(n_kernels)]
    if corrupt:
        k0 = kernels[0]
        tables = {s: t.copy() for s, t in k0.tables.items()}
        first = next(iter(sorted(tables)))
        tables[first] = tables[first] + 0.75
        kernels[0] = chaos.ChaosKernel(space, k0.order, tables, raw=True)

    results: list[CheckResult] = []

    worst = 0.0
    for i, f in enumerate(kernels):
        g = kernels[(7 * i + 3) % len(kernels)]
        lhs = (f.integral() * g.integral()).expectation()
        if f.order == g.order:
            rhs = float(math.factorial(f.order)) * f.inner_product(g)
        else:
            rhs = 0.0
        worst = max(worst, abs(lhs - rhs) / max(1.0, abs(lhs), abs(rhs)))
    results.append(CheckResult("isometry", worst, DEFAULT_TOL))

    worst = 0.0
    pair_idx = [(0, 1), (1, 2), (2, 4), (4, 5), (5, 8), (3, 7)]
    for a, b in pair_idx:
        f, g = kernels[a], kernels[b]
        truth = f.integral() * g.integral()
        got = chaos.multiply(f, g).reconstruct()
        scale = max(1.0, float(np.max(np.abs(truth.values))))
        worst = max(worst, float(np.max(np.abs(truth.values - got.values))) / scale)
    results.append(CheckResult("multiplication", worst, DEFAULT_TOL))

    worst = 0.0
    for i in range(0, min(12, len(kernels) - 1)):
        X = kernels[i].integral()
        Y = kernels[i + 1].integral()
        try:
            for alpha in (0.0, 0.5, 1.0):
                worst = max(worst, chaos.covariance_identity_check(X, Y, alpha))
        except DomainError:
            # A non-degenerate kernel yields an uncentered integral; that is
            # itself a failure of the identity's hypotheses.
            worst = math.inf
    results.append(CheckResult("covariance_identity", worst, DEFAULT_TOL))

    worst = 0.0
    for i in range(10):
        X = space.functional(rng.standard_normal(space.shape)).centered()
        back = chaos.decompose(X).reconstruct()
        scale = max(1.0, float(np.max(np.abs(X.values))))
        worst = max(worst, float(np.max(np.abs(back.values - X.values))) / scale)
    results.append(CheckResult("decomposition_roundtrip", worst, DEFAULT_TOL))

    worst = 0.0
    for i in range(15):
        X = space.functional(rng.standard_normal(space.shape)).centered()
        chk = bounds.fourth_moment_check(X)
        worst = max(worst, max(0.0, chk.lhs - chk.rhs) / max(1.0, chk.rhs))
    results.append(CheckResult("fourth_moment_bound", worst, DEFAULT_TOL))

    worst = 0.0
    for i in range(10):
        X = _normalized(space.functional(rng.standard_normal(space.shape)))
        dk = mc.exact_kdist(X).value
        worst = max(worst, max(0.0, dk - bounds.master_bound(X).total))
    results.append(CheckResult("distance_bound", worst, DEFAULT_TOL))

    worst = 0.0
    for i, f in enumerate(kernels[:12]):
        Xd = f.integral()
        v = Xd.variance()
        if v <= 1e-14:
            continue
        Z = Xd * (1.0 / np.sqrt(v))
        dk = mc.exact_kdist(Z).value
        try:
            first, second = bounds.single_order_bounds(Z, f.order)
            degen = bounds.degenerate_gradient_bound(Z)
        except DomainError:
            # The scaled integral of a non-degenerate kernel misses the
            # unit-second-moment hypothesis; count that as a failure.
            worst = math.inf
            continue
        for rhs in (first, second, degen):
            worst = max(worst, max(0.0, dk - rhs))
    results.append(CheckResult("single_order_bounds", worst, DEFAULT_TOL))

    return results
