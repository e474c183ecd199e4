"""Finite chaos calculus: kernels, multiple sums, gradients, operator powers.

Conventions, fixed once for the whole package:

* A kernel of order d assigns to every sorted d-subset J of coordinates an
  array over the product of those coordinates' supports. Kernels are
  "canonical": every slot average under the slot's law vanishes. Admission
  re-centers any table that misses this by more than 1e-10 (per slot, applied
  to every slot), which never changes the value of the multiple sum.
* The multiple sum of a kernel is I_d(f) = d! * sum over subsets J of
  f_J(coordinates on J). Its covariance identity reads
  E[I_d(f) I_d(g)] = d! * <f, g> with <f, g> = d! * sum_J E[f_J g_J].
* Integrals over the replacement variable come in two weights. Each
  coordinate carries total weight 2 in a full-weight integral
  (sum_k 2 * E_{t ~ nu_k}) and weight 1 in a half-weight one
  (sum_k E_{t ~ nu_k}). All explicit constants in the bound evaluators are
  calibrated to this pairing; contractions pair slots with weight 1 while
  their output norms integrate free slots with weight 2.
* The discrete gradient at (k, t) is
  grad_{k,t} X(w) = X(w with coordinate k set to t) - E_{s ~ nu_k} X(w with k set to s),
  a functional that does not depend on coordinate k itself.
* Operator powers act gradewise: the order-d part of X is scaled by d**alpha.
  Negative powers require a centered input.
"""

from __future__ import annotations

import itertools
import math
import string
from dataclasses import dataclass, field

import numpy as np

from . import hoeffding
from .errors import DomainError, InputError
from .space import OutcomeSpace, RandomFunctional

DEGENERACY_TOL = 1e-10
_DROP_TOL = 1e-13


def _subset_shape(space: OutcomeSpace, subset: tuple[int, ...]) -> tuple[int, ...]:
    return tuple(space.shape[j] for j in subset)


def _center_slots(space: OutcomeSpace, subset: tuple[int, ...], table: np.ndarray) -> np.ndarray:
    out = table
    for axis, block in enumerate(subset):
        p = space.probs[block].reshape((1,) * axis + (-1,) + (1,) * (table.ndim - axis - 1))
        out = out - np.sum(out * p, axis=axis, keepdims=True)
    return out


class ChaosKernel:
    """A canonical order-d kernel, stored per sorted coordinate subset."""

    def __init__(
        self,
        space: OutcomeSpace,
        order: int,
        tables: dict[tuple[int, ...], np.ndarray],
        raw: bool = False,
    ):
        if order < 1:
            raise InputError("kernel order must be at least 1")
        self.space = space
        self.order = order
        clean: dict[tuple[int, ...], np.ndarray] = {}
        for subset, table in tables.items():
            subset = tuple(subset)
            if len(subset) != order or list(subset) != sorted(set(subset)):
                raise InputError(f"subset {subset} is not a sorted {order}-set")
            for j in subset:
                space.check_coordinate(j)
            arr = np.asarray(table, dtype=float)
            want = _subset_shape(space, subset)
            if arr.shape != want:
                raise InputError(f"table for subset {subset} has shape {arr.shape}, expected {want}")
            clean[subset] = arr
        self.canonicalized = False
        if not raw and self.degeneracy_violation(clean) > DEGENERACY_TOL * max(1.0, self._scale(clean)):
            clean = {s: _center_slots(space, s, t) for s, t in clean.items()}
            self.canonicalized = True
        self.tables = clean

    @staticmethod
    def _scale(tables: dict[tuple[int, ...], np.ndarray]) -> float:
        return max((float(np.max(np.abs(t))) for t in tables.values()), default=0.0)

    def degeneracy_violation(self, tables: dict | None = None) -> float:
        """Largest absolute slot average over all subsets and slots."""
        tabs = self.tables if tables is None else tables
        worst = 0.0
        for subset, table in tabs.items():
            for axis, block in enumerate(subset):
                m = np.tensordot(table, self.space.probs[block], axes=([axis], [0]))
                worst = max(worst, float(np.max(np.abs(m))) if m.size else 0.0)
        return worst

    def max_abs(self) -> float:
        return self._scale(self.tables)

    def canonical(self) -> "ChaosKernel":
        return ChaosKernel(
            self.space,
            self.order,
            {s: _center_slots(self.space, s, t) for s, t in self.tables.items()},
            raw=True,
        )

    def scaled(self, c: float) -> "ChaosKernel":
        return ChaosKernel(self.space, self.order, {s: c * t for s, t in self.tables.items()}, raw=True)

    # ---------------------------------------------------------------- algebra

    def inner_product(self, other: "ChaosKernel") -> float:
        """<f, g> = d! * sum_J E_(nu on J)[f_J g_J]; orders must match."""
        if other.order != self.order or other.space != self.space:
            raise DomainError("inner product needs kernels of one order on one space")
        total = 0.0
        for subset, table in self.tables.items():
            t2 = other.tables.get(subset)
            if t2 is None:
                continue
            # Contract every axis against its coordinate's law.
            val = table * t2
            for block in subset:
                val = np.tensordot(val, self.space.probs[block], axes=([0], [0]))
            total += float(val)
        return math.factorial(self.order) * total

    def norm_sq(self) -> float:
        return self.inner_product(self)

    def integral(self) -> RandomFunctional:
        """The multiple sum I_d(f) = d! * sum_J f_J(omega on J) as a functional."""
        space = self.space
        total = np.zeros((1,) * space.n)
        for subset, table in self.tables.items():
            newshape = [1] * space.n
            for j in subset:
                newshape[j] = space.shape[j]
            total = total + table.reshape(newshape)
        total = math.factorial(self.order) * total
        grid = np.broadcast_to(total, space.shape)
        return RandomFunctional(space, grid.reshape(-1).copy())

    def evaluated_at(self, k: int, t_index: int) -> "ChaosKernel":
        """Freeze one slot at coordinate k to atom t; order drops by one.

        Only subsets containing k contribute; the result is the kernel
        appearing in grad_{k,t} I_d(f) = d * I_{d-1}(f with a slot frozen).
        """
        if self.order < 2:
            raise DomainError("cannot lower a first-order kernel to order zero here")
        out: dict[tuple[int, ...], np.ndarray] = {}
        for subset, table in self.tables.items():
            if k not in subset:
                continue
            axis = subset.index(k)
            out[tuple(j for j in subset if j != k)] = np.take(table, t_index, axis=axis)
        return ChaosKernel(self.space, self.order - 1, out, raw=True)


@dataclass
class ChaosDecomposition:
    """mean + sum over orders d of I_d(f_d)."""

    space: OutcomeSpace
    mean: float
    kernels: dict[int, ChaosKernel] = field(default_factory=dict)

    def orders(self, tol: float = 1e-12) -> list[int]:
        return sorted(d for d, k in self.kernels.items() if k.max_abs() > tol)

    def max_order(self) -> int:
        orders = self.orders()
        return orders[-1] if orders else 0

    def reconstruct(self) -> RandomFunctional:
        out = self.space.constant(self.mean)
        for d in sorted(self.kernels):
            out = out + self.kernels[d].integral()
        return out

    def second_moment(self) -> float:
        """E[X^2] through the gradewise covariance identity."""
        total = self.mean**2
        for d, k in self.kernels.items():
            total += math.factorial(d) * k.inner_product(k)
        return total


def decompose(X: RandomFunctional) -> ChaosDecomposition:
    """Exact chaos decomposition of a functional on its whole space."""
    H = hoeffding.project(X)
    space = X.space
    n = space.n
    scale = max(1.0, float(np.max(np.abs(X.values))))
    mean = X.expectation()
    per_order: dict[int, dict[tuple[int, ...], np.ndarray]] = {}
    for mask in range(1, 1 << n):
        grid = H.term_grid(mask)
        if grid is None or float(np.max(np.abs(grid))) <= _DROP_TOL * scale:
            continue
        subset = tuple(k for k in range(n) if mask & (1 << k))
        d = len(subset)
        index = tuple(slice(None) if k in subset else 0 for k in range(n))
        per_order.setdefault(d, {})[subset] = np.asarray(grid[index]) / math.factorial(d)
    kernels = {d: ChaosKernel(space, d, tables) for d, tables in per_order.items()}
    return ChaosDecomposition(space, mean, kernels)


def integral_eval(f: ChaosKernel) -> RandomFunctional:
    return f.integral()


# ------------------------------------------------------------------ gradient


class DiscreteGradient:
    """All replacement gradients of one functional, stacked per coordinate."""

    def __init__(self, X: RandomFunctional):
        self.X = X
        self.space = X.space
        grid = X.grid
        self.stacks: list[np.ndarray] = []
        for k in range(self.space.n):
            mean_k = X.axis_mean(k)
            stack = np.stack(
                [np.take(grid, [t], axis=k) for t in range(self.space.shape[k])]
            ) - mean_k[None]
            self.stacks.append(stack)

    def component(self, k: int, t_index: int) -> RandomFunctional:
        self.space.check_coordinate(k)
        grid = np.broadcast_to(self.stacks[k][t_index], self.space.shape)
        return RandomFunctional(self.space, grid.reshape(-1).copy())

    def power_int_half(self, p: int) -> RandomFunctional:
        """sum_k E_t[(grad_{k,t} X)^p] as a functional (weight 1 per coordinate)."""
        total = np.zeros((1,) * self.space.n)
        for k in range(self.space.n):
            total = total + np.tensordot(self.space.probs[k], self.stacks[k] ** p, axes=(0, 0))
        grid = np.broadcast_to(total, self.space.shape)
        return RandomFunctional(self.space, grid.reshape(-1).copy())

    def power_int_full(self, p: int) -> RandomFunctional:
        """sum_k 2 E_t[(grad_{k,t} X)^p] as a functional (weight 2 per coordinate)."""
        return 2.0 * self.power_int_half(p)

    def pair_int_half(self, other: "DiscreteGradient") -> RandomFunctional:
        """sum_k E_t[grad_{k,t} X * grad_{k,t} Y] as a functional."""
        if other.space != self.space:
            raise DomainError("gradients live on different spaces")
        total = np.zeros((1,) * self.space.n)
        for k in range(self.space.n):
            total = total + np.tensordot(
                self.space.probs[k], self.stacks[k] * other.stacks[k], axes=(0, 0)
            )
        grid = np.broadcast_to(total, self.space.shape)
        return RandomFunctional(self.space, grid.reshape(-1).copy())

    def expected_power_full(self, p: int) -> float:
        """E of the full-weight integral of (grad)^p over everything."""
        return self.power_int_full(p).expectation()


def gradient(X: RandomFunctional) -> DiscreteGradient:
    return DiscreteGradient(X)


# ------------------------------------------------------------ operator power


def apply_L_power(X: RandomFunctional, alpha: float) -> RandomFunctional:
    """Gradewise power of the number operator: order d scaled by d**alpha.

    alpha = 0 is the identity. For alpha < 0 the input must be centered
    (the order-0 part has no inverse).
    """
    n = X.space.n
    if alpha == 0.0:
        return X
    if alpha < 0.0:
        scale = max(1.0, float(np.max(np.abs(X.values))))
        if abs(X.expectation()) > 1e-10 * scale:
            raise DomainError("negative operator powers need a centered functional")
    coeffs = [0.0] + [float(d) ** alpha for d in range(1, n + 1)]
    return hoeffding.scale_grades(X, coeffs)


def covariance_identity_check(X: RandomFunctional, Y: RandomFunctional, alpha: float) -> float:
    """Residual of the gradient representation of the covariance.

    For centered X, Y and any real alpha,
    Cov(X, Y) = sum_k E E_t[(grad_{k,t} A)(grad_{k,t} B)] with
    A = (number operator)^(alpha-1) X and B = (number operator)^(-alpha) Y.
    Returns the absolute difference of the two sides.
    """
    for Z, name in ((X, "X"), (Y, "Y")):
        scale = max(1.0, float(np.max(np.abs(Z.values))))
        if abs(Z.expectation()) > 1e-10 * scale:
            raise DomainError(f"covariance identity needs centered input {name}")
    A = apply_L_power(X, alpha - 1.0)
    B = apply_L_power(Y, -alpha)
    rhs = gradient(A).pair_int_half(gradient(B)).expectation()
    lhs = (X * Y).expectation()
    return abs(lhs - rhs)


# ---------------------------------------------------------------- contraction


@dataclass
class Contraction:
    """The unsymmetrized pairing of two kernels over shared slots.

    k slots are shared between the two kernels; l of them are paired away
    against their laws (weight 1 each), the remaining k - l stay as common
    free variables. Entries are keyed by (shared blocks, left-only blocks,
    right-only blocks), each sorted; array axes follow that order. Left-only
    and right-only blocks may coincide (they are distinct variables), shared
    blocks never collide with either side's own blocks.
    """

    space: OutcomeSpace
    f_order: int
    g_order: int
    shared: int
    paired: int
    entries: dict[tuple[tuple[int, ...], tuple[int, ...], tuple[int, ...]], np.ndarray]

    def scalar(self) -> float:
        """The value of a complete pairing (no free slots left)."""
        if self.free_slots() != 0:
            raise DomainError("contraction still has free slots")
        val = self.entries.get(((), (), ()))
        return float(val) if val is not None else 0.0

    def free_slots(self) -> int:
        return (self.f_order - self.paired) + (self.g_order - self.shared)

    def l2_norm_sq(self) -> float:
        """Squared norm with every free slot integrated at full weight 2."""
        s = self.shared - self.paired
        fo = self.f_order - self.shared
        go = self.g_order - self.shared
        mult = math.factorial(s) * math.factorial(fo) * math.factorial(go)
        weight = mult * 2.0 ** (s + fo + go)
        total = 0.0
        for (S, F, G), val in self.entries.items():
            sq = val * val
            for block in tuple(S) + tuple(F) + tuple(G):
                sq = np.tensordot(sq, self.space.probs[block], axes=([0], [0]))
            total += float(sq)
        return weight * total


def contract(f: ChaosKernel, g: ChaosKernel, k: int, l: int) -> Contraction:
    """Pair k slots of f with k slots of g and integrate out l of them.

    Paired-away slots are summed against their coordinate laws over all block
    choices distinct from every retained block of either side; the k - l
    still-shared slots become common free variables. Entries for impossible
    block layouts are simply absent (zero).
    """
    if f.space != g.space:
        raise DomainError("contraction needs kernels on one space")
    n, m = f.order, g.order
    if not (0 <= l <= k <= min(n, m)):
        raise InputError(f"need 0 <= l <= k <= min(orders); got k={k}, l={l}")
    space = f.space
    blocks = range(space.n)
    s = k - l
    fo = n - k
    go = m - k
    letters = string.ascii_letters
    entries: dict[tuple, np.ndarray] = {}
    for S in itertools.combinations(blocks, s):
        rest = [b for b in blocks if b not in S]
        for F in itertools.combinations(rest, fo):
            for G in itertools.combinations(rest, go):
                used = set(S) | set(F) | set(G)
                acc: np.ndarray | None = None
                for C in itertools.combinations([b for b in blocks if b not in used], l):
                    f_sub = tuple(sorted(set(S) | set(F) | set(C)))
                    g_sub = tuple(sorted(set(S) | set(G) | set(C)))
                    tf = f.tables.get(f_sub)
                    tg = g.tables.get(g_sub)
                    if tf is None or tg is None:
                        continue
                    # Letters: shared/paired blocks carry one letter on both
                    # sides; side-only blocks carry their own even when the
                    # same block shows up on both sides.
                    lt: dict[tuple[str, int], str] = {}
                    pool = iter(letters)
                    for b in S:
                        lt[("s", b)] = next(pool)
                    for b in C:
                        lt[("c", b)] = next(pool)
                    for b in F:
                        lt[("f", b)] = next(pool)
                    for b in G:
                        lt[("g", b)] = next(pool)

                    def _sub_letters(sub: tuple[int, ...], side: str) -> str:
                        out = []
                        for b in sub:
                            if ("s", b) in lt:
                                out.append(lt[("s", b)])
                            elif ("c", b) in lt:
                                out.append(lt[("c", b)])
                            else:
                                out.append(lt[(side, b)])
                        return "".join(out)

                    spec = [_sub_letters(f_sub, "f"), _sub_letters(g_sub, "g")]
                    operands: list[np.ndarray] = [tf, tg]
                    for b in C:
                        spec.append(lt[("c", b)])
                        operands.append(space.probs[b])
                    out_letters = (
                        "".join(lt[("s", b)] for b in S)
                        + "".join(lt[("f", b)] for b in F)
                        + "".join(lt[("g", b)] for b in G)
                    )
                    term = np.einsum(",".join(spec) + "->" + out_letters, *operands)
                    acc = term if acc is None else acc + term
                if acc is not None:
                    entries[(S, F, G)] = math.factorial(l) * acc
    return Contraction(space, n, m, k, l, entries)


# -------------------------------------------------------------- multiplication


def multiply(f: ChaosKernel, g: ChaosKernel) -> ChaosDecomposition:
    """Chaos decomposition of the pointwise product I_n(f) * I_m(g).

    Combinatorial route: for every shared count k and paired count i, the
    symmetrized contraction feeds an order n + m - k - i kernel with weight
    k! C(m,k) C(n,k) C(k,i). Output kernels are re-centered on admission
    (which never changes their multiple sums), so the result is again a bona
    fide chaos decomposition.
    """
    if f.space != g.space:
        raise DomainError("product needs kernels on one space")
    space = f.space
    n, m = f.order, g.order
    mean_acc = 0.0
    acc_tables: dict[int, dict[tuple[int, ...], np.ndarray]] = {}
    for kk in range(0, min(n, m) + 1):
        base = math.factorial(kk) * math.comb(m, kk) * math.comb(n, kk)
        for i in range(0, kk + 1):
            coeff = base * math.comb(kk, i)
            r = n + m - kk - i
            con = contract(f, g, kk, i)
            if r == 0:
                mean_acc += coeff * con.scalar()
                continue
            if r > space.n:
                continue  # no room for r distinct blocks: the diagonal cut removes the grade
            s = kk - i
            fo = n - kk
            go = m - kk
            factor = (
                math.factorial(s) * math.factorial(fo) * math.factorial(go) / math.factorial(r)
            )
            tables = acc_tables.setdefault(r, {})
            for K in itertools.combinations(range(space.n), r):
                acc: np.ndarray | None = None
                for S in itertools.combinations(K, s):
                    restK = [b for b in K if b not in S]
                    for F in itertools.combinations(restK, fo):
                        G = tuple(b for b in restK if b not in F)
                        val = con.entries.get((S, F, G))
                        if val is None:
                            continue
                        axis_blocks = list(S) + list(F) + list(G)
                        perm = [axis_blocks.index(b) for b in K]
                        piece = np.transpose(val, perm)
                        acc = piece if acc is None else acc + piece
                if acc is not None:
                    prev = tables.get(K)
                    add = coeff * factor * acc
                    tables[K] = add if prev is None else prev + add
    kernels: dict[int, ChaosKernel] = {}
    for r, tables in acc_tables.items():
        live = {K: t for K, t in tables.items() if float(np.max(np.abs(t))) > _DROP_TOL}
        if live:
            kern = ChaosKernel(space, r, live)
            if kern.max_abs() > _DROP_TOL:
                kernels[r] = kern
    return ChaosDecomposition(space, mean_acc, kernels)


# ----------------------------------------------------------- contraction rate


def contraction_rate(dec: ChaosDecomposition) -> float:
    """Square root of the full contraction-norm bracket of a decomposition.

    sum over 0 <= l < i <= d of |f_i paired fully with itself at depth l|^2
    plus, for 1 <= l < i <= d, the mixed and lower-order pairings
    |f_i *_l^l f_i|^2 and |f_l *_l^l f_i|^2, all with full-weight free slots.
    """
    if abs(dec.mean) > 1e-10:
        raise DomainError("contraction rate needs a centered decomposition")
    total = 0.0
    orders = dec.orders()
    d = orders[-1] if orders else 0
    for i in range(1, d + 1):
        fi = dec.kernels.get(i)
        if fi is None or fi.max_abs() == 0.0:
            continue
        for l in range(0, i):
            total += contract(fi, fi, i, l).l2_norm_sq()
        for l in range(1, i):
            total += contract(fi, fi, l, l).l2_norm_sq()
            fl = dec.kernels.get(l)
            if fl is not None and fl.max_abs() > 0.0:
                total += contract(fl, fi, l, l).l2_norm_sq()
    return float(np.sqrt(total))


# ------------------------------------------------------------------ utilities


def random_kernel(
    space: OutcomeSpace,
    order: int,
    rng: np.random.Generator,
    scale: float = 1.0,
    subset_keep: float = 1.0,
) -> ChaosKernel:
    """A random canonical kernel: normal tables, slotwise re-centered."""
    tables: dict[tuple[int, ...], np.ndarray] = {}
    for subset in itertools.combinations(range(space.n), order):
        if subset_keep < 1.0 and rng.random() > subset_keep:
            continue
        tables[subset] = scale * rng.standard_normal(_subset_shape(space, subset))
    if not tables:
        # Keep at least one subset so the kernel is not trivially zero.
        subset = tuple(range(order))
        tables[subset] = scale * rng.standard_normal(_subset_shape(space, subset))
    kern = ChaosKernel(space, order, tables, raw=True)
    return kern.canonical()
