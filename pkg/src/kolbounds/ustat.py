"""Degenerate weighted U-statistics over iid coordinates.

The statistic is

    U = binom(n, d)^{-1} sum_{k1 < ... < kd} w(k1, ..., kd) g(X_k1, ..., X_kd)

with a symmetric weight tensor w vanishing whenever two indices coincide, and
a kernel g whose conditional mean in each slot is zero. Under those two
assumptions U sits in the top Hoeffding grade, its variance is a product of
a kernel norm and a weight norm, and its distance to normal is controlled by
weight contractions. Everything here is exact summation; nothing is sampled
except ustat_sample.
"""

from __future__ import annotations

import itertools
import json
import math

import numpy as np

from .dist import Distribution
from .errors import DegenerateError, DomainError, InputError
from .space import OutcomeSpace, RandomFunctional

_DEGEN_TOL = 1e-10


class WeightTensor:
    """Symmetric order-d array of real weights, zero on every diagonal.

    Stored dense as shape (n,) * d. Diagonal-free storage means unrestricted
    tensor contractions agree with the distinct-index sums they stand for.
    """

    def __init__(self, table: np.ndarray):
        T = np.asarray(table, dtype=float)
        if T.ndim < 1:
            raise InputError("weight tensor needs at least one axis")
        n = T.shape[0]
        if any(s != n for s in T.shape):
            raise InputError(f"weight tensor must be cubical, got shape {T.shape}")
        scale = max(1.0, float(np.max(np.abs(T))) if T.size else 0.0)
        for ax in range(T.ndim - 1):
            gap = float(np.max(np.abs(T - np.swapaxes(T, ax, ax + 1))))
            if gap > 1e-12 * scale:
                raise InputError(f"weight tensor asymmetry {gap:.3e} between axes {ax},{ax + 1}")
        for a in range(T.ndim - 1):
            for b in range(a + 1, T.ndim):
                diag = np.diagonal(T, axis1=a, axis2=b)
                if diag.size and float(np.max(np.abs(diag))) > 1e-12 * scale:
                    raise InputError("weight tensor must vanish when indices repeat")
        self.table = T
        self.n = n
        self.order = T.ndim

    @staticmethod
    def from_matrix(A: np.ndarray) -> "WeightTensor":
        M = np.asarray(A, dtype=float)
        if M.ndim != 2:
            raise InputError("from_matrix expects a 2d array")
        return WeightTensor(M)

    @staticmethod
    def from_json(obj: object) -> "WeightTensor":
        if not isinstance(obj, dict):
            raise InputError("weight JSON must be an object")
        try:
            n = int(obj["n"])
            order = int(obj["order"])
            entries = obj["entries"]
        except (KeyError, TypeError, ValueError) as exc:
            raise InputError("weight JSON needs integer n, order and an entries list") from exc
        if order < 1 or n < order:
            raise InputError(f"need 1 <= order <= n, got order={order}, n={n}")
        T = np.zeros((n,) * order)
        for ent in entries:
            if not isinstance(ent, dict) or "subset" not in ent or "value" not in ent:
                raise InputError("each weight entry needs a subset and a value")
            sub = [int(k) for k in ent["subset"]]
            if len(sub) != order or len(set(sub)) != order:
                raise InputError(f"weight subset {sub} must hold {order} distinct indices")
            if any(k < 0 or k >= n for k in sub):
                raise InputError(f"weight subset {sub} out of range for n={n}")
            val = float(ent["value"])
            for perm in itertools.permutations(sub):
                T[perm] = val
        return WeightTensor(T)

    @staticmethod
    def load(path: str) -> "WeightTensor":
        with open(path, "r", encoding="utf-8") as fh:
            return WeightTensor.from_json(json.load(fh))

    def to_json(self) -> dict:
        entries = []
        for sub in itertools.combinations(range(self.n), self.order):
            val = float(self.table[sub])
            if val != 0.0:
                entries.append({"subset": list(sub), "value": val})
        return {"n": self.n, "order": self.order, "entries": entries}

    def total_sq_sum(self) -> float:
        """sum of w^2 over all ordered index tuples (d! times the sorted sum)."""
        return float(np.sum(self.table**2))

    def sorted_sq_sum(self) -> float:
        return self.total_sq_sum() / math.factorial(self.order)

    def contraction_sq(self, l: int) -> float:
        """sum_{k, r} (sum_m w(k, m) w(r, m))^2 with |m| = l shared indices.

        All tuples run unrestricted; the zero diagonals make that equal to
        the distinct-tuple sum the rate calls for.
        """
        d = self.order
        if not 1 <= l <= d - 1:
            raise DomainError(f"contraction depth must lie in 1..{d - 1}, got {l}")
        axes = list(range(d - l, d))
        M = np.tensordot(self.table, self.table, axes=(axes, axes))
        return float(np.sum(M * M))

    def weight_factor(self) -> float:
        """sup_l sqrt(contraction_sq(l)) / total_sq_sum, the matrix part of the rate."""
        d = self.order
        if d < 2:
            raise DomainError("the weight factor needs order >= 2")
        denom = self.total_sq_sum()
        if denom <= 0.0:
            raise DegenerateError("all-zero weight tensor")
        return max(math.sqrt(self.contraction_sq(l)) for l in range(1, d)) / denom


class UKernel:
    """Kernel table over the law's atoms, conditionally centered in each slot."""

    def __init__(self, law: Distribution, table: np.ndarray, raw: bool = False):
        T = np.asarray(table, dtype=float)
        m = law.n_atoms
        if T.ndim < 1 or any(s != m for s in T.shape):
            raise InputError(
                f"kernel table shape {T.shape} does not match the {m}-atom law"
            )
        self.law = law
        self.table = T
        self.order = T.ndim
        self._probs = law.probs_array()
        if not raw:
            worst = self.slot_mean_max()
            scale = max(1.0, float(np.max(np.abs(T))))
            if worst > _DEGEN_TOL * scale:
                raise DomainError(
                    f"kernel is not conditionally centered (worst slot mean {worst:.3e}); "
                    "use canonical() first"
                )

    def slot_mean_max(self) -> float:
        worst = 0.0
        for ax in range(self.order):
            cond = np.tensordot(self.table, self._probs, axes=([ax], [0]))
            worst = max(worst, float(np.max(np.abs(cond))) if cond.size else abs(float(cond)))
        return worst

    def canonical(self) -> "UKernel":
        """Project onto the top grade by removing each slot's conditional mean."""
        T = self.table.copy()
        for ax in range(self.order):
            mean = np.tensordot(T, self._probs, axes=([ax], [0]))
            T -= np.expand_dims(mean, ax)
        return UKernel(self.law, T)

    def moment(self, k: int) -> float:
        P = self._probs
        acc = self.table**k
        for _ in range(self.order):
            acc = np.tensordot(acc, P, axes=([acc.ndim - 1], [0]))
        return float(acc)

    def l2_sq(self) -> float:
        return self.moment(2)

    def l4_norm_sq(self) -> float:
        """The squared L4 norm of g, i.e. sqrt of the plain fourth moment."""
        return math.sqrt(self.moment(4))

    @staticmethod
    def product(law: Distribution, order: int) -> "UKernel":
        """g(x_1, ..., x_d) = x_1 ... x_d; needs a centered law."""
        if not law.is_centered():
            raise DomainError("product kernels are degenerate only for centered laws")
        if order < 1:
            raise InputError("kernel order must be positive")
        v = law.values_array()
        T = v.copy()
        for _ in range(order - 1):
            T = np.multiply.outer(T, v)
        return UKernel(law, T)

    @staticmethod
    def from_json(obj: object) -> "UKernel":
        if not isinstance(obj, dict):
            raise InputError("kernel JSON must be an object")
        try:
            law = Distribution.from_json(obj["law"])
            order = int(obj["order"])
            arr = np.asarray(obj["array"], dtype=float)
        except (KeyError, TypeError, ValueError) as exc:
            raise InputError("kernel JSON needs law, order and a row-major array") from exc
        m = law.n_atoms
        if arr.size != m**order:
            raise InputError(f"kernel array has {arr.size} entries, expected {m}^{order}")
        return UKernel(law, arr.reshape((m,) * order))

    @staticmethod
    def load(path: str) -> "UKernel":
        with open(path, "r", encoding="utf-8") as fh:
            return UKernel.from_json(json.load(fh))


def _check_pair(w: WeightTensor, g: UKernel, law: Distribution | None) -> None:
    if w.order != g.order:
        raise InputError(f"weight order {w.order} != kernel order {g.order}")
    if law is not None and law != g.law:
        raise InputError("the supplied law disagrees with the kernel's law")


def ustat_variance(w: WeightTensor, g: UKernel, law: Distribution | None = None) -> float:
    """binom(n,d)^-2 ||g||_2^2 sum_{sorted tuples} w^2."""
    _check_pair(w, g, law)
    return math.comb(w.n, w.order) ** -2 * g.l2_sq() * w.sorted_sq_sum()


def ustat_rate(w: WeightTensor, g: UKernel, law: Distribution | None = None) -> float:
    """Rate for U/sigma: (||g||_L4^2 / ||g||_L2^2) times the weight factor.

    The order-dependent constant in front is deliberately not applied.
    """
    _check_pair(w, g, law)
    if w.order < 2:
        raise DomainError("the rate needs order >= 2; order 1 is a plain weighted sum")
    l2 = g.l2_sq()
    if l2 <= 0.0:
        raise DegenerateError("kernel with zero L2 norm")
    return g.l4_norm_sq() / l2 * w.weight_factor()


def ustat_functional(w: WeightTensor, g: UKernel) -> RandomFunctional:
    """Exact enumeration of U on the n-fold product space (small n only)."""
    _check_pair(w, g, None)
    n, d = w.n, w.order
    space = OutcomeSpace.iid(g.law, n)
    m = g.law.n_atoms
    total = np.zeros((m,) * n)
    for sub in itertools.combinations(range(n), d):
        wv = float(w.table[sub])
        if wv == 0.0:
            continue
        shape = tuple(m if k in sub else 1 for k in range(n))
        total += wv * g.table.reshape(shape)
    total /= math.comb(n, d)
    return space.functional(total)


def ustat_sample(
    w: WeightTensor,
    g: UKernel,
    rng: np.random.Generator,
    size: int,
    batch: int = 20_000,
) -> np.ndarray:
    """Monte Carlo draws of U (unnormalized), batched over samples."""
    _check_pair(w, g, None)
    n, d = w.n, w.order
    cum = np.cumsum(g.law.probs_array())
    cum[-1] = 1.0
    subsets = [
        (sub, float(w.table[sub]))
        for sub in itertools.combinations(range(n), d)
        if float(w.table[sub]) != 0.0
    ]
    scale = 1.0 / math.comb(n, d)
    out = np.empty(size)
    done = 0
    while done < size:
        b = min(batch, size - done)
        codes = np.searchsorted(cum, rng.random((b, n)), side="right")
        acc = np.zeros(b)
        for sub, wv in subsets:
            idx = tuple(codes[:, k] for k in sub)
            acc += wv * g.table[idx]
        out[done : done + b] = scale * acc
        done += b
    return out
