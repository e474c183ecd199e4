"""Weighted subgraph counts in Bernoulli random graphs.

Every edge of the complete graph on n vertices is kept with probability p,
independently, and each kept edge carries an iid weight. For a template graph
G the combined weight W is the sum over copies of G whose edges are all kept,
each copy contributing the product of its edge weights (a sum-of-weights
convention is available as a switch; reports should say which was used).

The normal-approximation rate for the standardized W is

    (sqrt(E[(X-EX)^4]) + (1-p)(EX)^2) / (Var[X] + (1-p)(EX)^2)
        * ((1-p) * min_scale)^{-1/2},

where min_scale minimizes n^{v_H} p^{e_H} over subgraphs H of G with at least
one edge. The omitted constant depends only on the template's edge count.

Simulation uses closed matrix formulas for the four common templates (single
edge, two-edge path, triangle, four-cycle) and falls back to explicit copy
enumeration for any template on up to five vertices.
"""

from __future__ import annotations

import itertools
import json
import math
from dataclasses import dataclass

import numpy as np

from .dist import Distribution
from .errors import DegenerateError, DomainError, InputError

_GENERIC_COPY_CAP = 200_000


@dataclass(frozen=True)
class GraphSpec:
    """Simple template graph: vertex count plus sorted edge tuples.

    Isolated vertices are rejected because the rate below is stated for
    templates without them.
    """

    n_vertices: int
    edges: tuple[tuple[int, int], ...]

    def __post_init__(self) -> None:
        if self.n_vertices < 2:
            raise InputError("a template graph needs at least two vertices")
        seen = set()
        covered = set()
        for e in self.edges:
            if len(e) != 2:
                raise InputError(f"edge {e} must have two endpoints")
            u, v = e
            if u == v:
                raise InputError(f"self-loop at vertex {u}")
            if not (0 <= u < self.n_vertices and 0 <= v < self.n_vertices):
                raise InputError(f"edge {e} out of range for {self.n_vertices} vertices")
            if u > v:
                raise InputError(f"edge {e} must be sorted (u < v)")
            if e in seen:
                raise InputError(f"duplicate edge {e}")
            seen.add(e)
            covered.update(e)
        if not self.edges:
            raise InputError("a template graph needs at least one edge")
        if covered != set(range(self.n_vertices)):
            raise InputError("template has isolated vertices")
        if self.n_vertices > 5:
            raise InputError("templates beyond five vertices are not supported")

    @staticmethod
    def edge() -> "GraphSpec":
        return GraphSpec(2, ((0, 1),))

    @staticmethod
    def two_path() -> "GraphSpec":
        return GraphSpec(3, ((0, 1), (1, 2)))

    @staticmethod
    def triangle() -> "GraphSpec":
        return GraphSpec(3, ((0, 1), (0, 2), (1, 2)))

    @staticmethod
    def four_cycle() -> "GraphSpec":
        return GraphSpec(4, ((0, 1), (0, 3), (1, 2), (2, 3)))

    @staticmethod
    def cycle(k: int) -> "GraphSpec":
        if k < 3:
            raise InputError("cycles need at least three vertices")
        edges = sorted(tuple(sorted((i, (i + 1) % k))) for i in range(k))
        return GraphSpec(k, tuple(edges))

    @staticmethod
    def complete(k: int) -> "GraphSpec":
        return GraphSpec(k, tuple(itertools.combinations(range(k), 2)))

    @staticmethod
    def from_json(obj: object) -> "GraphSpec":
        if not isinstance(obj, dict):
            raise InputError("graph JSON must be an object")
        try:
            k = int(obj["vertices"])
            edges = tuple(tuple(sorted((int(u), int(v)))) for u, v in obj["edges"])
        except (KeyError, TypeError, ValueError) as exc:
            raise InputError("graph JSON needs vertices and an edge list") from exc
        return GraphSpec(k, tuple(sorted(edges)))

    @staticmethod
    def load(path: str) -> "GraphSpec":
        with open(path, "r", encoding="utf-8") as fh:
            return GraphSpec.from_json(json.load(fh))

    def to_json(self) -> dict:
        return {"vertices": self.n_vertices, "edges": [list(e) for e in self.edges]}

    @property
    def n_edges(self) -> int:
        return len(self.edges)

    def degree_sequence(self) -> tuple[int, ...]:
        deg = [0] * self.n_vertices
        for u, v in self.edges:
            deg[u] += 1
            deg[v] += 1
        return tuple(sorted(deg))

    @property
    def kind(self) -> str:
        """Which closed-form counter applies; degree signatures are exact here."""
        sig = (self.n_vertices, self.n_edges, self.degree_sequence())
        if sig == (2, 1, (1, 1)):
            return "edge"
        if sig == (3, 2, (1, 1, 2)):
            return "two_path"
        if sig == (3, 3, (2, 2, 2)):
            return "triangle"
        if sig == (4, 4, (2, 2, 2, 2)):
            return "four_cycle"
        return "generic"

    def copies_in(self, n: int) -> np.ndarray:
        """Edge lists of all copies of the template inside the complete graph.

        Returns an integer array of shape (n_copies, n_edges, 2); copies are
        deduplicated as edge sets, so automorphisms are already quotiented out.
        """
        if n < self.n_vertices:
            return np.zeros((0, self.n_edges, 2), dtype=np.int64)
        seen: set[frozenset] = set()
        rows: list[list[tuple[int, int]]] = []
        for verts in itertools.permutations(range(n), self.n_vertices):
            mapped = frozenset(
                (min(verts[u], verts[v]), max(verts[u], verts[v])) for u, v in self.edges
            )
            if mapped in seen:
                continue
            seen.add(mapped)
            rows.append(sorted(mapped))
            if len(rows) > _GENERIC_COPY_CAP:
                raise DomainError(
                    f"template has more than {_GENERIC_COPY_CAP} copies at n={n}; "
                    "use a smaller n or a closed-form template"
                )
        return np.asarray(rows, dtype=np.int64).reshape(len(rows), self.n_edges, 2)


def min_subgraph_scale(G: GraphSpec, n: int, p: float) -> float:
    """min over subgraphs H with an edge of n^{v_H} p^{e_H}.

    Subgraphs without isolated vertices suffice for the minimum, so H ranges
    over nonempty edge subsets with v_H the number of covered vertices.
    """
    if not 0.0 < p < 1.0:
        raise DomainError(f"retention probability must lie in (0, 1), got {p}")
    if n < G.n_vertices:
        raise DomainError(f"n={n} cannot host a {G.n_vertices}-vertex template")
    best = math.inf
    for r in range(1, G.n_edges + 1):
        for subset in itertools.combinations(G.edges, r):
            covered = set()
            for e in subset:
                covered.update(e)
            best = min(best, float(n) ** len(covered) * p**r)
    return best


def rg_rate(G: GraphSpec, n: int, p: float, law: Distribution) -> float:
    """Constant-free normal-approximation rate for the standardized weight."""
    mean = law.mean()
    mom = law.moments()
    var = mom.mu[2] - mean**2
    central4 = float(np.sum((law.values_array() - mean) ** 4 * law.probs_array()))
    numer = math.sqrt(central4) + (1.0 - p) * mean**2
    denom = var + (1.0 - p) * mean**2
    if denom <= 0.0:
        raise DegenerateError("constant weights need p < 1 for a nondegenerate count")
    return numer / denom / math.sqrt((1.0 - p) * min_subgraph_scale(G, n, p))


def copy_count(G: GraphSpec, n: int) -> int:
    """Number of copies of the template in the complete graph on n vertices.

    Uses closed forms for the named templates so large n stays cheap; the
    generic path enumerates and is capped accordingly.
    """
    if n < G.n_vertices:
        return 0
    kind = G.kind
    if kind == "edge":
        return math.comb(n, 2)
    if kind == "two_path":
        return 3 * math.comb(n, 3)
    if kind == "triangle":
        return math.comb(n, 3)
    if kind == "four_cycle":
        return 3 * math.comb(n, 4)
    return int(G.copies_in(n).shape[0])


def exact_weight_moments(
    G: GraphSpec, n: int, p: float, law: Distribution, combine: str = "product"
) -> tuple[float, float]:
    """Exact (mean, variance) of the combined weight, product convention.

    Centering kills every cross term between distinct copies (any edge in the
    symmetric difference contributes a factor E[X] = 0), leaving
    mean 0 and variance copy_count * (p * mu2)^{edges}. The sum convention
    couples overlapping copies through the kept indicator and has no such
    closed form, so it is refused here.
    """
    if combine != "product":
        raise InputError("exact weight moments are only available for the product convention")
    if not 0.0 < p < 1.0:
        raise DomainError(f"retention probability must lie in (0, 1), got {p}")
    if n < G.n_vertices:
        raise DomainError(f"n={n} cannot host a {G.n_vertices}-vertex template")
    if not law.is_centered():
        raise DomainError("exact weight moments need a centered weight law")
    mu2 = law.moments().mu[2]
    var = copy_count(G, n) * (p * mu2) ** G.n_edges
    return 0.0, var


class _EdgeDraw:
    """One batch of weighted retained edges, in flat and matrix form.

    Y holds weight times retention indicator; B is the plain 0/1 adjacency.
    Keeping the retention mask separate matters for laws with an atom at
    zero, where a kept weight-zero edge still completes copies.
    """

    def __init__(self, n: int, p: float, law: Distribution, rng: np.random.Generator, b: int):
        self.iu, self.ju = np.triu_indices(n, k=1)
        m = self.iu.size
        self.kept = rng.random((b, m)) < p
        self.weights = law.sample(rng, b * m).reshape(b, m)
        self.flat = np.where(self.kept, self.weights, 0.0)
        self.n = n
        self._lookup = np.zeros((n, n), dtype=np.int64)
        self._lookup[self.iu, self.ju] = np.arange(m)
        self._lookup[self.ju, self.iu] = np.arange(m)

    def weighted_matrix(self) -> np.ndarray:
        Y = np.zeros((self.flat.shape[0], self.n, self.n))
        Y[:, self.iu, self.ju] = self.flat
        Y[:, self.ju, self.iu] = self.flat
        return Y

    def kept_matrix(self) -> np.ndarray:
        B = np.zeros((self.flat.shape[0], self.n, self.n))
        k = self.kept.astype(float)
        B[:, self.iu, self.ju] = k
        B[:, self.ju, self.iu] = k
        return B

    def edge_index(self, eu: np.ndarray, ev: np.ndarray) -> np.ndarray:
        return self._lookup[eu, ev]


def _product_counts(kind: str, draw: _EdgeDraw) -> np.ndarray:
    if kind == "edge":
        return draw.flat.sum(axis=1)
    Y = draw.weighted_matrix()
    if kind == "two_path":
        r = Y.sum(axis=2)
        q = (Y * Y).sum(axis=2)
        return 0.5 * (r * r - q).sum(axis=1)
    if kind == "triangle":
        return np.einsum("bij,bji->b", Y @ Y, Y) / 6.0
    if kind == "four_cycle":
        Y2 = Y @ Y
        tr4 = np.einsum("bij,bij->b", Y2, Y2)
        s = np.einsum("bii->bi", Y2)
        q4 = (Y**4).sum(axis=(1, 2))
        return (tr4 - 2.0 * (s * s).sum(axis=1) + q4) / 8.0
    raise InputError(f"no closed-form counter for kind {kind!r}")


def _sum_counts(kind: str, draw: _EdgeDraw) -> np.ndarray:
    """Sum-of-weights convention: each complete copy contributes its edge total.

    Rewritten as sum over kept edges of (weight) times (number of kept copies
    through that edge), which the four templates admit in closed form.
    """
    if kind == "edge":
        return draw.flat.sum(axis=1)
    Y = draw.weighted_matrix()
    B = draw.kept_matrix()
    if kind == "two_path":
        r = B.sum(axis=2)
        through = r[:, :, None] + r[:, None, :] - 2.0 * B
        return 0.5 * np.einsum("bij,bij->b", Y, through)
    if kind == "triangle":
        return 0.5 * np.einsum("bij,bij->b", Y, B @ B)
    if kind == "four_cycle":
        B2 = B @ B
        B3 = B2 @ B
        d2 = np.einsum("bii->bi", B2)
        paths = B3 - B * (d2[:, :, None] + d2[:, None, :]) + B
        return 0.5 * np.einsum("bij,bij->b", Y, paths)
    raise InputError(f"no closed-form counter for kind {kind!r}")


def simulate_weight(
    G: GraphSpec,
    n: int,
    p: float,
    law: Distribution,
    rng: np.random.Generator,
    size: int | None = None,
    combine: str = "product",
    batch: int = 2_000,
) -> float | np.ndarray:
    """Draw realizations of the combined template weight.

    With size None a single float comes back. combine is "product" (default,
    the convention every report should flag) or "sum".
    """
    if combine not in ("product", "sum"):
        raise InputError(f"combine must be 'product' or 'sum', got {combine!r}")
    if not 0.0 < p < 1.0:
        raise DomainError(f"retention probability must lie in (0, 1), got {p}")
    if n < G.n_vertices:
        raise DomainError(f"n={n} cannot host a {G.n_vertices}-vertex template")
    total = 1 if size is None else int(size)
    if total < 1:
        raise InputError("size must be positive")
    kind = G.kind
    copies = G.copies_in(n) if kind == "generic" else None
    out = np.empty(total)
    done = 0
    while done < total:
        b = min(batch, total - done)
        draw = _EdgeDraw(n, p, law, rng, b)
        if kind == "generic":
            idx = draw.edge_index(copies[:, :, 0], copies[:, :, 1])
            kept_all = draw.kept[:, idx].all(axis=2)
            wvals = draw.weights[:, idx]
            if combine == "product":
                out[done : done + b] = (wvals.prod(axis=2) * kept_all).sum(axis=1)
            else:
                out[done : done + b] = (wvals.sum(axis=2) * kept_all).sum(axis=1)
        elif combine == "product":
            out[done : done + b] = _product_counts(kind, draw)
        else:
            out[done : done + b] = _sum_counts(kind, draw)
        done += b
    return float(out[0]) if size is None else out
