"""Graph representation, degeneracy machinery, and guest-family preprocessing.

A Graph is an immutable simple undirected graph on vertices 0..n-1. For
small orders (n <= DENSE_LIMIT) each vertex carries a dense bit-row for
constant-time membership and fast common-neighborhood intersections; above
that, sorted neighbor tuples with binary search are used. Behavior is
identical either way.

Guest preprocessing turns an arbitrary family of degenerate graphs into
prepared guests on exactly n vertices: small graphs are merged into
disjoint unions, padded with isolated vertices, given a degeneracy order,
and finished with an independent tail of equal-degree vertices moved to
the end of the order.
"""

from __future__ import annotations

import heapq
from bisect import bisect_left
from dataclasses import dataclass
from typing import Iterable, Sequence

from .bitset import bits, full_mask, mask_of

# Above this order, per-vertex bit-rows (n bits each, n**2 total) are not
# materialized and membership falls back to binary search.
DENSE_LIMIT = 65536


class Graph:
    """Immutable simple undirected graph with contiguous 0-based vertex ids."""

    __slots__ = ("n", "neighbors", "bitrows", "_m", "_edges")

    def __init__(self, n: int, edges: Iterable[tuple[int, int]]):
        if n < 0:
            raise ValueError("vertex count must be nonnegative")
        adj: list[set[int]] = [set() for _ in range(n)]
        for u, v in edges:
            if u == v:
                raise ValueError(f"self-loop at vertex {u}")
            if not (0 <= u < n and 0 <= v < n):
                raise ValueError(f"edge ({u},{v}) out of range for n={n}")
            adj[u].add(v)
            adj[v].add(u)
        self.n = n
        self.neighbors: tuple[tuple[int, ...], ...] = tuple(
            tuple(sorted(s)) for s in adj
        )
        if n <= DENSE_LIMIT:
            self.bitrows: tuple[int, ...] | None = tuple(
                mask_of(nb) for nb in self.neighbors
            )
        else:
            self.bitrows = None
        self._m = sum(len(nb) for nb in self.neighbors) // 2
        self._edges: frozenset[tuple[int, int]] | None = None

    @classmethod
    def from_bitrows(cls, n: int, rows: Sequence[int]) -> "Graph":
        g = object.__new__(cls)
        g.n = n
        g.neighbors = tuple(tuple(bits(rows[v])) for v in range(n))
        g.bitrows = tuple(rows) if n <= DENSE_LIMIT else None
        g._m = sum(len(nb) for nb in g.neighbors) // 2
        g._edges = None
        return g

    @property
    def m(self) -> int:
        return self._m

    @property
    def edges(self) -> frozenset[tuple[int, int]]:
        """Edge set as (u, v) pairs with u < v."""
        if self._edges is None:
            self._edges = frozenset(
                (u, v) for u in range(self.n) for v in self.neighbors[u] if u < v
            )
        return self._edges

    def degree(self, v: int) -> int:
        return len(self.neighbors[v])

    def degrees(self) -> list[int]:
        return [len(nb) for nb in self.neighbors]

    def has_edge(self, u: int, v: int) -> bool:
        if self.bitrows is not None:
            return bool((self.bitrows[u] >> v) & 1)
        nb = self.neighbors[u]
        i = bisect_left(nb, v)
        return i < len(nb) and nb[i] == v

    def density(self) -> float:
        if self.n < 2:
            return 0.0
        return self._m / (self.n * (self.n - 1) / 2)

    def row(self, v: int) -> int:
        """Neighborhood of v as a bitmask (built on demand when sparse)."""
        if self.bitrows is not None:
            return self.bitrows[v]
        return mask_of(self.neighbors[v])

    def __eq__(self, other: object) -> bool:
        return (
            isinstance(other, Graph)
            and self.n == other.n
            and self.neighbors == other.neighbors
        )

    def __hash__(self) -> int:
        return hash((self.n, self.neighbors))

    def __repr__(self) -> str:
        return f"Graph(n={self.n}, m={self._m})"


@dataclass(frozen=True)
class OrderedGraph:
    """A graph with a fixed vertex ordering and per-position left-neighborhoods.

    order[t] is the vertex at position t; leftnbrs[t] holds the *positions*
    (all < t) of the neighbors of order[t] that precede it. degeneracy is
    the maximum left-degree over positions.
    """

    graph: Graph
    order: tuple[int, ...]
    leftnbrs: tuple[tuple[int, ...], ...]
    degeneracy: int

    @classmethod
    def from_order(cls, graph: Graph, order: Sequence[int]) -> "OrderedGraph":
        if sorted(order) != list(range(graph.n)):
            raise ValueError("order must be a permutation of the vertex set")
        pos = {v: t for t, v in enumerate(order)}
        leftnbrs = tuple(
            tuple(sorted(pos[u] for u in graph.neighbors[v] if pos[u] < t))
            for t, v in enumerate(order)
        )
        deg = max((len(lseg) for lseg in leftnbrs), default=0)
        return cls(graph, tuple(order), leftnbrs, deg)

    @property
    def n(self) -> int:
        return self.graph.n

    def position_edges(self) -> Iterable[tuple[int, int]]:
        """Edges in position space, as (earlier, later) pairs."""
        for t, lseg in enumerate(self.leftnbrs):
            for u in lseg:
                yield (u, t)


@dataclass(frozen=True)
class PreparedGuest:
    """A guest on exactly n vertices, ready for the two-phase embedding.

    The final tail_len positions form an independent set whose vertices all
    have full degree tail_degree; completion_degrees[x] counts, for each
    non-tail position x, its neighbors inside the tail.
    """

    ordered: OrderedGraph
    tail_len: int
    tail_degree: int
    completion_degrees: tuple[int, ...]

    @property
    def n(self) -> int:
        return self.ordered.n

    @property
    def boundary(self) -> int:
        """First tail position; positions < boundary are embedded greedily."""
        return self.ordered.n - self.tail_len

    def validate(self, max_left_degree: int | None = None) -> None:
        og = self.ordered
        n = og.n
        b = self.boundary
        for t in range(b, n):
            if any(u >= b for u in og.leftnbrs[t]):
                raise ValueError(f"tail position {t} has a neighbor inside the tail")
            if og.graph.degree(og.order[t]) != self.tail_degree:
                raise ValueError(
                    f"tail position {t} has degree "
                    f"{og.graph.degree(og.order[t])} != {self.tail_degree}"
                )
        got = sum(self.completion_degrees)
        want = self.tail_len * self.tail_degree
        if got != want:
            raise ValueError(f"handshake violated: sum deg*={got} != {want}")
        if max_left_degree is not None and og.degeneracy > max_left_degree:
            raise ValueError(
                f"left-degree {og.degeneracy} exceeds bound {max_left_degree}"
            )


def degeneracy_order(g: Graph) -> OrderedGraph:
    """Exact degeneracy ordering by iterative minimum-degree peeling, reversed.

    Ties in minimum degree break toward the smallest vertex id, so the
    result is deterministic. The reported degeneracy equals the true
    degeneracy of g.
    """
    n = g.n
    deg = g.degrees()
    removed = [False] * n
    heap: list[tuple[int, int]] = [(deg[v], v) for v in range(n)]
    heapq.heapify(heap)
    peel: list[int] = []
    while heap:
        d, v = heapq.heappop(heap)
        if removed[v] or d != deg[v]:
            continue
        removed[v] = True
        peel.append(v)
        for u in g.neighbors[v]:
            if not removed[u]:
                deg[u] -= 1
                heapq.heappush(heap, (deg[u], u))
    peel.reverse()
    return OrderedGraph.from_order(g, peel)


def sum_sq_degrees(g: Graph) -> int:
    """Sum of squared degrees (reported against the 2*D*n*max_degree bound)."""
    return sum(d * d for d in g.degrees())


def equal_degree_independent_set(g: Graph, D: int) -> tuple[int, list[int]]:
    """Largest-bucket equal-degree independent set of a D-degenerate graph.

    Picks the degree d (0 <= d <= 2D) with the most vertices, then greedily
    extracts a maximal independent subset scanning ids in increasing order.
    The result always has at least n / (2D+1)^3 vertices.
    """
    dgn = degeneracy_order(g).degeneracy
    if dgn > D:
        raise ValueError(f"graph is not {D}-degenerate (degeneracy {dgn})")
    degs = g.degrees()
    counts = [0] * (2 * D + 1)
    for d in degs:
        if d <= 2 * D:
            counts[d] += 1
    d_star = max(range(2 * D + 1), key=lambda d: (counts[d], -d))
    bucket = [v for v in range(g.n) if degs[v] == d_star]
    indep: list[int] = []
    chosen: set[int] = set()
    for v in bucket:
        if not any(u in chosen for u in g.neighbors[v]):
            indep.append(v)
            chosen.add(v)
    lower = g.n / (2 * D + 1) ** 3
    if len(indep) < lower:
        raise RuntimeError(
            f"independent set of size {len(indep)} below guaranteed {lower:.2f}"
        )
    return d_star, indep


def disjoint_union(a: Graph, b: Graph) -> Graph:
    """Disjoint union; b's vertices are shifted up by a.n."""
    edges = list(a.edges) + [(u + a.n, v + a.n) for u, v in b.edges]
    return Graph(a.n + b.n, edges)


def strip_isolated(g: Graph) -> Graph:
    """Drop isolated vertices, compacting ids and preserving relative order."""
    keep = [v for v in range(g.n) if g.degree(v) > 0]
    if len(keep) == g.n:
        return g
    relabel = {v: i for i, v in enumerate(keep)}
    return Graph(len(keep), [(relabel[u], relabel[v]) for u, v in g.edges])


def pad_to(g: Graph, n: int) -> Graph:
    if g.n > n:
        raise ValueError(f"graph has {g.n} > {n} vertices")
    if g.n == n:
        return g
    return Graph(n, g.edges)


def prepare_guest_family(
    guests: list[Graph],
    n: int,
    D: int,
    delta: float | None = None,
    auto_shrink: bool = False,
) -> list[PreparedGuest]:
    """Merge, pad, and reorder a guest family for packing into an n-vertex host.

    Small guests (at most n/2 vertices each, after stripping isolated
    vertices) are repeatedly merged into disjoint unions; the two currently
    smallest graphs merge first, so the outcome is deterministic. Each
    result is padded with isolated vertices to exactly n, given a
    degeneracy order (padding lands just before the tail), and the
    equal-degree independent set is moved to the end of the order.

    If delta is given the tail is trimmed to floor(delta*n) smallest ids;
    a too-small extracted set is an error unless auto_shrink is set, in
    which case the full set becomes the tail. Left-degrees of the prepared
    order never exceed 2*D.
    """
    for i, g in enumerate(guests):
        if g.n > n:
            raise ValueError(f"guest {i} has {g.n} > {n} vertices")
        dgn = degeneracy_order(g).degeneracy
        if dgn > D:
            raise ValueError(f"guest {i} is not {D}-degenerate (degeneracy {dgn})")

    pool = [strip_isolated(g) for g in guests]
    # Merge the two smallest while at least two have order <= n/2.
    while True:
        small = sorted(
            (i for i, g in enumerate(pool) if g.n <= n / 2),
            key=lambda i: (pool[i].n, i),
        )
        if len(small) < 2:
            break
        i, j = small[0], small[1]
        merged = disjoint_union(pool[i], pool[j])
        pool = [g for k, g in enumerate(pool) if k not in (i, j)] + [merged]

    want = None if delta is None else int(delta * n)
    prepared = []
    for g in pool:
        padded = pad_to(g, n)
        og = degeneracy_order(padded)
        d_star, indep = equal_degree_independent_set(padded, D)
        if want is not None:
            if len(indep) >= want:
                tail = indep[:want]
            elif auto_shrink:
                tail = indep
            else:
                raise ValueError(
                    f"extracted independent set has {len(indep)} vertices, "
                    f"need tail of {want}; enable auto_shrink or lower delta"
                )
        else:
            tail = indep
        tail_set = set(tail)
        new_order = [v for v in og.order if v not in tail_set] + sorted(tail)
        reordered = OrderedGraph.from_order(padded, new_order)
        boundary = n - len(tail)
        completion = tuple(
            sum(1 for u in padded.neighbors[reordered.order[x]] if u in tail_set)
            for x in range(boundary)
        )
        pg = PreparedGuest(reordered, len(tail), d_star, completion)
        pg.validate(max_left_degree=2 * D)
        prepared.append(pg)
    return prepared
