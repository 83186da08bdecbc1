"""Reproducible guest-family and host-graph generators.

Every generator is deterministic given its numpy Generator; declared
structural bounds (degeneracy, max degree, vertex counts) hold on every
sample by construction.

Spec strings for the CLI:

  hosts:   "complete:n=300"              complete graph K_n
           "gnp:n=300,p=0.55"            Erdos-Renyi sample
  guests:  "tree:n=100,count=5"          uniform random labeled trees
           "degen:D=2,maxdeg=30,n=80,count=4"
           "star:n=10,count=2"           K_{1,n-1}
           "path:n=10,count=2"           P_n
           "gyarfas:n=50"                trees T_1..T_n with v(T_i)=i
           "ringel:n=101"                n copies of one random tree
                                         on (n+1)/2 vertices (n odd)
"""

from __future__ import annotations

import heapq
from dataclasses import dataclass, field

import numpy as np

from .graphs import Graph


def random_tree(n: int, rng: np.random.Generator) -> Graph:
    """Uniform random labeled tree on n vertices (Prufer decoding)."""
    if n < 1:
        raise ValueError("n must be at least 1")
    if n == 1:
        return Graph(1, [])
    if n == 2:
        return Graph(2, [(0, 1)])
    seq = rng.integers(0, n, size=n - 2)
    return tree_from_prufer(n, [int(x) for x in seq])


def tree_from_prufer(n: int, seq: list[int]) -> Graph:
    """Decode a Prufer sequence, attaching the smallest leaf at each step."""
    if len(seq) != n - 2:
        raise ValueError(f"sequence length {len(seq)} != n-2 = {n - 2}")
    degree = [1] * n
    for x in seq:
        degree[x] += 1
    leaves = [v for v in range(n) if degree[v] == 1]
    heapq.heapify(leaves)
    edges = []
    for x in seq:
        leaf = heapq.heappop(leaves)
        edges.append((leaf, x))
        degree[x] -= 1
        if degree[x] == 1:
            heapq.heappush(leaves, x)
    u = heapq.heappop(leaves)
    v = heapq.heappop(leaves)
    edges.append((u, v))
    return Graph(n, edges)


def random_degenerate(
    n: int, D: int, max_degree: int, rng: np.random.Generator
) -> Graph:
    """Random D-degenerate graph with max degree capped at max_degree.

    Vertices arrive in id order; each picks up to D earlier neighbors
    uniformly among those with residual degree budget. Skipping saturated
    candidates biases the distribution; this is a generator property, not
    a uniform-model claim.
    """
    if max_degree < D:
        raise ValueError("max_degree must be at least D")
    deg = [0] * n
    edges = []
    for t in range(1, n):
        eligible = [u for u in range(t) if deg[u] < max_degree]
        k = min(D, len(eligible), max_degree - deg[t])
        if k <= 0:
            continue
        picks = rng.choice(len(eligible), size=k, replace=False)
        for i in picks:
            u = eligible[int(i)]
            edges.append((u, t))
            deg[u] += 1
            deg[t] += 1
    return Graph(n, edges)


def star(n: int) -> Graph:
    """K_{1,n-1} with center 0."""
    return Graph(n, [(0, v) for v in range(1, n)])


def path(n: int) -> Graph:
    return Graph(n, [(v, v + 1) for v in range(n - 1)])


def gyarfas_family(n: int, rng: np.random.Generator) -> list[Graph]:
    """Random trees T_1..T_n with v(T_i) = i; total edges exactly n(n-1)/2."""
    if n < 2:
        raise ValueError("n must be at least 2")
    return [random_tree(i, rng) for i in range(1, n + 1)]


def gnp(n: int, p: float, rng: np.random.Generator) -> Graph:
    """Erdos-Renyi sample: each pair an edge independently with probability p."""
    if not 0.0 <= p <= 1.0:
        raise ValueError("p must be in [0, 1]")
    iu, iv = np.triu_indices(n, k=1)
    keep = rng.random(iu.shape[0]) < p
    edges = list(zip(iu[keep].tolist(), iv[keep].tolist()))
    return Graph(n, edges)


def truncate_to_budget(graphs: list[Graph], max_edges: int) -> list[Graph]:
    """Drop the largest graphs (by edge count, ties by later index) until
    the family total fits the budget. Kept graphs retain input order."""
    total = sum(g.m for g in graphs)
    drop: set[int] = set()
    by_size = sorted(range(len(graphs)), key=lambda i: (graphs[i].m, i), reverse=True)
    k = 0
    while total > max_edges and k < len(by_size):
        i = by_size[k]
        total -= graphs[i].m
        drop.add(i)
        k += 1
    return [g for i, g in enumerate(graphs) if i not in drop]


class SpecError(ValueError):
    """Generator spec string parse error, naming the offending token."""


def _parse_params(kind: str, body: str, spec: str) -> dict[str, str]:
    params: dict[str, str] = {}
    if not body:
        return params
    for tok in body.split(","):
        if "=" not in tok:
            raise SpecError(f"{spec!r}: token {tok!r} is not key=value")
        key, val = tok.split("=", 1)
        key = key.strip()
        if not key:
            raise SpecError(f"{spec!r}: empty key in token {tok!r}")
        if key in params:
            raise SpecError(f"{spec!r}: duplicate key {key!r}")
        params[key] = val.strip()
    return params


def _need_int(params: dict[str, str], key: str, spec: str) -> int:
    if key not in params:
        raise SpecError(f"{spec!r}: missing required key {key!r}")
    try:
        return int(params[key])
    except ValueError:
        raise SpecError(f"{spec!r}: key {key!r} is not an integer") from None


def _opt_int(params: dict[str, str], key: str, default: int, spec: str) -> int:
    if key not in params:
        return default
    try:
        return int(params[key])
    except ValueError:
        raise SpecError(f"{spec!r}: key {key!r} is not an integer") from None


def _need_float(params: dict[str, str], key: str, spec: str) -> float:
    if key not in params:
        raise SpecError(f"{spec!r}: missing required key {key!r}")
    try:
        return float(params[key])
    except ValueError:
        raise SpecError(f"{spec!r}: key {key!r} is not a number") from None


GUEST_KINDS = ("tree", "degen", "star", "path", "gyarfas", "ringel")
HOST_KINDS = ("complete", "gnp")


@dataclass(frozen=True)
class GuestSpec:
    kind: str
    params: dict[str, int | float] = field(default_factory=dict)
    count: int = 1

    # Degeneracy guaranteed by construction, used when preparing the family.
    @property
    def declared_degeneracy(self) -> int:
        if self.kind == "degen":
            return int(self.params["D"])
        return 1

    def generate(self, rng: np.random.Generator) -> list[Graph]:
        k = self.kind
        if k == "tree":
            return [random_tree(int(self.params["n"]), rng) for _ in range(self.count)]
        if k == "degen":
            return [
                random_degenerate(
                    int(self.params["n"]),
                    int(self.params["D"]),
                    int(self.params["maxdeg"]),
                    rng,
                )
                for _ in range(self.count)
            ]
        if k == "star":
            return [star(int(self.params["n"])) for _ in range(self.count)]
        if k == "path":
            return [path(int(self.params["n"])) for _ in range(self.count)]
        if k == "gyarfas":
            return gyarfas_family(int(self.params["n"]), rng)
        if k == "ringel":
            n = int(self.params["n"])
            t = random_tree((n + 1) // 2, rng)
            return [t] * n
        raise SpecError(f"unknown guest kind {k!r}")


@dataclass(frozen=True)
class HostSpec:
    kind: str
    params: dict[str, int | float] = field(default_factory=dict)

    @property
    def n(self) -> int:
        return int(self.params["n"])

    def generate(self, rng: np.random.Generator) -> Graph:
        if self.kind == "complete":
            n = self.n
            return Graph(n, [(u, v) for u in range(n) for v in range(u + 1, n)])
        if self.kind == "gnp":
            return gnp(self.n, float(self.params["p"]), rng)
        raise SpecError(f"unknown host kind {self.kind!r}")


def parse_guest_spec(spec: str) -> GuestSpec:
    kind, _, body = spec.partition(":")
    kind = kind.strip()
    if kind not in GUEST_KINDS:
        raise SpecError(f"{spec!r}: unknown guest kind {kind!r} (known: {', '.join(GUEST_KINDS)})")
    params = _parse_params(kind, body, spec)
    known_counted = {"tree", "degen", "star", "path"}
    count = _opt_int(params, "count", 1, spec) if kind in known_counted else 1
    out: dict[str, int | float] = {}
    if kind in ("tree", "star", "path"):
        out["n"] = _need_int(params, "n", spec)
        extra = set(params) - {"n", "count"}
    elif kind == "degen":
        out["n"] = _need_int(params, "n", spec)
        out["D"] = _need_int(params, "D", spec)
        out["maxdeg"] = _need_int(params, "maxdeg", spec)
        extra = set(params) - {"n", "D", "maxdeg", "count"}
    elif kind == "gyarfas":
        out["n"] = _need_int(params, "n", spec)
        extra = set(params) - {"n"}
    else:  # ringel
        out["n"] = _need_int(params, "n", spec)
        if out["n"] % 2 == 0:
            raise SpecError(f"{spec!r}: ringel needs odd n")
        extra = set(params) - {"n"}
    if extra:
        raise SpecError(f"{spec!r}: unknown key(s) {sorted(extra)}")
    return GuestSpec(kind, out, count)


def parse_host_spec(spec: str) -> HostSpec:
    kind, _, body = spec.partition(":")
    kind = kind.strip()
    if kind not in HOST_KINDS:
        raise SpecError(f"{spec!r}: unknown host kind {kind!r} (known: {', '.join(HOST_KINDS)})")
    params = _parse_params(kind, body, spec)
    out: dict[str, int | float] = {"n": _need_int(params, "n", spec)}
    if kind == "gnp":
        out["p"] = _need_float(params, "p", spec)
        extra = set(params) - {"n", "p"}
    else:
        extra = set(params) - {"n"}
    if extra:
        raise SpecError(f"{spec!r}: unknown key(s) {sorted(extra)}")
    return HostSpec(kind, out)
