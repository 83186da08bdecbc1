"""The sequential packing engine.

A run splits the host into a dense bulk and a sparse reservoir, then
processes guests one stage at a time: a random greedy embedding places
the non-tail positions into the bulk (drawing uniformly from each
position's candidate set minus the used image, halting on an empty
draw), used bulk edges are deleted, and the independent equal-degree
tail is embedded into the reservoir via a perfect matching between tail
positions and the unused host vertices. Used reservoir edges are then
deleted and the next stage begins.

Randomness: stage s of a run with seed S draws from rng.stream(S, s);
the split uses rng.stream(S, 0). Identical (guests, host, config) give a
bit-identical result.
"""

from __future__ import annotations

import json
import warnings
from dataclasses import dataclass, field
from typing import Iterable, Sequence

import numpy as np

from . import rng as rngmod
from .audit import AuditEntry, AuditPolicy, coquasirandomness_error, quasirandomness_error
from .bitset import bits, full_mask, kth_bit, mask_of
from .graphs import Graph, PreparedGuest
from .matching import hall_violator, hopcroft_karp

# Above this order the split falls back from numpy row packing to a
# python loop over edges.
_PACK_LIMIT = 8192


class Embedding:
    """Partial injective map from guest positions to host vertices."""

    __slots__ = ("n", "forward", "inverse", "used_mask", "stage")

    def __init__(self, n: int, stage: int = 0):
        self.n = n
        self.forward: list[int | None] = [None] * n
        self.inverse: dict[int, int] = {}
        self.used_mask = 0
        self.stage = stage

    def place(self, pos: int, v: int) -> None:
        if self.forward[pos] is not None:
            raise ValueError(f"position {pos} already embedded")
        if v in self.inverse:
            raise ValueError(f"host vertex {v} already used")
        self.forward[pos] = v
        self.inverse[v] = pos
        self.used_mask |= 1 << v

    @property
    def image_size(self) -> int:
        return len(self.inverse)

    def is_used(self, v: int) -> bool:
        return v in self.inverse


@dataclass
class EmbedFailure:
    """Empty final candidate set at `position` (0-based) with
    `embedded` vertices already placed."""

    position: int
    embedded: int
    stage: int | None = None


@dataclass
class CompletionFailure:
    """Hall violator among the tail positions: the union of their
    completion candidate sets is smaller than the witness."""

    witness: tuple[int, ...]
    union_size: int
    stage: int | None = None


class HostState:
    """Mutable bulk/reservoir pair over one vertex set.

    The two edge sets stay disjoint for the whole run; stages only delete
    edges. Initial reservoir degrees are kept so the per-vertex drain can
    be reported at any time.
    """

    def __init__(self, n: int, bulk_rows: list[int], reservoir_rows: list[int], stage: int = 0):
        self.n = n
        self.bulk_rows = bulk_rows
        self.reservoir_rows = reservoir_rows
        self.bulk_m = sum(r.bit_count() for r in bulk_rows) // 2
        self.reservoir_m = sum(r.bit_count() for r in reservoir_rows) // 2
        self.stage = stage
        self.initial_reservoir_degrees = [r.bit_count() for r in reservoir_rows]
        self.initial_reservoir_edges = frozenset(
            (u, v) for u in range(n) for v in bits(reservoir_rows[u]) if u < v
        )

    def delete_bulk_edge(self, u: int, v: int) -> None:
        if not (self.bulk_rows[u] >> v) & 1:
            raise ValueError(f"bulk edge ({u},{v}) absent")
        self.bulk_rows[u] &= ~(1 << v)
        self.bulk_rows[v] &= ~(1 << u)
        self.bulk_m -= 1

    def delete_reservoir_edge(self, u: int, v: int) -> None:
        if not (self.reservoir_rows[u] >> v) & 1:
            raise ValueError(f"reservoir edge ({u},{v}) absent")
        self.reservoir_rows[u] &= ~(1 << v)
        self.reservoir_rows[v] &= ~(1 << u)
        self.reservoir_m -= 1

    def bulk_graph(self) -> Graph:
        return Graph.from_bitrows(self.n, self.bulk_rows)

    def reservoir_graph(self) -> Graph:
        return Graph.from_bitrows(self.n, self.reservoir_rows)

    def reservoir_drain(self) -> list[int]:
        return [
            d0 - self.reservoir_rows[v].bit_count()
            for v, d0 in enumerate(self.initial_reservoir_degrees)
        ]

    def edge_sets_disjoint(self) -> bool:
        return all(b & r == 0 for b, r in zip(self.bulk_rows, self.reservoir_rows))


def split_bulk_reservoir(hhat: Graph, gamma: float, rng: np.random.Generator) -> HostState:
    """Independently move each host edge to the reservoir with probability
    q = gamma * C(n,2) / e(hhat). Edges are visited in sorted order, so
    the outcome is a pure function of the rng state."""
    n = hhat.n
    if gamma < 0:
        raise ValueError("gamma must be nonnegative")
    pairs = n * (n - 1) / 2
    edges = sorted(hhat.edges)
    if gamma == 0:
        to_res = np.zeros(len(edges), dtype=bool)
    else:
        if hhat.m == 0:
            raise ValueError("host has no edges")
        q = gamma * pairs / hhat.m
        if q > 1:
            raise ValueError(
                f"reservoir probability {q:.4f} > 1: gamma={gamma} too large for host density {hhat.density():.4f}"
            )
        to_res = rng.random(len(edges)) < q

    if n <= _PACK_LIMIT and edges:
        eu = np.fromiter((e[0] for e in edges), dtype=np.int64, count=len(edges))
        ev = np.fromiter((e[1] for e in edges), dtype=np.int64, count=len(edges))
        rows = []
        for picked in (~to_res, to_res):
            a = np.zeros((n, n), dtype=bool)
            a[eu[picked], ev[picked]] = True
            a |= a.T
            packed = np.packbits(a, axis=1, bitorder="little")
            rows.append([int.from_bytes(packed[v].tobytes(), "little") for v in range(n)])
        bulk_rows, res_rows = rows
    else:
        bulk_rows = [0] * n
        res_rows = [0] * n
        for (u, v), r in zip(edges, to_res):
            target = res_rows if r else bulk_rows
            target[u] |= 1 << v
            target[v] |= 1 << u
    return HostState(n, bulk_rows, res_rows)


def _row_lookup(host):
    if isinstance(host, Graph):
        return host.row, host.n
    if isinstance(host, HostState):
        raise TypeError("pass host.bulk_graph() or host.reservoir_graph(), not HostState")
    raise TypeError(f"unsupported host type {type(host)!r}")


def _candidate_mask(row, n: int, leftpos: Sequence[int], forward: Sequence[int | None]) -> int:
    m = full_mask(n)
    for u in leftpos:
        fu = forward[u]
        if fu is None:
            raise ValueError(f"left-neighbor at position {u} is not embedded")
        m &= row(fu)
    return m


def candidate_set(guest: PreparedGuest, host: Graph, psi: Embedding, t: int) -> set[int]:
    """Common host neighborhood of the images of t's left-neighbors.

    This is the raw candidate set: vertices already used by psi are
    included, per the definition; callers subtract the image."""
    row, n = _row_lookup(host)
    return set(bits(_candidate_mask(row, n, guest.ordered.leftnbrs[t], psi.forward)))


def _embed_bulk(
    guest: PreparedGuest,
    row,
    n: int,
    rng: np.random.Generator,
    stage: int = 0,
) -> Embedding | EmbedFailure:
    psi = Embedding(n, stage)
    boundary = guest.boundary
    leftnbrs = guest.ordered.leftnbrs
    forward = psi.forward
    for t in range(boundary):
        avail = _candidate_mask(row, n, leftnbrs[t], forward) & ~psi.used_mask
        c = avail.bit_count()
        if c == 0:
            return EmbedFailure(position=t, embedded=psi.image_size, stage=stage or None)
        v = kth_bit(avail, int(rng.integers(c)))
        psi.place(t, v)
    return psi


def random_embedding(
    guest: PreparedGuest,
    host: Graph,
    rng: np.random.Generator,
    delta: float | None = None,
) -> Embedding | EmbedFailure:
    """Embed the non-tail positions in order, drawing uniformly from each
    final candidate set minus the image; halts with EmbedFailure when a
    draw set is empty. One uniform draw per step, no resampling."""
    row, n = _row_lookup(host)
    if guest.n != n:
        raise ValueError(f"guest has {guest.n} vertices, host {n}")
    if delta is not None and int(delta * n) != guest.tail_len:
        raise ValueError(
            f"delta={delta} gives tail {int(delta * n)}, guest prepared with {guest.tail_len}"
        )
    return _embed_bulk(guest, row, n, rng)


def _completion_mask(
    row, n: int, leftpos: Sequence[int], forward: Sequence[int | None], used_mask: int
) -> int:
    return _candidate_mask(row, n, leftpos, forward) & ~used_mask & full_mask(n)


def completion_candidates(
    guest: PreparedGuest, reservoir: Graph, phi: Embedding, x: int
) -> set[int]:
    """C*(x): unused host vertices adjacent in the reservoir to the images
    of every neighbor of tail position x (all of which are embedded,
    since the tail is independent and last)."""
    row, n = _row_lookup(reservoir)
    if x < guest.boundary:
        raise ValueError(f"position {x} is not in the tail")
    m = _completion_mask(row, n, guest.ordered.leftnbrs[x], phi.forward, phi.used_mask)
    return set(bits(m))


def _complete_rows(
    guest: PreparedGuest, row, n: int, phi: Embedding
) -> Embedding | CompletionFailure:
    boundary = guest.boundary
    tail = list(range(boundary, guest.n))
    embedded = [t for t in range(guest.n) if phi.forward[t] is not None]
    if embedded != list(range(boundary)):
        raise ValueError("phi must embed exactly the non-tail positions")
    unused = [v for v in range(n) if not phi.is_used(v)]
    if len(unused) != len(tail):
        raise ValueError(f"{len(unused)} unused vertices for a tail of {len(tail)}")
    right_index = {v: i for i, v in enumerate(unused)}
    masks = [
        _completion_mask(row, n, guest.ordered.leftnbrs[x], phi.forward, phi.used_mask)
        for x in tail
    ]
    adj = [[right_index[v] for v in bits(m)] for m in masks]
    match_l, match_r, size = hopcroft_karp(adj, len(unused))
    if size < len(tail):
        lefts = hall_violator(adj, match_l, match_r)
        union = 0
        for i in lefts:
            union |= masks[i]
        return CompletionFailure(
            witness=tuple(tail[i] for i in lefts), union_size=union.bit_count()
        )
    for i, x in enumerate(tail):
        phi.place(x, unused[match_l[i]])
    return phi


def complete_embedding(
    guest: PreparedGuest, reservoir: Graph, phi: Embedding
) -> Embedding | CompletionFailure:
    """Match tail positions to the unused vertices through their completion
    candidate sets (augmenting-path maximum matching); on success extends
    phi in place to a full embedding whose tail edges lie in the
    reservoir. On failure returns the Hall violator extracted from the
    final layered search."""
    row, n = _row_lookup(reservoir)
    return _complete_rows(guest, row, n, phi)


@dataclass(frozen=True)
class RunConfig:
    """Operational knobs of a packing run. Only gamma, delta, the seed and
    the audit plan are consumed by the algorithms; no analysis constants
    are baked in."""

    gamma: float
    delta: float
    rng_seed: int = 0
    audit_checkpoints: tuple[int, ...] = ()
    audit_policy: AuditPolicy | None = None
    continue_on_completion_failure: bool = False

    def __post_init__(self):
        if not 0 < self.gamma < 1:
            raise ValueError("gamma must be in (0, 1)")
        if not 0 < self.delta < 1:
            raise ValueError("delta must be in (0, 1)")


@dataclass
class CheckpointAudit:
    stage: int
    bulk_quasirandom: AuditEntry
    pair_coquasirandom: AuditEntry | None

    def to_json(self) -> dict:
        return {
            "stage": self.stage,
            "bulk_quasirandom": self.bulk_quasirandom.to_json(),
            "pair_coquasirandom": (
                self.pair_coquasirandom.to_json() if self.pair_coquasirandom else None
            ),
        }


@dataclass
class FailureRecord:
    stage: int
    phase: str  # "embedding" | "completion"
    position: int | None = None
    embedded: int | None = None
    witness: tuple[int, ...] | None = None
    union_size: int | None = None

    def to_json(self) -> dict:
        return {
            "stage": self.stage,
            "phase": self.phase,
            "position": self.position,
            "embedded": self.embedded,
            "witness": list(self.witness) if self.witness is not None else None,
            "union_size": self.union_size,
        }


@dataclass
class PackingResult:
    n: int
    success: bool
    embeddings: list[list[int] | None]
    edge_colors: dict[tuple[int, int], int]
    uncovered: int
    reservoir_edges: frozenset[tuple[int, int]]
    failure: FailureRecord | None = None
    completion_failures: list[FailureRecord] = field(default_factory=list)
    max_reservoir_drain: int = 0
    checkpoints: list[CheckpointAudit] = field(default_factory=list)
    stage_log: list[tuple[int, int]] = field(default_factory=list)

    def to_json(self, include_colors: bool = True) -> dict:
        out = {
            "n": self.n,
            "success": self.success,
            "embeddings": self.embeddings,
            "uncovered": self.uncovered,
            "reservoir_edges": sorted(list(e) for e in self.reservoir_edges),
            "failure": self.failure.to_json() if self.failure else None,
            "completion_failures": [f.to_json() for f in self.completion_failures],
            "max_reservoir_drain": self.max_reservoir_drain,
            "checkpoints": [c.to_json() for c in self.checkpoints],
            "stage_log": [list(x) for x in self.stage_log],
        }
        if include_colors:
            out["colors"] = sorted([u, v, c] for (u, v), c in self.edge_colors.items())
        return out

    def dumps(self, include_colors: bool = True) -> str:
        return json.dumps(self.to_json(include_colors), separators=(",", ":"))

    def color_array(self, hhat: Graph) -> np.ndarray:
        """Colors as uint32 aligned with sorted(hhat.edges); 0 = uncovered."""
        edges = sorted(hhat.edges)
        arr = np.zeros(len(edges), dtype=np.uint32)
        for i, e in enumerate(edges):
            arr[i] = self.edge_colors.get(e, 0)
        return arr


def _checkpoint(host: HostState, stage: int, policy: AuditPolicy) -> CheckpointAudit:
    bulk = host.bulk_graph()
    entry = quasirandomness_error(bulk, policy)
    pair = None
    if host.reservoir_m > 0:
        pair = coquasirandomness_error(bulk, host.reservoir_graph(), policy)
    return CheckpointAudit(stage, entry, pair)


def packing_process(
    guests: list[PreparedGuest], hhat: Graph, cfg: RunConfig
) -> PackingResult:
    """Run the full pipeline: split, then per stage a random greedy bulk
    embedding, bulk edge deletion, tail completion into the reservoir,
    and reservoir edge deletion. Audits run at the configured stages
    (stage 0 means right after the split). By default the run aborts at
    the first failure; with continue_on_completion_failure set,
    completion failures are recorded and the run moves on, leaving that
    stage's tail unembedded (the bulk evolution is unaffected)."""
    n = hhat.n
    for i, g in enumerate(guests):
        if g.n != n:
            raise ValueError(f"guest {i} prepared for n={g.n}, host has n={n}")
    total = sum(g.ordered.graph.m for g in guests)
    budget = hhat.m - cfg.gamma * n * (n - 1) / 2
    if total > budget:
        warnings.warn(
            f"guest family has {total} edges, above the e(host) - gamma*C(n,2) "
            f"budget of {budget:.0f}; proceeding anyway",
            stacklevel=2,
        )

    policy = cfg.audit_policy or AuditPolicy()
    checkpoints (set(cfg.audit_checkpoints))
    host = split_bulk_reservoir(hhat, cfg.gamma, rngmod.stream(cfg.rng_seed, 0))

    result = PackingResult(
        n=n,
        success=True,
        embeddings=[None] * len(guests),
        edge_colors={},
        uncovered=hhat.m,
        reservoir_edges=host.initial_reservoir_edges,
    )
    if 0 in checkpoints:
        result.checkpoints.append(_checkpoint(host, 0, policy))

    for s, guest in enumerate(guests, start=1):
        host.stage = s
        stage_rng = rngmod.stream(cfg.rng_seed, s)
        psi = _embed_bulk(guest, lambda v: host.bulk_rows[v], n, stage_rng, stage=s)
        if isinstance(psi, EmbedFailure):
            result.success = False
            result.failure = FailureRecord(
                stage=s, phase="embedding", position=psi.position, embedded=psi.embedded
            )
            break

        boundary = guest.boundary
        removed_bulk = 0
        for a, b in guest.ordered.position_edges():
            if b < boundary:
                host.delete_bulk_edge(psi.forward[a], psi.forward[b])
                removed_bulk += 1

        full = _complete_rows(guest, lambda v: host.reservoir_rows[v], n, psi)
        if isinstance(full, CompletionFailure):
            record = FailureRecord(
                stage=s,
                phase="completion",
                witness=full.witness,
                union_size=full.union_size,
            )
            if cfg.continue_on_completion_failure:
                result.success = False
                result.completion_failures.append(record)
                if result.failure is None:
                    result.failure = record
                result.stage_log.append((removed_bulk, 0))
                if s in checkpoints:
                    result.checkpoints.append(_checkpoint(host, s, policy))
                continue
            result.success = False
            result.failure = record
            result.stage_log.append((removed_bulk, 0))
            break

        removed_res = 0
        for a, b in guest.ordered.position_edges():
            if b >= boundary:
                host.delete_reservoir_edge(full.forward[a], full.forward[b])
                removed_res += 1

        fwd = [int(v) for v in full.forward]
        result.embeddings[s - 1] = fwd
        for a, b in guest.ordered.position_edges():
            u, v = fwd[a], fwd[b]
            key = (u, v) if u < v else (v, u)
            result.edge_colors[key] = s
        result.stage_log.append((removed_bulk, removed_res))
        if s in checkpoints:
            result.checkpoints.append(_checkpoint(host, s, policy))

    result.uncovered = hhat.m - len(result.edge_colors)
    result.max_reservoir_drain = max(host.reservoir_drain(), default=0)
    return result


@dataclass
class Verdict:
    ok: bool
    violations: list[str]


def verify_packing(
    guests: list[PreparedGuest], hhat: Graph, result: PackingResult
) -> Verdict:
    """Independent recheck of a successful run: injectivity, edge validity,
    color-class disjointness and exactness, bulk/reservoir charging, and
    the uncovered count. Works only from the maps, the host, and the
    recorded initial reservoir; never trusts engine bookkeeping."""
    if not result.success:
        raise ValueError("verify_packing expects a successful result")
    v: list[str] = []
    host_edges = hhat.edges
    if not result.reservoir_edges <= host_edges:
        v.append("reservoir edges are not a subset of the host edge set")

    claimed: dict[tuple[int, int], int] = {}
    recomputed_classes: dict[int, set[tuple[int, int]]] = {}
    for s, (guest, fwd) in enumerate(zip(guests, result.embeddings), start=1):
        if fwd is None:
            v.append(f"stage {s}: missing embedding")
            continue
        if len(fwd) != hhat.n:
            v.append(f"stage {s}: embedding has {len(fwd)} entries, host has {hhat.n}")
            continue
        if any(x is None or not 0 <= x < hhat.n for x in fwd):
            v.append(f"stage {s}: embedding leaves positions unmapped or out of range")
            continue
        if len(set(fwd)) != len(fwd):
            v.append(f"stage {s}: embedding is not injective")
            continue
        cls: set[tuple[int, int]] = set()
        boundary = guest.boundary
        for a, b in guest.ordered.position_edges():
            x, y = fwd[a], fwd[b]
            e = (x, y) if x < y else (y, x)
            if e not in host_edges:
                v.append(f"stage {s}: guest edge maps to non-edge {e}")
                continue
            if e in cls:
                v.append(f"stage {s}: two guest edges map to the same host edge {e}")
                continue
            other = claimed.get(e)
            if other is not None:
                v.append(f"color overlap on edge {e}: stages {other} and {s}")
            claimed[e] = s
            cls.add(e)
            is_tail_edge = b >= boundary
            in_reservoir = e in result.reservoir_edges
            if is_tail_edge and not in_reservoir:
                v.append(f"stage {s}: tail edge {e} not charged to the reservoir")
            if not is_tail_edge and in_reservoir:
                v.append(f"stage {s}: non-tail edge {e} charged to the reservoir")
        recomputed_classes[s] = cls

    recorded: dict[int, set[tuple[int, int]]] = {}
    for e, c in result.edge_colors.items():
        recorded.setdefault(c, set()).add(e)
    for s, cls in recomputed_classes.items():
        if recorded.get(s, set()) != cls:
            v.append(f"stage {s}: recorded color class differs from the embedding")

    total_guest_edges = sum(g.ordered.graph.m for g in guests)
    if result.uncovered != hhat.m - total_guest_edges:
        v.append(
            f"uncovered count {result.uncovered} != e(host) - total guest edges "
            f"{hhat.m - total_guest_edges}"
        )
    if result.uncovered != hhat.m - len(claimed):
        v.append("uncovered count inconsistent with the union of color classes")
    return Verdict(ok=not v, violations=v)
