"""Quasirandomness, coquasirandomness, diet, codiet, and cover auditors.

Each auditor measures a worst-case relative deviation over a family of
witness vertex sets: all sets of size up to ``exhaustive_max_size`` plus a
seeded uniform sample per larger size. Enumerating every set of the
largest relevant size is infeasible, so reported values are lower bounds
on the true sup-deviation.

Deviations are always |observed - expected| / expected with the expected
value taken from the current density baseline, never from a cached one.
All sampled audits are deterministic given (policy.rng_seed, inputs), and
the witness family depends only on (n, policy), so audits that share a
policy test identical sets.
"""

from __future__ import annotations

import itertools
import json
from dataclasses import dataclass, field
from typing import Any, Iterable, Iterator, Sequence

import numpy as np

from .bitset import bits, full_mask, mask_of
from .graphs import Graph, PreparedGuest

# Above this order the dense matmul path for exhaustive size-2 witnesses
# is replaced by pairwise bit-row intersections.
MATMUL_LIMIT = 4096


@dataclass(frozen=True)
class AuditPolicy:
    """Witness-set budget for an audit.

    max_set_size is the L of the conditions being measured (2D+3 when
    auditing a packing run of D-degenerate guests); sizes up to
    exhaustive_max_size are enumerated completely, larger sizes get
    samples_per_size uniform draws from the policy seed.
    """

    max_set_size: int = 5
    exhaustive_max_size: int = 2
    samples_per_size: int = 200
    rng_seed: int = 0

    def __post_init__(self):
        if self.max_set_size < 1:
            raise ValueError("max_set_size must be >= 1")
        if self.exhaustive_max_size > self.max_set_size:
            raise ValueError("exhaustive_max_size must be <= max_set_size")
        if self.samples_per_size < 1:
            raise ValueError("samples_per_size must be >= 1")

    @classmethod
    def for_degeneracy(cls, D: int, **kw) -> "AuditPolicy":
        return cls(max_set_size=2 * D + 3, **kw)


@dataclass
class AuditEntry:
    """Worst observed relative deviation for one condition."""

    condition: str
    deviation: float
    witness: Any
    sets_tested: int
    densities: dict[str, float] = field(default_factory=dict)

    def to_json(self) -> dict:
        return {
            "condition": self.condition,
            "deviation": self.deviation,
            "witness": self.witness,
            "sets_tested": self.sets_tested,
            "densities": self.densities,
        }


@dataclass
class AuditReport:
    entries: list[AuditEntry] = field(default_factory=list)

    def to_json(self) -> list[dict]:
        return [e.to_json() for e in self.entries]

    def dumps(self) -> str:
        return json.dumps(self.to_json(), indent=2)


def common_neighborhood(h: Graph, S: Iterable[int]) -> set[int]:
    """Intersection of the neighborhoods of S; all of V for S empty."""
    S = list(S)
    if not S:
        return set(range(h.n))
    out = set(h.neighbors[S[0]])
    for v in S[1:]:
        out &= set(h.neighbors[v])
    return out


def sampled_witness_sets(n: int, policy: AuditPolicy) -> dict[int, list[tuple[int, ...]]]:
    """Sampled witness sets per size above exhaustive_max_size.

    Depends only on (n, policy); drawn once per audit, sizes in increasing
    order from a single PCG64 stream seeded with policy.rng_seed.
    """
    rng = np.random.Generator(np.random.PCG64(np.random.SeedSequence(policy.rng_seed)))
    out: dict[int, list[tuple[int, ...]]] = {}
    for size in range(policy.exhaustive_max_size + 1, policy.max_set_size + 1):
        if size > n:
            break
        sets = []
        for _ in range(policy.samples_per_size):
            pick = rng.choice(n, size=size, replace=False)
            sets.append(tuple(sorted(int(v) for v in pick)))
        out[size] = sets
    return out


def iter_witness_sets(n: int, policy: AuditPolicy) -> Iterator[tuple[int, ...]]:
    """The full witness family: exhaustive sizes enumerated in
    lexicographic order, then the sampled sizes. Intended for tests and
    small n; the auditors evaluate exactly this family."""
    for size in range(1, min(policy.exhaustive_max_size, n) + 1):
        yield from itertools.combinations(range(n), size)
    sampled = sampled_witness_sets(n, policy)
    for size in sorted(sampled):
        yield from sampled[size]


def _adjacency_bool(h: Graph) -> np.ndarray:
    a = np.zeros((h.n, h.n), dtype=bool)
    for v in range(h.n):
        nb = h.neighbors[v]
        if nb:
            a[v, list(nb)] = True
    return a


def _density(h: Graph, name: str) -> float:
    if h.n < 2 or h.m == 0:
        raise ValueError(f"{name}: density is zero, no baseline to audit against")
    return h.m / (h.n * (h.n - 1) / 2)


def _dev(count: int, expected: float) -> float:
    return abs(count - expected) / expected


class _Best:
    """Running max deviation plus the witness achieving it."""

    __slots__ = ("deviation", "witness")

    def __init__(self):
        self.deviation = 0.0
        self.witness: Any = None

    def offer(self, dev: float, witness: Any) -> None:
        if self.witness is None or dev > self.deviation:
            self.deviation = dev
            self.witness = witness


def _diet_core(h: Graph, X: Iterable[int], policy: AuditPolicy, condition: str) -> AuditEntry:
    n = h.n
    xset = set(X)
    if not all(0 <= v < n for v in xset):
        raise ValueError("excluded set X must be a subset of the vertex set")
    if len(xset) >= n:
        raise ValueError(f"{condition}: X covers all {n} vertices, nothing to measure")
    p = _density(h, condition)
    navail = n - len(xset)
    best = _Best()
    tested = 0

    keep = np.array([v not in xset for v in range(n)], dtype=bool)
    if n <= MATMUL_LIMIT:
        a = _adjacency_bool(h)
        am = (a & keep[None, :]).astype(np.int32)
        if policy.exhaustive_max_size >= 1:
            counts1 = am.sum(axis=1)
            e1 = p * navail
            devs = np.abs(counts1 - e1) / e1
            v = int(np.argmax(devs))
            best.offer(float(devs[v]), (v,))
            tested += n
        if policy.exhaustive_max_size >= 2 and n >= 2:
            c2 = am @ am.T
            e2 = p * p * navail
            devs2 = np.abs(c2 - e2) / e2
            iu = np.triu_indices(n, k=1)
            flat = devs2[iu]
            k = int(np.argmax(flat))
            best.offer(float(flat[k]), (int(iu[0][k]), int(iu[1][k])))
            tested += n * (n - 1) // 2
    else:
        xmask = mask_of(xset)
        if policy.exhaustive_max_size >= 1:
            e1 = p * navail
            for v in range(n):
                cnt = (h.row(v) & ~xmask).bit_count()
                best.offer(_dev(cnt, e1), (v,))
            tested += n
        if policy.exhaustive_max_size >= 2 and n >= 2:
            e2 = p * p * navail
            for u in range(n):
                ru = h.row(u) & ~xmask
                for v in range(u + 1, n):
                    cnt = (ru & h.row(v)).bit_count()
                    best.offer(_dev(cnt, e2), (u, v))
            tested += n * (n - 1) // 2

    xmask = mask_of(xset)
    for size, sets in sampled_witness_sets(n, policy).items():
        e = p**size * navail
        for S in sets:
            m = full_mask(n)
            for v in S:
                m &= h.row(v)
            cnt = (m & ~xmask).bit_count()
            best.offer(_dev(cnt, e), S)
            tested += 1

    return AuditEntry(condition, best.deviation, best.witness, tested, {"p": p})


def quasirandomness_error(h: Graph, policy: AuditPolicy) -> AuditEntry:
    """Max relative deviation of |N(S)| from p^|S| * n over the witness family."""
    return _diet_core(h, (), policy, "quasirandom")


def diet_error(h: Graph, X: Iterable[int], policy: AuditPolicy) -> AuditEntry:
    """Max relative deviation of |N(S) \\ X| from p^|S| * (n - |X|).

    With X empty this is exactly quasirandomness_error on the same
    witnesses (same policy seed, same sets, same values)."""
    return _diet_core(h, X, policy, "diet")


def paired_count(h: Graph, hstar: Graph, X: Iterable[int], S: Sequence[int], R: Sequence[int]) -> int:
    """|(N_h(R) cap N_hstar(S \\ R)) \\ X|, computed directly. Test hook and
    single-witness recomputation entry point."""
    rset = set(R)
    if not rset <= set(S):
        raise ValueError("R must be a subset of S")
    m = full_mask(h.n)
    for v in S:
        m &= h.row(v) if v in rset else hstar.row(v)
    return (m & ~mask_of(X)).bit_count()


def _codiet_core(
    h: Graph, hstar: Graph, X: Iterable[int], policy: AuditPolicy, condition: str
) -> AuditEntry:
    if h.n != hstar.n:
        raise ValueError("graphs must share a vertex set")
    n = h.n
    xset = set(X)
    if len(xset) >= n:
        raise ValueError(f"{condition}: X covers all {n} vertices, nothing to measure")
    p = _density(h, condition)
    ps = _density(hstar, condition + " (second graph)")
    navail = n - len(xset)
    best = _Best()
    tested = 0

    keep = np.array([v not in xset for v in range(n)], dtype=bool)
    if n <= MATMUL_LIMIT:
        a = (_adjacency_bool(h) & keep[None, :]).astype(np.int32)
        b = (_adjacency_bool(hstar) & keep[None, :]).astype(np.int32)
        if policy.exhaustive_max_size >= 1:
            for rows, pr, rlabel in ((a, p, "full"), (b, ps, "empty")):
                counts = rows.sum(axis=1)
                e = pr * navail
                devs = np.abs(counts - e) / e
                v = int(np.argmax(devs))
                witness_r = (v,) if rlabel == "full" else ()
                best.offer(float(devs[v]), ((v,), witness_r))
                tested += n
        if policy.exhaustive_max_size >= 2 and n >= 2:
            iu = np.triu_indices(n, k=1)
            hh = a @ a.T
            ss = b @ b.T
            hs = a @ b.T  # hs[u, v] = |N_h(u) cap N_hstar(v) \ X|
            for mat, e, kind in (
                (hh, p * p * navail, "both_h"),
                (ss, ps * ps * navail, "both_star"),
            ):
                flat = np.abs(mat[iu] - e) / e
                k = int(np.argmax(flat))
                u, v = int(iu[0][k]), int(iu[1][k])
                best.offer(float(flat[k]), ((u, v), (u, v) if kind == "both_h" else ()))
                tested += n * (n - 1) // 2
            e_mix = p * ps * navail
            devs = np.abs(hs - e_mix) / e_mix
            np.fill_diagonal(devs, -1.0)
            k = int(np.argmax(devs))
            u, v = divmod(k, n)
            best.offer(float(devs[u, v]), ((min(u, v), max(u, v)), (u,)))
            tested += n * (n - 1)
    else:
        xmask = mask_of(xset)
        if policy.exhaustive_max_size >= 1:
            for v in range(n):
                cnt = (h.row(v) & ~xmask).bit_count()
                best.offer(_dev(cnt, p * navail), ((v,), (v,)))
                cnt = (hstar.row(v) & ~xmask).bit_count()
                best.offer(_dev(cnt, ps * navail), ((v,), ()))
            tested += 2 * n
        if policy.exhaustive_max_size >= 2 and n >= 2:
            for u in range(n):
                for v in range(u + 1, n):
                    for rsub in ((), (u,), (v,), (u, v)):
                        cnt = paired_count(h, hstar, xset, (u, v), rsub)
                        e = p ** len(rsub) * ps ** (2 - len(rsub)) * navail
                        best.offer(_dev(cnt, e), ((u, v), rsub))
                        tested += 1

    for size, sets in sampled_witness_sets(n, policy).items():
        for S in sets:
            for rsize in range(size + 1):
                for rsub in itertools.combinations(S, rsize):
                    cnt = paired_count(h, hstar, xset, S, rsub)
                    e = p**rsize * ps ** (size - rsize) * navail
                    best.offer(_dev(cnt, e), (S, rsub))
                    tested += 1

    return AuditEntry(condition, best.deviation, best.witness, tested, {"p": p, "p_star": ps})


def coquasirandomness_error(f: Graph, fstar: Graph, policy: AuditPolicy) -> AuditEntry:
    """Max deviation of |N_f(R) cap N_fstar(S\\R)| from p^|R| p*^|S\\R| n over
    all witnesses S and all subsets R of each S. Edge-disjointness of the
    pair is not required here (engine state checks enforce it separately)."""
    return _codiet_core(f, fstar, (), policy, "coquasirandom")


def codiet_error(h: Graph, hstar: Graph, X: Iterable[int], policy: AuditPolicy) -> AuditEntry:
    return _codiet_core(h, hstar, X, policy, "codiet")


def cover_error(
    guest: PreparedGuest,
    h: Graph,
    psi,
    window_start: int,
    eps: float,
) -> AuditEntry:
    """Smallest slack-adjusted beta for the cover counts in one window.

    For each host vertex v and left-degree stratum d >= 1, counts the
    window positions x whose embedded left-neighborhood makes v a
    candidate, compares against p^d * |stratum|, forgives an additive
    eps^2 * n, and normalizes. Empty strata and d = 0 contribute zero.
    psi may be an Embedding or any sequence mapping positions to host
    vertices (None when unembedded).
    """
    forward = psi.forward if hasattr(psi, "forward") else psi
    n = h.n
    og = guest.ordered
    if og.n != n:
        raise ValueError("guest and host orders differ")
    p = _density(h, "cover")
    width = int(eps * n)
    if width < 1:
        raise ValueError("eps * n is below one position")
    if window_start < 0 or window_start + width > og.n:
        raise ValueError("window exceeds the vertex range")
    window = range(window_start, window_start + width)
    for x in window:
        for u in og.leftnbrs[x]:
            if forward[u] is None:
                raise ValueError(f"left-neighbor at position {u} of {x} is not embedded")

    strata: dict[int, list[int]] = {}
    for x in window:
        strata.setdefault(len(og.leftnbrs[x]), []).append(x)

    slack = eps * eps * n
    best = _Best()
    best.offer(0.0, {"v": None, "d": 0, "window_start": window_start})
    tested = 0
    for d, xs in sorted(strata.items()):
        if d == 0:
            continue
        counts = np.zeros(n, dtype=np.int64)
        for x in xs:
            m = full_mask(n)
            for u in og.leftnbrs[x]:
                m &= h.row(forward[u])
            for v in bits(m):
                counts[v] += 1
        expected = p**d * len(xs)
        over = np.maximum(np.abs(counts - expected) - slack, 0.0) / expected
        v = int(np.argmax(over))
        best.offer(float(over[v]), {"v": v, "d": d, "window_start": window_start})
        tested += n
    return AuditEntry("cover", best.deviation, best.witness, tested, {"p": p})
