"""Edge-list text format.

First line: "n m". Then m lines "u v" with 0 <= u < v < n, whitespace
separated, one edge per line, no duplicates. Used for guest and host
input and by the audit tooling.
"""

from __future__ import annotations

import os

from .graphs import Graph


class EdgeListError(ValueError):
    """Parse error carrying the offending 1-based line number."""

    def __init__(self, path: str | os.PathLike, line: int, msg: str):
        super().__init__(f"{path}:{line}: {msg}")
        self.line = line


def read_edge_list(path: str | os.PathLike) -> Graph:
    with open(path, "r", encoding="utf-8") as fh:
        lines = fh.read().splitlines()
    if not lines or not lines[0].strip():
        raise EdgeListError(path, 1, "missing header line 'n m'")
    head = lines[0].split()
    if len(head) != 2:
        raise EdgeListError(path, 1, f"expected 'n m', got {lines[0]!r}")
    try:
        n, m = int(head[0]), int(head[1])
    except ValueError:
        raise EdgeListError(path, 1, f"non-integer header {lines[0]!r}") from None
    edges: list[tuple[int, int]] = []
    seen: set[tuple[int, int]] = set()
    lineno = 1
    for raw in lines[1:]:
        lineno += 1
        if not raw.strip():
            continue
        parts = raw.split()
        if len(parts) != 2:
            raise EdgeListError(path, lineno, f"expected 'u v', got {raw!r}")
        try:
            u, v = int(parts[0]), int(parts[1])
        except ValueError:
            raise EdgeListError(path, lineno, f"non-integer edge {raw!r}") from None
        if not (0 <= u < v < n):
            raise EdgeListError(path, lineno, f"edge ({u},{v}) violates 0 <= u < v < n={n}")
        if (u, v) in seen:
            raise EdgeListError(path, lineno, f"duplicate edge ({u},{v})")
        seen.add((u, v))
        edges.append((u, v))
    if len(edges) != m:
        raise EdgeListError(path, lineno, f"header declares m={m} but found {len(edges)} edges")
    return Graph(n, edges)


def write_edge_list(g: Graph, path: str | os.PathLike) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        fh.write(f"{g.n} {g.m}\n")
        for u, v in sorted(g.edges):
            fh.write(f"{u} {v}\n")
