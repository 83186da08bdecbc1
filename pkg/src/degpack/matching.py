"""Maximum bipartite matching with Hall-violator extraction.

Hopcroft-Karp style: BFS layering from the free left vertices, then
phase-wise DFS augmentation, O(E sqrt(V)). When the matching is not
perfect on the left side, the set of left vertices reachable by
alternating paths from the free ones is a literal Hall violator: its
neighborhood is smaller than it.
"""

from __future__ import annotations

from collections import deque

INF = float("inf")


def hopcroft_karp(adj: list[list[int]], n_right: int) -> tuple[list[int], list[int], int]:
    """Maximum matching for adj[i] = right-neighbors of left vertex i.

    Returns (match_left, match_right, size) with -1 for unmatched."""
    n_left = len(adj)
    match_l = [-1] * n_left
    match_r = [-1] * n_right
    dist = [0] * n_left

    def bfs() -> bool:
        q = deque()
        for u in range(n_left):
            if match_l[u] == -1:
                dist[u] = 0
                q.append(u)
            else:
                dist[u] = INF
        found = False
        while q:
            u = q.popleft()
            for v in adj[u]:
                w = match_r[v]
                if w == -1:
                    found = True
                elif dist[w] == INF:
                    dist[w] = dist[u] + 1
                    q.append(w)
        return found

    def dfs(u: int) -> bool:
        for v in adj[u]:
            w = match_r[v]
            if w == -1 or (dist[w] == dist[u] + 1 and dfs(w)):
                match_l[u] = v
                match_r[v] = u
                return True
        dist[u] = INF
        return False

    size = 0
    while bfs():
        for u in range(n_left):
            if match_l[u] == -1 and dfs(u):
                size += 1
    return match_l, match_r, size


def hall_violator(adj: list[list[int]], match_l: list[int], match_r: list[int]) -> list[int]:
    """Left vertices reachable by alternating paths from the free ones.

    Valid only for a maximum matching that leaves some left vertex free;
    the returned set X satisfies |N(X)| < |X|."""
    reach = [False] * len(adj)
    q = deque()
    for u in range(len(adj)):
        if match_l[u] == -1:
            reach[u] = True
            q.append(u)
    while q:
        u = q.popleft()
        for v in adj[u]:
            w = match_r[v]
            if w != -1 and not reach[w]:
                reach[w] = True
                q.append(w)
    return [u for u, r in enumerate(reach) if r]
