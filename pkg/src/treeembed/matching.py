"""Maximum bipartite matching (Hopcroft-Karp) with Hall-violator certificates."""

from __future__ import annotations

from collections import deque
from dataclasses import dataclass
from typing import Sequence

import numpy as np

INF = float("inf")


@dataclass
class MatchingResult:
    match_left: list[int]   # right partner of each left vertex, -1 if unmatched
    match_right: list[int]  # left partner of each right vertex, -1 if unmatched

    @property
    def size(self) -> int:
        return sum(1 for x in self.match_left if x >= 0)

    def is_left_perfect(self) -> bool:
        return all(x >= 0 for x in self.match_left)


def hopcroft_karp(adj: Sequence[Sequence[int]], n_right: int) -> MatchingResult:
    """Maximum matching of a bipartite graph given by left adjacency lists."""
    n_left = len(adj)
    match_l = [-1] * n_left
    match_r = [-1] * n_right

    # greedy warm start
    for u in range(n_left):
        for v in adj[u]:
            if match_r[v] < 0:
                match_l[u] = v
                match_r[v] = u
                break

    dist = [0.0] * n_left

    def bfs() -> bool:
        q = deque()
        for u in range(n_left):
            if match_l[u] < 0:
                dist[u] = 0
                q.append(u)
            else:
                dist[u] = INF
        found = False
        while q:
            u = q.popleft()
            for v in adj[u]:
                w = match_r[v]
                if w < 0:
                    found = True
                elif dist[w] == INF:
                    dist[w] = dist[u] + 1
                    q.append(w)
        return found

    def dfs(root: int) -> bool:
        # iterative augmenting-path search along the BFS layering
        stack = [(root, iter(adj[root]))]
        path = []
        while stack:
            u, it = stack[-1]
            advanced = False
            for v in it:
                w = match_r[v]
                if w < 0:
                    path.append((u, v))
                    for pu, pv in path:
                        match_l[pu] = pv
                        match_r[pv] = pu
                    return True
                if dist[w] == dist[u] + 1:
                    path.append((u, v))
                    stack.append((w, iter(adj[w])))
                    advanced = True
                    break
            if not advanced:
                dist[u] = INF
                stack.pop()
                if path:
                    path.pop()
        return False

    while bfs():
        for u in range(n_left):
            if match_l[u] < 0:
                dfs(u)
    return MatchingResult(match_l, match_r)


def hall_violator(adj: Sequence[Sequence[int]], result: MatchingResult) -> list[int] | None:
    """Left set S with |N(S)| < |S|, or None if the matching saturates the left side.

    Built from alternating paths out of an unmatched left vertex (König).
    """
    free = [u for u, v in enumerate(result.match_left) if v < 0]
    if not free:
        return None
    root = free[0]
    seen_l = {root}
    seen_r = set()
    q = deque([root])
    while q:
        u = q.popleft()
        for v in adj[u]:
            if v in seen_r:
                continue
            seen_r.add(v)
            w = result.match_right[v]
            if w >= 0 and w not in seen_l:
                seen_l.add(w)
                q.append(w)
    return sorted(seen_l)


def verify_hall_violator(adj: Sequence[Sequence[int]], S: Sequence[int]) -> bool:
    nbrs = set()
    for u in S:
        nbrs.update(adj[u])
    return len(nbrs) < len(set(S))


def adjacency_lists(biadj: np.ndarray) -> list[list[int]]:
    return [np.flatnonzero(row).tolist() for row in np.asarray(biadj, dtype=bool)]
