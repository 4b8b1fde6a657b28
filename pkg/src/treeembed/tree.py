"""Trees on vertices 0..n-1 rooted at 0."""

from __future__ import annotations

from collections import deque
from dataclasses import dataclass, field
from pathlib import Path
from typing import Iterable, Sequence

import numpy as np


class TreeError(ValueError):
    pass


@dataclass(frozen=True)
class Tree:
    """Tree given by adjacency lists; ``parent`` is the BFS parent from vertex 0."""

    adj: tuple[tuple[int, ...], ...]
    parent: np.ndarray = field(repr=False, compare=False)

    @property
    def n(self) -> int:
        return len(self.adj)

    @property
    def degrees(self) -> np.ndarray:
        return np.array([len(a) for a in self.adj], dtype=np.int64)

    @property
    def max_degree(self) -> int:
        return max((len(a) for a in self.adj), default=0)

    def edges(self) -> list[tuple[int, int]]:
        return [(u, v) for u in range(self.n) for v in self.adj[u] if u < v]

    def neighbors(self, v: int) -> tuple[int, ...]:
        return self.adj[v]


def tree_from_edges(n: int, edges: Iterable[tuple[int, int]]) -> Tree:
    if n < 1:
        raise TreeError("a tree needs at least one vertex")
    adj: list[list[int]] = [[] for _ in range(n)]
    count = 0
    for u, v in edges:
        u, v = int(u), int(v)
        if not (0 <= u < n and 0 <= v < n) or u == v:
            raise TreeError(f"bad tree edge ({u}, {v})")
        adj[u].append(v)
        adj[v].append(u)
        count += 1
    if count != n - 1:
        raise TreeError(f"a tree on {n} vertices has {n - 1} edges, got {count}")
    parent = np.full(n, -1, dtype=np.int64)
    seen = np.zeros(n, dtype=bool)
    seen[0] = True
    q = deque([0])
    while q:
        u = q.popleft()
        for v in adj[u]:
            if not seen[v]:
                seen[v] = True
                parent[v] = u
                q.append(v)
    if not seen.all():
        raise TreeError("edges do not connect all vertices")
    parent.setflags(write=False)
    return Tree(tuple(tuple(sorted(a)) for a in adj), parent)


def tree_from_parents(parents: Sequence[int]) -> Tree:
    """parents[i-1] is the parent of vertex i, for i = 1..n-1."""
    n = len(parents) + 1
    return tree_from_edges(n, [(i, int(p)) for i, p in enumerate(parents, start=1)])


def parse_tree(text: str) -> Tree:
    lines = [ln.split("#", 1)[0].strip() for ln in text.splitlines()]
    lines = [ln for ln in lines if ln]
    if not lines:
        raise TreeError("empty tree file")
    n = int(lines[0])
    if len(lines) - 1 != n - 1:
        raise TreeError(f"expected {n - 1} parent lines, found {len(lines) - 1}")
    return tree_from_parents([int(x) for x in lines[1:]])


def format_tree(T: Tree) -> str:
    return "\n".join([str(T.n)] + [str(int(T.parent[i])) for i in range(1, T.n)]) + "\n"


def read_tree(path) -> Tree:
    return parse_tree(Path(path).read_text())


def write_tree(T: Tree, path) -> None:
    Path(path).write_text(format_tree(T))


def bfs_order(T: Tree, roots: Sequence[int], within: np.ndarray | None = None):
    """BFS from ``roots`` restricted to ``within``. Returns (order, parent, depth) dicts as arrays."""
    n = T.n
    inside = np.ones(n, dtype=bool) if within is None else within
    parent = np.full(n, -1, dtype=np.int64)
    depth = np.full(n, -1, dtype=np.int64)
    order = []
    q = deque()
    for r in roots:
        if depth[r] < 0:
            depth[r] = 0
            q.append(r)
    while q:
        u = q.popleft()
        order.append(u)
        for v in T.adj[u]:
            if inside[v] and depth[v] < 0:
                depth[v] = depth[u] + 1
                parent[v] = u
                q.append(v)
    return order, parent, depth


def components_of(T: Tree, within: np.ndarray) -> list[list[int]]:
    """Connected components of T[within], each sorted, ordered by smallest vertex."""
    seen = ~within.copy()
    comps = []
    for s in np.flatnonzero(within).tolist():
        if seen[s]:
            continue
        seen[s] = True
        comp = [s]
        stack = [s]
        while stack:
            u = stack.pop()
            for v in T.adj[u]:
                if not seen[v]:
                    seen[v] = True
                    comp.append(v)
                    stack.append(v)
        comps.append(sorted(comp))
    return comps


def is_tree(n: int, edges: Sequence[tuple[int, int]]) -> bool:
    try:
        tree_from_edges(n, edges)
    except TreeError:
        return False
    return True
