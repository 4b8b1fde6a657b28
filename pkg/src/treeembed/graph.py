"""Simple undirected graphs over vertices 0..n-1 with dense adjacency."""

from __future__ import annotations

from dataclasses import dataclass, field
from pathlib import Path
from typing import Iterable, Iterator

import numpy as np


class GraphError(ValueError):
    pass


@dataclass(frozen=True)
class Graph:
    """Undirected simple graph. ``adj`` is a symmetric bool matrix with a zero diagonal."""

    adj: np.ndarray
    degrees: np.ndarray = field(init=False, repr=False, compare=False)

    def __post_init__(self):
        adj = np.array(self.adj, dtype=bool, order="C", copy=True)
        adj.setflags(write=False)
        object.__setattr__(self, "adj", adj)
        deg = adj.sum(axis=1).astype(np.int64)
        deg.setflags(write=False)
        object.__setattr__(self, "degrees", deg)

    @property
    def n(self) -> int:
        return int(self.adj.shape[0])

    @property
    def num_edges(self) -> int:
        return int(self.degrees.sum()) // 2

    def neighbors(self, v: int) -> np.ndarray:
        """Sorted neighbor indices of ``v``."""
        return np.flatnonzero(self.adj[v])

    def has_edge(self, u: int, v: int) -> bool:
        return bool(self.adj[u, v])

    def min_degree(self) -> int:
        return int(self.degrees.min()) if self.n else 0

    def edges(self) -> Iterator[tuple[int, int]]:
        us, vs = np.nonzero(np.triu(self.adj, 1))
        for u, v in zip(us.tolist(), vs.tolist()):
            yield u, v

    def __eq__(self, other):
        return isinstance(other, Graph) and np.array_equal(self.adj, other.adj)

    def __hash__(self):
        return hash(self.adj.tobytes())


def build_graph(n: int, edges: Iterable[tuple[int, int]]) -> Graph:
    """Build a graph, ignoring duplicate edges. Loops and out-of-range ends raise."""
    if n < 0:
        raise GraphError(f"negative vertex count {n}")
    adj = np.zeros((n, n), dtype=bool)
    for u, v in edges:
        u, v = int(u), int(v)
        if not (0 <= u < n and 0 <= v < n):
            raise GraphError(f"edge ({u}, {v}) out of range for n={n}")
        if u == v:
            raise GraphError(f"loop at vertex {u}: edge ({u}, {v})")
        adj[u, v] = adj[v, u] = True
    return Graph(adj)


def graph_from_adjacency(adj: np.ndarray) -> Graph:
    adj = np.asarray(adj, dtype=bool)
    if adj.ndim != 2 or adj.shape[0] != adj.shape[1]:
        raise GraphError("adjacency must be square")
    if np.any(np.diag(adj)):
        v = int(np.flatnonzero(np.diag(adj))[0])
        raise GraphError(f"loop at vertex {v}: edge ({v}, {v})")
    if not np.array_equal(adj, adj.T):
        raise GraphError("adjacency must be symmetric")
    return Graph(adj.copy())


# --- vertex sets -----------------------------------------------------------

def vertex_set(n: int, members: Iterable[int] = ()) -> np.ndarray:
    """Bool mask of length ``n`` with the given members set."""
    mask = np.zeros(n, dtype=bool)
    idx = np.fromiter((int(x) for x in members), dtype=np.int64)
    if idx.size:
        if idx.min() < 0 or idx.max() >= n:
            raise GraphError(f"vertex out of range for n={n}")
        mask[idx] = True
    return mask


def as_mask(n: int, s) -> np.ndarray:
    """Accept a mask or an iterable of indices and return a mask."""
    if isinstance(s, np.ndarray) and s.dtype == bool:
        if s.shape != (n,):
            raise GraphError(f"vertex set has length {s.shape}, expected {n}")
        return s
    return vertex_set(n, s)


def members(mask: np.ndarray) -> np.ndarray:
    return np.flatnonzero(mask)


def deg_into(G: Graph, v: int, S) -> int:
    """Number of neighbors of ``v`` inside ``S``."""
    return int(np.count_nonzero(G.adj[v] & as_mask(G.n, S)))


def degrees_into(G: Graph, S) -> np.ndarray:
    """deg(u, S) for every vertex u."""
    S = as_mask(G.n, S)
    return G.adj[:, S].sum(axis=1).astype(np.int64)


def ordered_pair_count(G: Graph, A, B) -> int:
    """e(A, B) counted as ordered pairs (a, b), a in A, b in B, ab an edge.

    Edges inside A ∩ B are counted twice, as in the non-extremality condition.
    """
    A = members(as_mask(G.n, A))
    B = members(as_mask(G.n, B))
    if A.size == 0 or B.size == 0:
        return 0
    return int(G.adj[np.ix_(A, B)].sum())


@dataclass(frozen=True)
class BipartitePair:
    """Two disjoint vertex sets of a host graph, viewed through G[left, right]."""

    host: Graph
    left: np.ndarray
    right: np.ndarray

    def __post_init__(self):
        left = np.asarray(self.left, dtype=np.int64)
        right = np.asarray(self.right, dtype=np.int64)
        if left.size and right.size and np.intersect1d(left, right).size:
            raise GraphError("pair sides must be disjoint")
        if len(set(left.tolist())) != left.size or len(set(right.tolist())) != right.size:
            raise GraphError("pair sides must not repeat vertices")
        object.__setattr__(self, "left", left)
        object.__setattr__(self, "right", right)

    @classmethod
    def from_masks(cls, host: Graph, left: np.ndarray, right: np.ndarray) -> "BipartitePair":
        return cls(host, members(left), members(right))

    @property
    def biadjacency(self) -> np.ndarray:
        return self.host.adj[np.ix_(self.left, self.right)]

    @property
    def edge_count(self) -> int:
        return int(self.biadjacency.sum())

    def density(self) -> float:
        return bipartite_density(self)

    def left_degrees(self) -> np.ndarray:
        return self.biadjacency.sum(axis=1)

    def right_degrees(self) -> np.ndarray:
        return self.biadjacency.sum(axis=0)

    def sub(self, left_idx: np.ndarray, right_idx: np.ndarray) -> "BipartitePair":
        """Sub-pair from positional indices into ``left`` and ``right``."""
        return BipartitePair(self.host, self.left[left_idx], self.right[right_idx])


def bipartite_density(P: BipartitePair) -> float:
    if P.left.size == 0 or P.right.size == 0:
        return 0.0
    return P.edge_count / (P.left.size * P.right.size)


def bipartite_graph(biadj: np.ndarray) -> BipartitePair:
    """Pair whose host is the bipartite graph with the given biadjacency matrix."""
    biadj = np.asarray(biadj, dtype=bool)
    a, b = biadj.shape
    adj = np.zeros((a + b, a + b), dtype=bool)
    adj[:a, a:] = biadj
    adj[a:, :a] = biadj.T
    return BipartitePair(Graph(adj), np.arange(a), np.arange(a, a + b))


# --- file IO ---------------------------------------------------------------

def parse_graph(text: str) -> Graph:
    """Parse "n m" followed by m lines "u v"."""
    lines = [ln.split("#", 1)[0].strip() for ln in text.splitlines()]
    lines = [ln for ln in lines if ln]
    if not lines:
        raise GraphError("empty graph file")
    head = lines[0].split()
    if len(head) != 2:
        raise GraphError(f"malformed header {lines[0]!r}")
    n, m = int(head[0]), int(head[1])
    if len(lines) - 1 != m:
        raise GraphError(f"header promises {m} edges, found {len(lines) - 1}")
    edges = []
    for ln in lines[1:]:
        parts = ln.split()
        if len(parts) != 2:
            raise GraphError(f"malformed edge line {ln!r}")
        edges.append((int(parts[0]), int(parts[1])))
    return build_graph(n, edges)


def format_graph(G: Graph) -> str:
    edges = list(G.edges())
    out = [f"{G.n} {len(edges)}"]
    out.extend(f"{u} {v}" for u, v in edges)
    return "\n".join(out) + "\n"


def read_graph(path) -> Graph:
    return parse_graph(Path(path).read_text())


def write_graph(G: Graph, path) -> None:
    Path(path).write_text(format_graph(G))
