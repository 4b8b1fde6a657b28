"""Host and tree generators, including the two extremal families as negative controls."""

from __future__ import annotations

import heapq
import warnings
from dataclasses import dataclass, field

import numpy as np

from .graph import Graph, graph_from_adjacency
from .tree import Tree, tree_from_edges, tree_from_parents

HOST_MODELS = ("gnp_mindeg", "ideal_blocks", "two_cliques", "complete_bipartite", "near_extremal")
TREE_MODELS = ("random_bounded", "complete_ternary", "path", "caterpillar", "broom")


class GenerationError(RuntimeError):
    pass


@dataclass
class HostSpec:
    model: str
    n: int
    params: dict = field(default_factory=dict)

    @classmethod
    def from_dict(cls, d: dict) -> "HostSpec":
        d = dict(d)
        return cls(d.pop("model"), int(d.pop("n")), d)

    def to_dict(self) -> dict:
        return {"model": self.model, "n": self.n, **self.params}


@dataclass
class TreeSpec:
    model: str
    n: int
    params: dict = field(default_factory=dict)

    @classmethod
    def from_dict(cls, d: dict) -> "TreeSpec":
        d = dict(d)
        return cls(d.pop("model"), int(d.pop("n")), d)

    def to_dict(self) -> dict:
        return {"model": self.model, "n": self.n, **self.params}


# --- hosts ---------------------------------------------------------------------

def _symmetric(upper: np.ndarray) -> np.ndarray:
    U = np.triu(upper, 1)
    return U | U.T


def gnp_mindeg(n: int, p: float, nu: float, rng: np.random.Generator,
               max_tries: int = 1000) -> Graph:
    """G(n, p) resampled until the min degree is at least (1/2 - nu) n."""
    floor = (0.5 - nu) * n
    for _ in range(max_tries):
        A = _symmetric(rng.random((n, n)) < p)
        if A.sum(axis=1).min() >= floor - 1e-9:
            return graph_from_adjacency(A)
    raise GenerationError(f"no G({n}, {p}) sample reached min degree {floor:.1f} "
                          f"in {max_tries} tries")


def two_cliques(n: int) -> Graph:
    h = n // 2
    A = np.zeros((n, n), dtype=bool)
    A[:h, :h] = True
    A[h:, h:] = True
    np.fill_diagonal(A, False)
    return graph_from_adjacency(A)


def complete_bipartite(n: int) -> Graph:
    h = n // 2
    A = np.zeros((n, n), dtype=bool)
    A[:h, h:] = True
    A[h:, :h] = True
    return graph_from_adjacency(A)


def ideal_blocks(n: int, blocks: int, rng: np.random.Generator, p: float = 1.0,
                 cross: float = 0.5, exceptional: int = 0, exc_density: float = 0.55) -> Graph:
    """Planted cluster structure.

    Vertices are cut into ``blocks`` left groups and as many right groups;
    left group j and right group j are joined with density ``p`` and every
    other pair of vertices with density ``cross``.  The last ``exceptional``
    vertices are then rewired to a uniform density ``exc_density``.
    """
    R = rng.random((n, n))
    labels = np.arange(n) % (2 * blocks)          # left j: 2j, right j: 2j+1
    perm = rng.permutation(n)
    lab = np.empty(n, dtype=np.int64)
    lab[perm] = labels
    pair = lab // 2
    opposite = (pair[:, None] == pair[None, :]) & (lab[:, None] != lab[None, :])
    A = _symmetric(np.where(opposite, R < p, R < cross))
    if exceptional:
        exc = perm[-exceptional:]
        Rx = rng.random((exceptional, n)) < exc_density
        A[exc, :] = Rx
        A[:, exc] = Rx.T
        A[np.ix_(exc, exc)] = _symmetric(Rx[:, exc])
        np.fill_diagonal(A, False)
    return graph_from_adjacency(A)


def near_extremal(n: int, mix: float, rng: np.random.Generator, base: str = "two_cliques") -> Graph:
    """Rewire a ``mix`` fraction of an extremal graph towards a random graph of equal size.

    Each within-structure edge is dropped with probability ``mix`` and each
    absent cross pair is added with the probability that keeps the edge
    count in expectation.
    """
    G0 = two_cliques(n) if base == "two_cliques" else complete_bipartite(n)
    A = np.triu(G0.adj, 1)
    present = np.triu(np.ones((n, n), dtype=bool), 1)
    have = A.sum()
    absent = present.sum() - have
    q = mix * have / max(absent, 1)
    R = rng.random((n, n))
    new = np.where(A, R >= mix, R < q) & present
    return graph_from_adjacency(_symmetric(new))


def gen_host(spec: HostSpec, rng: np.random.Generator) -> Graph:
    p = spec.params
    if spec.model == "gnp_mindeg":
        return gnp_mindeg(spec.n, p.get("p", 0.55), p.get("nu", 0.0002), rng,
                          p.get("max_tries", 1000))
    if spec.model == "ideal_blocks":
        return ideal_blocks(spec.n, p.get("blocks", 1), rng, p.get("p", 1.0), p.get("cross", 0.5),
                            p.get("exceptional", 0), p.get("exc_density", 0.55))
    if spec.model == "two_cliques":
        return two_cliques(spec.n)
    if spec.model == "complete_bipartite":
        return complete_bipartite(spec.n)
    if spec.model == "near_extremal":
        return near_extremal(spec.n, p.get("mix", 0.1), rng, p.get("base", "two_cliques"))
    raise ValueError(f"unknown host model {spec.model!r}; choose from {HOST_MODELS}")


# --- trees ---------------------------------------------------------------------

def decode_pruefer(seq: list[int], n: int) -> Tree:
    deg = np.ones(n, dtype=np.int64)
    for v in seq:
        deg[v] += 1
    leaves = [v for v in range(n) if deg[v] == 1]
    heapq.heapify(leaves)
    edges = []
    for v in seq:
        leaf = heapq.heappop(leaves)
        edges.append((leaf, v))
        deg[v] -= 1
        if deg[v] == 1:
            heapq.heappush(leaves, v)
    edges.append((heapq.heappop(leaves), heapq.heappop(leaves)))
    return tree_from_edges(n, edges)


def random_bounded(n: int, D: int, rng: np.random.Generator) -> Tree:
    """Random tree with max degree D from a Prüfer sequence drawn under a degree budget.

    Each sequence entry is uniform over the vertices that still have room,
    so every vertex appears at most D - 1 times.
    """
    if n <= 2:
        return tree_from_edges(n, [(0, 1)] if n == 2 else [])
    if D < 2:
        raise ValueError("D must be at least 2 for trees with more than 2 vertices")
    budget = np.full(n, D - 1)
    open_ = list(range(n))                               # vertices with budget left
    seq = []
    for _ in range(n - 2):
        k = int(rng.integers(len(open_)))
        v = open_[k]
        seq.append(v)
        budget[v] -= 1
        if budget[v] == 0:
            last = open_[-1]
            open_[k] = last
            open_.pop()
    return decode_pruefer(seq, n)


def complete_ternary(n: int) -> Tree:
    """Heap-ordered ternary tree: children of i are 3i+1, 3i+2, 3i+3."""
    h, full = 0, 1
    while full < n:
        h += 1
        full = (3 ** (h + 1) - 1) // 2
    if full != n:
        warnings.warn(f"complete ternary tree needs n = (3^(h+1)-1)/2; "
                      f"truncating the height-{h} tree to {n} vertices", stacklevel=2)
    return tree_from_parents([(i - 1) // 3 for i in range(1, n)])


def path_tree(n: int) -> Tree:
    return tree_from_parents(list(range(n - 1)))


def caterpillar(n: int, D: int) -> Tree:
    """Spine where every vertex gets D - 2 leaves while vertices remain."""
    parents = []
    spine = 0
    v = 1
    while v < n:
        parents.append(spine)              # next spine vertex
        nxt = v
        v += 1
        for _ in range(D - 2):
            if v >= n:
                break
            parents.append(spine)
            v += 1
        spine = nxt
    return tree_from_parents(parents[: n - 1])


def broom(n: int, D: int) -> Tree:
    """Path whose far end carries D - 1 leaves."""
    bristles = min(D - 1, n - 1)
    handle = n - bristles
    parents = list(range(handle - 1)) + [handle - 1] * bristles
    return tree_from_parents(parents)


def gen_tree(spec: TreeSpec, rng: np.random.Generator) -> Tree:
    p = spec.params
    D = p.get("D", 3)
    if spec.model == "random_bounded":
        T = random_bounded(spec.n, D, rng)
    elif spec.model == "complete_ternary":
        T = complete_ternary(spec.n)
        D = max(D, 4)
    elif spec.model == "path":
        T = path_tree(spec.n)
    elif spec.model == "caterpillar":
        T = caterpillar(spec.n, D)
    elif spec.model == "broom":
        T = broom(spec.n, D)
    else:
        raise ValueError(f"unknown tree model {spec.model!r}; choose from {TREE_MODELS}")
    if T.n > 1 and T.max_degree > max(D, 2):
        raise GenerationError(f"{spec.model} produced max degree {T.max_degree} > {D}")
    return T
