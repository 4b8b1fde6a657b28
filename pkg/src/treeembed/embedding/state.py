"""Mutable embedding state shared by the embedding phases."""

from __future__ import annotations

import numpy as np

from ..config import Constants
from ..graph import Graph
from ..hostprep import A_SIDE, Decomposition
from ..rng import substream
from ..tree import Tree


class EmbeddingFailure(RuntimeError):
    """A phase could not continue; ``phase`` tags the failure histogram."""

    def __init__(self, phase: str, msg: str, detail: dict | None = None):
        super().__init__(f"[{phase}] {msg}")
        self.phase = phase
        self.detail = detail or {}


def code(pair: int, side: int) -> int:
    """Cluster code of side ``side`` of pair ``pair`` (pairs are 1-based)."""
    return 2 * (pair - 1) + side


def pair_of(c: int) -> int:
    return c // 2 + 1


def side_of(c: int) -> int:
    return c % 2


def opposite(c: int) -> int:
    return c ^ 1


class EmbeddingState:
    """Partial injection phi: V(T) -> V(G) plus per-cluster host bookkeeping.

    Host vertex h lives in cluster ``cl[h]``; ``used`` marks images.
    Tree vertex y is designated to cluster ``target[y]`` once assigned.
    ``fixed`` is the forbidden set W of images fixed before the final phase.
    """

    def __init__(self, G: Graph, T: Tree, Dc: Decomposition, C: Constants, seed):
        if G.n != T.n:
            raise ValueError(f"host has {G.n} vertices, tree has {T.n}")
        self.G, self.T, self.Dc, self.C, self.seed = G, T, Dc, C, seed
        self.n = G.n
        self.K = Dc.K
        self.adj = G.adj
        cl = np.full(self.n, -1, dtype=np.int64)
        inside = Dc.cluster >= 1
        cl[inside] = 2 * (Dc.cluster[inside] - 1) + Dc.side[inside]
        self.spare_cluster = None
        if Dc.spare is not None:
            cl[Dc.spare] = self._best_cluster(Dc.spare, cl)
            self.spare_cluster = int(cl[Dc.spare])
        if (cl < 0).any():
            raise EmbeddingFailure("setup", f"{int((cl < 0).sum())} host vertices outside clusters")
        self.cl = cl
        self.regular = inside & (Dc.orig == Dc.cluster)
        self.irregular = ~self.regular
        self.bal_half = np.zeros(self.n, dtype=bool) if Dc.half is None else Dc.half.copy()
        self.cover_half = substream(seed, "cover-halves").random(self.n) < 0.5
        self.phi = np.full(T.n, -1, dtype=np.int64)
        self.used = np.zeros(self.n, dtype=bool)
        self.fixed = np.zeros(self.n, dtype=bool)
        self.target = np.full(T.n, -1, dtype=np.int64)
        self.restrict: dict[int, np.ndarray] = {}
        self.log: dict = {}
        self.max_W = 0
        self.W_checks = 0
        self.W_over = 0

    def _best_cluster(self, v: int, cl: np.ndarray) -> int:
        """Cluster whose opposite side receives the largest share of v's edges."""
        best, score = 0, -1.0
        for c in range(2 * self.K):
            opp = cl == opposite(c)
            share = self.adj[v, opp].sum() / max(opp.sum(), 1)
            if share > score + 1e-12:
                best, score = c, share
        return best

    # --- queries ---
    def rng(self, *names) -> np.random.Generator:
        return substream(self.seed, *names)

    def cluster_mask(self, c: int) -> np.ndarray:
        return self.cl == c

    def vacant(self, c: int | None = None) -> np.ndarray:
        if c is None:
            return ~self.used
        return (self.cl == c) & ~self.used

    def pair_size(self, i: int) -> int:
        return int((self.cl == code(i, A_SIDE)).sum())

    def embedded_neighbours(self, y: int) -> list[int]:
        return [z for z in self.T.adj[y] if self.phi[z] >= 0]

    def candidates(self, y: int, within: np.ndarray) -> np.ndarray:
        """Vacant hosts in ``within`` adjacent to every embedded tree neighbour of y."""
        m = within & ~self.used
        for z in self.T.adj[y]:
            if self.phi[z] >= 0:
                m = m & self.adj[self.phi[z]]
        return m

    def outstanding(self, c: int) -> int:
        """|T(c)|: assigned tree vertices still waiting for an image."""
        return int(((self.target == c) & (self.phi < 0)).sum())

    # --- updates ---
    def place(self, y: int, h: int, fixed: bool = True) -> None:
        if self.phi[y] >= 0:
            raise EmbeddingFailure("state", f"tree vertex {y} already mapped to {self.phi[y]}")
        if self.used[h]:
            raise EmbeddingFailure("state", f"host vertex {h} already used")
        for z in self.T.adj[y]:
            hz = self.phi[z]
            if hz >= 0 and not self.adj[h, hz]:
                raise EmbeddingFailure("state", f"tree edge ({y}, {z}) would map to non-edge ({h}, {hz})")
        self.phi[y] = h
        self.used[h] = True
        if fixed:
            self.fixed[h] = True

    def note_W(self) -> None:
        """Record |W| before a connection; the bound gamma n / 10 is a soft audit."""
        w = int(self.fixed.sum())
        self.max_W = max(self.max_W, w)
        self.W_checks += 1
        self.W_over += w > self.C.gamma * self.n / 10
