"""Non-extremality of host graphs.

G is gamma-non-extremal when e(A, B) > gamma n^2 for all A, B with
|A| = |B| = floor(n/2) (ordered pairs, overlaps counted twice). For a fixed A
the minimising B is the floor(n/2) vertices of smallest degree into A.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from itertools import combinations

import numpy as np

from .graph import Graph, as_mask, ordered_pair_count

EXACT_CAP = 16


class ExtremalityError(ValueError):
    pass


@dataclass
class ExtremalityVerdict:
    gamma: float
    mode: str
    nonextremal: bool
    witness: tuple[np.ndarray, np.ndarray] | None
    count: int            # smallest e(A, B) seen
    threshold: float      # gamma n^2
    trials: int = 0

    def to_dict(self) -> dict:
        return {
            "gamma": self.gamma,
            "mode": self.mode,
            "nonextremal": self.nonextremal,
            "count": self.count,
            "threshold": self.threshold,
            "trials": self.trials,
            "witness": None if self.witness is None
            else [self.witness[0].tolist(), self.witness[1].tolist()],
        }


def half(n: int) -> int:
    return n // 2


def best_partner(G: Graph, A: np.ndarray) -> tuple[np.ndarray, int]:
    """B of size floor(n/2) minimising e(A, B) for the given A."""
    h = half(G.n)
    into = G.adj[:, A].sum(axis=1)
    B = np.sort(np.argsort(into, kind="stable")[:h])
    return B, int(into[B].sum())


def check_nonextremal_exact(G: Graph, gamma: float, cap: int = EXACT_CAP) -> ExtremalityVerdict:
    if G.n > cap:
        raise ExtremalityError(f"exact check refused: n={G.n} exceeds cap {cap}")
    n, h = G.n, half(G.n)
    thr = gamma * n * n
    if n == 0:
        return ExtremalityVerdict(gamma, "exact", False, None, 0, thr)
    subsets = np.array(list(combinations(range(n), h)), dtype=np.int64)
    adj = G.adj.astype(np.int32)
    into = adj[:, subsets].sum(axis=2).T        # (subsets, n): deg(v, A)
    low = np.sort(into, axis=1)[:, :h].sum(axis=1)
    j = int(np.argmin(low))
    count = int(low[j])
    ok = count > thr
    witness = None
    if not ok:
        A = subsets[j]
        B, _ = best_partner(G, A)
        witness = (A, B)
    return ExtremalityVerdict(gamma, "exact", ok, witness, count, thr, len(subsets))


def _structured_candidates(G: Graph, rng: np.random.Generator, k: int):
    n, h = G.n, half(G.n)
    order = np.argsort(G.degrees, kind="stable")
    yield order[:h]
    for v in rng.choice(n, size=min(n, k), replace=False):
        v = int(v)
        nb = G.adj[v].copy()
        closed = nb.copy()
        closed[v] = True
        for base in (closed, ~nb):
            yield _fit(base, h, rng)
        # breadth-first ball around v
        seen = np.zeros(n, dtype=bool)
        seen[v] = True
        frontier = [v]
        out = [v]
        while len(out) < h and frontier:
            nxt = np.flatnonzero(G.adj[frontier].any(axis=0) & ~seen)
            seen[nxt] = True
            frontier = nxt.tolist()
            out.extend(frontier)
        yield np.sort(np.array(out[:h], dtype=np.int64)) if len(out) >= h else _fit(seen, h, rng)


def _fit(mask: np.ndarray, h: int, rng: np.random.Generator) -> np.ndarray:
    """Trim or pad a vertex set to exactly h vertices."""
    inside = np.flatnonzero(mask)
    if inside.size >= h:
        return np.sort(rng.choice(inside, size=h, replace=False))
    outside = np.flatnonzero(~mask)
    extra = rng.choice(outside, size=h - inside.size, replace=False)
    return np.sort(np.concatenate([inside, extra]))


def estimate_nonextremal(G: Graph, gamma: float, trials: int,
                         rng: np.random.Generator, polish: int = 3) -> ExtremalityVerdict:
    """Sampled search for a sparse half-by-half cut.

    Candidates: the low-degree half, closed neighbourhoods and their
    complements, BFS balls, and random halves. Each A is paired with its
    optimal B, then A is re-optimised against B a few times.
    """
    n, h = G.n, half(G.n)
    thr = gamma * n * n
    best_count = None
    tried = 0
    cands = list(_structured_candidates(G, rng, max(1, trials // 4)))
    while len(cands) < trials + 1:
        cands.append(np.sort(rng.choice(n, size=h, replace=False)))
    for A in cands:
        tried += 1
        B, c = best_partner(G, A)
        for _ in range(polish):
            if c <= thr:
                break
            # e(A, B) is symmetric, so re-optimise A against B
            A2, c2 = best_partner(G, B)
            if c2 >= c:
                break
            A = A2
            B, c = best_partner(G, A)
        if best_count is None or c < best_count:
            best_count = c
        if c <= thr:
            count = ordered_pair_count(G, A, B)
            return ExtremalityVerdict(gamma, "sampled", False, (A, B), count, thr, tried)
    return ExtremalityVerdict(gamma, "sampled", True, None, int(best_count), thr, tried)


def verify_extremal_witness(G: Graph, gamma: float, witness) -> bool:
    # supersets only add pairs, so a larger witness is still conclusive
    A, B = witness
    h = half(G.n)
    if len(set(A)) < h or len(set(B)) < h:
        return False
    return ordered_pair_count(G, A, B) <= gamma * G.n * G.n


def s_v_set(G: Graph, v: int, gamma: float) -> np.ndarray:
    """S_v = {u : deg(u, V - N(v)) < gamma n / 2}. Note V - N(v) contains v."""
    outside = ~G.adj[v]
    into = G.adj[:, outside].sum(axis=1)
    return np.flatnonzero(into < gamma * G.n / 2)


def check_bipartite_nonextremal(G: Graph, A, B, gamma: float, trials: int,
                                rng: np.random.Generator) -> tuple[bool, int]:
    """Sampled check that e(X, Y) >= gamma^2 n^2 / 50 for X ⊆ A, Y ⊆ B of size n/4.

    Returns (passed, smallest count seen). For X fixed the worst Y is the
    n/4 vertices of B with fewest neighbours in X.
    """
    n = G.n
    A = np.flatnonzero(as_mask(n, A))
    B = np.flatnonzero(as_mask(n, B))
    q = math.ceil(n / 4)
    if q > A.size or q > B.size:
        raise ExtremalityError("sides smaller than n/4")
    thr = gamma ** 2 * n * n / 50
    sub = G.adj[np.ix_(A, B)].astype(np.int32)
    worst = None
    for t in range(trials):
        if t == 0:
            X = np.argsort(sub.sum(axis=1), kind="stable")[:q]
        else:
            X = rng.choice(A.size, size=q, replace=False)
        counts = sub[X].sum(axis=0)
        c = int(np.sort(counts)[:q].sum())
        worst = c if worst is None else min(worst, c)
    return worst >= thr, int(worst)
