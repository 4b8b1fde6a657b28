"""Short connections through the host: rooted depth-3 trees and length-3 paths."""

from __future__ import annotations

from typing import Callable

import numpy as np

from .state import EmbeddingFailure


def _pick(cands: np.ndarray, score: np.ndarray | None, need: int, pref: np.ndarray | None,
          rng: np.random.Generator) -> int | None:
    idx = np.flatnonzero(cands)
    if idx.size == 0:
        return None
    if score is not None:
        s = score[idx]
        ok = idx[s >= need]
        if ok.size == 0:
            return int(idx[np.argmax(s)])
        idx = ok
    if pref is not None:
        p = idx[pref[idx]]
        if p.size:
            idx = p
    return int(idx[rng.integers(idx.size)])


def connect_component(adj: np.ndarray, u: int, levels: list[list[int]], parent: dict,
                      H: np.ndarray, W: np.ndarray, rng: np.random.Generator,
                      prefer: Callable[[int], np.ndarray | None] | None = None,
                      tries: int = 20) -> dict[int, int]:
    """Map a rooted tree of depth <= 3 with root image ``u``; the deepest level lands in H.

    ``levels[j]`` is level j + 1 below the root and ``parent[y]`` is y's parent
    (the root is ``None``). Images avoid W; intermediate levels may use H as well.
    Intermediate choices look ahead: a vertex on the level above the last
    prefers many free neighbours in H; two levels above, many neighbours in
    the set U of vertices with enough H-neighbours.
    """
    h = len(levels)
    if h == 0:
        return {}
    if h > 3:
        raise ValueError("connect_component handles at most three levels below the root")
    kids: dict = {}
    for lvl in levels:
        for y in lvl:
            kids.setdefault(parent[y], []).append(y)
    last_need = max((len(kids.get(y, [])) for y in levels[h - 2]), default=1) if h >= 2 else 1
    free = ~W
    inner = free
    Hf = H & free
    starved = 0
    for _ in range(tries):
        taken = np.zeros(adj.shape[0], dtype=bool)
        taken[u] = True
        out: dict[int, int] = {}
        ok = True
        for j, lvl in enumerate(levels, start=1):
            degH = adj[:, Hf & ~taken].sum(axis=1) if j == h - 1 else None
            if j == h - 2:
                U = inner & ~taken & (adj[:, Hf & ~taken].sum(axis=1) >= last_need)
                score = adj[:, U].sum(axis=1)
            else:
                score = degH
            # hardest first: vertices with more children go first
            for y in sorted(lvl, key=lambda z: -len(kids.get(z, []))):
                p = parent[y]
                base = u if p is None else out[p]
                pool = (Hf if j == h else inner) & ~taken & adj[base]
                pref = prefer(y) if prefer is not None else None
                need = len(kids.get(y, []))
                x = _pick(pool, score if j < h else None, need, pref, rng)
                if x is None:
                    ok = False
                    starved = max(starved, j)
                    break
                out[y] = x
                taken[x] = True
            if not ok:
                break
        if ok:
            return out
    raise EmbeddingFailure("connect", f"candidate pool exhausted at level {starved}",
                           {"level": starved})


def three_path(adj: np.ndarray, u: int, v: int, W: np.ndarray,
               rng: np.random.Generator | None = None) -> tuple[int, int]:
    """A path u - w1 - w2 - v with w1, w2 outside W and distinct from u, v."""
    if u == v:
        raise ValueError("endpoints must differ")
    ok = ~W.copy()
    ok[[u, v]] = False
    X = np.flatnonzero(adj[u] & ok)
    Y = np.flatnonzero(adj[v] & ok)
    if X.size == 0 or Y.size == 0:
        raise EmbeddingFailure("three_path", f"no length-3 path from {u} to {v} avoiding W")
    M = adj[np.ix_(X, Y)]
    hits = np.argwhere(M)
    if hits.size == 0:
        raise EmbeddingFailure("three_path", f"no length-3 path from {u} to {v} avoiding W")
    k = 0 if rng is None else int(rng.integers(len(hits)))
    a, b = hits[k]
    return int(X[a]), int(Y[b])
