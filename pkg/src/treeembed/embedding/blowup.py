"""Final phase: randomized greedy placement inside the pairs plus a matching finish."""

from __future__ import annotations

import numpy as np

from ..graph import BipartitePair
from ..matching import hall_violator, hopcroft_karp
from ..regularity import super_regularity
from ..tree import bfs_order
from .state import EmbeddingFailure, EmbeddingState, code


def _choose_buffer(S: EmbeddingState, rest: np.ndarray, rng: np.random.Generator) -> np.ndarray:
    """Independent set of unembedded tree vertices, about buffer_frac of each cluster's demand.

    Leaves go first since their candidate sets are the largest.  Restricted
    vertices stay out: their C_y predates the final relocations, so they are
    placed greedily while their sets are still large.
    """
    T = S.T
    X = np.zeros(T.n, dtype=bool)
    blocked = np.zeros(T.n, dtype=bool)
    blocked[list(S.restrict)] = True
    frac = S.C.buffer_frac
    for c in range(2 * S.K):
        mine = np.flatnonzero(rest & (S.target == c))
        quota = int(round(frac * mine.size))
        if quota == 0:
            continue
        deg = T.degrees[mine]
        mine = mine[np.lexsort((rng.random(mine.size), deg))]
        taken = 0
        for y in mine.tolist():
            if taken >= quota:
                break
            if blocked[y]:
                continue
            X[y] = True
            blocked[y] = True
            for z in T.adj[y]:
                blocked[z] = True
            taken += 1
    return X


def blowup_embed(S: EmbeddingState, audit_trials: int = 100) -> None:
    """Complete phi: greedy hardest-first on non-buffer vertices, then per-cluster matchings."""
    T, adj = S.T, S.adj
    rng = S.rng("blowup")
    rest = S.phi < 0
    if (S.target[rest] < 0).any():
        raise EmbeddingFailure("blowup", "unembedded tree vertices without a designated cluster")
    # pre-check: the vacant pairs keep their degree floor and pass the sampled audit
    pre = []
    eps = min(9 * S.C.eps, 0.999)
    delta = max(S.C.d / 4 - S.C.eps, 0.0)
    arng = S.rng("blowup-audit")
    for i in range(1, S.K + 1):
        A, B = S.vacant(code(i, 0)), S.vacant(code(i, 1))
        if A.sum() == 0 or B.sum() == 0:
            pre.append({"pair": i, "vacant": [int(A.sum()), int(B.sum())], "super_regular": None})
            continue
        ver = super_regularity(BipartitePair.from_masks(S.G, A, B), eps, delta, mode="sampled",
                               trials=audit_trials, rng=arng)
        pre.append({"pair": i, "vacant": [int(A.sum()), int(B.sum())],
                    "super_regular": ver.super_regular, "min_degree_fraction":
                    [ver.min_left_degree / max(B.sum(), 1), ver.min_right_degree / max(A.sum(), 1)]})
    X = _choose_buffer(S, rest, rng)
    # subtree sizes inside the unembedded forest, for hardest-first ordering
    roots = []
    seen = np.zeros(T.n, dtype=bool)
    restricted_first = sorted(y for y in S.restrict if rest[y])
    for y in restricted_first + np.flatnonzero(rest).tolist():
        if not seen[y]:
            order, _, _ = bfs_order(T, [y], rest)
            seen[order] = True
            roots.append(y)
    order, parent, depth = bfs_order(T, roots, rest)
    size = np.ones(T.n, dtype=np.int64)
    for y in reversed(order):
        if parent[y] >= 0:
            size[parent[y]] += size[y]
    order = sorted(order, key=lambda y: (depth[y], -size[y], y))
    greedy_steps = 0
    for y in order:
        if X[y]:
            continue
        c = S.target[y]
        within = S.cluster_mask(c)
        if y in S.restrict:
            within = within & S.restrict[y]
        cand = np.flatnonzero(S.candidates(y, within))
        if cand.size == 0:
            raise EmbeddingFailure("blowup", f"greedy dead end at tree vertex {y} (cluster {c})",
                                   {"vertex": int(y)})
        # keep the buffer neighbours of y alive: maximise their worst candidate count
        bufs = [z for z in T.adj[y] if X[z]]
        if bufs:
            worst = None
            for z in bufs:
                wz = S.cluster_mask(S.target[z])
                if z in S.restrict:
                    wz = wz & S.restrict[z]
                cz = S.candidates(z, wz)
                cnt = adj[np.ix_(cand, np.flatnonzero(cz))].sum(axis=1)
                worst = cnt if worst is None else np.minimum(worst, cnt)
            top = cand[worst >= max(1, np.quantile(worst, 0.5))]
            if top.size:
                cand = top
        S.place(int(y), int(cand[rng.integers(cand.size)]), fixed=False)
        greedy_steps += 1
    # matching finish, one cluster at a time
    matched = 0
    for c in range(2 * S.K):
        ys = np.flatnonzero(X & (S.target == c) & (S.phi < 0))
        hs = np.flatnonzero(S.vacant(c))
        if ys.size != hs.size:
            raise EmbeddingFailure("blowup", f"cluster {c}: {ys.size} buffer vertices for "
                                   f"{hs.size} vacant hosts")
        if ys.size == 0:
            continue
        col = {int(h): j for j, h in enumerate(hs.tolist())}
        lists = []
        for y in ys.tolist():
            within = S.cluster_mask(c)
            if y in S.restrict:
                within = within & S.restrict[y]
            m = S.candidates(y, within)
            lists.append([col[int(h)] for h in np.flatnonzero(m)])
        res = hopcroft_karp(lists, hs.size)
        if not res.is_left_perfect():
            bad = hall_violator(lists, res)
            nb = sorted({j for k in bad for j in lists[k]})
            raise EmbeddingFailure("blowup", f"cluster {c}: Hall violator of {len(bad)} buffer "
                                   f"vertices with {len(nb)} candidates",
                                   {"violator": [int(ys[k]) for k in bad],
                                    "neighbours": [int(hs[j]) for j in nb]})
        for k, y in enumerate(ys.tolist()):
            S.place(y, int(hs[res.match_left[k]]), fixed=False)
            matched += 1
    S.log["blowup"] = {"pairs": pre, "buffer": int(X.sum()), "greedy": greedy_steps,
                       "matched": matched,
                       "restricted_inside": all(S.restrict[y][S.phi[y]] for y in S.restrict)}
