"""Covering the irregular vertices of each pair with whole tree components."""

from __future__ import annotations

import numpy as np

from ..hostprep import A_SIDE
from ..tree import bfs_order
from .connect import connect_component, three_path
from .state import EmbeddingFailure, EmbeddingState, code

U_SET, OPP_R, SAME_R, OPP_GOOD = 0, 1, 2, 3   # cycle: U_A -> B_R -> A_R -> B~ -> U_A


class CoverSets:
    """Vacant views of one pair while covering the irregulars on side ``sigma``."""

    def __init__(self, S: EmbeddingState, i: int, sigma: int):
        self.S, self.i, self.sigma = S, i, sigma
        self.cu, self.co = code(i, sigma), code(i, 1 - sigma)
        self.refresh()

    def refresh(self):
        S = self.S
        self.U = S.vacant(self.cu) & S.irregular
        self.AR = S.vacant(self.cu) & S.regular & S.cover_half
        self.BR = S.vacant(self.co) & S.regular & S.cover_half
        thr = max(S.C.gamma ** 3 * self.U.sum() / 10, 1.0)
        self.Bt = self.BR & (S.adj[:, self.U].sum(axis=1) >= thr)

    def cycle(self, idx: int) -> tuple[np.ndarray, np.ndarray | None]:
        """(primary set, fallback) for a level whose cycle index is ``idx``."""
        if idx == U_SET:
            return self.U, self.AR
        if idx == OPP_R:
            return self.BR, None
        if idx == SAME_R:
            return self.AR, None
        return self.Bt, self.BR

    def score(self, idx: int) -> np.ndarray | None:
        """Look-ahead score: A_R vertices are ranked by their vacant neighbours in B~."""
        if idx == SAME_R:
            return self.S.adj[:, self.Bt].sum(axis=1)
        return None


def choose_tau(levels: list[list[int]]) -> int:
    """Residue class t of levels (mod 4) holding the most vertices; ties to the smallest t."""
    counts = [sum(len(levels[j]) for j in range(t, len(levels), 4)) for t in range(4)]
    return int(np.argmax(counts))


def _rooted_levels(S: EmbeddingState, root: int, within: np.ndarray):
    order, parent, depth = bfs_order(S.T, [root], within)
    levels: list[list[int]] = [[] for _ in range(int(depth[order[-1]]) + 1)]
    for v in order:
        levels[int(depth[v])].append(v)
    return levels, parent


def embed_single(S: EmbeddingState, cs: CoverSets, root: int, anchor: int, within: np.ndarray,
                 rng: np.random.Generator) -> int:
    """Single-attachment routine: connect to ``anchor`` then zigzag; returns tau."""
    levels, parent = _rooted_levels(S, root, within)
    tau = choose_tau(levels)
    h = min(2, len(levels) - 1)
    cs.refresh()
    idx = (h - tau) % 4
    primary, fallback = cs.cycle(idx)
    sc = cs.score(idx)
    H = primary.copy()
    if sc is not None:
        need = max(1, S.T.max_degree - 1)
        good = H & (sc >= need)
        if good.any():
            H = good
    if not H.any() and fallback is not None:
        H = fallback.copy()
    pool = int(min(S.C.pool_size(), H.sum()))
    if pool < H.sum():
        keep = rng.choice(np.flatnonzero(H), size=pool, replace=False)
        H = np.zeros_like(H)
        H[keep] = True
    gam = [[root]] + levels[1:h + 1]
    gpar = {root: None}
    for lvl in levels[1:h + 1]:
        for y in lvl:
            gpar[y] = int(parent[y])
    S.note_W()
    out = connect_component(S.adj, int(S.phi[anchor]), gam, gpar, H, S.used, rng)
    for y in [v for lvl in gam for v in lvl]:
        S.place(y, out[y])
    sizes = {}
    for lvl in levels:
        for y in lvl:
            sizes[y] = 1
    for lvl in reversed(levels[1:]):
        for y in lvl:
            sizes[int(parent[y])] = sizes.get(int(parent[y]), 1) + sizes[y]
    for ell in range(h + 1, len(levels)):
        cs.refresh()
        idx = (ell - tau) % 4
        primary, fallback = cs.cycle(idx)
        sc = cs.score(idx)
        for y in sorted(levels[ell], key=lambda z: -sizes[z]):
            need = len(S.T.adj[y]) - 1
            m = S.candidates(y, primary)
            if not m.any() and fallback is not None:
                m = S.candidates(y, fallback)
            idxs = np.flatnonzero(m)
            if idxs.size == 0:
                raise EmbeddingFailure("cover", f"pair {cs.i}: no vacant image for level {ell} "
                                       f"(cycle set {idx})", {"pair": cs.i})
            if sc is not None:
                ok = idxs[sc[idxs] >= need]
                if ok.size:
                    idxs = ok
            S.place(y, int(idxs[rng.integers(idxs.size)]))
    return tau


def embed_component_cover(S: EmbeddingState, cs: CoverSets, comp, rng: np.random.Generator) -> dict:
    """Embed one component so that a quarter of it lands on irregular vertices."""
    T = S.T
    within = np.zeros(T.n, dtype=bool)
    within[comp.vertices] = True
    U0 = cs.U.copy()
    taus = []
    if len(comp.attachments) == 1 or comp.line is None:
        x, s = comp.attachments[0]
        taus.append(embed_single(S, cs, x, s, within, rng))
        if len(comp.attachments) == 2:
            raise EmbeddingFailure("cover", f"component {comp.id} has two attachments but no line")
    else:
        line = comp.line
        xs = line[1:-1]
        s_end = line[-1]
        x1, xt1, xt = xs[0], xs[-2], xs[-1]
        first = within.copy()
        first[[xt1, xt]] = False
        order, _, _ = bfs_order(T, [x1], first)
        f1 = np.zeros(T.n, dtype=bool)
        f1[order] = True
        taus.append(embed_single(S, cs, x1, line[0], f1, rng))
        S.note_W()
        w1, w2 = three_path(S.adj, int(S.phi[xs[-3]]), int(S.phi[s_end]), S.used, rng)
        S.place(xt1, w1)
        S.place(xt, w2)
        rest = within & ~f1
        rest[[xt1, xt]] = False
        for hub in (xt1, xt):
            for y in T.adj[hub]:
                if rest[y] and S.phi[y] < 0:
                    order, _, _ = bfs_order(T, [y], rest)
                    sub = np.zeros(T.n, dtype=bool)
                    sub[order] = True
                    taus.append(embed_single(S, cs, y, hub, sub, rng))
                    rest &= ~sub
    imgs = S.phi[comp.vertices]
    if (imgs < 0).any():
        raise EmbeddingFailure("cover", f"component {comp.id} left partly unembedded")
    covered = int(U0[imgs].sum())
    D = S.C.D
    bound = comp.size / 4 - 2 * D * D
    return {"component": comp.id, "size": comp.size, "covered": covered, "bound": bound,
            "ok": covered >= bound - 1e-9, "tau": taus, "pair": cs.i, "side": "AB"[cs.sigma]}


def cover_irregulars(S: EmbeddingState, chunks: list, comps: dict, queue: list[int]) -> list[int]:
    """Phase-two covering; consumes chunks from the front of ``queue`` (imbalance order).

    Returns the consumed chunk ids and writes per-component audits to the log.
    """
    eps = S.C.eps
    records, events, used_chunks = [], [], []
    per_pair = {}
    rng = S.rng("cover")
    for i in range(1, S.K + 1):
        m = S.pair_size(i)
        for sigma in (A_SIDE, 1 - A_SIDE):
            cs = CoverSets(S, i, sigma)
            irr0 = int((S.cluster_mask(cs.cu) & S.irregular).sum())
            ar0, br0 = int(cs.AR.sum()), int(cs.BR.sum())
            irr_opp = int((S.cluster_mask(cs.co) & S.irregular).sum())
            used_here = 0
            while cs.U.sum() > eps ** 3 * m and queue:
                ch = chunks[queue[0]]
                # a side receives at most the larger colour class of the chunk
                take = (ch.size + ch.imbalance) / 2
                if (cs.AR.sum() - take < ar0 - 5 * irr0) or (cs.BR.sum() - take < br0 - 5 * irr_opp):
                    events.append({"pair": i, "side": "AB"[sigma], "event": "stopped before chunk",
                                   "chunk": ch.id, "vacant_irregular": int(cs.U.sum())})
                    break
                queue.pop(0)
                used_chunks.append(ch.id)
                used_here += 1
                for cid in ch.components:
                    records.append(embed_component_cover(S, cs, comps[cid], rng))
                cs.refresh()
            per_pair[f"{i}{'AB'[sigma]}"] = {"irregular": irr0, "chunks": used_here,
                                              "left": int(cs.U.sum()), "limit": eps ** 3 * m}
    S.log["cover"] = {"components": records, "events": events, "chunks": used_chunks,
                      "pairs": per_pair,
                      "coverage_ok": all(r["ok"] for r in records)}
    return used_chunks
