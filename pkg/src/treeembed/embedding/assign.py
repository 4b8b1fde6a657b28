"""Chunk assignment, skeleton connections and the cardinality fix-up by relocation."""

from __future__ import annotations

import numpy as np

from ..hostprep import A_SIDE, B_SIDE
from ..tree import bfs_order
from .connect import connect_component
from .state import EmbeddingFailure, EmbeddingState, code, opposite


def _chunk_parts(ch, comps: dict) -> tuple[list[int], list[int]]:
    """(larger part, smaller part): the union of every component's larger/smaller class."""
    big, small = [], []
    for cid in ch.components:
        c0, c1 = comps[cid].classes
        if len(c0) >= len(c1):
            big += list(c0)
            small += list(c1)
        else:
            big += list(c1)
            small += list(c0)
    return big, small


def assign_chunks(S: EmbeddingState, chunks: dict, comps: dict, queue: list[int],
                  theta: float, cover_counts: dict | None = None) -> dict:
    """Hand chunks to pairs in imbalance order, larger part to the side with the larger gap.

    A pair stops receiving chunks once both designated sets reach the vacant
    cluster sizes.  Returns {chunk id: pair}.
    """
    assignment: dict[int, int] = {}
    per_pair = []
    drift_max = 0
    for i in range(1, S.K + 1):
        ca, cb = code(i, A_SIDE), code(i, B_SIDE)
        va, vb = int(S.vacant(ca).sum()), int(S.vacant(cb).sum())
        ta = tb = 0
        steps = 0
        pair_drift = 0
        while not (ta >= va and tb >= vb) and queue:
            cid = queue.pop(0)
            ch = chunks[cid]
            big, small = _chunk_parts(ch, comps)
            if va - ta >= vb - tb:
                S.target[big], S.target[small] = ca, cb
                ta, tb = ta + len(big), tb + len(small)
            else:
                S.target[big], S.target[small] = cb, ca
                ta, tb = ta + len(small), tb + len(big)
            assignment[cid] = i
            steps += 1
            pair_drift = max(pair_drift, abs(ta - tb))
        drift_max = max(drift_max, pair_drift)
        per_pair.append({"pair": i, "size": S.pair_size(i), "vacant": [va, vb],
                         "assigned": [ta, tb], "chunks": steps,
                         "drift": pair_drift, "gap": [va - ta, vb - tb]})
    unassigned = list(queue)
    bound = 3 * theta
    gaps_ok = all(abs(p["gap"][0]) <= bound and abs(p["gap"][1]) <= bound for p in per_pair)
    # clause 1: the imbalance spent on covering is matched by at most 3r of the next chunks
    clause1 = True
    if cover_counts:
        for i, (r, imb) in cover_counts.items():
            mine = [chunks[c].imbalance for c, p in assignment.items() if p == i]
            run, best = 0, abs(imb)
            for j, x in enumerate(mine[: 3 * r]):
                run += x
                best = min(best, abs(imb - run))
            clause1 &= best <= bound
    S.log["assign"] = {
        "pairs": per_pair, "threshold": theta, "bound": bound,
        "clause1_cover_matched": clause1,
        "clause2_drift": drift_max <= bound, "drift_max": drift_max,
        "clause3_all_assigned": not unassigned, "unassigned": unassigned,
        "clause4_gaps": gaps_ok,
    }
    if unassigned:
        raise EmbeddingFailure("assign", f"{len(unassigned)} chunks left unassigned")
    return assignment


def _designated(S: EmbeddingState, y: int) -> np.ndarray | None:
    c = S.target[y]
    return None if c < 0 else S.vacant(c)


def connect_component_to_skeleton(S: EmbeddingState, comp, rng: np.random.Generator) -> dict:
    """Fix the first levels of one assigned component and record restriction sets.

    Levels are measured from the attachment vertices.  Levels 0..2 are
    connected to the skeleton images, level 2 inside its designated cluster
    where possible, level 3 inside its designated cluster, and every
    neighbour of level 3 one level deeper gets C_y = common vacant
    neighbourhood inside its designated cluster.  Components of depth
    below 3 only get their attachment vertices fixed.
    """
    T = S.T
    within = np.zeros(T.n, dtype=bool)
    within[comp.vertices] = True
    roots = [x for x, _ in comp.attachments]
    order, parent, depth = bfs_order(T, roots, within)
    anchor = {x: s for x, s in comp.attachments}
    fixed_count = 0
    floor = S.C.d / 4
    shallow = int(depth[order].max()) < 3
    for x in (roots if shallow else []):
        # no level 3 to steer: fix the attachment vertex only, the rest is left restricted
        c = S.target[x]
        m = S.candidates(x, S.cluster_mask(c))
        if not m.any():
            m = S.candidates(x, ~S.used)
        idx = np.flatnonzero(m)
        if idx.size == 0:
            raise EmbeddingFailure("connect", f"component {comp.id}: no vacant neighbour for "
                                   f"attachment vertex {x}", {"level": 0})
        opp = S.vacant(opposite(S.cl[idx[0]])) if c < 0 else S.vacant(opposite(c))
        score = S.adj[np.ix_(idx, np.flatnonzero(opp))].sum(axis=1)
        pick = idx[score == score.max()]
        S.place(int(x), int(pick[rng.integers(pick.size)]))
        fixed_count += 1
    for x in ([] if shallow else roots):
        # the part of F hanging from x, cut at depth 2
        lv: list[list[int]] = [[x], [], []]
        gpar = {x: None}
        stack = [x]
        while stack:
            y = stack.pop()
            for z in T.adj[y]:
                if within[z] and parent[z] == y and depth[z] <= 2:
                    lv[int(depth[z])].append(z)
                    gpar[z] = y
                    stack.append(z)
        lv = [sorted(l) for l in lv if l]
        last = [y for y in lv[-1]]
        H = np.zeros(S.n, dtype=bool)
        for y in last:
            d = _designated(S, y)
            if d is not None:
                H |= d
        if not H.any():
            H = ~S.used
        S.note_W()
        out = connect_component(S.adj, int(S.phi[anchor[x]]), lv, gpar, H, S.used, rng,
                                prefer=lambda y: _designated(S, y))
        for y in [v for l in lv for v in l]:
            S.place(y, out[y])
            fixed_count += 1
    # level 3 inside the designated cluster
    for y in sorted((v for v in order if depth[v] == 3), key=lambda v: -len(T.adj[v])):
        c = S.target[y]
        m = S.candidates(y, S.cluster_mask(c))
        idx = np.flatnonzero(m)
        if idx.size == 0:
            raise EmbeddingFailure("connect", f"component {comp.id}: level-3 vertex {y} has no "
                                   f"vacant image in cluster {c}", {"level": 3})
        opp = S.vacant(opposite(c))
        score = S.adj[np.ix_(idx, np.flatnonzero(opp))].sum(axis=1)
        good = idx[score >= floor * opp.sum()]
        pick = good if good.size else idx[score == score.max()]
        S.place(y, int(pick[rng.integers(pick.size)]))
        fixed_count += 1
    restricted = []
    for y in order:
        if S.phi[y] >= 0 or not any(S.phi[z] >= 0 for z in T.adj[y]):
            continue
        c = S.target[y]
        Cy = S.candidates(y, S.cluster_mask(c))
        S.restrict[y] = Cy
        restricted.append(y)
    return {"component": comp.id, "fixed": fixed_count, "restricted": restricted}


def restriction_report(S: EmbeddingState, frac: float) -> dict:
    """Smallest |C_y| / (frac * |vacant designated cluster|) over restricted vertices."""
    worst, bad = None, []
    for y, Cy in S.restrict.items():
        c = S.target[y]
        live = Cy & S.vacant(c)
        # neighbours embedded after C_y was recorded must still be respected
        live = S.candidates(y, live)
        size = int(live.sum())
        need = frac * S.vacant(c).sum()
        ratio = size / need if need > 0 else float("inf")
        if worst is None or ratio < worst:
            worst = ratio
        if size < need - 1e-9:
            bad.append(int(y))
    return {"count": len(S.restrict), "worst_ratio": worst, "below": bad,
            "ok": not bad}


def connect_chunks(S: EmbeddingState, assignment: dict, chunks: dict, comps: dict) -> None:
    rng = S.rng("connect")
    recs = []
    for cid in assignment:
        for comp_id in chunks[cid].components:
            recs.append(connect_component_to_skeleton(S, comps[comp_id], rng))
    fixed = sum(r["fixed"] for r in recs)
    k = len(recs)
    D = S.C.D
    rep = restriction_report(S, S.C.d / 4)
    S.log["connect"] = {
        "components": k, "fixed": fixed, "fixed_bound": 3 * D ** 3 * k,
        "fixed_ok": fixed <= 3 * D ** 3 * k,
        "restricted": len(S.restrict), "restricted_bound": 3 * D ** 4 * k,
        "restricted_ok": len(S.restrict) <= 3 * D ** 4 * k,
        "restriction_sets": rep, "max_W": S.max_W, "W_bound": S.C.gamma * S.n / 10,
        "W_checks": S.W_checks, "W_over": S.W_over,
    }


# --- cardinality fix-up ----------------------------------------------------------

def _surplus(S: EmbeddingState) -> np.ndarray:
    return np.array([int(S.vacant(c).sum()) - S.outstanding(c) for c in range(2 * S.K)])


def final_balance(S: EmbeddingState, theta: float, m_min: int) -> None:
    """Move vacant host vertices by relocating triples until every cluster is exactly filled.

    Second and third vertices come from the vacant part untouched by both
    coin-flip halves; every moved vertex keeps at least ``reloc_floor`` of
    the vacant opposite cluster as neighbours.
    """
    rng = S.rng("relocate")
    G = S.adj
    gamma = S.C.gamma
    floor = S.C.relocation_floor()
    K2 = 2 * S.K
    avail = ~S.used & ~S.bal_half & ~S.cover_half
    in_restrict = np.zeros(S.n, dtype=bool)
    for Cy in S.restrict.values():
        in_restrict |= Cy
    moves, participation = [], np.zeros(K2, dtype=np.int64)
    start = _surplus(S)
    cap = int(np.abs(start).sum()) + 5
    for _ in range(cap):
        sur = _surplus(S)
        if not (sur != 0).any():
            break
        c2s = np.flatnonzero(sur < 0)
        c1s = np.flatnonzero(sur > 0)
        if not c2s.size or not c1s.size:
            raise EmbeddingFailure("final_balance", "vacancy and demand totals differ",
                                   {"surplus": sur.tolist()})
        done = False
        for c1 in c1s.tolist():
            for c2 in c2s.tolist():
                rec = _relocate_one(S, c1, c2, avail, in_restrict, gamma, floor, rng)
                if rec is not None:
                    moves.append(rec)
                    for c in {c1, rec["a"], rec["b"], c2}:
                        participation[c] += 1
                    done = True
                    break
            if done:
                break
        if not done:
            raise EmbeddingFailure("final_balance", f"no relocating triple from cluster {c1s[0]} "
                                   f"to cluster {c2s[0]}", {"from": int(c1s[0]), "to": int(c2s[0])})
    sur = _surplus(S)
    sizes = np.array([max(int(S.vacant(c).sum()), 1) for c in range(K2)])
    bound = 6 * theta * S.n / max(m_min, 1)
    rep = restriction_report(S, S.C.d / 5)
    S.log["final_balance"] = {
        "relocations": len(moves), "bound": bound, "within_bound": len(moves) <= bound,
        "start_surplus": start.tolist(), "exactly_filled": bool((sur == 0).all()),
        "participation": participation.tolist(),
        "participation_ok": bool((participation < S.C.eps ** 3 * sizes).all()),
        "restriction_sets": rep, "moves": moves,
    }
    if not (sur == 0).all():
        raise EmbeddingFailure("final_balance", "clusters not exactly filled",
                               {"surplus": sur.tolist()})


def _relocate_one(S: EmbeddingState, c1: int, c2: int, avail: np.ndarray, in_restrict: np.ndarray,
                  gamma: float, floor: float, rng: np.random.Generator) -> dict | None:
    G = S.adj
    K = S.K
    side = c2 % 2
    same = [code(j, side) for j in range(1, K + 1)]
    full = {c: S.cluster_mask(c) for c in range(2 * K)}
    vac = {c: S.vacant(c) for c in range(2 * K)}

    def ok_into(x_mask: np.ndarray, c: int) -> np.ndarray:
        """Vertices with gamma^3 of the opposite cluster and the floor share of its vacant part."""
        o = opposite(c)
        d_all = G[:, full[o]].sum(axis=1)
        d_vac = G[:, vac[o]].sum(axis=1)
        return x_mask & (d_all >= gamma ** 3 * full[o].sum()) & (d_vac >= floor * vac[o].sum())

    first_pool = np.flatnonzero(vac[c1])
    order = np.concatenate([first_pool[~in_restrict[first_pool]], first_pool[in_restrict[first_pool]]])
    w_ok = ok_into(avail.copy(), c2)
    for v in order.tolist():
        vm = np.zeros(S.n, dtype=bool)
        vm[v] = True
        options = []
        for a in same:
            if not ok_into(vm, a)[v]:
                continue
            for b in same:
                U = ok_into(avail & full[a], b)
                U[v] = False
                W = w_ok & full[b]
                W[v] = False
                cnt = int(U.sum()) * int(W.sum()) - int((U & W).sum())
                if cnt > 0:
                    options.append((a, b, U, W, cnt))
        if not options:
            continue
        wts = np.array([o[-1] for o in options], dtype=np.float64)
        a, b, U, W, _ = options[int(rng.choice(len(options), p=wts / wts.sum()))]
        Ui, Wi = np.flatnonzero(U), np.flatnonzero(W)
        while True:
            u, w = int(Ui[rng.integers(Ui.size)]), int(Wi[rng.integers(Wi.size)])
            if u != w:
                break
        # a vertex whose move keeps its cluster stays available
        for x, dest in ((v, a), (u, b), (w, c2)):
            if S.cl[x] != dest:
                avail[x] = False
        S.cl[v], S.cl[u], S.cl[w] = a, b, c2
        avail[v] = False
        return {"first": v, "second": u, "third": w, "from": c1, "a": a, "b": b, "to": c2}
    return None
