"""Host preparation: random split, r-factor, cluster pairs and balancing."""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field

import numpy as np

from .config import Constants
from .extremal import estimate_nonextremal
from .graph import BipartitePair, Graph
from .matching import adjacency_lists, hall_violator, hopcroft_karp
from .regularity import super_regularity
from .rng import substream

DECOMP_VERSION = 1
A_SIDE, B_SIDE = 0, 1


class PreconditionError(ValueError):
    pass


class SplitAuditError(RuntimeError):
    def __init__(self, vertex: int, degree: int, into: tuple[int, int], bound: float):
        super().__init__(f"vertex {vertex} (degree {degree}) has {into} neighbours in (A, B), "
                         f"below {bound:.2f}")
        self.vertex = vertex


class RFactorError(RuntimeError):
    def __init__(self, round_: int, violator: list[int], neighbours: list[int]):
        super().__init__(f"round {round_}: Hall violator of size {len(violator)} "
                         f"with {len(neighbours)} neighbours")
        self.round = round_
        self.violator = violator
        self.neighbours = neighbours


class DecompositionError(RuntimeError):
    def __init__(self, failures: list[str]):
        super().__init__("; ".join(failures))
        self.failures = failures


class BalanceError(RuntimeError):
    pass


# --- random split ------------------------------------------------------------

@dataclass
class Bipartition:
    A: np.ndarray          # sorted host ids
    B: np.ndarray
    spare: int | None
    audit: dict = field(default_factory=dict)


def min_degree_ok(G: Graph, nu: float) -> bool:
    return G.n == 0 or G.min_degree() >= (0.5 - nu) * G.n - 1e-9


def split_violations(G: Graph, A: np.ndarray, B: np.ndarray, nu: float) -> list[int]:
    """Vertices with deg(v, A) or deg(v, B) below floor(deg(v)/2 - nu n)."""
    bound = np.floor(G.degrees / 2 - nu * G.n + 1e-9)
    dA = G.adj[:, A].sum(axis=1)
    dB = G.adj[:, B].sum(axis=1)
    return np.flatnonzero((dA < bound) | (dB < bound)).tolist()


def random_split(G: Graph, nu: float, rng: np.random.Generator, max_retries: int = 20,
                 strict: bool = True) -> Bipartition:
    """Coin-flip split into equal halves, resampled until every vertex keeps half its degree.

    With ``strict`` an unresolved violation raises; otherwise the split with
    the fewest violators is returned and the violators are reported.
    """
    n = G.n
    if not min_degree_ok(G, nu):
        raise PreconditionError(f"min degree {G.min_degree()} below (1/2 - {nu}) * {n}")
    spare = 0 if n % 2 else None
    rest = np.arange(1 if spare is not None else 0, n)
    best = None
    for attempt in range(1, max_retries + 1):
        heads = rng.random(rest.size) < 0.5
        A, B = rest[heads], rest[~heads]
        # move the lowest-index extras of the larger side across
        k = 0
        if A.size > B.size:
            k = (A.size - B.size) // 2
            A, B = A[k:], np.sort(np.concatenate([B, A[:k]]))
        elif B.size > A.size:
            k = (B.size - A.size) // 2
            B, A = B[k:], np.sort(np.concatenate([A, B[:k]]))
        viol = split_violations(G, A, B, nu)
        if best is None or len(viol) < len(best[2]):
            best = (A, B, viol, attempt, k)
        if not viol:
            break
    A, B, viol, attempt, moved = best
    if viol and strict:
        v = viol[0]
        bound = math.floor(G.degrees[v] / 2 - nu * n + 1e-9)
        raise SplitAuditError(v, int(G.degrees[v]),
                              (int(G.adj[v, A].sum()), int(G.adj[v, B].sum())), bound)
    audit = {"attempts": attempt, "violations": len(viol), "violators": viol[:20],
             "moved": moved}
    return Bipartition(A, B, spare, audit)


# --- r-factor ------------------------------------------------------------------

@dataclass
class RFactor:
    pair: BipartitePair
    matchings: list[np.ndarray]   # matchings[k][j] = position in right matched to left j

    @property
    def r(self) -> int:
        return len(self.matchings)

    def support(self) -> np.ndarray:
        """Biadjacency of the union of the matchings."""
        a = self.pair.left.size
        M = np.zeros((a, self.pair.right.size), dtype=bool)
        for m in self.matchings:
            M[np.arange(a), m] = True
        return M


def find_r_factor(P: BipartitePair, r: int) -> RFactor:
    """r edge-disjoint perfect matchings by repeated maximum matching with deletion."""
    a, b = P.left.size, P.right.size
    if a != b:
        raise PreconditionError(f"unbalanced pair {a}x{b}")
    if r < 0:
        raise ValueError("r must be non-negative")
    residual = P.biadjacency.copy()
    out = []
    for k in range(r):
        adj = adjacency_lists(residual)
        res = hopcroft_karp(adj, b)
        if not res.is_left_perfect():
            S = hall_violator(adj, res)
            nb = sorted({v for u in S for v in adj[u]})
            raise RFactorError(k, P.left[S].tolist(), P.right[nb].tolist())
        m = np.array(res.match_left, dtype=np.int64)
        residual[np.arange(a), m] = False
        out.append(m)
    return RFactor(P, out)


def audit_r_factor(F: RFactor) -> dict:
    """Exact audit: perfect, pairwise edge-disjoint, host edges, union r-regular."""
    P = F.pair
    a = P.left.size
    Mh = P.biadjacency
    perfect = all(np.unique(m).size == a for m in F.matchings)
    in_host = all(Mh[np.arange(a), m].all() for m in F.matchings)
    count = np.zeros((a, P.right.size), dtype=np.int64)
    for m in F.matchings:
        count[np.arange(a), m] += 1
    disjoint = bool((count <= 1).all())
    regular = bool((count.sum(axis=1) == F.r).all() and (count.sum(axis=0) == F.r).all())
    return {"r": F.r, "perfect": perfect, "host_edges": in_host, "edge_disjoint": disjoint,
            "r_regular": regular, "ok": perfect and in_host and disjoint and regular}


# --- decomposition -----------------------------------------------------------

@dataclass
class Decomposition:
    """Cluster structure on A ∪ B.

    ``cluster[v]`` is the current pair index (1..K) or 0 for exceptional;
    ``orig[v]`` is the cluster at decomposition time, so A'_i are vertices
    with cluster == orig == i and A''_i those with cluster == i != orig.
    """

    n: int
    side: np.ndarray          # A_SIDE / B_SIDE, -1 for the spare
    orig: np.ndarray
    cluster: np.ndarray
    K: int
    eps: float                # regularity parameter of the pairs
    d: float                  # degree floor of the pairs
    pairs: list[dict] = field(default_factory=list)
    half: np.ndarray | None = None   # coin-flip halves (True = in S)
    log: list[dict] = field(default_factory=list)
    spare: int | None = None
    audit: dict = field(default_factory=dict)

    def copy(self) -> "Decomposition":
        return Decomposition.from_dict(json.loads(json.dumps(self.to_dict())))

    def mask(self, i: int, side: int) -> np.ndarray:
        return (self.cluster == i) & (self.side == side)

    def regular_mask(self, i: int, side: int) -> np.ndarray:
        return self.mask(i, side) & (self.orig == i)

    def irregular_mask(self, i: int, side: int) -> np.ndarray:
        return self.mask(i, side) & (self.orig != i)

    def sizes(self) -> tuple[np.ndarray, np.ndarray]:
        a = np.array([self.mask(i, A_SIDE).sum() for i in range(self.K + 1)])
        b = np.array([self.mask(i, B_SIDE).sum() for i in range(self.K + 1)])
        return a, b

    def exceptional(self) -> np.ndarray:
        return np.flatnonzero((self.cluster == 0) & (self.side >= 0))

    def pair(self, G: Graph, i: int, regular_only: bool = False) -> BipartitePair:
        f = self.regular_mask if regular_only else self.mask
        return BipartitePair.from_masks(G, f(i, A_SIDE), f(i, B_SIDE))

    # -- serialization --
    def to_dict(self) -> dict:
        return {
            "version": DECOMP_VERSION,
            "n": self.n, "K": self.K, "eps": self.eps, "d": self.d,
            "side": self.side.tolist(), "orig": self.orig.tolist(), "cluster": self.cluster.tolist(),
            "half": None if self.half is None else self.half.astype(int).tolist(),
            "pairs": self.pairs, "log": self.log, "spare": self.spare, "audit": self.audit,
        }

    @classmethod
    def from_dict(cls, data: dict) -> "Decomposition":
        if data.get("version") != DECOMP_VERSION:
            raise ValueError(f"unsupported decomposition version {data.get('version')}")
        half = None if data["half"] is None else np.array(data["half"], dtype=bool)
        return cls(data["n"], np.array(data["side"], dtype=np.int64),
                   np.array(data["orig"], dtype=np.int64), np.array(data["cluster"], dtype=np.int64),
                   data["K"], data["eps"], data["d"], data["pairs"], half, data["log"],
                   data["spare"], data["audit"])

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), sort_keys=True)

    @classmethod
    def from_json(cls, text: str) -> "Decomposition":
        return cls.from_dict(json.loads(text))


def _clean(G: Graph, X: np.ndarray, Y: np.ndarray, d0: float):
    """Peel low-degree vertices and trim to equal sides; returns (X, Y, removed)."""
    removed = []
    while True:
        M = G.adj[np.ix_(X, Y)]
        dx, dy = M.sum(axis=1), M.sum(axis=0)
        keep_x = dx >= d0 * Y.size - 1e-9
        keep_y = dy >= d0 * X.size - 1e-9
        changed = False
        if not keep_x.all() or not keep_y.all():
            removed += X[~keep_x].tolist() + Y[~keep_y].tolist()
            X, Y = X[keep_x], Y[keep_y]
            changed = True
        if X.size != Y.size:
            M = G.adj[np.ix_(X, Y)]
            if X.size > Y.size:
                order = np.argsort(M.sum(axis=1), kind="stable")[: X.size - Y.size]
                removed += X[order].tolist()
                X = np.delete(X, order)
            else:
                order = np.argsort(M.sum(axis=0), kind="stable")[: Y.size - X.size]
                removed += Y[order].tolist()
                Y = np.delete(Y, order)
            changed = True
        if not changed or X.size == 0 or Y.size == 0:
            return X, Y, removed


def _bisect(G: Graph, X: np.ndarray, Y: np.ndarray, iters: int = 20):
    """Two-way clustering of rows by neighbourhood similarity, columns follow by density."""
    M = G.adj[np.ix_(X, Y)].astype(np.float64)
    deg = M.sum(axis=1)
    if deg.max() == 0:
        return None
    r1 = int(np.argmax(deg))
    sim = (M @ M[r1]) / np.sqrt(np.maximum(deg, 1) * max(deg[r1], 1))
    r2 = int(np.argmin(sim))
    c = np.stack([M[r1], M[r2]])
    lab = None
    for _ in range(iters):
        dist = ((M[:, None, :] - c[None, :, :]) ** 2).sum(axis=2)
        new = np.argmin(dist, axis=1)
        if lab is not None and np.array_equal(new, lab):
            break
        lab = new
        if (lab == 0).all() or (lab == 1).all():
            return None
        c = np.stack([M[lab == 0].mean(axis=0), M[lab == 1].mean(axis=0)])
    groups_x = [X[lab == 0], X[lab == 1]]
    dens = np.stack([M[lab == j].mean(axis=0) for j in (0, 1)])   # density of each y into X_j
    col = np.argmax(dens, axis=0)
    groups_y = [Y[col == 0], Y[col == 1]]
    if min(g.size for g in groups_x + groups_y) == 0:
        return None
    return (groups_x[0], groups_y[0]), (groups_x[1], groups_y[1])


def decompose(P: BipartitePair, eps0: float, d0: float, rng: np.random.Generator, *,
              eps_prime: float | None = None, min_cluster: int = 20,
              exceptional_budget: float | None = None, max_K: int = 16,
              audit_trials: int = 150, strict: bool = True) -> Decomposition:
    """Cluster pairs for G[A, B] whose audits meet the decomposition contract.

    A candidate pair whose sampled super-regularity audit fails is bisected
    by neighbourhood similarity and both halves are retried.  Accepted pairs
    are peeled (degree below d0 times the other side) and trimmed to equal
    sides before the final audit.
    """
    G = P.host
    eps = (64 * eps0) ** 0.2 if eps_prime is None else eps_prime
    budget = 8 * d0 ** (1 / 3) if exceptional_budget is None else exceptional_budget
    total = P.left.size + P.right.size
    queue = [(np.sort(P.left), np.sort(P.right))]
    accepted: list[tuple[np.ndarray, np.ndarray, dict]] = []
    exceptional: list[int] = []
    splits = 0
    while queue:
        X, Y = queue.pop(0)
        room = len(accepted) + len(queue) + 2 <= max_K
        if room and min(X.size, Y.size) >= 2 * min_cluster:
            # split on the raw pair: peeling first would strip a mixed pair of its structure
            raw = super_regularity(BipartitePair(G, X, Y), eps, max(d0 - 3 * eps, 0.0),
                                   mode="sampled", trials=audit_trials, rng=rng)
            halves = None if raw.super_regular else _bisect(G, X, Y)
            if halves is not None:
                splits += 1
                queue.extend(halves)
                continue
        X, Y, out = _clean(G, X, Y, d0)
        exceptional += out
        if min(X.size, Y.size) < min_cluster:
            exceptional += X.tolist() + Y.tolist()
            continue
        ver = super_regularity(BipartitePair(G, X, Y), eps, max(d0 - 3 * eps, 0.0),
                               mode="sampled", trials=audit_trials, rng=rng)
        accepted.append((X, Y, ver.to_dict()))

    n = G.n
    side = np.full(n, -1, dtype=np.int64)
    side[P.left] = A_SIDE
    side[P.right] = B_SIDE
    cluster = np.full(n, -1, dtype=np.int64)
    cluster[P.left] = 0
    cluster[P.right] = 0
    pairs = []
    for i, (X, Y, ver) in enumerate(accepted, start=1):
        cluster[X] = i
        cluster[Y] = i
        sub = G.adj[np.ix_(X, Y)]
        pairs.append({
            "m": int(X.size), "density": float(sub.mean()),
            "delta": float(min(sub.sum(axis=1).min() / Y.size, sub.sum(axis=0).min() / X.size)),
            "audit": ver,
        })
    Dc = Decomposition(n, side, cluster.copy(), cluster, len(accepted), eps, d0, pairs)
    clauses = decomposition_clauses(Dc, G, min_cluster, budget * total)
    Dc.audit = {"splits": splits, "exceptional": len(exceptional), "budget": budget * total,
                "clauses": clauses}
    failures = [f"{k} {where}" for k, where in clauses.items() if where]
    if failures and strict:
        raise DecompositionError(failures)
    return Dc


def decomposition_clauses(Dc: Decomposition, G: Graph, min_cluster: int, budget: float) -> dict:
    """Output contract of the decomposition; each entry lists the failing pairs (empty = pass)."""
    a, b = Dc.sizes()
    exc = int(a[0] + b[0])
    out = {
        "i_partition": [] if ((Dc.cluster >= 0) == (Dc.side >= 0)).all() else ["all"],
        "ii_exceptional_budget": [] if exc <= budget and Dc.K >= 1 else [f"{exc}>{budget:.1f}"],
        "iii_min_cluster": [i for i in range(1, Dc.K + 1) if min(a[i], b[i]) < min_cluster],
        "iv_balanced": [i for i in range(1, Dc.K + 1) if abs(a[i] - b[i]) > 2 * Dc.eps ** 2 * a[i]],
        "v_super_regular": [i for i, p in enumerate(Dc.pairs, start=1)
                            if not p["audit"]["super_regular"]],
    }
    return out


# --- relocating triples and balancing ------------------------------------------

class _Degrees:
    """deg(x, opposite cluster j) for the current clusters of one side type."""

    def __init__(self, G: Graph, Dc: Decomposition, side: int):
        self.G, self.Dc, self.side = G, Dc, side
        self.refresh()

    def refresh(self):
        Dc = self.Dc
        opp = 1 - self.side
        ind = np.zeros((Dc.n, Dc.K + 1), dtype=np.float32)
        m = (Dc.side == opp) & (Dc.cluster >= 1)
        ind[np.flatnonzero(m), Dc.cluster[m]] = 1
        self.deg = self.G.adj.astype(np.float32) @ ind      # (n, K+1)
        self.size = ind.sum(axis=0)

    def qual(self, gamma: float) -> np.ndarray:
        return self.deg >= gamma ** 3 * self.size[None, :] - 1e-6


def _triple_sets(Dc: Decomposition, Q: np.ndarray, v: int, target: int, side: int,
                 free: np.ndarray):
    """For each (s, t): candidate second vertices U_st and third vertices W_t."""
    K = Dc.K
    out = []
    for s in range(1, K + 1):
        if not Q[v, s]:
            continue
        cs = free & (Dc.cluster == s) & (Dc.side == side)
        for t in range(1, K + 1):
            U = cs & Q[:, t]
            W = free & (Dc.cluster == t) & (Dc.side == side) & Q[:, target]
            nu, nw = int(U.sum()), int(W.sum())
            cnt = nu * nw - int((U & W).sum())
            if cnt > 0:
                out.append((s, t, U, W, cnt))
    return out


def find_relocating_paths(G: Graph, Dc: Decomposition, v: int, target: int, side: int,
                          gamma: float, restrict_to: np.ndarray | None = None,
                          limit: int = 10, exclude: np.ndarray | None = None):
    """Greedy pairwise-disjoint relocating triples (v, u, w) towards cluster ``target``.

    Returns (triples, shortfall) with triples as dicts carrying s and t.
    """
    Q = _Degrees(G, Dc, side).qual(gamma)
    free = np.ones(Dc.n, dtype=bool) if restrict_to is None else restrict_to.copy()
    if exclude is not None:
        free &= ~exclude
    free[v] = False
    found = []
    for s in range(1, Dc.K + 1):
        if not Q[v, s]:
            continue
        for t in range(1, Dc.K + 1):
            while len(found) < limit:
                U = np.flatnonzero(free & (Dc.cluster == s) & (Dc.side == side) & Q[:, t])
                W = np.flatnonzero(free & (Dc.cluster == t) & (Dc.side == side) & Q[:, target])
                pair = next(((u, w) for u in U.tolist() for w in W.tolist() if u != w), None)
                if pair is None:
                    break
                u, w = pair
                free[u] = free[w] = False
                found.append({"first": v, "second": u, "third": w, "s": s, "t": t,
                              "target": target, "side": side})
    return found, len(found) < limit


def check_triple(G: Graph, Dc: Decomposition, tr: dict, gamma: float) -> bool:
    """Independent re-check of the four relocating-triple conditions."""
    v, u, w, s, t, i, side = (tr[k] for k in ("first", "second", "third", "s", "t", "target", "side"))
    if len({u, v, w}) != 3:
        return False
    opp = 1 - side

    def big(x, j):
        B = Dc.mask(j, opp)
        return G.adj[x, B].sum() >= gamma ** 3 * B.sum() - 1e-6

    return (big(v, s) and Dc.mask(s, side)[u] and big(u, t)
            and Dc.mask(t, side)[w] and big(w, i))


def apply_moves(Dc: Decomposition, moves) -> None:
    for x, _, to in moves:
        Dc.cluster[x] = to


def _relocate(G, Dc, deg, v, target, side, gamma, avail, rng, step):
    Q = deg.qual(gamma)
    sets = _triple_sets(Dc, Q, v, target, side, avail & Dc.half & (np.arange(Dc.n) != v))
    if not sets:
        return None
    weights = np.array([c for *_, c in sets], dtype=np.float64)
    k = int(rng.choice(len(sets), p=weights / weights.sum()))
    s, t, U, W, _ = sets[k]
    Ui, Wi = np.flatnonzero(U), np.flatnonzero(W)
    while True:
        u, w = int(rng.choice(Ui)), int(rng.choice(Wi))
        if u != w:
            break
    moves = [(v, int(Dc.cluster[v]), s), (u, s, t), (w, t, target)]
    apply_moves(Dc, moves)
    # a vertex whose move keeps its cluster is not really used by the triple
    for x, frm, to in moves:
        if frm != to:
            avail[x] = False
    avail[v] = False
    deg.refresh()
    rec = {"step": step, "first": v, "second": u, "third": w, "s": s, "t": t,
           "target": target, "side": side, "moves": [list(m) for m in moves]}
    Dc.log.append(rec)
    return rec


def balance(G: Graph, Dc: Decomposition, gamma: float, rng_halves: np.random.Generator,
            rng_triples: np.random.Generator) -> Decomposition:
    """Empty the exceptional sets and balance every pair via relocating triples."""
    Dc = Dc.copy()
    Dc.log = []
    n = Dc.n
    in_cluster = (Dc.cluster >= 1)
    coins = rng_halves.random(n) < 0.5
    Dc.half = in_cluster & coins
    avail = np.ones(n, dtype=bool)
    v0 = len(Dc.exceptional())
    degs = {A_SIDE: _Degrees(G, Dc, A_SIDE), B_SIDE: _Degrees(G, Dc, B_SIDE)}
    steps = 0
    cap = 4 * n + 10
    while steps < cap:
        steps += 1
        a, b = Dc.sizes()
        surplus = a[1:] - b[1:]
        A0 = np.flatnonzero(Dc.mask(0, A_SIDE))
        B0 = np.flatnonzero(Dc.mask(0, B_SIDE))
        if A0.size:
            defic = np.flatnonzero(surplus < 0)
            target = int(defic[0]) + 1 if defic.size else int(np.argmin(surplus)) + 1
            step, side, firsts = (1 if defic.size else 2), A_SIDE, A0
        elif B0.size:
            sur = np.flatnonzero(surplus > 0)
            if not sur.size:
                raise BalanceError("B_0 non-empty but no pair has a surplus")
            target, step, side, firsts = int(sur[0]) + 1, 3, B_SIDE, B0
        else:
            sur, defic = np.flatnonzero(surplus > 0), np.flatnonzero(surplus < 0)
            if not sur.size or not defic.size:
                break
            i, target = int(sur[0]) + 1, int(defic[0]) + 1
            firsts = np.flatnonzero(Dc.regular_mask(i, A_SIDE) & Dc.half & avail)
            step, side = 4, A_SIDE
        rec = None
        for v in firsts.tolist():
            rec = _relocate(G, Dc, degs[side], v, target, side, gamma, avail, rng_triples, step)
            if rec is not None:
                break
        if rec is None:
            raise BalanceError(f"no available relocating triple for step {step} towards "
                               f"cluster {target} on side {'AB'[side]}")
    Dc.audit = dict(Dc.audit)
    Dc.audit["balance"] = {
        "relocations": len(Dc.log), "exceptional_before": v0,
        "bound": v0 + 2 * Dc.eps ** 2 * n,
        "within_bound": len(Dc.log) <= v0 + 2 * Dc.eps ** 2 * n,
    }
    return Dc


def replay(pre: Decomposition, log: list[dict]) -> Decomposition:
    """Re-apply a relocation log to a pre-balance decomposition."""
    out = pre.copy()
    for rec in log:
        apply_moves(out, [tuple(m) for m in rec["moves"]])
    return out


# --- composition ---------------------------------------------------------------

def gdecomp_audit(G: Graph, Dc: Decomposition, gamma: float, rng: np.random.Generator,
                  trials: int = 150, min_cluster: int = 1) -> dict:
    """Five clauses of the prepared-host contract, re-derived from the cluster arrays."""
    a, b = Dc.sizes()
    K = Dc.K
    c1 = [i for i in range(1, K + 1) if a[i] != b[i] or a[i] < min_cluster]
    c2 = [] if (a[0] == 0 and b[0] == 0) else ["exceptional non-empty"]
    c3, c4, c5 = [], [], []
    for i in range(1, K + 1):
        m = a[i]
        irrA, irrB = Dc.irregular_mask(i, A_SIDE), Dc.irregular_mask(i, B_SIDE)
        if irrA.sum() > gamma ** 4 * m + 1e-9 or irrB.sum() > gamma ** 4 * m + 1e-9:
            c3.append(i)
        P = Dc.pair(G, i, regular_only=True)
        ver = super_regularity(P, min(2 * Dc.eps, 0.999), Dc.d / 3, mode="sampled",
                               trials=trials, rng=rng)
        if not ver.super_regular:
            c4.append(i)
        regA, regB = Dc.regular_mask(i, A_SIDE), Dc.regular_mask(i, B_SIDE)
        for v in np.flatnonzero(irrA):
            if G.adj[v, regB].sum() < gamma ** 3 * regB.sum() / 3 - 1e-9:
                c5.append(int(v))
        for v in np.flatnonzero(irrB):
            if G.adj[v, regA].sum() < gamma ** 3 * regA.sum() / 3 - 1e-9:
                c5.append(int(v))
    irr = {i: [int(Dc.irregular_mask(i, A_SIDE).sum()), int(Dc.irregular_mask(i, B_SIDE).sum())]
           for i in range(1, K + 1)}
    return {"clause1_balanced": c1, "clause2_split": c2, "clause3_few_irregular": c3,
            "clause4_super_regular": c4, "clause5_irregular_degrees": c5, "irregular": irr}


def preprocess_host(G: Graph, C: Constants, seed, *, check_gate: bool = True,
                    strict_decompose: bool = True) -> tuple[Decomposition, dict]:
    """random_split -> r-factor -> decompose -> balance, with every audit recorded."""
    report: dict = {"hierarchy": C.hierarchy()}
    if not min_degree_ok(G, C.nu):
        raise PreconditionError(f"min degree {G.min_degree()} below (1/2 - {C.nu}) * {G.n}")
    if check_gate:
        gate = estimate_nonextremal(G, C.gamma, C.extremality_trials, substream(seed, "gate"))
        report["gate"] = gate.to_dict()
        if not gate.nonextremal:
            raise PreconditionError("host is gamma-extremal: witness found")
    split = random_split(G, C.nu, substream(seed, "split"), C.split_retries,
                         strict=C.strict_split_audit)
    report["split"] = split.audit
    P = BipartitePair(G, split.A, split.B)
    r = int(math.floor(C.nu * G.n))
    try:
        F = find_r_factor(P, r)
        report["r_factor"] = audit_r_factor(F)
    except RFactorError as e:
        report["r_factor"] = {"r": r, "ok": False, "round": e.round, "violator": e.violator}
    Dc = decompose(P, C.eps ** 5 / 64, C.d, substream(seed, "decompose"), eps_prime=C.eps,
                   min_cluster=C.min_cluster, exceptional_budget=C.exceptional_fraction(),
                   max_K=C.max_K, audit_trials=C.regularity_trials, strict=strict_decompose)
    report["decompose"] = Dc.audit
    Dc = balance(G, Dc, C.gamma, substream(seed, "halves"), substream(seed, "triples"))
    Dc.spare = split.spare
    report["balance"] = Dc.audit["balance"]
    report["gdecomp"] = gdecomp_audit(G, Dc, C.gamma, substream(seed, "gdecomp"),
                                      C.regularity_trials, C.min_cluster)
    Dc.audit["gdecomp"] = report["gdecomp"]
    return Dc, report
