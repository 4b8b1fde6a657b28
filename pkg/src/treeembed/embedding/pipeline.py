"""End-to-end embedding: host and tree preparation followed by the three phases."""

from __future__ import annotations

import json
import time
from dataclasses import dataclass, field

import numpy as np

from ..config import Constants
from ..extremal import estimate_nonextremal, verify_extremal_witness
from ..graph import Graph
from ..hostprep import (A_SIDE, BalanceError, DecompositionError, PreconditionError,
                        SplitAuditError, min_degree_ok, preprocess_host)
from ..rng import derive_seed, substream
from ..tree import Tree, bfs_order, components_of
from ..treeprep import SkeletonError, build_skeleton, form_chunks
from .assign import assign_chunks, connect_chunks, final_balance
from .blowup import blowup_embed
from .cover import cover_irregulars
from .state import EmbeddingFailure, EmbeddingState, code
from .verify import verify_embedding

EMBEDDING_VERSION = 1


def jsonable(x):
    """Recursively convert numpy scalars and arrays into plain Python values."""
    if isinstance(x, dict):
        return {str(k): jsonable(v) for k, v in x.items()}
    if isinstance(x, (list, tuple)):
        return [jsonable(v) for v in x]
    if isinstance(x, np.ndarray):
        return jsonable(x.tolist())
    if isinstance(x, np.bool_):
        return bool(x)
    if isinstance(x, np.integer):
        return int(x)
    if isinstance(x, np.floating):
        return float(x)
    return x


@dataclass
class Embedding:
    success: bool
    phi: list[int] | None
    seed: int
    attempts: int = 0
    failures: dict = field(default_factory=dict)     # phase -> count
    errors: list[str] = field(default_factory=list)
    log: dict = field(default_factory=dict)
    verdict: dict | None = None

    def to_dict(self) -> dict:
        return jsonable({"version": EMBEDDING_VERSION, "success": self.success, "phi": self.phi,
                         "seed": self.seed, "attempts": self.attempts, "failures": self.failures,
                         "errors": self.errors, "log": self.log, "verdict": self.verdict})

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), sort_keys=True)

    @classmethod
    def from_dict(cls, d: dict) -> "Embedding":
        if d.get("version") != EMBEDDING_VERSION:
            raise ValueError(f"unsupported embedding version {d.get('version')}")
        return cls(d["success"], d["phi"], d["seed"], d.get("attempts", 0), d.get("failures", {}),
                   d.get("errors", []), d.get("log", {}), d.get("verdict"))


def tree_colouring(T: Tree) -> np.ndarray:
    order, _, depth = bfs_order(T, [0])
    return (depth % 2).astype(np.int64)


def embed_skeleton(S: EmbeddingState, td) -> int:
    """Greedy alternating placement of the skeleton forest into the largest pair."""
    T = S.T
    sizes = [S.pair_size(i) for i in range(1, S.K + 1)]
    p1 = int(np.argmax(sizes)) + 1
    m1 = sizes[p1 - 1]
    mask = td.skeleton_mask()
    colour = tree_colouring(T)
    rng = S.rng("skeleton")
    comps = sorted(components_of(T, mask), key=lambda c: (-len(c), c[0]))
    load = [0, 0]
    for comp in comps:
        n0 = int((colour[comp] == 0).sum())
        n1 = len(comp) - n0
        # colour 0 goes to side A unless flipping balances the load better
        flip = abs(load[0] + n1 - load[1] - n0) < abs(load[0] + n0 - load[1] - n1)
        load[0] += n1 if flip else n0
        load[1] += n0 if flip else n1
        order, _, _ = bfs_order(T, [min(comp)], mask)
        for y in order:
            side = int(colour[y]) ^ int(flip)
            c = code(p1, side)
            S.target[y] = c
            cand = np.flatnonzero(S.candidates(y, S.cluster_mask(c) & S.regular))
            if cand.size == 0:
                raise EmbeddingFailure("skeleton", f"no vacant image for skeleton vertex {y}")
            S.place(int(y), int(cand[rng.integers(cand.size)]))
    size = int(mask.sum())
    S.log["skeleton"] = {"pair": p1, "size": size, "components": len(comps),
                         "load": load, "size_bound": S.C.d * m1 / 8,
                         "size_ok": size <= S.C.d * m1 / 8}
    return p1


def _run_once(G: Graph, T: Tree, C: Constants, seed: int, timings: dict | None) -> EmbeddingState:
    def tick(name, t0):
        if timings is not None:
            timings[name] = timings.get(name, 0.0) + time.perf_counter() - t0
        return time.perf_counter()

    t = time.perf_counter()
    try:
        Dc, host_report = preprocess_host(G, C, seed, check_gate=False)
    except DecompositionError as e:
        raise EmbeddingFailure("decompose", str(e)) from e
    except BalanceError as e:
        raise EmbeddingFailure("balance", str(e)) from e
    except SplitAuditError as e:
        raise EmbeddingFailure("split", str(e)) from e
    t = tick("host_prep", t)
    m = min(int((Dc.mask(i, A_SIDE)).sum()) for i in range(1, Dc.K + 1))
    eta = C.eta_for(G.n, m)
    try:
        td = build_skeleton(T, eta)
    except SkeletonError as e:
        raise EmbeddingFailure("treeprep", str(e)) from e
    theta = eta * G.n
    chunks = form_chunks(td.components, theta)
    t = tick("tree_prep", t)
    S = EmbeddingState(G, T, Dc, C, seed)
    S.log["host"] = host_report
    S.log["tree"] = {"eta": eta, "threshold": theta, "k": td.k, "skeleton": len(td.skeleton),
                     "components": len(td.components), "chunks": len(chunks),
                     "forced_splits": td.forced_splits,
                     "chunk_imbalances": [c.imbalance for c in chunks]}
    embed_skeleton(S, td)
    t = tick("skeleton", t)
    chunkd = {c.id: c for c in chunks}
    comps = {c.id: c for c in td.components}
    queue = [c.id for c in chunks]
    used = cover_irregulars(S, chunkd, comps, queue)
    cover_counts = {}
    for cid in used:
        # pair of a covering chunk: the pair of its first component record
        pair = next(r["pair"] for r in S.log["cover"]["components"]
                    if r["component"] in chunkd[cid].components)
        r, imb = cover_counts.get(pair, (0, 0))
        cover_counts[pair] = (r + 1, imb + chunkd[cid].imbalance)
    t = tick("cover", t)
    assignment = assign_chunks(S, chunkd, comps, queue, theta, cover_counts)
    t = tick("assign", t)
    connect_chunks(S, assignment, chunkd, comps)
    t = tick("connect", t)
    final_balance(S, theta, m)
    t = tick("final_balance", t)
    blowup_embed(S, C.regularity_trials)
    tick("blowup", t)
    return S


def check_preconditions(G: Graph, T: Tree, C: Constants, seed) -> dict | None:
    """None when the inputs qualify, otherwise a failure description."""
    if G.n != T.n:
        return {"reason": f"host has {G.n} vertices, tree has {T.n}"}
    if T.n > 1 and T.max_degree > C.D:
        return {"reason": f"tree max degree {T.max_degree} exceeds D={C.D}"}
    if not min_degree_ok(G, C.nu):
        return {"reason": f"min degree {G.min_degree()} below (1/2 - {C.nu}) n"}
    gate = estimate_nonextremal(G, C.gamma, C.extremality_trials, substream(seed, "gate"))
    if not gate.nonextremal:
        d = gate.to_dict()
        d["reason"] = "host is gamma-extremal"
        d["witness_verified"] = verify_extremal_witness(G, C.gamma, gate.witness)
        return d
    return None


def embed(G: Graph, T: Tree, C: Constants | None = None, seed: int = 0,
          retries: int | None = None, record_timings: bool = False) -> Embedding:
    """Embed the spanning tree T into G, retrying the whole pipeline with derived seeds."""
    C = Constants() if C is None else C
    C.validate()
    retries = C.retries if retries is None else retries
    pre = check_preconditions(G, T, C, seed)
    if pre is not None:
        return Embedding(False, None, seed, 0, {"precondition": 1}, [pre["reason"]],
                         {"precondition": pre})
    failures: dict[str, int] = {}
    errors = []
    timings = {} if record_timings else None
    for attempt in range(retries):
        s = derive_seed(seed, "attempt", attempt)
        try:
            S = _run_once(G, T, C, s, timings)
        except EmbeddingFailure as e:
            failures[e.phase] = failures.get(e.phase, 0) + 1
            errors.append(str(e))
            continue
        verdict = verify_embedding(G, T, S.phi)
        if not verdict["ok"]:
            failures["verify"] = failures.get("verify", 0) + 1
            errors.append(verdict["reason"])
            continue
        log = dict(S.log)
        log["attempt_seed"] = s
        if timings is not None:
            log["timings"] = timings
        return Embedding(True, S.phi.tolist(), seed, attempt + 1, failures, errors, log, verdict)
    return Embedding(False, None, seed, retries, failures, errors, {})
