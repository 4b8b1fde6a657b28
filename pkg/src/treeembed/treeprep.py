"""Tree decomposition: split vertices, skeleton, components and chunks."""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from .tree import Tree, bfs_order, components_of

LONG_LINE = 10


class SplitError(ValueError):
    pass


class SplitBoundsError(SplitError):
    """No vertex admits a grouping inside [t/3, 2t/3]; ``best`` holds the closest split."""

    def __init__(self, msg, best):
        super().__init__(msg)
        self.best = best


class SkeletonError(RuntimeError):
    pass


# --- split vertices --------------------------------------------------------

def _rooted(T: Tree, vertices: Sequence[int]):
    within = np.zeros(T.n, dtype=bool)
    within[list(vertices)] = True
    root = int(min(vertices))
    order, parent, _ = bfs_order(T, [root], within)
    size = np.zeros(T.n, dtype=np.int64)
    for u in reversed(order):
        size[u] += 1
        if parent[u] >= 0:
            size[parent[u]] += size[u]
    return within, root, order, parent, size


def _subtree(T: Tree, top: int, parent: np.ndarray, within: np.ndarray) -> list[int]:
    out = [top]
    stack = [top]
    while stack:
        u = stack.pop()
        for v in T.adj[u]:
            if within[v] and parent[v] == u:
                out.append(v)
                stack.append(v)
    return out


def _split(T: Tree, vertices: Sequence[int]):
    """Best split of the subtree on ``vertices``.

    Returns (valid, x, groups, comps): ``comps`` are the components of the
    subtree minus x and ``groups`` a pair of index lists into ``comps``.
    Every vertex and every 2-grouping of its components is examined; among
    valid groupings the most balanced wins, ties to the lowest vertex.
    """
    t = len(vertices)
    within, root, order, parent, size = _rooted(T, vertices)
    lo, hi = t / 3, 2 * t / 3
    best = None
    for x in sorted(vertices):
        sizes = [int(size[c]) for c in T.adj[x] if within[c] and parent[c] == x]
        tops = [c for c in T.adj[x] if within[c] and parent[c] == x]
        if x != root:
            sizes.append(t - int(size[x]))
            tops.append(-1)
        j = len(sizes)
        total = t - 1
        if j <= 16:
            masks = range(1 << j) if j else [0]
            cand = []
            for mask in masks:
                g1 = sum(sizes[i] for i in range(j) if mask >> i & 1)
                cand.append((g1, mask))
        else:
            # greedy packing for very high degree
            order_i = sorted(range(j), key=lambda i: -sizes[i])
            mask, g1 = 0, 0
            for i in order_i:
                if g1 + sizes[i] <= total / 2:
                    mask |= 1 << i
                    g1 += sizes[i]
            cand = [(g1, mask)]
        for g1, mask in cand:
            g2 = total - g1
            valid = lo <= g1 <= hi and lo <= g2 <= hi
            key = (not valid, max(g1, g2), x, mask)
            if best is None or key < best[0]:
                best = (key, x, mask, tops, valid)
    _, x, mask, tops, valid = best
    comps = []
    for i, top in enumerate(tops):
        if top >= 0:
            comps.append(sorted(_subtree(T, top, parent, within)))
        else:
            below = set(_subtree(T, x, parent, within))
            comps.append(sorted(v for v in vertices if v not in below))
    g1 = [i for i in range(len(comps)) if mask >> i & 1]
    g2 = [i for i in range(len(comps)) if not mask >> i & 1]
    return valid, x, (g1, g2), comps


def split_vertex(T: Tree, vertices: Sequence[int] | None = None):
    """Split vertex x of the (sub)tree with forests F1, F2 of sizes in [t/3, 2t/3].

    Raises SplitError for t < 3 and SplitBoundsError (carrying the closest
    split) when no vertex admits a valid grouping.
    """
    vertices = list(range(T.n)) if vertices is None else sorted(int(v) for v in vertices)
    t = len(vertices)
    if t < 3:
        raise SplitError(f"cannot split a tree on {t} < 3 vertices")
    valid, x, (g1, g2), comps = _split(T, vertices)
    F1 = sorted(v for i in g1 for v in comps[i])
    F2 = sorted(v for i in g2 for v in comps[i])
    if not valid:
        raise SplitBoundsError(
            f"no split within [t/3, 2t/3] for t={t}; closest is {len(F1)}/{len(F2)}", (x, F1, F2))
    return x, F1, F2


# --- skeleton --------------------------------------------------------------

@dataclass
class Line:
    vertices: list[int]          # endpoint, interior..., endpoint

    @property
    def length(self) -> int:
        return len(self.vertices) - 1

    @property
    def long(self) -> bool:
        return self.length >= LONG_LINE


@dataclass
class Component:
    id: int
    vertices: list[int]
    attachments: list[tuple[int, int]]     # (x in F, s in skeleton), sorted
    line: list[int] | None = None          # s, ..., s' for two attachments
    classes: tuple[list[int], list[int]] = ((), ())  # 2-colouring; classes[0] holds x

    @property
    def size(self) -> int:
        return len(self.vertices)

    @property
    def imbalance(self) -> int:
        return abs(len(self.classes[0]) - len(self.classes[1]))


@dataclass
class TreeDecomposition:
    n: int
    eta: float
    split_vertices: list[int]
    skeleton: list[int]
    marked: list[int]
    lines: list[Line]
    components: list[Component]
    audit: dict = field(default_factory=dict)
    forced_splits: int = 0                 # splits that missed [t/3, 2t/3]

    @property
    def k(self) -> int:
        return len(self.split_vertices)

    def skeleton_mask(self) -> np.ndarray:
        m = np.zeros(self.n, dtype=bool)
        m[self.skeleton] = True
        return m

    def to_dict(self) -> dict:
        return {
            "version": 1, "n": self.n, "eta": self.eta,
            "split_vertices": [int(v) for v in self.split_vertices],
            "skeleton": [int(v) for v in self.skeleton],
            "marked": [int(v) for v in self.marked],
            "lines": [[int(v) for v in ln.vertices] for ln in self.lines],
            "components": [{"id": c.id, "vertices": [int(v) for v in c.vertices],
                            "attachments": [[int(x), int(s)] for x, s in c.attachments],
                            "line": None if c.line is None else [int(v) for v in c.line],
                            "imbalance": c.imbalance} for c in self.components],
            "forced_splits": self.forced_splits,
        }


def _two_colour(T: Tree, vertices: list[int], root: int) -> tuple[list[int], list[int]]:
    within = np.zeros(T.n, dtype=bool)
    within[vertices] = True
    _, _, depth = bfs_order(T, [root], within)
    c0 = sorted(v for v in vertices if depth[v] % 2 == 0)
    c1 = sorted(v for v in vertices if depth[v] % 2 == 1)
    return c0, c1


def build_skeleton(T: Tree, eta: float) -> TreeDecomposition:
    if not 0 < eta < 1:
        raise ValueError(f"eta {eta} outside (0, 1)")
    n = T.n
    limit = eta * n
    splits: list[int] = []
    forced = 0
    pieces = [list(range(n))]
    while pieces:
        piece = pieces.pop()
        if len(piece) <= limit and splits:
            continue
        if len(piece) < 3:
            x = piece[0]
            rest = [v for v in piece if v != x]
            splits.append(x)
            if rest:
                pieces.append(rest)
            continue
        valid, x, _, comps = _split(T, piece)
        forced += not valid
        splits.append(x)
        pieces.extend(reversed(comps))
    splits.sort()

    split_mask = np.zeros(n, dtype=bool)
    split_mask[splits] = True
    # smallest subtree containing the split vertices
    order, parent, _ = bfs_order(T, [splits[0]])
    has = split_mask.copy()
    for u in reversed(order):
        if has[u] and parent[u] >= 0:
            has[parent[u]] = True
    in_tp = has
    tdeg = np.array([sum(1 for v in T.adj[u] if in_tp[v]) if in_tp[u] else 0 for u in range(n)])
    marked_mask = in_tp & (split_mask | (tdeg >= 3))
    marked = np.flatnonzero(marked_mask).tolist()

    lines: list[Line] = []
    seen_lines = set()
    for u in marked:
        for w in T.adj[u]:
            if not in_tp[w]:
                continue
            path = [u, w]
            prev, cur = u, w
            while not marked_mask[cur]:
                nxt = [z for z in T.adj[cur] if in_tp[z] and z != prev]
                if len(nxt) != 1:
                    raise SkeletonError(f"unmarked vertex {cur} has T'-degree {len(nxt) + 1}")
                prev, cur = cur, nxt[0]
                path.append(cur)
            key = (min(path[0], path[-1]), max(path[0], path[-1]), min(path[1], path[-2]))
            if key in seen_lines:
                continue
            seen_lines.add(key)
            lines.append(Line(path if path[0] <= path[-1] else path[::-1]))
    lines.sort(key=lambda ln: (ln.vertices[0], ln.vertices[-1], ln.vertices[1:2]))

    skel_mask = in_tp.copy()
    for ln in lines:
        if ln.long:
            skel_mask[ln.vertices[1:-1]] = False
    skeleton = np.flatnonzero(skel_mask).tolist()

    long_by_ends = {}
    for ln in lines:
        if ln.long:
            long_by_ends[(ln.vertices[0], ln.vertices[-1])] = ln

    components = []
    for cid, verts in enumerate(components_of(T, ~skel_mask)):
        att = sorted((x, s) for x in verts for s in T.adj[x] if skel_mask[s])
        line = None
        if len(att) == 2:
            (x1, s1), (x2, s2) = att
            ln = long_by_ends.get((min(s1, s2), max(s1, s2)))
            if ln is not None:
                line = ln.vertices if ln.vertices[0] == s1 else ln.vertices[::-1]
        root = att[0][0] if att else verts[0]
        components.append(Component(cid, verts, att, line, _two_colour(T, verts, root)))

    td = TreeDecomposition(n, eta, splits, skeleton, marked, lines, components, {}, forced)
    td.audit = audit_skeleton(T, td)
    failed = [k for k, v in td.audit.items() if k.startswith("clause") and not v]
    if failed:
        raise SkeletonError(f"skeleton clauses failed: {failed}")
    return td


def audit_skeleton(T: Tree, td: TreeDecomposition) -> dict:
    """Re-check the five decomposition clauses from scratch."""
    n, k = td.n, td.k
    skel = td.skeleton_mask()
    D = max(T.max_degree, 1)
    comps = components_of(T, ~skel)
    ok2 = all(len(c) <= td.eta * n + 1e-9 for c in comps)
    ok3 = len(comps) <= 20 * k * D
    ok4 = True
    ok5 = True
    # components of the skeleton forest, for clause 5
    skel_comp = np.full(n, -1)
    for i, c in enumerate(components_of(T, skel)):
        skel_comp[c] = i
    long_ends = {(ln.vertices[0], ln.vertices[-1]) for ln in td.lines if ln.long}
    for c in comps:
        edges = [(x, s) for x in c for s in T.adj[x] if skel[s]]
        nbrs = {s for _, s in edges}
        if not (1 <= len(nbrs) <= 2 and len(edges) <= 2):
            ok4 = False
        if len(nbrs) == 2:
            (x1, s1), (x2, s2) = sorted(edges)
            if (min(s1, s2), max(s1, s2)) not in long_ends:
                ok5 = False
            if skel_comp[s1] == skel_comp[s2] or x1 == x2:
                ok5 = False
    return {
        "k": k,
        "skeleton_size": int(skel.sum()),
        "marked": len(td.marked),
        "num_components": len(comps),
        "max_component": max((len(c) for c in comps), default=0),
        "forced_splits": td.forced_splits,
        "k_le_D_over_eta": k <= D / td.eta,
        "marked_le_2k": len(td.marked) <= 2 * k,
        "clause1_skeleton_le_20k": int(skel.sum()) <= 20 * k,
        "clause2_components_le_eta_n": ok2,
        "clause3_count_le_20kD": ok3,
        "clause4_attachments": ok4,
        "clause5_long_line_ends": ok5,
        "components_match": sorted(map(tuple, comps)) == sorted(tuple(c.vertices) for c in td.components),
    }


# --- levels, imbalance, chunks ---------------------------------------------

def level_sets(T: Tree, roots: Sequence[int], within: np.ndarray | None = None) -> list[list[int]]:
    """BFS levels L_0 = roots, L_1, ... inside ``within``."""
    order, _, depth = bfs_order(T, list(roots), within)
    if not order:
        return []
    levels: list[list[int]] = [[] for _ in range(int(depth[order[-1]]) + 1)]
    for v in order:
        levels[int(depth[v])].append(v)
    return [sorted(L) for L in levels]


def imbalance(T: Tree, vertices: Sequence[int] | None = None) -> int:
    """Sum over components of the forest T[vertices] of the colour-class difference."""
    within = np.zeros(T.n, dtype=bool)
    within[list(range(T.n)) if vertices is None else list(vertices)] = True
    total = 0
    for comp in components_of(T, within):
        c0, c1 = _two_colour(T, comp, comp[0])
        total += abs(len(c0) - len(c1))
    return total


@dataclass
class Chunk:
    id: int
    components: list[int]
    size: int
    imbalance: int


def form_chunks(components: Sequence[Component], threshold: float) -> list[Chunk]:
    """Group components into chunks of size about ``threshold``.

    Components are listed by increasing size; the shortest prefix reaching
    the threshold becomes a chunk; a final undersized remainder joins the
    last chunk. The result is sorted by imbalance (stable).
    """
    pending = sorted(components, key=lambda c: (c.size, c.id))
    groups: list[list[Component]] = []
    cur: list[Component] = []
    total = 0
    for c in pending:
        cur.append(c)
        total += c.size
        if total >= threshold:
            groups.append(cur)
            cur, total = [], 0
    if cur:
        if groups:
            groups[-1].extend(cur)
        else:
            groups.append(cur)
    chunks = [Chunk(i, [c.id for c in g], sum(c.size for c in g), sum(c.imbalance for c in g))
              for i, g in enumerate(groups)]
    chunks.sort(key=lambda ch: (ch.imbalance, ch.id))
    return chunks


def chunk_size_ok(chunks: Sequence[Chunk], threshold: float) -> bool:
    """All chunks but at most one in [threshold, 2 threshold); the exception below 3 threshold."""
    if not chunks:
        return True
    outside = [c for c in chunks if not (threshold <= c.size < 2 * threshold)]
    if len(outside) > 1:
        return False
    return all(c.size < 3 * threshold for c in outside)
