"""Independent check of a complete embedding."""

from __future__ import annotations

import numpy as np

from ..graph import Graph
from ..tree import Tree


def verify_embedding(G: Graph, T: Tree, phi) -> dict:
    """Bijective onto V(G) and edge preserving; reports the first violation."""
    phi = np.asarray(phi, dtype=np.int64)
    if phi.shape != (T.n,) or T.n != G.n:
        return {"ok": False, "reason": f"map has {phi.size} entries for {T.n} tree and {G.n} host vertices"}
    if ((phi < 0) | (phi >= G.n)).any():
        y = int(np.flatnonzero((phi < 0) | (phi >= G.n))[0])
        return {"ok": False, "reason": f"tree vertex {y} has no valid image", "vertex": y}
    seen = np.full(G.n, -1, dtype=np.int64)
    for y, h in enumerate(phi.tolist()):
        if seen[h] >= 0:
            return {"ok": False, "reason": f"tree vertices {seen[h]} and {y} share image {h}",
                    "vertices": [int(seen[h]), y]}
        seen[h] = y
    for u, v in T.edges():
        if not G.adj[phi[u], phi[v]]:
            return {"ok": False, "reason": f"tree edge ({u}, {v}) maps to non-edge "
                    f"({int(phi[u])}, {int(phi[v])})", "edge": [u, v]}
    return {"ok": True, "reason": None}
