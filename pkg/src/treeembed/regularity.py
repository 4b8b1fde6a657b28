"""Regularity and super-regularity of bipartite pairs.

A pair (A, B) of density d is eps-regular when every X ⊆ A, Y ⊆ B with
|X| >= eps|A| and |Y| >= eps|B| has |d(X, Y) - d| <= eps. Density of a larger
subset pair is an average over its boundary-size subpairs, so it suffices to
examine |X| = ceil(eps|A|) and |Y| = ceil(eps|B|). For a fixed X the extreme Y
of a given size are the top/bottom vertices of B by degree into X, which makes
the exact check a single enumeration over X.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from itertools import combinations

import numpy as np

from .graph import BipartitePair, GraphError

EXACT_CAP = 14


class RegularityError(ValueError):
    pass


def min_subset_size(eps: float, m: int) -> int:
    """Smallest integer k with k >= eps*m (at least 1)."""
    k = math.ceil(eps * m - 1e-12)
    return max(1, min(m, k))


@dataclass
class RegularityVerdict:
    epsilon: float
    density: float
    mode: str                 # "exact" or "sampled"
    regular: bool
    witness: tuple[np.ndarray, np.ndarray] | None = None  # host vertex ids (X, Y)
    deviation: float = 0.0    # largest |d(X,Y) - d| seen
    samples: int = 0

    def to_dict(self) -> dict:
        return {
            "epsilon": self.epsilon,
            "density": self.density,
            "mode": self.mode,
            "regular": self.regular,
            "deviation": self.deviation,
            "samples": self.samples,
            "witness": None if self.witness is None
            else [self.witness[0].tolist(), self.witness[1].tolist()],
        }


@dataclass
class SuperRegularityVerdict:
    regularity: RegularityVerdict
    delta: float
    min_left_degree: int
    min_right_degree: int
    low_degree_vertex: int | None = None

    @property
    def degree_ok(self) -> bool:
        return self.low_degree_vertex is None

    @property
    def super_regular(self) -> bool:
        return self.regularity.regular and self.degree_ok

    def to_dict(self) -> dict:
        return {
            "regularity": self.regularity.to_dict(),
            "delta": self.delta,
            "min_left_degree": self.min_left_degree,
            "min_right_degree": self.min_right_degree,
            "low_degree_vertex": self.low_degree_vertex,
            "super_regular": self.super_regular,
        }


def _extreme_y(counts: np.ndarray, k: int, ell: int, d: float):
    """Best deviation over Y of size ell given degrees ``counts`` into an X of size k.

    ``counts`` has shape (..., |B|). Returns (deviation, sign) arrays; sign +1
    means the top-ell columns, -1 the bottom-ell columns.
    """
    s = np.sort(counts, axis=-1)
    top = s[..., -ell:].sum(axis=-1) / (k * ell)
    bot = s[..., :ell].sum(axis=-1) / (k * ell)
    up = top - d
    down = d - bot
    dev = np.maximum(up, down)
    sign = np.where(up >= down, 1, -1)
    return dev, sign


def _witness_y(counts_row: np.ndarray, ell: int, sign: int) -> np.ndarray:
    order = np.argsort(counts_row, kind="stable")
    return order[-ell:] if sign > 0 else order[:ell]


def check_regular_exact(P: BipartitePair, eps: float, cap: int = EXACT_CAP) -> RegularityVerdict:
    """Exact eps-regularity test. Both sides must have at most ``cap`` vertices."""
    if not 0 < eps < 1:
        raise RegularityError(f"epsilon {eps} outside (0, 1)")
    a, b = P.left.size, P.right.size
    if a > cap or b > cap:
        raise RegularityError(f"exact check refused: sides {a}x{b} exceed cap {cap}")
    if a == 0 or b == 0:
        return RegularityVerdict(eps, 0.0, "exact", True)
    M = P.biadjacency.astype(np.int64)
    d = M.sum() / (a * b)
    k, ell = min_subset_size(eps, a), min_subset_size(eps, b)
    subsets = np.array(list(combinations(range(a), k)), dtype=np.int64)
    counts = M[subsets].sum(axis=1)          # (num subsets, b)
    dev, sign = _extreme_y(counts, k, ell, d)
    j = int(np.argmax(dev))
    worst = float(dev[j])
    regular = worst <= eps + 1e-12
    witness = None
    if not regular:
        X = subsets[j]
        Y = _witness_y(counts[j], ell, int(sign[j]))
        witness = (P.left[np.sort(X)], P.right[np.sort(Y)])
    return RegularityVerdict(eps, float(d), "exact", regular, witness, worst, len(subsets))


def regularity_index(P: BipartitePair, grid=None, cap: int = EXACT_CAP) -> float | None:
    """Smallest eps on ``grid`` for which the pair is exactly eps-regular."""
    grid = np.round(np.arange(0.05, 1.0, 0.01), 2) if grid is None else grid
    for eps in grid:
        if check_regular_exact(P, float(eps), cap).regular:
            return float(eps)
    return None


def estimate_regularity(P: BipartitePair, eps: float, trials: int,
                        rng: np.random.Generator, polish: int = 3) -> RegularityVerdict:
    """Sampled search for an irregular subset pair.

    One-sided: a found witness is conclusive, its absence is only a provisional pass.
    Each trial draws a random X (sizes between the boundary and half the side),
    takes the extreme Y for it, then alternates extreme-X / extreme-Y steps
    ``polish`` times in the same direction.
    """
    if not 0 < eps < 1:
        raise RegularityError(f"epsilon {eps} outside (0, 1)")
    a, b = P.left.size, P.right.size
    if a == 0 or b == 0:
        return RegularityVerdict(eps, 0.0, "sampled", True)
    Mi = P.biadjacency.astype(np.int32)
    d = float(Mi.sum()) / (a * b)
    k0, l0 = min_subset_size(eps, a), min_subset_size(eps, b)
    ks = sorted({k0, min(a, 2 * k0), max(k0, a // 2)})
    ls = sorted({l0, min(b, 2 * l0), max(l0, b // 2)})
    worst = 0.0
    for t in range(trials):
        k = ks[t % len(ks)]
        ell = ls[(t // len(ks)) % len(ls)]
        X = rng.choice(a, size=k, replace=False)
        counts = Mi[X].sum(axis=0)
        dev, sign = _extreme_y(counts, k, ell, d)
        dev, sign = float(dev), int(sign)
        Y = _witness_y(counts, ell, sign)
        for _ in range(polish):
            if dev > eps + 1e-12:
                break
            rc = Mi[:, Y].sum(axis=1)
            X = _witness_y(rc, k, sign)
            counts = Mi[X].sum(axis=0)
            Y = _witness_y(counts, ell, sign)
            dxy = counts[Y].sum() / (k * ell)
            dev = float(sign * (dxy - d))
        worst = max(worst, dev)
        if dev > eps + 1e-12:
            witness = (P.left[np.sort(X)], P.right[np.sort(Y)])
            return RegularityVerdict(eps, d, "sampled", False, witness, dev, t + 1)
    return RegularityVerdict(eps, d, "sampled", True, None, worst, trials)


def verify_witness(P: BipartitePair, eps: float, witness) -> bool:
    """Re-check that a claimed witness really violates eps-regularity."""
    X, Y = witness
    a, b = P.left.size, P.right.size
    if len(X) < eps * a - 1e-9 or len(Y) < eps * b - 1e-9:
        return False
    if not (np.isin(X, P.left).all() and np.isin(Y, P.right).all()):
        return False
    d = P.density()
    dxy = P.host.adj[np.ix_(X, Y)].sum() / (len(X) * len(Y))
    return abs(dxy - d) > eps


def _degree_part(P: BipartitePair, delta: float):
    a, b = P.left.size, P.right.size
    ld, rd = P.left_degrees(), P.right_degrees()
    low = None
    bad_l = np.flatnonzero(ld < delta * b - 1e-9)
    bad_r = np.flatnonzero(rd < delta * a - 1e-9)
    if bad_l.size:
        low = int(P.left[bad_l[0]])
    elif bad_r.size:
        low = int(P.right[bad_r[0]])
    return int(ld.min()) if a else 0, int(rd.min()) if b else 0, low


def super_regularity(P: BipartitePair, eps: float, delta: float, *, mode: str = "sampled",
                     trials: int = 200, rng: np.random.Generator | None = None,
                     cap: int = EXACT_CAP) -> SuperRegularityVerdict:
    """(eps, delta)-super-regularity: regular plus min degree >= delta * |other side|."""
    if mode == "exact":
        reg = check_regular_exact(P, eps, cap)
    elif mode == "sampled":
        reg = estimate_regularity(P, eps, trials, rng if rng is not None else np.random.default_rng(0))
    else:
        raise RegularityError(f"unknown mode {mode!r}")
    ml, mr, low = _degree_part(P, delta)
    return SuperRegularityVerdict(reg, delta, ml, mr, low)


# --- degree deviation, slicing, vertex insertion ---------------------------

def degree_deviation_sets(P: BipartitePair, eps: float):
    """Vertices of the left side with degree far from d|B|.

    Returns (low, high): deg < (d - eps)|B| and deg > (d + eps)|B|.
    For an eps-regular pair each set has fewer than eps|A| members.
    """
    d = P.density()
    b = P.right.size
    ld = P.left_degrees()
    low = P.left[ld < (d - eps) * b - 1e-12]
    high = P.left[ld > (d + eps) * b + 1e-12]
    return low, high


@dataclass
class SlicedPair:
    pair: BipartitePair
    eps: float                 # predicted regularity parameter
    density_range: tuple[float, float]


def slice_pair(P: BipartitePair, A1, B1, eps: float, alpha: float) -> SlicedPair:
    """Restrict an eps-regular pair to large subsets.

    With |A1| >= alpha|A| and |B1| >= alpha|B|, the sub-pair is
    max(eps/alpha, 2 eps)-regular with density within eps of the original.
    """
    A1 = np.asarray(A1, dtype=np.int64)
    B1 = np.asarray(B1, dtype=np.int64)
    if not (np.isin(A1, P.left).all() and np.isin(B1, P.right).all()):
        raise GraphError("slice must be a subset of the pair sides")
    if not 0 < alpha <= 1:
        raise RegularityError(f"alpha {alpha} outside (0, 1]")
    if alpha < eps:
        raise RegularityError(f"alpha {alpha} below epsilon {eps}")
    if A1.size < alpha * P.left.size - 1e-9 or B1.size < alpha * P.right.size - 1e-9:
        raise RegularityError(
            f"slice too small: {A1.size}/{P.left.size}, {B1.size}/{P.right.size} < alpha={alpha}")
    d = P.density()
    sub = BipartitePair(P.host, A1, B1)
    return SlicedPair(sub, max(eps / alpha, 2 * eps), (d - eps, d + eps))


@dataclass
class InsertedPair:
    pair: BipartitePair
    eps: float
    delta: float
    density_range: tuple[float, float]


def insert_vertices(P: BipartitePair, S_A, S_B, eps: float, delta: float) -> InsertedPair:
    """Add a few vertices to an (eps, delta)-super-regular pair of density d.

    Requires |S_A| <= eps^2 |A|, |S_B| <= eps^2 |B|, and every added vertex
    having degree at least d times the opposite side. The result is
    predicted (3 eps, delta - eps)-super-regular with density d +- eps.
    Regularity of the input is the caller's responsibility; the degree and
    size preconditions are checked here and the first violator is named.
    """
    S_A = np.asarray(S_A, dtype=np.int64)
    S_B = np.asarray(S_B, dtype=np.int64)
    a, b = P.left.size, P.right.size
    if S_A.size > eps ** 2 * a + 1e-9:
        raise RegularityError(f"|S_A|={S_A.size} exceeds eps^2|A|={eps ** 2 * a:.3f}")
    if S_B.size > eps ** 2 * b + 1e-9:
        raise RegularityError(f"|S_B|={S_B.size} exceeds eps^2|B|={eps ** 2 * b:.3f}")
    every = np.concatenate([P.left, P.right])
    if np.isin(S_A, every).any() or np.isin(S_B, every).any() or np.intersect1d(S_A, S_B).size:
        raise GraphError("inserted vertices must be new and disjoint")
    ml, mr, low = _degree_part(P, delta)
    if low is not None:
        raise RegularityError(f"input pair not delta-super-regular: vertex {low} has low degree")
    d = P.density()
    adj = P.host.adj
    for v in S_A.tolist():
        if adj[v, P.right].sum() < d * b - 1e-9:
            raise RegularityError(f"inserted vertex {v} has degree below d|B|")
    for v in S_B.tolist():
        if adj[v, P.left].sum() < d * a - 1e-9:
            raise RegularityError(f"inserted vertex {v} has degree below d|A|")
    new = BipartitePair(P.host, np.concatenate([P.left, S_A]), np.concatenate([P.right, S_B]))
    return InsertedPair(new, 3 * eps, delta - eps, (d - eps, d + eps))
