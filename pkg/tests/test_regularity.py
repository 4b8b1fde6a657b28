import itertools

import numpy as np
import pytest
from hypothesis import given, strategies as st

from treeembed.graph import BipartitePair, Graph, bipartite_graph
from treeembed.regularity import (
    RegularityError, check_regular_exact, degree_deviation_sets, estimate_regularity,
    insert_vertices, min_subset_size, slice_pair, super_regularity, verify_witness,
)


def brute_force_regular(M, eps):
    """All subset pairs above the size threshold, no shortcuts."""
    a, b = M.shape
    d = M.mean()
    worst = 0.0
    for kx in range(1, a + 1):
        if kx < eps * a - 1e-12:
            continue
        for X in itertools.combinations(range(a), kx):
            rows = M[list(X)]
            for ky in range(1, b + 1):
                if ky < eps * b - 1e-12:
                    continue
                for Y in itertools.combinations(range(b), ky):
                    worst = max(worst, abs(rows[:, list(Y)].mean() - d))
    return worst <= eps + 1e-12, worst


@st.composite
def small_pairs(draw, max_side=6):
    a = draw(st.integers(1, max_side))
    b = draw(st.integers(1, max_side))
    seed = draw(st.integers(0, 2 ** 31))
    p = draw(st.floats(0.1, 0.9))
    return np.random.default_rng(seed).random((a, b)) < p


@given(small_pairs(), st.floats(0.05, 0.95))
def test_exact_check_matches_full_enumeration(M, eps):
    P = bipartite_graph(M)
    v = check_regular_exact(P, eps)
    ok, worst = brute_force_regular(M, eps)
    assert v.regular == ok
    assert v.deviation == pytest.approx(worst)
    if not v.regular:
        assert verify_witness(P, eps, v.witness)


@given(small_pairs(max_side=10), st.floats(0.1, 0.6), st.integers(0, 1000))
def test_sampled_witness_is_genuine(M, eps, seed):
    P = bipartite_graph(M)
    v = estimate_regularity(P, eps, 50, np.random.default_rng(seed))
    if not v.regular:
        assert verify_witness(P, eps, v.witness)
        assert not check_regular_exact(P, eps).regular


def test_complete_pair_is_regular_exactly():
    P = bipartite_graph(np.ones((10, 10), dtype=bool))
    v = check_regular_exact(P, 0.1)
    assert v.regular and v.density == 1.0
    s = super_regularity(P, 0.1, 0.9, mode="exact")
    assert s.super_regular


def test_half_complete_half_empty_fails_with_witness():
    M = np.zeros((10, 10), dtype=bool)
    M[:5] = True
    P = bipartite_graph(M)
    v = check_regular_exact(P, 0.2)
    assert not v.regular
    assert verify_witness(P, 0.2, v.witness)
    assert v.deviation == pytest.approx(0.5)


def test_exact_refuses_large_sides():
    P = bipartite_graph(np.ones((15, 3), dtype=bool))
    with pytest.raises(RegularityError, match="cap"):
        check_regular_exact(P, 0.3)


def test_min_subset_size_boundary():
    assert min_subset_size(0.1, 14) == 2
    assert min_subset_size(0.5, 10) == 5
    assert min_subset_size(0.01, 10) == 1


@given(small_pairs(max_side=10), st.floats(0.1, 0.5))
def test_degree_deviation_sets_small_when_regular(M, eps):
    P = bipartite_graph(M)
    if check_regular_exact(P, eps).regular:
        low, high = degree_deviation_sets(P, eps)
        assert low.size <= eps * M.shape[0] + 1e-9
        assert high.size <= eps * M.shape[0] + 1e-9


def test_slice_prediction_and_alpha_check():
    rng = np.random.default_rng(7)
    M = rng.random((12, 12)) < 0.6
    P = bipartite_graph(M)
    sl = slice_pair(P, P.left[:8], P.right[:9], 0.2, 0.6)
    assert sl.eps == pytest.approx(max(0.2 / 0.6, 0.4))
    with pytest.raises(RegularityError):
        slice_pair(P, P.left[:3], P.right[:9], 0.2, 0.6)
    with pytest.raises(RegularityError):
        slice_pair(P, P.left, P.right, 0.3, 0.2)


def test_insert_vertices_checks_degree():
    # 12x13 complete pair plus an isolated vertex 25
    adj = np.zeros((26, 26), dtype=bool)
    adj[:12, 12:25] = True
    adj[12:25, :12] = True
    P = BipartitePair(Graph(adj), np.arange(12), np.arange(12, 25))
    with pytest.raises(RegularityError, match="vertex 25"):
        insert_vertices(P, [25], [], 0.3, 0.9)
    adj[25, 12:25] = adj[12:25, 25] = True
    P = BipartitePair(Graph(adj), np.arange(12), np.arange(12, 25))
    out = insert_vertices(P, [25], [], 0.3, 0.9)
    assert (out.eps, out.delta) == pytest.approx((0.9, 0.6))
    assert out.pair.left.size == 13
