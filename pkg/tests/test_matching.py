import numpy as np
from hypothesis import given, strategies as st
from scipy.optimize import linear_sum_assignment
from scipy.sparse import csr_matrix
from scipy.sparse.csgraph import maximum_bipartite_matching

from treeembed.matching import adjacency_lists, hall_violator, hopcroft_karp, verify_hall_violator


@st.composite
def biadjacency(draw):
    a = draw(st.integers(1, 15))
    b = draw(st.integers(1, 15))
    p = draw(st.floats(0.0, 1.0))
    seed = draw(st.integers(0, 2 ** 31))
    return np.random.default_rng(seed).random((a, b)) < p


def scipy_size(M):
    return int((maximum_bipartite_matching(csr_matrix(M.astype(np.int8)), perm_type="column") >= 0).sum())


@given(biadjacency())
def test_matching_size_agrees_with_scipy(M):
    adj = adjacency_lists(M)
    res = hopcroft_karp(adj, M.shape[1])
    assert res.size == scipy_size(M)
    for u, v in enumerate(res.match_left):
        if v >= 0:
            assert M[u, v]
            assert res.match_right[v] == u


@given(biadjacency())
def test_deficient_side_has_certificate(M):
    adj = adjacency_lists(M)
    res = hopcroft_karp(adj, M.shape[1])
    S = hall_violator(adj, res)
    if res.is_left_perfect():
        assert S is None
    else:
        assert S is not None and verify_hall_violator(adj, S)
        # König: deficiency of this witness equals the matching deficiency
        nbrs = set().union(*(adj[u] for u in S))
        assert len(S) - len(nbrs) >= 1


def test_assignment_oracle_on_dense_instance():
    rng = np.random.default_rng(3)
    M = rng.random((60, 60)) < 0.08
    adj = adjacency_lists(M)
    r, c = linear_sum_assignment(-M.astype(float))
    assert hopcroft_karp(adj, 60).size == int(M[r, c].sum())
