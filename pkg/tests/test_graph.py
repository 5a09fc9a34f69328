import itertools

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from synclab.errors import InvalidTopology, NotPositiveDefinite
from synclab.graph import CommGraph, build_graph, default_topology, h_matrix, laplacian

TWO = [(3, 1), (1, 2), (2, 1)]


def brute_laplacian(n, edges):
    size = n + 1
    out = [[0.0] * size for _ in range(size)]
    for row in range(1, size + 1):
        for col in range(1, size + 1):
            if (col, row) in edges and row != col:
                out[row - 1][col - 1] -= 1.0
                out[row - 1][row - 1] += 1.0
    return np.array(out)


def reachable_by_powers(n, edges):
    size = n + 1
    a = np.eye(size, dtype=int)
    for i, j in edges:
        a[j - 1, i - 1] = 1
    reach = np.linalg.matrix_power(a, size) > 0
    return bool(reach[:n, n].all())


def test_two_follower_graph():
    g = build_graph(2, TWO)
    assert g.neighbors(1) == (2, 3)
    assert g.neighbors(2) == (1,)
    assert g.leader == 3


def test_leader_unreachable():
    with pytest.raises(InvalidTopology, match="spanning tree"):
        build_graph(2, [(1, 2), (2, 1)])


def test_leader_with_incoming_edge():
    with pytest.raises(InvalidTopology, match="incoming"):
        build_graph(2, TWO + [(1, 3)])


def test_directed_follower_edge():
    with pytest.raises(InvalidTopology, match="undirected"):
        build_graph(2, [(3, 1), (1, 2)])


@pytest.mark.parametrize("edges", [[(0, 1)], [(4, 1)], [(1, 1), (3, 1)]])
def test_bad_node_indices(edges):
    with pytest.raises(InvalidTopology):
        build_graph(2, edges)


def test_default_topology():
    g = default_topology()
    assert g.num_followers == 6
    assert g.neighbors(1) == (2, 7)
    assert g.neighbors(4) == (3, 5, 7)
    assert reachable_by_powers(6, g.edges)


def test_laplacian_two_followers():
    g = build_graph(2, TWO)
    expected = brute_laplacian(2, set(TWO))
    np.testing.assert_array_equal(expected, [[2, -1, -1], [-1, 1, 0], [0, 0, 0]])
    np.testing.assert_array_equal(laplacian(g), expected)


def test_laplacian_single_and_star():
    np.testing.assert_array_equal(laplacian(build_graph(1, [(2, 1)])), [[1, -1], [0, 0]])
    L = laplacian(build_graph(3, [(4, 1), (4, 2), (4, 3)]))
    np.testing.assert_array_equal(L[:3, :3], np.eye(3))
    np.testing.assert_array_equal(L[:3, 3], [-1, -1, -1])
    np.testing.assert_array_equal(L[3], 0)


def test_h_matrix_examples():
    h = h_matrix(build_graph(2, TWO))
    np.testing.assert_array_equal(h, [[2, -1], [-1, 1]])
    np.testing.assert_allclose(np.linalg.eigvalsh(h), [(3 - np.sqrt(5)) / 2, (3 + np.sqrt(5)) / 2], rtol=1e-14)
    np.testing.assert_array_equal(h_matrix(build_graph(3, [(4, 1), (4, 2), (4, 3)])), np.eye(3))
    path = build_graph(3, [(4, 1), (1, 2), (2, 1), (2, 3), (3, 2)])
    np.testing.assert_array_equal(h_matrix(path), [[2, -1, 0], [-1, 2, -1], [0, -1, 1]])


def test_h_matrix_rejects_unvalidated_graph():
    # bypass build_graph: follower 2 is cut off from the leader
    g = CommGraph(2, frozenset({(3, 1)}))
    with pytest.raises(NotPositiveDefinite):
        h_matrix(g)


@st.composite
def edge_sets(draw):
    n = draw(st.integers(1, 8))
    pairs = list(itertools.combinations(range(1, n + 1), 2))
    chosen = draw(st.lists(st.sampled_from(pairs), unique=True)) if pairs else []
    leader_links = draw(st.lists(st.integers(1, n), unique=True))
    edges = {(i, j) for i, j in chosen} | {(j, i) for i, j in chosen} | {(n + 1, j) for j in leader_links}
    return n, sorted(edges)


@settings(max_examples=200, deadline=None)
@given(edge_sets())
def test_random_graphs(case):
    n, edges = case
    ok = reachable_by_powers(n, edges)
    try:
        g = build_graph(n, edges)
    except InvalidTopology:
        assert not ok
        with pytest.raises(InvalidTopology):
            build_graph(n, edges)
        return
    assert ok
    L = laplacian(g)
    np.testing.assert_array_equal(L, brute_laplacian(n, set(edges)))
    assert np.all(L.sum(axis=1) == 0)
    h = h_matrix(g)
    assert np.abs(h - h.T).max() <= 1e-12
    assert np.linalg.eigvalsh(h)[0] > 1e-9
    assert build_graph(n, edges) == g
