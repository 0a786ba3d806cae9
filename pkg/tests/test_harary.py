import itertools

import networkx as nx
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from secagg_sim.errors import InvalidDegree
from secagg_sim.protocols.harary import ClientGraph, harary, harary_neighbors


def as_nx(g):
    G = nx.Graph()
    G.add_nodes_from(range(g.n))
    G.add_edges_from(g.edges())
    return G


def test_complete_and_cycle_examples():
    k5 = harary(5, 4)
    assert k5.edges() == set(itertools.combinations(range(5), 2))
    ring = harary(8, 2)
    assert ring.edges() == {tuple(sorted((i, (i + 1) % 8))) for i in range(8)}


def test_ten_four_survives_any_three_removals():
    g = harary(10, 4)
    assert set(g.degrees()) == {4}
    for removed in itertools.combinations(range(10), 3):
        assert g.is_connected(removed)
    # and four removals can disconnect it, so it is exactly 4-connected
    assert any(not g.is_connected(r) for r in itertools.combinations(range(10), 4))


@pytest.mark.parametrize("n", range(2, 16))
def test_matches_networkx_and_is_k_connected(n):
    for k in range(2, n):
        g = harary(n, k)
        G = as_nx(g)
        assert nx.is_isomorphic(G, nx.hkn_harary_graph(k, n))
        assert nx.node_connectivity(G) == k
        if k % 2 == 0 or n % 2 == 0:
            assert set(g.degrees()) == {k}
        else:
            assert sorted(g.degrees()) == [k] * (n - 1) + [k + 1]


def test_complete_when_k_is_n_minus_one():
    for n in range(2, 12):
        g = harary(n, n - 1)
        assert len(g.edges()) == n * (n - 1) // 2


def test_degree_one_is_a_path():
    assert harary(4, 1).edges() == {(0, 1), (1, 2), (2, 3)}


def test_invalid_degree():
    for n, k in [(5, 5), (5, 9), (5, 0)]:
        with pytest.raises(InvalidDegree):
            harary(n, k)


@settings(max_examples=200, deadline=None)
@given(st.integers(2, 400).flatmap(lambda n: st.tuples(st.just(n), st.integers(1, n - 1), st.integers(0, n - 1))))
def test_neighbors_symmetric(args):
    n, k, v = args
    for u in harary_neighbors(n, k, v):
        assert v in harary_neighbors(n, k, u)
        assert u != v and 0 <= u < n


def test_client_graph_relabeling_preserves_structure():
    n, k = 30, 6
    plain = ClientGraph(n, k)
    shuffled = ClientGraph(n, k, seed=4)
    assert plain.neighbors(1) == tuple(sorted({2, 3, 4, 30, 29, 28}))
    G = nx.Graph()
    for c in range(1, n + 1):
        nb = shuffled.neighbors(c)
        assert len(nb) == k and c not in nb
        G.add_edges_from((c, v) for v in nb)
        for v in nb:
            assert c in shuffled.neighbors(v)
    assert nx.node_connectivity(G) == k
    assert ClientGraph(n, k, seed=4).neighbors(7) == shuffled.neighbors(7)
