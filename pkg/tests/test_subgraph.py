import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from selo.encoder import EncoderConfig, encode_edge
from selo.subgraph import extract

from conftest import faction_graph, make_graph

X, Y, A, B, C, D, E = range(7)


def test_isolated_targets_exhaust():
    g = make_graph([], num_nodes=4)
    sg = extract(g, 0, 1, 5)
    assert sg.m == 2
    assert not sg.adj.any()
    assert list(sg.hop_of) == [0, 0]


def test_star_target_edge_masked():
    g = make_graph([(X, A, 1), (X, B, 1), (X, Y, 1)])
    sg = extract(g, X, Y, 4)
    assert sg.m == 4
    assert set(sg.nodes.tolist()) == {X, Y, A, B}
    assert sg.adj[0, 1] == 0
    assert sg.adj[0, 2] == 1 and sg.adj[0, 3] == 1


def test_path_grows_one_hop_at_a_time():
    # x -> y -> c -> d -> e
    x, y, c, d, e = range(5)
    g = make_graph([(x, y, 1), (y, c, 1), (c, d, 1), (d, e, 1)])
    sg = extract(g, x, y, 4)
    assert sg.nodes.tolist() == [x, y, c, d]
    assert sg.hop_of.tolist() == [0, 0, 1, 2]


def test_whole_hop_added_even_past_k():
    g = make_graph([(0, i, 1) for i in range(2, 9)], num_nodes=9)
    sg = extract(g, 0, 1, 3)
    assert sg.m == 9
    assert sg.nodes[2:].tolist() == list(range(2, 9))  # ascending id within a hop


def test_reverse_target_edge_kept():
    g = make_graph([(0, 1, 1), (1, 0, -1)])
    sg = extract(g, 0, 1, 2)
    assert sg.adj[0, 1] == 0 and sg.adj[1, 0] == -1


@pytest.mark.parametrize("args", [(0, 0, 3), (0, 1, 1), (0, 9, 3), (-1, 1, 3)])
def test_argument_errors(args):
    g = make_graph([(0, 1, 1), (1, 2, 1)])
    with pytest.raises(ValueError):
        extract(g, *args)


@pytest.fixture(scope="module")
def graph():
    return faction_graph(n=80, m=300, seed=11)


@settings(max_examples=80, deadline=None)
@given(st.data())
def test_invariants(graph, data):
    x = data.draw(st.integers(0, graph.num_nodes - 1))
    y = data.draw(st.integers(0, graph.num_nodes - 1).filter(lambda v: v != x))
    k = data.draw(st.integers(2, 30))
    sg = extract(graph, x, y, k)
    nodes = sg.nodes.tolist()
    assert nodes[:2] == [x, y] and len(set(nodes)) == len(nodes)
    assert sg.adj[0, 1] == 0
    assert sg.hop_of[0] == sg.hop_of[1] == 0
    assert np.all(np.diff(sg.hop_of) >= 0)
    for i, j in zip(*np.nonzero(sg.adj)):
        assert graph.sign_of(nodes[i], nodes[j]) == sg.adj[i, j]
    # nodes at hop h are exactly h undirected steps from the nearer target
    from selo.graph import dense_distances
    full = (graph.adjacency != 0).toarray()
    dist = dense_distances(full | full.T, [x, y])
    assert [dist[v] for v in nodes] == sg.hop_of.tolist()
    # monotone in k
    bigger = extract(graph, x, y, k + data.draw(st.integers(1, 10)))
    assert set(nodes) <= set(bigger.nodes.tolist())


def test_label_cannot_leak_through_target_edge(graph):
    cfg = EncoderConfig(k=5)
    edges = graph.edges()[:40]
    for u, v, s in edges:
        flipped = [(a, b, -t if (a, b) == (u, v) else t) for a, b, t in graph.edges()]
        g2 = make_graph(flipped, graph.num_nodes)
        beta = 2.0  # fixed so the global sign counts cannot differ either
        f1 = encode_edge(graph, u, v, cfg, beta=beta)
        f2 = encode_edge(g2, u, v, cfg, beta=beta)
        np.testing.assert_array_equal(f1, f2)
