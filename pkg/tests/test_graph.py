import random

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from empc.graph import (
    Graph,
    GraphError,
    dominators,
    induced_subgraph,
    is_dag,
    load_graph,
    parse_dot,
    random_dag,
    reachability,
    shortest_path,
    topological_order,
)
from empc.oracles import dfs_reaches, kahn_is_dag
from strategies import dags, digraphs


def test_chain_reachability():
    r = reachability(Graph(3, [(0, 1), (1, 2)]))
    assert r[0, 2] and not r[2, 0]


def test_edgeless_reachability_is_all_false():
    assert not reachability(Graph(4)).any()


def test_reachability_matches_dfs_probe_on_random_dags():
    rng = random.Random(11)
    for _ in range(50):
        g = random_dag(rng, 10, rng.uniform(0.1, 0.5))
        r = reachability(g)
        for u in range(g.n):
            for v in range(g.n):
                assert r[u, v] == dfs_reaches(g, u, v)


@given(digraphs())
def test_reachability_is_transitive(g):
    r = reachability(g).astype(int)
    closure = (r @ r) > 0
    assert not (closure & ~r.astype(bool)).any()


@given(dags())
def test_dag_reachability_is_irreflexive(g):
    assert not np.diag(reachability(g)).any()


def test_is_dag_small_cases():
    assert is_dag(Graph(3, [(0, 1), (1, 2)]))
    assert not is_dag(Graph(2, [(0, 1), (1, 0)]))


@given(digraphs())
def test_is_dag_agrees_with_kahn(g):
    assert is_dag(g) == kahn_is_dag(g)


@given(dags())
def test_topological_order_respects_edges(g):
    order = topological_order(g)
    pos = {v: i for i, v in enumerate(order)}
    assert sorted(order) == list(range(g.n))
    assert all(pos[u] < pos[v] for u, v in g.edges)


def test_induced_subgraph_identity_and_singleton():
    g = Graph(3, [(0, 1), (1, 2), (0, 2)])
    sub, m = induced_subgraph(g, range(3))
    assert sub == g and m == {0: 0, 1: 1, 2: 2}
    one, _ = induced_subgraph(g, {1})
    assert one.n == 1 and one.edges == ()


@given(digraphs(), st.data())
def test_induced_subgraph_is_edge_filter(g, data):
    vs = data.draw(st.sets(st.integers(0, g.n - 1)))
    sub, m = induced_subgraph(g, vs)
    expected = {(m[u], m[v]) for u, v in g.edges if u in vs and v in vs}
    assert set(sub.edges) == expected and sub.n == len(vs)


def test_induced_subgraph_rejects_unknown_vertex():
    with pytest.raises(GraphError):
        induced_subgraph(Graph(2), {5})


@pytest.mark.parametrize("edges", [[(0, 0)], [(0, 1), (0, 1)], [(0, 7)]])
def test_construction_rejects_bad_edges(edges):
    with pytest.raises(GraphError):
        Graph(2, edges)


def test_json_and_dot_loading():
    g = Graph(3, [(0, 1), (1, 2)], {0: "entry"})
    assert load_graph(__import__("json").dumps(g.to_json())) == g
    d = parse_dot("digraph g { 0 -> 1; 1 -> 2; }")
    assert d.edges == ((0, 1), (1, 2))
    with pytest.raises(GraphError):
        load_graph("not a graph")


def test_shortest_path_prefers_small_ids():
    g = Graph(4, [(0, 2), (0, 1), (1, 3), (2, 3)])
    assert shortest_path(g, 0, 3) == [0, 1, 3]
    assert shortest_path(g, 3, 0) is None


def test_dominators_of_diamond():
    dom = dominators(Graph(4, [(0, 1), (0, 2), (1, 3), (2, 3)]), 0)
    assert dom[3] == {0, 3} and dom[1] == {0, 1}
