import random

import pytest
from hypothesis import given, settings

from empc.graph import Graph, random_dag, reachability
from empc.icfg import build_icfg
from empc.mpc import (
    BipartiteGraph,
    Matching,
    NotADagError,
    PathCover,
    TooLargeError,
    brute_force_mpc,
    complete_cover,
    compute_mpc,
    cover_errors,
    hopcroft_karp,
    matching_to_mpc,
    mpc_to_matching,
    to_bipartite,
)
from empc.oracles import antichain_width, max_matching_size
from strategies import bipartites, dags

CHAIN3 = Graph(3, [(0, 1), (1, 2)])
DIAMOND = Graph(4, [(0, 1), (0, 2), (1, 3), (2, 3)])


def test_to_bipartite_is_transitive_closure():
    assert to_bipartite(Graph(2, [(0, 1)])).edges == {(0, 1)}
    assert to_bipartite(CHAIN3).edges == {(0, 1), (0, 2), (1, 2)}


@given(dags())
def test_to_bipartite_matches_reachability(g):
    r = reachability(g)
    b = to_bipartite(g)
    assert b.left_count == b.right_count == g.n
    assert b.edges == {(i, j) for i in range(g.n) for j in range(g.n) if r[i, j]}


def test_cyclic_input_rejected():
    with pytest.raises(NotADagError):
        compute_mpc(Graph(2, [(0, 1), (1, 0)]))


def test_hopcroft_karp_small_cases():
    k22 = BipartiteGraph(2, 2, frozenset({(0, 0), (0, 1), (1, 0), (1, 1)}))
    assert len(hopcroft_karp(k22)) == 2
    assert len(hopcroft_karp(BipartiteGraph(3, 3, frozenset()))) == 0


@given(bipartites(max_side=7))
def test_hopcroft_karp_is_maximum(b):
    for seed in (0, 3):
        m = hopcroft_karp(b, seed)
        assert m.is_matching_of(b)
        assert len(m) == max_matching_size(b)


def test_single_vertex_cover():
    assert matching_to_mpc(Matching(frozenset()), Graph(1)).paths == ((0,),)


def test_chain_cover_is_one_path():
    assert compute_mpc(Graph(6, [(i, i + 1) for i in range(5)])).size == 1


def test_fig1_cfg_needs_three_paths(fig1):
    g = build_icfg(fig1).graph
    cover = compute_mpc(g)
    assert cover.size == 3 and not cover_errors(cover, g)
    for seed in range(4):
        full = complete_cover(compute_mpc(g, seed), g)
        assert full.size == 3 and not cover_errors(full, g)
        assert all(p[0] == 0 and p[-1] == 8 for p in full.paths)
    k, covers = brute_force_mpc(g)
    assert k == 3
    # canonical covers consist of entry-to-exit paths
    assert all(p[0] == 0 and p[-1] == 8 for c in covers for p in c.paths)


@given(dags(max_n=10))
def test_cover_is_valid_and_minimum(g):
    cover = compute_mpc(g)
    assert not cover_errors(cover, g)
    assert cover.size == antichain_width(g)


def test_size_identity_on_random_dags():
    rng = random.Random(5)
    for _ in range(100):
        g = random_dag(rng, rng.randint(1, 12), rng.uniform(0.1, 0.5))
        assert compute_mpc(g, seed=rng.randrange(10)).size == g.n - len(hopcroft_karp(to_bipartite(g)))


def test_brute_force_small_cases():
    k, covers = brute_force_mpc(CHAIN3)
    assert (k, len(covers)) == (1, 1)
    assert brute_force_mpc(Graph(2))[0] == 2
    k, covers = brute_force_mpc(DIAMOND)
    assert k == 2 and covers[0].paths == ((0, 1, 3), (0, 2, 3))
    with pytest.raises(TooLargeError):
        brute_force_mpc(Graph(13))


@settings(max_examples=60)
@given(dags(max_n=9))
def test_brute_force_agrees_with_dilworth(g):
    k, covers = brute_force_mpc(g)
    assert k == antichain_width(g)
    assert all(not cover_errors(c, g) for c in covers)
    assert brute_force_mpc(g, all_covers=False)[0] == k


def test_mpc_to_matching_small_cases():
    assert mpc_to_matching(PathCover(((0, 1, 2),)), CHAIN3).pairs == {(0, 1), (1, 2)}
    assert mpc_to_matching(PathCover(((0,), (1,), (2,))), Graph(3)).pairs == frozenset()


@settings(max_examples=60)
@given(dags(max_n=8))
def test_every_minimum_cover_maps_to_a_maximum_matching(g):
    b = to_bipartite(g)
    best = len(hopcroft_karp(b))
    k, covers = brute_force_mpc(g)
    for c in covers:
        m = mpc_to_matching(c, g)
        assert m.is_matching_of(b)
        assert len(m) == best == g.n - k


@given(dags(max_n=10))
def test_completed_cover_keeps_size_and_ends_at_sources_and_sinks(g):
    full = complete_cover(compute_mpc(g), g)
    assert full.size == antichain_width(g) and not cover_errors(full, g)
    assert all(not g.predecessors(p[0]) and not g.successors(p[-1]) for p in full.paths)
