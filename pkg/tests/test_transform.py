import random

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from empc.corpus import SHAPES, generate_program
from empc.graph import Graph, is_dag
from empc.icfg import build_icfg, lower
from empc.ir import parse_program
from empc.mpc import TooLargeError
from empc.splitcheck import check_loop, check_oeoe, loop_instance, oeoe_instance
from empc.transform import (
    LoopInfo,
    SplitError,
    check_loop_subgraph,
    check_one_entry_one_exit,
    combined_mpc_size,
    decompose,
    decomposition_is_acyclic,
    detect_extraordinary_loops,
    find_loops,
    max_k_through,
    natural_loops,
    split_one_entry_one_exit,
    transform_caller_callee,
    transform_loop,
)

TWO_CALLERS = """
input a in [0, 3];
input b in [0, 3];
fn g(v) {
  e:
    br v < 2 ? t : f;
  t:
    r := 1;
    goto j;
  f:
    r := 2;
    goto j;
  j:
    return r;
}
fn main() {
  bb0:
    call g(a) -> x;
    call g(b) -> y;
    return x + y;
}
"""

NESTED = """
input n in [0, 2];
fn main() {
  bb0:
    i := 0;
    goto h1;
  h1:
    br i < n ? p : done;
  p:
    j := 0;
    goto h2;
  h2:
    br j < n ? q : latch;
  q:
    j := j + 1;
    goto h2;
  latch:
    i := i + 1;
    goto h1;
  done:
    return i;
}
"""

TWO_HEADED = """
input a in [0, 3];
fn main() {
  bb0:
    k := 0;
    br a < 2 ? p : q;
  p:
    k := k + 1;
    goto q;
  q:
    br k < 3 ? p : out;
  out:
    return k;
}
"""

SELF_LOOP = """
input n in [0, 2];
fn main() {
  bb0:
    i := 0;
    goto h;
  h:
    i := i + 1;
    br i < n ? h : out;
  out:
    return i;
}
"""


def _fig4():
    # pre -> h -> b -> h (back), h exits to x1, b exits to x2, both reach end
    cyclic = Graph(6, [(0, 1), (1, 2), (2, 1), (1, 3), (2, 4), (3, 5), (4, 5)])
    dag = Graph(6, [(0, 1), (1, 2), (1, 3), (2, 4), (3, 5), (4, 5)])
    return cyclic, dag


def test_fig4_loop_found_with_two_exits():
    cyclic, _ = _fig4()
    (li,) = natural_loops(cyclic, 0)
    assert li.header == 1 and li.body == {1, 2} and li.exit_nodes == {3, 4}


def test_fig4_split_shapes():
    cyclic, dag = _fig4()
    (li,) = natural_loops(cyclic, 0)
    res = transform_loop(dag, li)
    assert res.subgraph.n == 4 and len(res.exits) == 2
    assert not check_loop_subgraph(res.subgraph, res.entry, res.exits)
    assert sorted(res.remainder.successors(res.merged_vertex)) == sorted(res.rem_map[x] for x in (3, 4))
    assert res.remainder.n == 5


def test_acyclic_function_has_no_loops(fig1):
    assert find_loops(build_icfg(fig1)) == []
    assert detect_extraordinary_loops(build_icfg(fig1)) == []


def test_nested_loops_inner_inside_outer():
    ic = build_icfg(parse_program(NESTED))
    inner, outer = find_loops(ic)
    assert inner.body < outer.body
    d = decompose(ic)
    loops = [r for r in d.regions if r.kind == "loop"]
    assert len(loops) == 2
    assert loops[0].parent == loops[1].id
    assert decomposition_is_acyclic(d)


def test_two_headed_cycle_is_extraordinary():
    ic = build_icfg(parse_program(TWO_HEADED))
    (region,) = detect_extraordinary_loops(ic)
    assert {ic.label(v) for v in region} == {"main:p", "main:q"}
    d = decompose(ic)
    assert not [r for r in d.regions if r.kind == "loop"] and d.cut_edges
    assert decomposition_is_acyclic(d)


def test_natural_loop_is_not_extraordinary():
    assert detect_extraordinary_loops(build_icfg(parse_program(NESTED))) == []


def test_self_loop_region_is_header_plus_copies():
    low = lower(parse_program(SELF_LOOP))
    d = decompose(low.icfg, low.return_site)
    (loop,) = [r for r in d.regions if r.kind == "loop"]
    kinds = sorted(ref[0] for ref in loop.graph.labels.values())
    # header, its virtual latch, one exit copy, one continue copy
    assert kinds == ["continue", "exit", "v", "v"]
    assert not check_loop_subgraph(loop.graph, loop.entry, loop.split.exits)


def test_split_without_interior():
    res = split_one_entry_one_exit(Graph(4, [(0, 1), (1, 2), (2, 3)]), 1, 2)
    assert res.subgraph.n == 2 and len(res.subgraph.edges) == 1
    assert res.remainder.n == 3


def test_split_rejects_leaky_region():
    # vertex 2 is inside (1 reaches it and it reaches 3) but has outside predecessor 0
    g = Graph(5, [(0, 1), (1, 2), (0, 2), (2, 3), (3, 4)])
    with pytest.raises(SplitError) as err:
        split_one_entry_one_exit(g, 1, 3)
    assert err.value.vertex == 2


def test_loop_split_rejects_side_entry():
    g = Graph(4, [(0, 1), (1, 2), (0, 2), (2, 3)])
    li = LoopInfo(1, frozenset({1, 2}), frozenset(), frozenset({(2, 3)}), frozenset({3}))
    with pytest.raises(SplitError):
        transform_loop(g, li)


def test_two_callers_one_callee_region():
    low = lower(parse_program(TWO_CALLERS))
    d = decompose(low.icfg, low.return_site)
    (fn,) = [r for r in d.regions if r.kind == "function"]
    assert fn.name == "g"
    assert not check_one_entry_one_exit(fn.graph, fn.entry, fn.graph.sinks()[0])
    # the first call site keeps its edges, the second is cut
    first, second = sorted(c for c, e in low.icfg.call_edges)
    assert d.kept_calls["g"][0] == first and [c for c, _ in d.dropped_calls] == [second]
    root = d.regions[0]
    assert ("sst", fn.id) in root.graph.labels.values()
    rem, splits = transform_caller_callee(low.icfg)
    assert is_dag(rem) and len(splits) == 1


def test_three_callers_drop_two():
    src = TWO_CALLERS.replace("return x + y;", "call g(a) -> z;\n    return x + y + z;")
    low = lower(parse_program(src))
    d = decompose(low.icfg, low.return_site)
    assert len(d.dropped_calls) == 2 and decomposition_is_acyclic(d)


def test_single_caller_still_extracted():
    src = TWO_CALLERS.replace("call g(b) -> y;", "y := b;")
    d = decompose(build_icfg(parse_program(src)))
    assert [r.kind for r in d.regions] == ["root", "function"] and d.dropped_calls == []


def test_combined_size_examples():
    assert combined_mpc_size(3, 2, 2) == 3
    assert combined_mpc_size(3, 1, 4) == 6
    with pytest.raises(ValueError):
        combined_mpc_size(1, 2, 0)


def test_max_k_small_cases():
    assert max_k_through(Graph(3, [(0, 1), (1, 2)]), 1) == 1
    assert max_k_through(Graph(3, [(0, 1)]), 2) == 1
    with pytest.raises(TooLargeError):
        max_k_through(Graph(13), 0)


def test_oeoe_law_on_random_instances():
    rng = random.Random(0)
    for _ in range(150):
        check, _ = check_oeoe(oeoe_instance(rng))
        assert check.holds, check


@settings(max_examples=60)
@given(st.integers(0, 10_000))
def test_loop_law_holds_for_single_exit_loops(seed):
    inst = loop_instance(random.Random(seed), max_exits=1)
    if len(inst.loop.exit_nodes) != 1:
        return
    check, res = check_loop(inst)
    assert check.holds, check


@settings(max_examples=60)
@given(st.integers(0, 10_000))
def test_loop_subgraph_definition_always_holds(seed):
    check, _ = check_loop(loop_instance(random.Random(seed)))
    assert not check.definition_problems


@settings(max_examples=40)
@given(st.sampled_from([s for s in SHAPES if s != "fig1"]), st.integers(0, 10_000))
def test_decomposition_is_acyclic_and_keeps_every_vertex(shape, seed):
    low = lower(parse_program(generate_program(shape, random.Random(seed))))
    d = decompose(low.icfg, low.return_site)
    assert decomposition_is_acyclic(d)
    assert set(d.home()) == set(range(low.icfg.n))
    for r in d.regions:
        if r.kind == "loop":
            assert not check_loop_subgraph(r.graph, r.entry, r.split.exits)
