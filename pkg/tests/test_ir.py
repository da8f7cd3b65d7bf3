import random

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from empc.corpus import SHAPES, generate_program
from empc.graph import Graph
from empc.icfg import ICfg, build_icfg, lower
from empc.interp import EngineError, FeasibilityUnknown, PathPrefix, all_assignments, feasible, run_concrete
from empc.ir import IRError, iter_branches, parse_program, pretty

# vertices of the three-diamond example CFG in program order: bb0 .. bb8
FIG1_EDGES = {(0, 1), (0, 4), (1, 2), (1, 3), (2, 5), (3, 5), (4, 5), (5, 6), (5, 7), (6, 8), (7, 8)}


def test_fig1_parses_to_one_function_three_branches(fig1):
    assert len(fig1.functions) == 1
    assert len(list(iter_branches(fig1))) == 3


def test_empty_body_becomes_return_zero():
    p = parse_program("fn main() { }")
    (b,) = p.functions[0].blocks
    assert pretty(p).strip().endswith("return 0;\n}")
    assert not b.stmts


@pytest.mark.parametrize(
    "src, needle",
    [
        ("fn main() { bb0: return z; }", "undefined"),
        ("fn main() { bb0: call h() -> x; return x; }", "unknown function"),
        ("input a in [3, 1];\nfn main() { bb0: return a; }", "empty domain"),
        ("fn main() { bb0: x := ; }", "expected"),
    ],
)
def test_parse_errors_carry_positions(src, needle):
    with pytest.raises(IRError) as err:
        parse_program(src)
    assert needle in str(err.value) and err.value.line == 1 and err.value.col is not None


def test_conditionally_defined_variable_rejected():
    src = """
input a in [0, 1];
fn main() {
  bb0:
    br a < 1 ? s : j;
  s:
    x := 1;
    goto j;
  j:
    return x;
}
"""
    with pytest.raises(IRError):
        parse_program(src)


@pytest.mark.parametrize("seed", range(100))
def test_pretty_parse_roundtrip(seed):
    rng = random.Random(seed)
    text = generate_program(rng.choice(SHAPES[1:]), rng)
    p = parse_program(text)
    assert parse_program(pretty(p)) == p
    assert pretty(parse_program(pretty(p))) == pretty(p)


def test_fig1_cfg_shape(fig1):
    ic = build_icfg(fig1)
    assert ic.n == 9 and set(ic.graph.edges) == FIG1_EDGES
    assert ic.kinds[8] == "exit" and ic.entry == 0
    assert [v for v in range(9) if ic.kinds[v] == "branch"] == [0, 1, 5]


def test_single_block_icfg():
    ic = build_icfg(parse_program("fn main() { bb0: return 0; }"))
    assert ic.n == 1 and not ic.graph.edges


def test_icfg_json_roundtrip(fig1):
    ic = build_icfg(fig1)
    assert ICfg.from_json(ic.to_json()) == ic


def test_fig1_then_then_then_trace(fig1):
    run = run_concrete(fig1, {"a": 0, "b": 0, "c": 0})
    assert run.trace.blocks == (0, 1, 2, 5, 6, 8)
    assert run.trace.decisions == (True, True, True) and not run.truncated


def test_return_zero_trace_is_one_block():
    run = run_concrete(parse_program("fn main() { bb0: return 0; }"), {})
    assert run.trace.blocks == (0,) and run.result == 0


def test_step_budget_truncates():
    src = "input n in [0, 3];\nfn main() {\n  h:\n    br n < 10 ? h : out;\n  out:\n    return n;\n}\n"
    run = run_concrete(parse_program(src), {"n": 0}, step_budget=10)
    assert run.truncated and len(run.trace.blocks) == 11


def test_recursion_bound():
    src = "fn f() {\n  e:\n    goto c;\n  c:\n    call f() -> y;\n    return y;\n}\nfn main() {\n  bb0:\n    call f() -> z;\n    return z;\n}\n"
    p = parse_program(src)
    with pytest.raises(EngineError):
        run_concrete(p, {})
    assert run_concrete(p, {}, max_depth=100, step_budget=50).truncated


def test_bad_assignment_rejected(fig1):
    with pytest.raises(ValueError):
        run_concrete(fig1, {"a": 0, "b": 0})
    with pytest.raises(ValueError):
        run_concrete(fig1, {"a": 9, "b": 0, "c": 0})


@settings(max_examples=40)
@given(st.sampled_from(SHAPES[1:]), st.integers(0, 10_000), st.integers(0, 50))
def test_traces_follow_icfg_edges_and_are_deterministic(shape, seed, pick):
    p = parse_program(generate_program(shape, random.Random(seed)))
    low = lower(p)
    inputs = list(all_assignments(p))[pick % p.input_space()]
    run = run_concrete(low, inputs)
    edges = set(low.icfg.graph.edges)
    assert all(e in edges for e in zip(run.trace.blocks, run.trace.blocks[1:]))
    assert run_concrete(low, inputs) == run


def test_empty_prefix_feasible(fig1):
    ok, witness = feasible(fig1, PathPrefix())
    assert ok and witness is not None


def test_contradictory_prefix_infeasible():
    src = """
input x in [0, 15];
fn main() {
  bb0:
    br x < 5 ? a : b;
  a:
    br 10 < x ? c : d;
  b:
    return 0;
  c:
    return 1;
  d:
    return 2;
}
"""
    p = parse_program(src)
    assert feasible(p, PathPrefix((0, 1, 3)))[0] is False
    assert feasible(p, PathPrefix((0, 1, 4)))[0] is True


def test_feasibility_budget_reports_unknown(fig1):
    with pytest.raises(FeasibilityUnknown):
        feasible(fig1, PathPrefix((0,)), budget=10)


@settings(max_examples=30)
@given(st.sampled_from(SHAPES[1:]), st.integers(0, 10_000), st.integers(1, 12), st.data())
def test_feasibility_agrees_with_enumeration(shape, seed, length, data):
    p = parse_program(generate_program(shape, random.Random(seed)))
    low = lower(p)
    g: Graph = low.icfg.graph
    # random walk from the entry gives a well-formed prefix, feasible or not
    v = low.entries[p.entry_function]
    blocks = [v]
    for _ in range(length):
        succ = sorted(g.successors(v))
        if not succ:
            break
        v = data.draw(st.sampled_from(succ))
        blocks.append(v)
    prefix = PathPrefix(tuple(blocks))
    ok, witness = feasible(low, prefix)
    traces = [run_concrete(low, a).trace for a in all_assignments(p)]
    assert ok == any(t.blocks[: len(blocks)] == prefix.blocks for t in traces)
    if ok:
        assert run_concrete(low, witness).trace.startswith(prefix)
        # prefix closure: every shorter prefix is feasible too
        assert feasible(low, PathPrefix(prefix.blocks[:-1]))[0]
