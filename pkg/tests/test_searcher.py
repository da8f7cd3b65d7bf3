import random
from collections import Counter

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

import empc.searcher as searcher
from empc.corpus import SHAPES, generate_program
from empc.dependence import analyze
from empc.icfg import lower
from empc.interp import run_concrete
from empc.ir import parse_program
from empc.searcher import (
    ACTIVE,
    COMPLETED,
    STRATEGIES,
    EmpcConfig,
    Engine,
    EngineConfig,
    ForkTree,
    SymState,
    baseline_select,
    engine_run,
)
from conftest import load


def _labels(low, trace):
    return [low.icfg.label(v) for v in trace]


def _state(i):
    return SymState(i, 0, np.arange(1), {}, [], [0], [])


def test_fig1_empc_three_paths_bfs_six(fig1):
    m = engine_run(fig1, "empc", 10_000, 0)
    assert m.coverage == 1.0 and m.completed_paths == 3
    for s in ("bfs", "dfs", "random-state", "random-path"):
        b = engine_run(fig1, s, 10_000, 0)
        assert b.completed_paths == 6 and b.coverage == 1.0


def test_fig1_empc_realizes_a_minimum_cover(fig1):
    low = lower(fig1)
    traces = engine_run(low, "empc", 10_000, 0).completed_traces
    assert len(traces) == 3
    assert set().union(*traces) == set(range(9))


def test_single_path_program_same_metrics_for_every_strategy():
    p = parse_program("input a in [0, 3];\nfn main() {\n  bb0:\n    x := a + 1;\n    goto bb1;\n  bb1:\n    return x;\n}\n")
    dumps = set()
    for s in STRATEGIES:
        data = engine_run(p, s, 100, 3).to_json()
        data.pop("strategy")
        dumps.add(repr(sorted(data.items())))
    assert len(dumps) == 1


def test_handler_unused_when_everything_is_feasible(fig1):
    m = engine_run(fig1, "empc", 10_000, 0)
    assert m.handler_invocations == 0 and m.fallback_count == 0


def test_fallback_flagged_without_dependences():
    p = load("input_guard.mir")
    assert analyze(p).data_dep == {} and analyze(p).potential_dep == {}
    m = engine_run(p, "empc", 1000, 0)
    assert m.fallback_count >= 1 and m.coverage == 1.0
    off = engine_run(p, "empc", 1000, 0, EngineConfig(empc=EmpcConfig(handle_infeasible=False)))
    assert off.coverage < 1.0


def test_handler_redirects_to_a_state_that_passed_a_dependence(monkeypatch):
    low = lower(load("parity_two_diamonds.mir"))
    dep = analyze(low)
    revived = []
    original = Engine._revive

    def spy(self, st, u):
        revived.append(tuple(st.blocks))
        original(self, st, u)

    monkeypatch.setattr(Engine, "_revive", spy)
    m = engine_run(low, "empc", 10_000, 0)
    assert m.coverage == 1.0 and m.handler_invocations >= 1 and m.fallback_count == 0
    guard = low.block_vertex[("main", "bb6")]
    targets = dep.data_dep[guard] | dep.potential_dep[guard]
    assert revived and all(set(blocks) & targets for blocks in revived)


def test_loop_policy_two_paths_then_exit():
    low = lower(load("loop_two_paths.mir"))
    (trace,) = engine_run(low, "empc", 10_000, 0).completed_traces
    assert _labels(low, trace) == [
        "main:bb0", "main:h", "main:b", "main:l", "main:m",
        "main:h", "main:b", "main:r", "main:m", "main:h", "main:x",
    ]


def test_loop_policy_one_path_exits_on_second_visit():
    low = lower(load("loop_one_path.mir"))
    (trace,) = engine_run(low, "empc", 10_000, 0).completed_traces
    assert _labels(low, trace) == ["main:bb0", "main:h", "main:b", "main:h", "main:x"]


def test_call_policy_new_path_per_call():
    low = lower(load("call_twice.mir"))
    (trace,) = engine_run(low, "empc", 10_000, 0).completed_traces
    assert _labels(low, trace) == [
        "main:bb0", "g:e", "g:t", "g:j", "main:bb0#1", "g:e", "g:f", "g:j", "main:bb0#2",
    ]


def test_recursion_runs_under_every_strategy():
    p = load("recursive.mir")
    for s in STRATEGIES:
        assert engine_run(p, s, 10_000, 0).coverage == 1.0


@pytest.mark.parametrize("strategy", STRATEGIES)
def test_runs_are_deterministic(fig1, strategy):
    a = engine_run(fig1, strategy, 10_000, 7).dumps()
    assert a == engine_run(fig1, strategy, 10_000, 7).dumps()


def test_empc_choice_ignores_state_order(monkeypatch):
    original = searcher.empc_select
    rng = random.Random(1)
    calls = []

    def check(active, plan):
        pick = original(active, plan)
        for _ in range(3):
            shuffled = list(active)
            rng.shuffle(shuffled)
            assert original(shuffled, plan) is pick
        calls.append(pick.id)
        return pick

    monkeypatch.setattr(searcher, "empc_select", check)
    for name in ("parity_two_diamonds.mir", "loop_two_paths.mir", "call_twice.mir"):
        engine_run(load(name), "empc", 10_000, 0)
    assert calls


@settings(max_examples=25)
@given(st.sampled_from([s for s in SHAPES if s != "fig1"]), st.sampled_from(STRATEGIES), st.integers(0, 10_000))
def test_coverage_never_decreases(shape, strategy, seed):
    p = parse_program(generate_program(shape, random.Random(seed)))
    m = engine_run(p, strategy, 2000, seed)
    s = m.covered_series
    assert all(a <= b for a, b in zip(s, s[1:]))
    assert m.covered_blocks <= m.reachable_blocks


@settings(max_examples=20)
@given(st.sampled_from([s for s in SHAPES if s != "fig1"]), st.integers(0, 10_000))
def test_completed_states_replay_concretely(shape, seed):
    # the engine's symbolic route and concrete execution must agree on every input of a finished state
    low = lower(parse_program(generate_program(shape, random.Random(seed))))
    eng = Engine(low, "bfs", EngineConfig(budget=5000))
    eng.run()
    names = [d.name for d in low.program.inputs]
    seen = 0
    for s in eng.states:
        if s.status != COMPLETED:
            continue
        for r in s.rows:
            inputs = dict(zip(names, (int(x) for x in eng.table[r])))
            assert run_concrete(low, inputs).trace.blocks == tuple(s.blocks)
            seen += 1
    if not any(s.status == ACTIVE for s in eng.states):
        # a finished exploration partitions the input space among completed states
        assert seen == low.program.input_space()


def test_bfs_is_fifo():
    states = [_state(i) for i in (4, 2, 7, 5)]
    order = []
    while states:
        pick = baseline_select(states, "bfs", random.Random(0))
        order.append(pick.id)
        states.remove(pick)
    assert order == [2, 4, 5, 7]
    assert baseline_select([_state(1), _state(3)], "dfs", random.Random(0)).id == 3


def _exact(children, node=0):
    """Leaf probabilities of a walk that splits evenly among children at every node."""
    kids = children.get(node, [])
    if not kids:
        return {node: 1.0}
    out = {}
    for k in kids:
        for leaf, p in _exact(children, k).items():
            out[leaf] = p / len(kids)
    return out


def _chi2(counts, probs, n):
    return sum((counts[k] - n * p) ** 2 / (n * p) for k, p in probs.items())


def test_random_path_fair_fork():
    tree = ForkTree()
    tree.add(0, 1)
    tree.add(0, 2)
    rng = random.Random(0)
    n = 10_000
    counts = Counter(tree.walk([1, 2], rng) for _ in range(n))
    # 0.999 quantile of chi-square with one degree of freedom
    assert _chi2(counts, {1: 0.5, 2: 0.5}, n) < 10.83


def test_random_path_unbalanced_tree():
    tree = ForkTree()
    tree.add(0, 1)
    tree.add(0, 2)
    tree.add(1, 3)
    tree.add(1, 4)
    tree.add(3, 5)
    tree.add(3, 6)
    leaves = [2, 4, 5, 6]
    exact = _exact(tree.children)
    assert exact == {2: 1 / 2, 4: 1 / 4, 5: 1 / 8, 6: 1 / 8}
    rng = random.Random(0)
    n = 10_000
    counts = Counter(tree.walk(leaves, rng) for _ in range(n))
    assert _chi2(counts, exact, n) < 16.27

    flat = ForkTree()
    flat.add(0, 1)
    flat.add(0, 2)
    for leaf in (3, 4, 5):
        flat.add(1, leaf)
    counts = Counter(flat.walk([2, 3, 4, 5], rng) for _ in range(n))
    exact = _exact(flat.children)
    assert exact == pytest.approx({2: 1 / 2, 3: 1 / 6, 4: 1 / 6, 5: 1 / 6})
    assert _chi2(counts, exact, n) < 16.27


def test_random_state_is_uniform():
    states = [_state(i) for i in range(4)]
    rng = random.Random(0)
    n = 10_000
    counts = Counter(baseline_select(states, "random-state", rng).id for _ in range(n))
    assert _chi2(counts, {i: 0.25 for i in range(4)}, n) < 16.27


def test_unknown_strategy_rejected(fig1):
    with pytest.raises(ValueError):
        engine_run(fig1, "nurs", 10, 0)


def test_oversized_input_space_is_a_warning(fig1):
    m = engine_run(fig1, "bfs", 100, 0, EngineConfig(feasibility_budget=10))
    assert m.warnings and m.warnings[0].startswith("feasibility unknown") and m.steps == 0


def test_metrics_csv_header(fig1):
    csv_text = engine_run(fig1, "bfs", 100, 0).to_csv()
    assert csv_text.splitlines()[0] == "step,covered_blocks,live_states"
