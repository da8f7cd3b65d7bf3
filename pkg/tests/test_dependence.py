import random

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from empc.corpus import SHAPES, ShapeParams, generate_program
from empc.dependence import analyze, data_dependence, function_views, potential_dependence
from empc.icfg import lower
from empc.ir import parse_program
from empc.oracles import brute_data_dependence, brute_potential_dependence
from conftest import load


def _prog(body: str, inputs: str = "input a in [0, 3];\n"):
    return lower(parse_program(inputs + "fn main() {\n" + body + "}\n"))


def _v(low, label):
    return low.block_vertex[("main", label)]


def test_single_definition():
    low = _prog("  bb0:\n    x := 1;\n    goto bb1;\n  bb1:\n    br x < 2 ? bb2 : bb9;\n  bb2:\n    return x;\n  bb9:\n    return 0;\n")
    assert data_dependence(low)[_v(low, "bb1")] == {_v(low, "bb0")}


def test_killed_definition():
    low = _prog(
        "  bb0:\n    x := 1;\n    goto bb1;\n  bb1:\n    x := 2;\n    goto bb2;\n"
        "  bb2:\n    br x < 2 ? bb3 : bb9;\n  bb3:\n    return x;\n  bb9:\n    return 0;\n"
    )
    assert data_dependence(low)[_v(low, "bb2")] == {_v(low, "bb1")}


DIAMOND_DEF = """  bb0:
    x := 0;
    br a < 2 ? bb1 : bb2;
  bb1:
    x := 5;
    goto bb3;
  bb2:
    goto bb3;
  bb3:
    br x < 3 ? bb4 : bb5;
  bb4:
    return 1;
  bb5:
    return 2;
"""


def test_diamond_with_one_defining_arm():
    low = _prog(DIAMOND_DEF)
    b0, b3 = _v(low, "bb0"), _v(low, "bb3")
    assert potential_dependence(low)[b3] == {b0}
    assert data_dependence(low)[b3] == {b0, _v(low, "bb1")}


def test_straight_line_has_no_potential_dependence():
    low = _prog("  bb0:\n    x := a;\n    br x < 2 ? bb1 : bb9;\n  bb1:\n    return x;\n  bb9:\n    return 0;\n")
    assert potential_dependence(low) == {}


def test_branch_on_input_only_has_no_data_dependence():
    low = _prog("  bb0:\n    br a < 2 ? bb1 : bb2;\n  bb1:\n    return 0;\n  bb2:\n    return 1;\n")
    assert data_dependence(low) == {}


def test_parameter_maps_to_call_sites():
    low = lower(load("parity_callee.mir"))
    bump_branch = low.entries["bump"]
    sites = {v for v, c in enumerate(low.code) if c.call is not None}
    assert data_dependence(low)[bump_branch] == sites


def test_return_value_defines_destination():
    low = lower(load("parity_callee.mir"))
    after = next(v for v, c in enumerate(low.code) if c.ret_dst == "x")
    br = next(v for v, c in enumerate(low.code) if c.function == "main" and c.ret_dst == "x")
    assert after in data_dependence(low)[br]


def _check_invariants(low):
    views = function_views(low)
    data, pot = data_dependence(low), potential_dependence(low)
    defs = {v: d for view in views.values() for v, d in view.defs.items()}
    uses = {v: u for view in views.values() for v, u in view.uses.items()}
    for br, blocks in data.items():
        for v in blocks:
            assert low.code[v].call is not None or defs[v] & uses[br]
    for br, others in pot.items():
        assert br not in others and others <= set(uses)


@pytest.mark.parametrize("name", ["parity_callee.mir", "parity_toggle.mir", "recursive.mir"])
def test_examples_match_oracle(name):
    low = lower(load(name))
    assert data_dependence(low) == brute_data_dependence(low)
    assert potential_dependence(low) == brute_potential_dependence(low)
    _check_invariants(low)


@settings(max_examples=60)
@given(st.sampled_from([s for s in SHAPES if s != "fig1"]), st.integers(0, 10_000))
def test_oracle_equivalence_on_generated_programs(shape, seed):
    low = lower(parse_program(generate_program(shape, random.Random(seed), ShapeParams(max_blocks=30))))
    assert data_dependence(low) == brute_data_dependence(low)
    assert potential_dependence(low) == brute_potential_dependence(low)
    _check_invariants(low)


def test_analyze_json_uses_labels():
    low = _prog(DIAMOND_DEF)
    out = analyze(low).to_json()
    assert out["potential_dep"] == {"main:bb3": ["main:bb0"]}
