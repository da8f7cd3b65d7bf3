"""Data and potential dependence of branches, over the back-edge-free CFG.

A branch *data-depends* on a vertex that defines one of its condition
variables when that definition reaches the branch along some path
(reaching definitions). Parameters are defined by the call sites that bind
them and a call's destination variable by its return site, one level deep.

A branch ``i`` is *potentially dependent* on an earlier branch ``j`` of the
same function when, for some condition variable ``x`` of ``i``, one path
from ``j`` to ``i`` leaves ``x`` untouched and another redefines it. The
vertices counted on a path are those after ``j`` up to and including ``i``
(statements in ``i``'s own segment run before its condition is evaluated).
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Any

from .graph import Graph, topological_order
from .icfg import Lowered, local_graph, lower
from .ir import Assign, Branch, MiniProgram

PARAM = -1  # pseudo-vertex: parameter binding at function entry


@dataclass(frozen=True)
class DependenceMap:
    data_dep: dict[int, frozenset[int]]
    potential_dep: dict[int, frozenset[int]]
    labels: dict[int, str]

    def to_json(self) -> dict[str, Any]:
        def name(v: int) -> str:
            return self.labels[v]

        return {
            "data_dep": {name(b): sorted(map(name, s)) for b, s in sorted(self.data_dep.items())},
            "potential_dep": {name(b): sorted(map(name, s)) for b, s in sorted(self.potential_dep.items())},
        }


@dataclass(frozen=True)
class FunctionView:
    """One function's back-edge-free CFG with per-vertex definitions and branch conditions."""

    name: str
    graph: Graph  # over iCFG vertex ids; vertices outside the function are isolated
    vertices: tuple[int, ...]
    entry: int
    defs: dict[int, frozenset[str]]
    uses: dict[int, frozenset[str]]  # condition variables of branch vertices
    params: frozenset[str]
    inputs: frozenset[str]


def function_views(p: MiniProgram | Lowered) -> dict[str, FunctionView]:
    low = p if isinstance(p, Lowered) else lower(p)
    icfg = low.icfg
    lg = local_graph(icfg, low.return_site)
    dag = Graph(lg.n, set(lg.edges) - icfg.back_edges, lg.labels)
    inputs = frozenset(low.program.input_names())
    views = {}
    for f in low.program.functions:
        vs = tuple(icfg.vertices_of(f.name))
        defs, uses = {}, {}
        for v in vs:
            c = low.code[v]
            d = {s.dst for s in c.stmts if isinstance(s, Assign)}
            if c.ret_dst is not None:
                d.add(c.ret_dst)
            defs[v] = frozenset(d)
            if isinstance(c.term, Branch):
                uses[v] = frozenset((c.term.cond.lhs.variables() | c.term.cond.rhs.variables()) - inputs)
        views[f.name] = FunctionView(
            f.name, dag, vs, low.entries[f.name], defs, uses, frozenset(f.params), inputs
        )
    return views


def _call_sites(low: Lowered) -> dict[str, list[int]]:
    sites: dict[str, list[int]] = {f.name: [] for f in low.program.functions}
    for v, c in enumerate(low.code):
        if c.call is not None:
            sites[c.call.func].append(v)
    return sites


def _reaching_definitions(view: FunctionView) -> dict[int, set[tuple[str, int]]]:
    """RD_out per vertex as (variable, defining vertex) pairs; parameters start defined at PARAM."""
    order = [v for v in topological_order(view.graph) if v in set(view.vertices)]
    out: dict[int, set[tuple[str, int]]] = {}
    for v in order:
        if v == view.entry:
            rd_in = {(x, PARAM) for x in view.params}
        else:
            rd_in = set()
            for u in view.graph.predecessors(v):
                rd_in |= out.get(u, set())
        killed = view.defs[v]
        out[v] = {(x, d) for x, d in rd_in if x not in killed} | {(x, v) for x in killed}
    return out


def data_dependence(p: MiniProgram | Lowered) -> dict[int, frozenset[int]]:
    """Branch vertex -> vertices whose definitions of its condition variables reach it."""
    low = p if isinstance(p, Lowered) else lower(p)
    sites = _call_sites(low)
    result: dict[int, frozenset[int]] = {}
    for view in function_views(low).values():
        rd = _reaching_definitions(view)
        for b, used in view.uses.items():
            deps: set[int] = set()
            for x, d in rd.get(b, ()):
                if x not in used:
                    continue
                if d == PARAM:
                    deps.update(sites[view.name])
                else:
                    deps.add(d)
            if deps:
                result[b] = frozenset(deps)
    return result


def _reach_avoiding(g: Graph, src: int, blocked: set[int], allowed: set[int]) -> set[int]:
    """Vertices reachable from ``src`` by a nonempty path whose vertices after ``src`` avoid ``blocked``."""
    seen: set[int] = set()
    stack = [src]
    while stack:
        v = stack.pop()
        for w in g.successors(v):
            if w in allowed and w not in seen and w not in blocked:
                seen.add(w)
                stack.append(w)
    return seen


def potential_dependence(p: MiniProgram | Lowered) -> dict[int, frozenset[int]]:
    """Branch vertex ``i`` -> branches ``j`` with both a defining and a definition-free path ``j -> i``."""
    low = p if isinstance(p, Lowered) else lower(p)
    result: dict[int, frozenset[int]] = {}
    for view in function_views(low).values():
        allowed = set(view.vertices)
        g = view.graph
        reach = {v: _reach_avoiding(g, v, set(), allowed) for v in view.vertices}
        for i, used in view.uses.items():
            deps = set()
            for j in view.uses:
                if j == i or i not in reach[j]:
                    continue
                for x in used:
                    definers = {v for v in view.vertices if x in view.defs[v]}
                    if i in definers:
                        continue
                    clear = i in _reach_avoiding(g, j, definers, allowed)
                    dirty = any(d in reach[j] and i in reach[d] for d in definers)
                    if clear and dirty:
                        deps.add(j)
                        break
            if deps:
                result[i] = frozenset(deps)
    return result


def analyze(p: MiniProgram | Lowered) -> DependenceMap:
    low = p if isinstance(p, Lowered) else lower(p)
    labels = {v: low.icfg.label(v) for v in range(low.icfg.n)}
    return DependenceMap(data_dependence(low), potential_dependence(low), labels)
