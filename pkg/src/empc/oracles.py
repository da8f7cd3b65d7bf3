"""Slow, independent reference implementations used to check the fast ones.

Nothing here shares code with the algorithms it checks: reachability is a
pairwise DFS probe, acyclicity is Kahn's algorithm, matchings are found by
plain recursion, cover size by brute-force antichain search (Dilworth), and
dependences by enumerating every path.
"""

from __future__ import annotations

from dataclasses import dataclass
from itertools import combinations
from typing import Iterator

from .graph import Graph
from .icfg import Lowered, lower
from .ir import Assign, Branch, MiniProgram
from .mpc import BipartiteGraph


def dfs_reaches(g: Graph, u: int, v: int) -> bool:
    """True iff a nonempty path leads from ``u`` to ``v``."""
    seen = set()
    stack = list(g.successors(u))
    while stack:
        x = stack.pop()
        if x == v:
            return True
        if x not in seen:
            seen.add(x)
            stack.extend(g.successors(x))
    return False


def kahn_is_dag(g: Graph) -> bool:
    indeg = [0] * g.n
    for _, w in g.edges:
        indeg[w] += 1
    ready = [v for v in range(g.n) if indeg[v] == 0]
    done = 0
    while ready:
        v = ready.pop()
        done += 1
        for w in g.successors(v):
            indeg[w] -= 1
            if indeg[w] == 0:
                ready.append(w)
    return done == g.n


def all_matchings(b: BipartiteGraph) -> Iterator[frozenset[tuple[int, int]]]:
    """Every matching (not only maximum ones), by branching on each left vertex."""
    adj = b.adjacency()

    def rec(i: int, used: frozenset[int], acc: frozenset):
        if i == b.left_count:
            yield acc
            return
        yield from rec(i + 1, used, acc)
        for j in adj[i]:
            if j not in used:
                yield from rec(i + 1, used | {j}, acc | {(i, j)})

    yield from rec(0, frozenset(), frozenset())


def max_matching_size(b: BipartiteGraph) -> int:
    return max(len(m) for m in all_matchings(b))


def all_max_matchings(b: BipartiteGraph) -> set[frozenset[tuple[int, int]]]:
    ms = list(all_matchings(b))
    best = max(len(m) for m in ms)
    return {m for m in ms if len(m) == best}


def antichain_width(g: Graph) -> int:
    """Largest set of pairwise unreachable vertices; equals the minimum cover size on a DAG."""
    reach = [[dfs_reaches(g, u, v) for v in range(g.n)] for u in range(g.n)]
    for size in range(g.n, 0, -1):
        for vs in combinations(range(g.n), size):
            if all(not reach[a][c] and not reach[c][a] for a, c in combinations(vs, 2)):
                return size
    return 0


def _paths(g: Graph, src: int, dst: int, allowed: set[int]) -> Iterator[tuple[int, ...]]:
    """Every path ``src -> dst`` inside ``allowed`` (the graph is acyclic, so all are simple)."""
    stack = [(src,)]
    while stack:
        path = stack.pop()
        if path[-1] == dst:
            yield path
            continue
        for w in g.successors(path[-1]):
            if w in allowed:
                stack.append(path + (w,))


@dataclass
class _View:
    name: str
    graph: Graph
    vertices: set[int]
    entry: int
    defs: dict[int, set[str]]
    uses: dict[int, set[str]]
    params: set[str]


def _views(p: MiniProgram | Lowered) -> tuple[Lowered, list[_View]]:
    """Per-function def/use tables rebuilt straight from the lowered code."""
    low = p if isinstance(p, Lowered) else lower(p)
    icfg = low.icfg
    edges = set(icfg.graph.edges) - icfg.call_edges - icfg.return_edges - icfg.back_edges
    edges |= set(low.return_site.items())
    g = Graph(icfg.n, edges)
    inputs = {d.name for d in low.program.inputs}
    views = []
    for f in low.program.functions:
        vs = {v for v in range(icfg.n) if low.code[v].function == f.name}
        defs, uses = {}, {}
        for v in vs:
            c = low.code[v]
            defs[v] = {s.dst for s in c.stmts if isinstance(s, Assign)}
            if c.ret_dst:
                defs[v].add(c.ret_dst)
            if isinstance(c.term, Branch):
                cond = c.term.cond
                uses[v] = {x for x, _ in cond.lhs.terms + cond.rhs.terms} - inputs
        views.append(_View(f.name, g, vs, low.entries[f.name], defs, uses, set(f.params)))
    return low, views


def brute_data_dependence(p: MiniProgram | Lowered) -> dict[int, frozenset[int]]:
    """Last definer of each condition variable along every entry-to-branch path."""
    low, views = _views(p)
    sites: dict[str, list[int]] = {f.name: [] for f in low.program.functions}
    for v, c in enumerate(low.code):
        if c.call is not None:
            sites[c.call.func].append(v)
    result = {}
    for view in views:
        allowed = view.vertices
        for b, used in view.uses.items():
            deps: set[int] = set()
            for path in _paths(view.graph, view.entry, b, allowed):
                for x in used:
                    for v in reversed(path):
                        if x in view.defs[v]:
                            deps.add(v)
                            break
                    else:
                        if x in view.params:
                            deps.update(sites[view.name])
            if deps:
                result[b] = frozenset(deps)
    return result


def brute_potential_dependence(p: MiniProgram | Lowered) -> dict[int, frozenset[int]]:
    """Two-path check over every enumerated path between each ordered pair of branches."""
    _, views = _views(p)
    result = {}
    for view in views:
        allowed = view.vertices
        for i, used in view.uses.items():
            deps = set()
            for j in view.uses:
                if j == i:
                    continue
                paths = list(_paths(view.graph, j, i, allowed))
                for x in used:
                    defined = [any(x in view.defs[v] for v in path[1:]) for path in paths]
                    if any(defined) and not all(defined):
                        deps.add(j)
            if deps:
                result[i] = frozenset(deps)
    return result
