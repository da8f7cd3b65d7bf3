"""Random split instances and the cover-size law they must satisfy.

Splitting a DAG into a remainder and a subgraph should let the minimum
cover size of the whole be rebuilt from the parts:
``|P| = |P'| - k + max(|P_sub|, k)``, where ``k`` is the largest number of
paths through the merged vertex over all minimum covers of the remainder.
Both the one-entry-one-exit and the loop variant are checked here by brute
force on small graphs.
"""

from __future__ import annotations

import random
from dataclasses import dataclass

from .graph import Graph
from .mpc import brute_force_mpc
from .transform import (
    LoopInfo,
    SplitResult,
    check_loop_subgraph,
    check_one_entry_one_exit,
    combined_mpc_size,
    max_k_through,
    natural_loops,
    split_one_entry_one_exit,
    transform_loop,
)


@dataclass(frozen=True)
class OeoeInstance:
    graph: Graph
    entry: int
    exit: int
    region: frozenset[int]


@dataclass(frozen=True)
class LoopInstance:
    graph: Graph  # back edges already removed
    loop: LoopInfo
    cyclic: Graph  # the same graph with its back edges restored


@dataclass(frozen=True)
class SizeCheck:
    whole: int
    remainder: int
    sub: int
    k: int
    combined: int
    definition_problems: tuple[str, ...]

    @property
    def holds(self) -> bool:
        return self.whole == self.combined and not self.definition_problems


def _rdag(n: int, p: float, rng: random.Random) -> list[tuple[int, int]]:
    return [(i, j) for i in range(n) for j in range(i + 1, n) if rng.random() < p]


def oeoe_instance(rng: random.Random, max_outer: int = 6, max_interior: int = 4) -> OeoeInstance:
    """A random DAG with one embedded one-entry-one-exit region (at most 12 vertices by default)."""
    m = rng.randint(2, max_outer)
    r = rng.randint(0, max_interior)
    outer = _rdag(m, rng.uniform(0.2, 0.5), rng)
    s = rng.randrange(m)
    size = r + 2
    reg = _rdag(size, rng.uniform(0.2, 0.6), rng)
    for i in range(1, size):
        if not any(v == i for _, v in reg):
            reg.append((0, i))
    for i in range(size - 1):
        if not any(u == i for u, _ in reg):
            reg.append((i, size - 1))
    # Outer vertex s is blown up into the region; its in-edges hit the entry, out-edges leave the exit.
    idx, c = {}, 0
    for v in range(m):
        if v != s:
            idx[v] = c
            c += 1
    off = c
    edges = set()
    for u, v in outer:
        uu = off + size - 1 if u == s else idx[u]
        vv = off if v == s else idx[v]
        edges.add((uu, vv))
    for u, v in reg:
        edges.add((off + u, off + v))
    g = Graph(c + size, edges)
    return OeoeInstance(g, off, off + size - 1, frozenset(range(off, off + size)))


def loop_instance(rng: random.Random, max_body: int = 4, max_exits: int = 3, max_outer: int = 5) -> LoopInstance:
    """A random acyclic graph holding one loop body with header 0, plus its back edges.

    Every body vertex without a successor in the body gets an exit edge, and
    every body vertex without a successor in the body is a latch, so the body
    is exactly the natural loop of its back edges.
    """
    nb = rng.randint(1, max_body)
    ne = rng.randint(1, max_exits)
    body = _rdag(nb, rng.uniform(0.2, 0.6), rng)
    for i in range(1, nb):
        if not any(v == i for _, v in body):
            body.append((rng.randrange(i), i))
    ex = [(rng.randrange(nb), nb + e) for e in range(ne)]
    for i in range(nb):
        if not any(u == i for u, _ in body + ex):
            ex.append((i, nb + rng.randrange(ne)))
    for _ in range(rng.randint(0, 2)):
        ex.append((rng.randrange(nb), nb + rng.randrange(ne)))
    ns = nb + ne
    no = rng.randint(1, max_outer)
    outer = [(ns + a, ns + b) for a, b in _rdag(no, rng.uniform(0.1, 0.5), rng)]
    cut = rng.randint(0, no)
    pre = [ns + i for i in range(cut) if rng.random() < 0.6]
    post = [(e, ns + i) for e in range(nb, ns) for i in range(cut, no) if rng.random() < 0.4]
    edges = set(body) | set(ex) | set(outer) | {(u, 0) for u in pre} | set(post)
    g = Graph(ns + no, edges)
    latches = [t for t in range(nb) if not any(u == t and v < nb for u, v in body)]
    back = frozenset((t, 0) for t in latches if t != 0)
    cyclic = Graph(g.n, edges | back)
    exiting = frozenset((u, v) for u, v in edges if u < nb <= v < ns)
    li = LoopInfo(0, frozenset(range(nb)), back, exiting, frozenset(v for _, v in exiting))
    return LoopInstance(g, li, cyclic)


def check_oeoe(inst: OeoeInstance, limit: int = 12) -> tuple[SizeCheck, SplitResult]:
    res = split_one_entry_one_exit(inst.graph, inst.entry, inst.exit)
    problems = list(check_one_entry_one_exit(res.subgraph, res.entry, res.exits[0]))
    if set(res.sub_map) != set(inst.region):
        problems.append("extracted region differs from the embedded one")
    whole, _ = brute_force_mpc(inst.graph, limit=limit, all_covers=False)
    rem, _ = brute_force_mpc(res.remainder, limit=limit, all_covers=False)
    sub, _ = brute_force_mpc(res.subgraph, limit=limit, all_covers=False)
    k = max_k_through(res.remainder, res.merged_vertex, limit=limit)
    return SizeCheck(whole, rem, sub, k, combined_mpc_size(rem, k, sub), tuple(problems)), res


def check_loop(inst: LoopInstance, limit: int = 12) -> tuple[SizeCheck, SplitResult]:
    res = transform_loop(inst.graph, inst.loop)
    problems = list(check_loop_subgraph(res.subgraph, res.entry, res.exits))
    if inst.loop.back_edges:
        found = [li for li in natural_loops(inst.cyclic, 0) if li.header == 0]
        if not found or found[0].body != inst.loop.body:
            problems.append("dominator loop body differs from the constructed body")
    whole, _ = brute_force_mpc(inst.graph, limit=limit, all_covers=False)
    rem, _ = brute_force_mpc(res.remainder, limit=limit, all_covers=False)
    sub, _ = brute_force_mpc(res.subgraph, limit=limit, all_covers=False)
    through = [(res.merged_vertex, res.rem_map[x]) for x in sorted(inst.loop.exit_nodes)]
    k = max_k_through(res.remainder, res.merged_vertex, limit=limit, through_edges=through)
    return SizeCheck(whole, rem, sub, k, combined_mpc_size(rem, k, sub), tuple(problems)), res
