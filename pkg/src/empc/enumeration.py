"""Enumeration of all maximum matchings, and of the minimum path covers they induce.

Two maximum matchings differ by vertex-disjoint alternating cycles and
even-length alternating paths. Starting from one maximum matching ``M``, each
node of the search looks for such a cycle or path ``C``. If there is none,
``M`` is the only maximum matching left. Otherwise a matched edge ``e`` on
``C`` splits the space in two: matchings that use ``e`` (keep ``M``, delete
both endpoints) and matchings that avoid ``e`` (switch to ``M xor C``, delete
``e``). Every leaf yields exactly one matching, so nothing repeats.
"""

from __future__ import annotations

from collections import deque
from dataclasses import dataclass
from itertools import islice
from typing import Iterator

from .graph import Graph
from .mpc import BipartiteGraph, Matching, PathCover, hopcroft_karp, matching_to_mpc, to_bipartite

DEFAULT_CAP = 64
# Distinct matchings can collapse into one cover; bound how many we scan per call.
SCAN_LIMIT = 4096


@dataclass(frozen=True)
class MatchingSet:
    matchings: tuple[Matching, ...]
    capped: bool


@dataclass(frozen=True)
class MpcSet:
    covers: tuple[PathCover, ...]
    capped: bool

    def to_json(self) -> dict:
        return {"covers": [c.to_json() for c in self.covers], "capped": self.capped}


def _alternating_cycle(edges: frozenset, match_l: dict, match_r: dict) -> list[tuple[int, int]] | None:
    """A directed cycle in the orientation unmatched L->R, matched R->L."""
    succ: dict = {}
    for i, j in sorted(edges):
        if match_l.get(i) == j:
            succ.setdefault(("R", j), []).append(("L", i))
        else:
            succ.setdefault(("L", i), []).append(("R", j))
    color: dict = {}
    for root in sorted(succ):
        if root in color:
            continue
        color[root] = 1
        stack = [(root, iter(succ.get(root, ())))]
        trail = [root]
        while stack:
            node, it = stack[-1]
            nxt = next(it, None)
            if nxt is None:
                color[node] = 2
                stack.pop()
                trail.pop()
                continue
            state = color.get(nxt, 0)
            if state == 1:
                cyc = trail[trail.index(nxt):] + [nxt]
                return [_as_edge(a, b) for a, b in zip(cyc, cyc[1:])]
            if state == 0:
                color[nxt] = 1
                stack.append((nxt, iter(succ.get(nxt, ()))))
                trail.append(nxt)
    return None


def _as_edge(a, b) -> tuple[int, int]:
    return (a[1], b[1]) if a[0] == "L" else (b[1], a[1])


def _alternating_path(
    edges: frozenset, lefts: set, rights: set, match_l: dict, match_r: dict
) -> list[tuple[int, int]] | None:
    """An even-length alternating path ending at a vertex left free by the matching.

    Either free-left, unmatched, matched, ..., arriving at a matched left
    vertex; or the mirror image that arrives at a free right vertex.
    """
    adj_l: dict[int, list[int]] = {}
    adj_r: dict[int, list[int]] = {}
    for i, j in sorted(edges):
        adj_l.setdefault(i, []).append(j)
        adj_r.setdefault(j, []).append(i)

    # Free left start: L --unmatched--> R --matched--> L ...
    starts = [i for i in sorted(lefts) if i not in match_l]
    parent: dict = {("L", i): None for i in starts}
    queue = deque(("L", i) for i in starts)
    while queue:
        node = queue.popleft()
        side, x = node
        if side == "L":
            for j in adj_l.get(x, ()):
                if match_l.get(x) != j and ("R", j) not in parent:
                    parent[("R", j)] = node
                    queue.append(("R", j))
        elif x in match_r:
            nxt = ("L", match_r[x])
            if nxt not in parent:
                parent[nxt] = node
                return _unwind(parent, nxt)
    # Free right end, searched backwards: R <--unmatched-- L <--matched-- R ...
    starts = [j for j in sorted(rights) if j not in match_r]
    parent = {("R", j): None for j in starts}
    queue = deque(("R", j) for j in starts)
    while queue:
        node = queue.popleft()
        side, x = node
        if side == "R":
            for i in adj_r.get(x, ()):
                if match_l.get(i) != x and ("L", i) not in parent:
                    parent[("L", i)] = node
                    queue.append(("L", i))
        elif x in match_l:
            nxt = ("R", match_l[x])
            if nxt not in parent:
                parent[nxt] = node
                return _unwind(parent, nxt)
    return None


def _unwind(parent: dict, end) -> list[tuple[int, int]]:
    chain = [end]
    while parent[chain[-1]] is not None:
        chain.append(parent[chain[-1]])
    return [_as_edge(a, b) for a, b in zip(chain, chain[1:])]


def _search(
    edges: frozenset, lefts: set, rights: set, matching: frozenset, fixed: frozenset
) -> Iterator[frozenset]:
    match_l = dict(matching)
    match_r = {j: i for i, j in matching}
    diff = _alternating_cycle(edges, match_l, match_r)
    if diff is None:
        diff = _alternating_path(edges, lefts, rights, match_l, match_r)
    if diff is None:
        yield matching | fixed
        return
    diff_set = frozenset(diff)
    other = matching ^ diff_set
    e = min(matching & diff_set)
    i, j = e
    keep = frozenset(f for f in edges if f[0] != i and f[1] != j)
    yield from _search(keep, lefts - {i}, rights - {j}, matching - {e}, fixed | {e})
    yield from _search(edges - {e}, lefts, rights, other, fixed)


def iter_max_matchings(b: BipartiteGraph, seed: int = 0) -> Iterator[Matching]:
    """All maximum matchings, depth-first, starting with ``hopcroft_karp(b, seed)``."""
    start = hopcroft_karp(b, seed).pairs
    for pairs in _search(b.edges, set(range(b.left_count)), set(range(b.right_count)), start, frozenset()):
        yield Matching(pairs)


def enumerate_max_matchings(b: BipartiteGraph, cap: int | None = DEFAULT_CAP, seed: int = 0) -> MatchingSet:
    """First ``cap`` maximum matchings (all of them when ``cap`` is None)."""
    if cap is not None and cap < 1:
        raise ValueError("cap must be at least 1")
    it = iter_max_matchings(b, seed)
    if cap is None:
        return MatchingSet(tuple(it), False)
    got = tuple(islice(it, cap))
    return MatchingSet(got, next(it, None) is not None)


def enumerate_mpcs(g: Graph, cap: int | None = DEFAULT_CAP, seed: int = 0) -> MpcSet:
    """Distinct minimum path covers from successive maximum matchings.

    Covers are deduplicated by their sorted path lists. ``capped`` is set when
    the cap was reached with matchings still unexamined, or when the scan limit
    cut the search short.
    """
    if cap is not None and cap < 1:
        raise ValueError("cap must be at least 1")
    b = to_bipartite(g)
    covers: list[PathCover] = []
    seen: set = set()
    scanned = 0
    it = iter_max_matchings(b, seed)
    for m in it:
        scanned += 1
        cover = matching_to_mpc(m, g)
        if cover.key() not in seen:
            seen.add(cover.key())
            covers.append(cover)
        if cap is not None and (len(covers) >= cap or scanned >= SCAN_LIMIT):
            return MpcSet(tuple(covers), next(it, None) is not None)
    return MpcSet(tuple(covers), False)
