"""Single minimum path cover on a DAG via maximum bipartite matching.

The reduction: left copy ``x_i`` and right copy ``y_j`` of every vertex, an
edge ``(x_i, y_j)`` whenever ``i`` reaches ``j``. Every maximum matching
becomes a cover of size ``|V| - |M|`` by chaining matched pairs.
"""

from __future__ import annotations

import random
from collections import deque
from dataclasses import dataclass
from typing import Any, Iterable, Sequence

from .graph import Graph, GraphError, is_dag, reachability, shortest_path


class NotADagError(GraphError):
    pass


class TooLargeError(ValueError):
    """Exhaustive search refused because the input exceeds its size limit."""


@dataclass(frozen=True)
class BipartiteGraph:
    left_count: int
    right_count: int
    edges: frozenset[tuple[int, int]]

    def __post_init__(self):
        for i, j in self.edges:
            if not (0 <= i < self.left_count and 0 <= j < self.right_count):
                raise GraphError(f"bipartite edge ({i}, {j}) out of range")

    def adjacency(self) -> list[list[int]]:
        adj: list[list[int]] = [[] for _ in range(self.left_count)]
        for i, j in sorted(self.edges):
            adj[i].append(j)
        return adj


@dataclass(frozen=True)
class Matching:
    pairs: frozenset[tuple[int, int]]

    def __len__(self) -> int:
        return len(self.pairs)

    def is_matching_of(self, b: BipartiteGraph) -> bool:
        lefts = [i for i, _ in self.pairs]
        rights = [j for _, j in self.pairs]
        return (
            len(set(lefts)) == len(lefts)
            and len(set(rights)) == len(rights)
            and self.pairs <= b.edges
        )

    def sorted_pairs(self) -> list[tuple[int, int]]:
        return sorted(self.pairs)


@dataclass(frozen=True)
class PathCover:
    paths: tuple[tuple[int, ...], ...]

    @property
    def size(self) -> int:
        return len(self.paths)

    def key(self) -> tuple[tuple[int, ...], ...]:
        """Order-free identity used for deduplication."""
        return tuple(sorted(self.paths))

    def covered(self) -> set[int]:
        return {v for p in self.paths for v in p}

    def to_json(self) -> dict[str, Any]:
        return {"paths": [list(p) for p in self.paths], "size": self.size}

    @classmethod
    def from_json(cls, data) -> "PathCover":
        return cls(tuple(tuple(int(v) for v in p) for p in data["paths"]))


def cover_errors(cover: PathCover, g: Graph, expanded: bool = True) -> list[str]:
    """Return the reasons ``cover`` is not a valid cover of ``g`` (empty when valid)."""
    problems = []
    r = None if expanded else reachability(g)
    for idx, p in enumerate(cover.paths):
        if not p:
            problems.append(f"path {idx} is empty")
        for u, w in zip(p, p[1:]):
            ok = g.has_edge(u, w) if expanded else bool(r[u, w])
            if not ok:
                problems.append(f"path {idx} step {u}->{w} is not {'an edge' if expanded else 'reachable'}")
    missing = set(range(g.n)) - cover.covered()
    if missing:
        problems.append(f"uncovered vertices {sorted(missing)}")
    return problems


def _require_dag(g: Graph) -> None:
    if not is_dag(g):
        raise NotADagError("graph has a directed cycle")


def to_bipartite(g: Graph) -> BipartiteGraph:
    _require_dag(g)
    r = reachability(g)
    pairs = frozenset((int(i), int(j)) for i, j in zip(*r.nonzero()))
    return BipartiteGraph(g.n, g.n, pairs)


def hopcroft_karp(b: BipartiteGraph, seed: int = 0) -> Matching:
    """Maximum-cardinality matching.

    ``seed`` permutes the order in which free left vertices start their
    augmenting searches, so different seeds can land on different maximum
    matchings while each seed stays reproducible.
    """
    adj = b.adjacency()
    order = list(range(b.left_count))
    random.Random(seed).shuffle(order)
    match_l = [-1] * b.left_count
    match_r = [-1] * b.right_count
    inf = float("inf")

    def bfs() -> bool:
        dist = {}
        queue = deque()
        for u in order:
            if match_l[u] == -1:
                dist[u] = 0
                queue.append(u)
        found = False
        while queue:
            u = queue.popleft()
            for v in adj[u]:
                w = match_r[v]
                if w == -1:
                    found = True
                elif w not in dist:
                    dist[w] = dist[u] + 1
                    queue.append(w)
        layer.clear()
        layer.update(dist)
        return found

    def dfs(u: int) -> bool:
        for v in adj[u]:
            w = match_r[v]
            if w == -1 or (layer.get(w, inf) == layer[u] + 1 and dfs(w)):
                match_l[u] = v
                match_r[v] = u
                return True
        layer[u] = inf
        return False

    layer: dict[int, float] = {}
    while bfs():
        for u in order:
            if match_l[u] == -1:
                dfs(u)
    return Matching(frozenset((u, v) for u, v in enumerate(match_l) if v != -1))


def matching_to_mpc(m: Matching, g: Graph) -> PathCover:
    """Chain matched pairs into a path cover with concrete edges.

    A matched pair that is not a direct edge is expanded through the BFS
    shortest path (smallest ids first). Each subpath is merged with the
    lowest-index existing path sharing an end vertex, repeatedly. Vertices
    touched by no pair become single-vertex paths, so the cover has exactly
    ``|V| - |M|`` paths.
    """
    paths: list[list[int]] = []
    for i, j in m.sorted_pairs():
        sub = shortest_path(g, i, j)
        if sub is None or len(sub) < 2:
            raise AssertionError(f"matched pair ({i}, {j}) has no realizing path")
        while True:
            hit = None
            for idx, p in enumerate(paths):
                if p[-1] == sub[0] or p[0] == sub[-1]:
                    hit = idx
                    break
            if hit is None:
                paths.append(sub)
                break
            p = paths.pop(hit)
            sub = p + sub[1:] if p[-1] == sub[0] else sub + p[1:]
    touched = {v for pair in m.pairs for v in pair}
    paths.extend([v] for v in range(g.n) if v not in touched)
    return PathCover(tuple(sorted(tuple(p) for p in paths)))


def compute_mpc(g: Graph, seed: int = 0) -> PathCover:
    b = to_bipartite(g)
    return matching_to_mpc(hopcroft_karp(b, seed), g)


def _nearest(g: Graph, start: int, backward: bool) -> list[int]:
    """Shortest path from ``start`` to the nearest source (backward) or sink, excluding ``start``."""
    step = g.predecessors if backward else g.successors
    prev: dict[int, int | None] = {start: None}
    queue = deque([start])
    end = start
    while queue:
        v = queue.popleft()
        if not step(v):
            end = v
            break
        for w in sorted(step(v)):
            if w not in prev:
                prev[w] = v
                queue.append(w)
    out = []
    while end != start:
        out.append(end)
        end = prev[end]
    return out if backward else out[::-1]


def complete_cover(cover: PathCover, g: Graph) -> PathCover:
    """Stretch every path of ``cover`` back to a source and on to a sink.

    The number of paths is unchanged, so a minimum cover stays minimum; on a
    single-entry single-exit CFG each path becomes an entry-to-exit path.
    """
    _require_dag(g)
    stretched = (tuple(_nearest(g, p[0], True)) + tuple(p) + tuple(_nearest(g, p[-1], False)) for p in cover.paths)
    return PathCover(tuple(sorted(stretched)))


def mpc_to_matching(p: PathCover, g: Graph) -> Matching:
    """Map a cover back to a matching of ``to_bipartite(g)``.

    A vertex shared by several paths is kept only in the lowest-index path
    that contains it; consecutive kept vertices of each path become pairs.
    """
    owner: dict[int, int] = {}
    for idx, path in enumerate(p.paths):
        for v in path:
            owner.setdefault(v, idx)
    pairs = set()
    for idx, path in enumerate(p.paths):
        kept = [v for v in dict.fromkeys(path) if owner[v] == idx]
        pairs.update(zip(kept, kept[1:]))
    return Matching(frozenset(pairs))


def maximal_paths(g: Graph) -> list[tuple[int, ...]]:
    """Every source-to-sink path of a DAG, in lexicographic order."""
    _require_dag(g)
    out: list[tuple[int, ...]] = []
    stack: list[tuple[int, ...]] = [(s,) for s in reversed(g.sources())]
    while stack:
        path = stack.pop()
        succ = g.successors(path[-1])
        if not succ:
            out.append(path)
            continue
        for w in sorted(succ, reverse=True):
            stack.append(path + (w,))
    return out


def _mask(path: Iterable[int]) -> int:
    m = 0
    for v in path:
        m |= 1 << v
    return m


def _covers_of_size(
    full: int, masks: Sequence[int], by_vertex: dict[int, list[int]], k: int, collect: bool
) -> list[frozenset[int]]:
    """Sets of ``k`` path indices whose union is ``full``; stops at the first when not collecting."""
    found: set[frozenset[int]] = set()

    def rec(covered: int, chosen: tuple[int, ...]) -> bool:
        if covered == full:
            found.add(frozenset(chosen))
            return not collect
        if len(chosen) == k:
            return False
        missing = full & ~covered
        v = (missing & -missing).bit_length() - 1
        for idx in by_vertex[v]:
            if idx in chosen:
                continue
            if rec(covered | masks[idx], chosen + (idx,)):
                return True
        return False

    rec(0, ())
    return sorted(found, key=sorted)


def brute_force_mpc(g: Graph, limit: int = 12, all_covers: bool = True) -> tuple[int, list[PathCover]]:
    """Exhaustive minimum path cover.

    Covers are searched among sets of source-to-sink paths. Any cover can be
    stretched into one of those without changing its size, so the minimum is
    exact; the returned covers are the distinct minimum covers in that
    canonical form. With ``all_covers=False`` only the size is computed and
    the cover list holds a single witness.
    """
    if g.n > limit:
        raise TooLargeError(f"{g.n} vertices exceeds the exhaustive limit {limit}")
    if g.n == 0:
        return 0, [PathCover(())]
    paths = maximal_paths(g)
    masks = [_mask(p) for p in paths]
    full = (1 << g.n) - 1
    # Paths whose vertex set is strictly inside another's never help a minimum search.
    if all_covers:
        pool = list(range(len(paths)))
    else:
        pool = [i for i in range(len(paths)) if not any(masks[i] != masks[j] and masks[i] & masks[j] == masks[i] for j in range(len(paths)))]
    by_vertex = {v: [i for i in pool if masks[i] >> v & 1] for v in range(g.n)}
    for k in range(1, g.n + 1):
        hits = _covers_of_size(full, masks, by_vertex, k, collect=all_covers)
        if hits:
            covers = [PathCover(tuple(sorted(paths[i] for i in hit))) for hit in hits]
            covers.sort(key=PathCover.key)
            return k, covers
    raise AssertionError("singleton paths always cover a DAG")
