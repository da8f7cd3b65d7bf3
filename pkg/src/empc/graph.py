"""Directed graphs over dense integer vertex ids."""

from __future__ import annotations

import heapq
import json
import re
from collections import deque
from typing import Any, Iterable, Mapping

import numpy as np


class GraphError(ValueError):
    """Raised for malformed graphs or bad vertex references."""


class Graph:
    """Immutable simple digraph on vertices ``0..n-1``.

    Labels are optional opaque tags, one per vertex. Self-loops and
    duplicate edges are rejected at construction.
    """

    __slots__ = ("n", "edges", "labels", "_succ", "_pred", "_edge_set")

    def __init__(
        self,
        n: int,
        edges: Iterable[tuple[int, int]] = (),
        labels: Mapping[int, Any] | None = None,
    ):
        if n < 0:
            raise GraphError(f"negative vertex count {n}")
        seen: set[tuple[int, int]] = set()
        for u, v in edges:
            u, v = int(u), int(v)
            if not (0 <= u < n and 0 <= v < n):
                raise GraphError(f"edge ({u}, {v}) outside 0..{n - 1}")
            if u == v:
                raise GraphError(f"self-loop on vertex {u}")
            if (u, v) in seen:
                raise GraphError(f"duplicate edge ({u}, {v})")
            seen.add((u, v))
        self.n = n
        self.edges: tuple[tuple[int, int], ...] = tuple(sorted(seen))
        self._edge_set = frozenset(seen)
        self.labels: dict[int, Any] = dict(labels or {})
        for v in self.labels:
            if not 0 <= v < n:
                raise GraphError(f"label for unknown vertex {v}")
        succ: list[list[int]] = [[] for _ in range(n)]
        pred: list[list[int]] = [[] for _ in range(n)]
        for u, v in self.edges:
            succ[u].append(v)
            pred[v].append(u)
        self._succ = tuple(tuple(s) for s in succ)
        self._pred = tuple(tuple(p) for p in pred)

    def successors(self, v: int) -> tuple[int, ...]:
        return self._succ[v]

    def predecessors(self, v: int) -> tuple[int, ...]:
        return self._pred[v]

    def has_edge(self, u: int, v: int) -> bool:
        return (u, v) in self._edge_set

    def in_degree(self, v: int) -> int:
        return len(self._pred[v])

    def out_degree(self, v: int) -> int:
        return len(self._succ[v])

    def sources(self) -> list[int]:
        return [v for v in range(self.n) if not self._pred[v]]

    def sinks(self) -> list[int]:
        return [v for v in range(self.n) if not self._succ[v]]

    def label(self, v: int) -> Any:
        return self.labels.get(v, v)

    def __eq__(self, other: object) -> bool:
        if not isinstance(other, Graph):
            return NotImplemented
        return self.n == other.n and self.edges == other.edges and self.labels == other.labels

    def __hash__(self) -> int:
        return hash((self.n, self.edges))

    def __repr__(self) -> str:
        return f"Graph(n={self.n}, edges={list(self.edges)})"

    def to_json(self) -> dict[str, Any]:
        out: dict[str, Any] = {"vertices": self.n, "edges": [list(e) for e in self.edges]}
        if self.labels:
            out["labels"] = {str(k): v for k, v in sorted(self.labels.items())}
        return out

    @classmethod
    def from_json(cls, data: Mapping[str, Any]) -> "Graph":
        try:
            n = int(data["vertices"])
            edges = [(int(u), int(v)) for u, v in data.get("edges", [])]
        except (KeyError, TypeError, ValueError) as exc:
            raise GraphError(f"bad graph JSON: {exc}") from exc
        labels = {int(k): v for k, v in data.get("labels", {}).items()}
        return cls(n, edges, labels)


def load_graph(text: str) -> Graph:
    """Parse graph JSON, falling back to the DOT subset when the text starts with ``digraph``."""
    stripped = text.lstrip()
    if stripped.startswith("digraph"):
        return parse_dot(text)
    try:
        return Graph.from_json(json.loads(text))
    except json.JSONDecodeError as exc:
        raise GraphError(f"not JSON or DOT: {exc}") from exc


_DOT_BODY = re.compile(r"digraph\s*\w*\s*\{(?P<body>.*)\}\s*$", re.S)


def parse_dot(text: str) -> Graph:
    """Read ``digraph { a -> b; c; }`` with bare node ids.

    Node names are numbered in order of first appearance and kept as labels.
    """
    m = _DOT_BODY.match(text.strip())
    if not m:
        raise GraphError("expected 'digraph { ... }'")
    ids: dict[str, int] = {}
    edges: list[tuple[int, int]] = []

    def vid(name: str) -> int:
        if not re.fullmatch(r"\w+", name):
            raise GraphError(f"unsupported node id {name!r}")
        return ids.setdefault(name, len(ids))

    for stmt in re.split(r"[;\n]", m.group("body")):
        stmt = stmt.strip()
        if not stmt:
            continue
        parts = [p.strip() for p in stmt.split("->")]
        nodes = [vid(p) for p in parts]
        edges.extend(zip(nodes, nodes[1:]))
    return Graph(len(ids), sorted(set(edges)), {v: k for k, v in ids.items()})


def reachability(g: Graph) -> np.ndarray:
    """Boolean matrix with ``r[i, j]`` true iff a nonempty path ``i -> j`` exists."""
    r = np.zeros((g.n, g.n), dtype=bool)
    for s in range(g.n):
        queue = deque(g.successors(s))
        while queue:
            v = queue.popleft()
            if r[s, v]:
                continue
            r[s, v] = True
            queue.extend(w for w in g.successors(v) if not r[s, w])
    return r


def topological_order(g: Graph) -> list[int] | None:
    """Smallest-id-first topological order, or None when ``g`` has a cycle."""
    indeg = [g.in_degree(v) for v in range(g.n)]
    heap = [v for v in range(g.n) if indeg[v] == 0]
    heapq.heapify(heap)
    order = []
    while heap:
        v = heapq.heappop(heap)
        order.append(v)
        for w in g.successors(v):
            indeg[w] -= 1
            if indeg[w] == 0:
                heapq.heappush(heap, w)
    return order if len(order) == g.n else None


def is_dag(g: Graph) -> bool:
    return topological_order(g) is not None


def induced_subgraph(g: Graph, vs: Iterable[int]) -> tuple[Graph, dict[int, int]]:
    """Subgraph on ``vs`` with ids renumbered in increasing old-id order.

    Returns the subgraph and the old-id to new-id map. Labels carry over.
    """
    keep = sorted(set(vs))
    for v in keep:
        if not 0 <= v < g.n:
            raise GraphError(f"unknown vertex {v}")
    index = {v: i for i, v in enumerate(keep)}
    edges = [(index[u], index[v]) for u, v in g.edges if u in index and v in index]
    labels = {index[v]: g.labels[v] for v in keep if v in g.labels}
    return Graph(len(keep), edges, labels), index


def shortest_path(g: Graph, src: int, dst: int) -> list[int] | None:
    """BFS path from ``src`` to ``dst``; ties go to the smallest vertex id."""
    if src == dst:
        return [src]
    parent = {src: src}
    queue = deque([src])
    while queue:
        v = queue.popleft()
        for w in sorted(g.successors(v)):
            if w in parent:
                continue
            parent[w] = v
            if w == dst:
                path = [w]
                while path[-1] != src:
                    path.append(parent[path[-1]])
                return path[::-1]
            queue.append(w)
    return None


def reachable_from(g: Graph, roots: Iterable[int]) -> set[int]:
    """Vertices reachable from ``roots``, roots included."""
    seen = set(roots)
    queue = deque(seen)
    while queue:
        v = queue.popleft()
        for w in g.successors(v):
            if w not in seen:
                seen.add(w)
                queue.append(w)
    return seen


def random_dag(rng, n: int, density: float) -> Graph:
    """Random DAG where each forward pair ``i < j`` is an edge with probability ``density``."""
    edges = [(i, j) for i in range(n) for j in range(i + 1, n) if rng.random() < density]
    return Graph(n, edges)


def dominators(g: Graph, root: int) -> dict[int, set[int]]:
    """Dominator sets for every vertex reachable from ``root`` (each includes itself)."""
    live = reachable_from(g, [root])
    order = [v for v in sorted(live)]
    dom = {v: set(live) for v in order}
    dom[root] = {root}
    changed = True
    while changed:
        changed = False
        for v in order:
            if v == root:
                continue
            preds = [p for p in g.predecessors(v) if p in live]
            new = set.intersection(*(dom[p] for p in preds)) if preds else set()
            new = new | {v}
            if new != dom[v]:
                dom[v] = new
                changed = True
    return dom
