"""Interprocedural CFG over mini-IR programs.

Blocks are cut after every call statement, so each vertex is a *segment*: a
run of plain statements ending either in a call (whose return lands on the
next segment) or in the block terminator. A block that jumps to itself gets
an extra virtual latch vertex, because graphs here carry no self-loops.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Any, Mapping

from .graph import Graph, dominators
from .ir import Branch, Call, Goto, IRError, MiniProgram, Return, Stmt, Terminator

KINDS = ("entry", "exit", "call", "return-site", "branch", "plain", "virtual")


@dataclass(frozen=True)
class ICfg:
    graph: Graph
    kinds: tuple[str, ...]
    call_edges: frozenset[tuple[int, int]]
    return_edges: frozenset[tuple[int, int]]
    back_edges: frozenset[tuple[int, int]]
    functions: tuple[str, ...]
    entry: int

    def __post_init__(self):
        edges = set(self.graph.edges)
        sets = (self.call_edges, self.return_edges, self.back_edges)
        for s in sets:
            if not s <= edges:
                raise ValueError("annotated edge missing from graph")
        if (self.call_edges & self.return_edges) or (self.call_edges & self.back_edges) or (
            self.return_edges & self.back_edges
        ):
            raise ValueError("call, return and back edges must be disjoint")
        if len(self.kinds) != self.graph.n or len(self.functions) != self.graph.n:
            raise ValueError("per-vertex tables do not match the vertex count")

    @property
    def n(self) -> int:
        return self.graph.n

    def label(self, v: int) -> str:
        return str(self.graph.label(v))

    def is_virtual(self, v: int) -> bool:
        return self.kinds[v] == "virtual"

    def function_names(self) -> list[str]:
        return list(dict.fromkeys(self.functions))

    def vertices_of(self, fn: str) -> list[int]:
        return [v for v in range(self.n) if self.functions[v] == fn]

    def function_entry(self, fn: str) -> int:
        """Target of a call edge into ``fn``, else the program entry, else its lowest vertex."""
        vs = self.vertices_of(fn)
        for _, w in sorted(self.call_edges):
            if self.functions[w] == fn:
                return w
        return self.entry if self.entry in vs else vs[0]

    def intra_edges(self) -> set[tuple[int, int]]:
        return set(self.graph.edges) - self.call_edges - self.return_edges

    def to_json(self) -> dict[str, Any]:
        data = self.graph.to_json()
        data["kinds"] = list(self.kinds)
        data["functions"] = list(self.functions)
        data["call_edges"] = [list(e) for e in sorted(self.call_edges)]
        data["return_edges"] = [list(e) for e in sorted(self.return_edges)]
        data["back_edges"] = [list(e) for e in sorted(self.back_edges)]
        data["entry"] = self.entry
        return data

    @classmethod
    def from_json(cls, data: Mapping[str, Any]) -> "ICfg":
        g = Graph.from_json(data)
        pairs = lambda key: frozenset((int(u), int(v)) for u, v in data.get(key, []))  # noqa: E731
        kinds = tuple(data.get("kinds", ["plain"] * g.n))
        bad = set(kinds) - set(KINDS)
        if bad:
            raise ValueError(f"unknown vertex kinds {sorted(bad)}")
        functions = tuple(data.get("functions", ["main"] * g.n))
        entry = int(data.get("entry", 0))
        back = pairs("back_edges") if "back_edges" in data else None
        icfg = cls(g, kinds, pairs("call_edges"), pairs("return_edges"), back or frozenset(), functions, entry)
        if back is None:
            icfg = cls(g, kinds, icfg.call_edges, icfg.return_edges, frozenset(compute_back_edges(icfg)), functions, entry)
        return icfg


@dataclass(frozen=True)
class VertexCode:
    """What executing one iCFG vertex does."""

    function: str
    block: str
    part: int
    stmts: tuple[Stmt, ...]
    call: Call | None
    term: Terminator | None
    ret_dst: str | None
    latch_of: int | None = None  # virtual latch: jump back to this vertex


@dataclass(frozen=True)
class Lowered:
    program: MiniProgram
    icfg: ICfg
    code: tuple[VertexCode, ...]
    block_vertex: dict[tuple[str, str], int]
    entries: dict[str, int]
    returns: dict[str, tuple[int, ...]]
    return_site: dict[int, int]  # call segment -> segment that resumes after the call

    latch: dict[int, int]  # self-jumping vertex -> its virtual latch

    def target(self, v: int, label: str) -> int:
        """Vertex entered when ``v`` jumps to block ``label``; self-jumps go through the latch."""
        dst = self.block_vertex[(self.code[v].function, label)]
        return self.latch[v] if dst == v else dst


def _segments(stmts: tuple[Stmt, ...]) -> list[tuple[tuple[Stmt, ...], Call | None]]:
    segs: list[tuple[tuple[Stmt, ...], Call | None]] = []
    cur: list[Stmt] = []
    for s in stmts:
        if isinstance(s, Call):
            segs.append((tuple(cur), s))
            cur = []
        else:
            cur.append(s)
    segs.append((tuple(cur), None))
    return segs


def lower(p: MiniProgram) -> Lowered:
    code: list[VertexCode] = []
    labels: list[str] = []
    block_vertex: dict[tuple[str, str], int] = {}
    for f in p.functions:
        for b in f.blocks:
            segs = _segments(b.stmts)
            prev_call: Call | None = None
            for k, (stmts, call) in enumerate(segs):
                if k == 0:
                    block_vertex[(f.name, b.label)] = len(code)
                last = k == len(segs) - 1
                code.append(
                    VertexCode(f.name, b.label, k, stmts, call, b.term if last else None, prev_call.dst if prev_call else None)
                )
                labels.append(f"{f.name}:{b.label}" + (f"#{k}" if k else ""))
                prev_call = call
    entries = {f.name: block_vertex[(f.name, f.entry_block)] for f in p.functions}
    returns: dict[str, list[int]] = {f.name: [] for f in p.functions}
    for v, c in enumerate(code):
        if isinstance(c.term, Return):
            returns[c.function].append(v)

    edges: set[tuple[int, int]] = set()
    call_edges: set[tuple[int, int]] = set()
    return_edges: set[tuple[int, int]] = set()
    return_site: dict[int, int] = {}
    latches: dict[int, int] = {}
    n_real = len(code)
    for v in range(n_real):
        c = code[v]
        if c.call is not None:
            if entries[c.call.func] == v:
                raise IRError(f"{c.function} calls itself before executing any statement")
            r = v + 1
            return_site[v] = r
            e = (v, entries[c.call.func])
            edges.add(e)
            call_edges.add(e)
            for ret in returns[c.call.func]:
                if ret == r:
                    # recursive call whose return site is itself a return; the edge would be a self-loop
                    continue
                edges.add((ret, r))
                return_edges.add((ret, r))
            continue
        for label in _targets(c.term):
            dst = block_vertex[(c.function, label)]
            if dst == v:
                if v not in latches:
                    latches[v] = len(code)
                    code.append(VertexCode(c.function, c.block, -1, (), None, None, None, latch_of=v))
                    labels.append(f"{c.function}:{c.block}~latch")
                    edges.add((v, latches[v]))
                    edges.add((latches[v], v))
            else:
                edges.add((v, dst))
    kinds = []
    entry_v = entries[p.entry_function]
    for v, c in enumerate(code):
        if c.latch_of is not None:
            kinds.append("virtual")
        elif c.call is not None:
            kinds.append("call")
        elif isinstance(c.term, Branch):
            kinds.append("branch")
        elif isinstance(c.term, Return):
            kinds.append("exit")
        elif v in entries.values():
            kinds.append("entry")
        elif c.part > 0:
            kinds.append("return-site")
        else:
            kinds.append("plain")
    graph = Graph(len(code), edges, dict(enumerate(labels)))
    functions = tuple(c.function for c in code)
    icfg = ICfg(graph, tuple(kinds), frozenset(call_edges), frozenset(return_edges), frozenset(), functions, entry_v)
    back = compute_back_edges(icfg, return_site)
    icfg = ICfg(graph, icfg.kinds, icfg.call_edges, icfg.return_edges, frozenset(back), functions, entry_v)
    lowered = Lowered(
        p, icfg, tuple(code), block_vertex, entries, {k: tuple(v) for k, v in returns.items()}, return_site, latches
    )
    return lowered


def _targets(term: Terminator | None) -> tuple[str, ...]:
    if isinstance(term, Branch):
        return (term.then, term.els)
    if isinstance(term, Goto):
        return (term.target,)
    return ()


def local_graph(icfg: ICfg, return_site: Mapping[int, int] | None = None) -> Graph:
    """Intraprocedural view: call and return edges replaced by call-to-return-site edges."""
    if return_site is None:
        return_site = infer_return_sites(icfg)
    edges = icfg.intra_edges() | {(c, r) for c, r in return_site.items()}
    return Graph(icfg.n, edges, icfg.graph.labels)


def infer_return_sites(icfg: ICfg) -> dict[int, int]:
    """Pair each call vertex with the return-site vertex of its own function."""
    sites: dict[int, int] = {}
    for c, _ in icfg.call_edges:
        fn = icfg.functions[c]
        cands = sorted(r for _, r in icfg.return_edges if icfg.functions[r] == fn and r > c)
        sites[c] = cands[0] if cands else c
    return {c: r for c, r in sites.items() if r != c}


def compute_back_edges(icfg: ICfg, return_site: Mapping[int, int] | None = None) -> set[tuple[int, int]]:
    """Edges ``(t, h)`` of a function-local CFG where ``h`` dominates ``t``."""
    lg = local_graph(icfg, return_site)
    back: set[tuple[int, int]] = set()
    for fn in icfg.function_names():
        root = icfg.function_entry(fn)
        dom = dominators(lg, root)
        for t in icfg.vertices_of(fn):
            for h in lg.successors(t):
                if t in dom and h in dom[t] and icfg.graph.has_edge(t, h):
                    back.add((t, h))
    return back


def build_icfg(p: MiniProgram) -> ICfg:
    return lower(p).icfg
