"""Cycle elimination and subgraph extraction for iCFGs.

Caller-callee cycles are cut by giving every function a virtual return node,
keeping one call site per callee as the connecting edges and replacing the
other sites by call-to-return-site edges. Loop cycles are cut by dropping
back edges. The acyclic result is then carved into regions: every natural
loop becomes a loop subgraph (innermost first) and every called function
becomes a one-entry-one-exit subgraph (callees before callers). Each region
is replaced in its parent by a single merged vertex.
"""

from __future__ import annotations

from collections import deque
from dataclasses import dataclass, field
from typing import Any, Hashable, Iterable, Mapping, Sequence

from .graph import Graph, GraphError, dominators, induced_subgraph, is_dag, reachable_from
from .icfg import ICfg, local_graph
from .mpc import TooLargeError, brute_force_mpc


class SplitError(ValueError):
    """A region does not satisfy the subgraph definition it was extracted under."""

    def __init__(self, msg: str, vertex: int | None = None):
        self.vertex = vertex
        super().__init__(msg if vertex is None else f"{msg} (vertex {vertex})")


@dataclass(frozen=True)
class LoopInfo:
    header: int
    body: frozenset[int]
    back_edges: frozenset[tuple[int, int]]
    exiting_edges: frozenset[tuple[int, int]]
    exit_nodes: frozenset[int]

    @property
    def latches(self) -> list[int]:
        return sorted({t for t, _ in self.back_edges})


@dataclass(frozen=True)
class SplitResult:
    subgraph: Graph
    remainder: Graph
    merged_vertex: int
    entry: int
    exits: tuple[int, ...]
    sub_map: dict[int, int]
    rem_map: dict[int, int]
    # loop splits only: original exit vertex -> its virtual copy in the subgraph
    exit_copies: dict[int, int] = field(default_factory=dict)
    # loop splits only: body vertex that would be a sink -> virtual continue copy
    continue_copies: dict[int, int] = field(default_factory=dict)


# ------------------------------------------------------------------ loops

def natural_loops(g: Graph, root: int, back_edges: Iterable[tuple[int, int]] | None = None) -> list[LoopInfo]:
    """Natural loops of ``g`` seen from ``root``, merged per header, innermost first.

    When ``back_edges`` is None they are found by dominance: ``(t, h)`` with
    ``h`` dominating ``t``.
    """
    if back_edges is None:
        dom = dominators(g, root)
        back_edges = [(t, h) for t, h in g.edges if t in dom and h in dom[t]]
    by_header: dict[int, set[tuple[int, int]]] = {}
    for t, h in back_edges:
        by_header.setdefault(h, set()).add((t, h))
    loops = []
    for h, bes in by_header.items():
        body = {h}
        stack = [t for t, _ in bes if t != h]
        while stack:
            v = stack.pop()
            if v in body:
                continue
            body.add(v)
            stack.extend(p for p in g.predecessors(v) if p not in body)
        exiting = {(u, w) for u in body for w in g.successors(u) if w not in body}
        loops.append(
            LoopInfo(h, frozenset(body), frozenset(bes), frozenset(exiting), frozenset(w for _, w in exiting))
        )
    loops.sort(key=lambda li: (len(li.body), li.header))
    return loops


def find_loops(icfg: ICfg) -> list[LoopInfo]:
    """Natural loops of every function, on the intraprocedural view of the iCFG."""
    lg = local_graph(icfg)
    loops: list[LoopInfo] = []
    for fn in icfg.function_names():
        root = icfg.function_entry(fn)
        loops.extend(natural_loops(lg, root))
    loops.sort(key=lambda li: (len(li.body), li.header))
    return loops


def strongly_connected_components(g: Graph) -> list[list[int]]:
    """Tarjan's algorithm, iterative; components listed in reverse topological order."""
    index: dict[int, int] = {}
    low: dict[int, int] = {}
    on_stack: set[int] = set()
    stack: list[int] = []
    comps: list[list[int]] = []
    counter = 0
    for root in range(g.n):
        if root in index:
            continue
        work = [(root, iter(g.successors(root)))]
        index[root] = low[root] = counter
        counter += 1
        stack.append(root)
        on_stack.add(root)
        while work:
            v, it = work[-1]
            w = next(it, None)
            if w is not None:
                if w not in index:
                    index[w] = low[w] = counter
                    counter += 1
                    stack.append(w)
                    on_stack.add(w)
                    work.append((w, iter(g.successors(w))))
                elif w in on_stack:
                    low[v] = min(low[v], index[w])
                continue
            work.pop()
            if work:
                low[work[-1][0]] = min(low[work[-1][0]], low[v])
            if low[v] == index[v]:
                comp = []
                while True:
                    x = stack.pop()
                    on_stack.discard(x)
                    comp.append(x)
                    if x == v:
                        break
                comps.append(sorted(comp))
    return comps


def _extraordinary(g: Graph, roots: Iterable[int]) -> list[frozenset[int]]:
    roots = set(roots)
    found = []
    for comp in strongly_connected_components(g):
        if len(comp) < 2:
            continue
        cs = set(comp)
        entries = {v for v in comp if v in roots or any(p not in cs for p in g.predecessors(v))}
        if len(entries) >= 2:
            found.append(frozenset(comp))
    return sorted(found, key=min)


def detect_extraordinary_loops(icfg: ICfg) -> list[frozenset[int]]:
    """Cyclic regions entered at two or more distinct vertices (loops with several headers)."""
    lg = local_graph(icfg)
    roots = [icfg.function_entry(fn) for fn in icfg.function_names()]
    return _extraordinary(lg, roots)


def retreating_edges(g: Graph, roots: Sequence[int]) -> set[tuple[int, int]]:
    """Edges into a vertex still on the DFS stack; removing them leaves a DAG."""
    state: dict[int, int] = {}
    out: set[tuple[int, int]] = set()
    order = list(roots) + [v for v in range(g.n) if v not in set(roots)]
    for root in order:
        if root in state:
            continue
        state[root] = 1
        work = [(root, iter(sorted(g.successors(root))))]
        while work:
            v, it = work[-1]
            w = next(it, None)
            if w is None:
                state[v] = 2
                work.pop()
                continue
            s = state.get(w, 0)
            if s == 1:
                out.add((v, w))
            elif s == 0:
                state[w] = 1
                work.append((w, iter(sorted(g.successors(w)))))
    return out


# ------------------------------------------------------ definition checks

def one_entry_one_exit_violations(g: Graph, vs: Iterable[int], entry: int, exit_: int) -> list[tuple[str, int]]:
    """Reasons the vertex set ``vs`` of ``g`` is not a one-entry-one-exit region."""
    vs = set(vs)
    problems = []
    if entry not in vs or exit_ not in vs:
        problems.append(("entry and exit must belong to the region", entry if entry not in vs else exit_))
    for p in g.predecessors(entry):
        if p in vs:
            problems.append(("entry has a predecessor inside the region", entry))
    for s in g.successors(exit_):
        if s in vs:
            problems.append(("exit has a successor inside the region", exit_))
    for v in sorted(vs):
        if v != exit_:
            for s in g.successors(v):
                if s not in vs:
                    problems.append(("successor leaves the region", v))
        if v != entry:
            for p in g.predecessors(v):
                if p not in vs:
                    problems.append(("predecessor outside the region", v))
    return problems


def check_one_entry_one_exit(sub: Graph, entry: int, exit_: int) -> list[str]:
    """Definition checks on an extracted subgraph: unique source ``entry`` and unique sink ``exit_``."""
    problems = []
    if sub.sources() != [entry]:
        problems.append(f"sources {sub.sources()} are not exactly the entry {entry}")
    if sub.sinks() != [exit_]:
        problems.append(f"sinks {sub.sinks()} are not exactly the exit {exit_}")
    if not is_dag(sub):
        problems.append("subgraph has a cycle")
    reach = reachable_from(sub, [entry])
    if len(reach) != sub.n:
        problems.append("some vertex is not reachable from the entry")
    return problems


def check_loop_subgraph(sub: Graph, entry: int, exits: Iterable[int]) -> list[str]:
    """Loop-subgraph checks: ``entry`` is the only source, the exits are exactly the sinks."""
    exits = sorted(set(exits))
    problems = []
    if sub.sources() != [entry]:
        problems.append(f"sources {sub.sources()} are not exactly the header {entry}")
    if sub.sinks() != exits:
        problems.append(f"sinks {sub.sinks()} differ from exits {exits}")
    if not is_dag(sub):
        problems.append("subgraph has a cycle")
    if len(reachable_from(sub, [entry])) != sub.n:
        problems.append("some vertex is not reachable from the header")
    return problems


# ---------------------------------------------------------------- splits

def _label_or(g: Graph, v: int, default: Any) -> Any:
    return g.labels.get(v, default)


def split_one_entry_one_exit(g: Graph, entry: int, exit_: int, merged_label: Hashable = "v_sst") -> SplitResult:
    """Extract the region between ``entry`` and ``exit_`` and merge it into one vertex.

    The region is ``{entry, exit_}`` plus every vertex reachable from
    ``entry`` that reaches ``exit_``. It must be closed: only the entry has
    predecessors outside, only the exit has successors outside.
    """
    if not is_dag(g):
        raise SplitError("graph must be acyclic before splitting")
    fwd = reachable_from(g, [entry])
    bwd = _reaching(g, exit_)
    region = (fwd & bwd) | {entry, exit_}
    problems = one_entry_one_exit_violations(g, region, entry, exit_)
    if problems:
        msg, v = problems[0]
        raise SplitError(msg, v)
    sub, sub_map = induced_subgraph(g, region)
    keep = sorted((set(range(g.n)) - region) | {entry})
    rem_map = {v: i for i, v in enumerate(keep)}
    merged = rem_map[entry]
    rem_map[exit_] = merged
    edges = set()
    for u, w in g.edges:
        a, b = rem_map.get(u), rem_map.get(w)
        if u in region and u != exit_:
            continue
        if w in region and w != entry:
            continue
        if a is None or b is None or a == b:
            continue
        edges.add((a, b))
    labels = {rem_map[v]: g.labels[v] for v in keep if v in g.labels and v != entry}
    labels[merged] = merged_label
    remainder = Graph(len(keep), edges, labels)
    return SplitResult(sub, remainder, merged, sub_map[entry], (sub_map[exit_],), sub_map, rem_map)


def _reaching(g: Graph, target: int) -> set[int]:
    seen = {target}
    queue = deque([target])
    while queue:
        v = queue.popleft()
        for p in g.predecessors(v):
            if p not in seen:
                seen.add(p)
                queue.append(p)
    return seen


def transform_loop(
    g: Graph,
    li: LoopInfo,
    merged_label: Hashable = "v_sst",
    exit_label=lambda x: ("exit", x),
    continue_label=lambda t: ("continue", t),
) -> SplitResult:
    """Replace a natural loop by a merged vertex wired to each exit node.

    The loop subgraph is the body plus one virtual copy per exit node, each
    exiting edge redirected to the copy. A body vertex left without
    successors once back edges are gone (a pure latch) gets a virtual
    continue copy, so the copies are exactly the sinks of the subgraph.
    """
    body = set(li.body)
    if li.header not in body:
        raise SplitError("header outside the loop body", li.header)
    if not is_dag(g):
        raise SplitError("back edges must be removed before splitting a loop")
    for v in sorted(body):
        if v != li.header and any(p not in body for p in g.predecessors(v)):
            raise SplitError("loop entered at a vertex other than its header (extraordinary loop)", v)
    exits = sorted({w for u in body for w in g.successors(u) if w not in body})
    inner, inner_map = induced_subgraph(g, body)
    n = inner.n
    edges = set(inner.edges)
    labels = dict(inner.labels)
    exit_copies: dict[int, int] = {}
    for x in exits:
        exit_copies[x] = n
        labels[n] = exit_label(_label_or(g, x, x))
        n += 1
    for u in sorted(body):
        for w in g.successors(u):
            if w not in body:
                edges.add((inner_map[u], exit_copies[w]))
    continue_copies: dict[int, int] = {}
    for u in sorted(body):
        if not any(True for _ in g.successors(u)):
            continue_copies[u] = n
            labels[n] = continue_label(_label_or(g, u, u))
            edges.add((inner_map[u], n))
            n += 1
    sub = Graph(n, edges, labels)
    sub_map = dict(inner_map)

    keep = sorted((set(range(g.n)) - body) | {li.header})
    rem_map = {v: i for i, v in enumerate(keep)}
    merged = rem_map[li.header]
    rem_edges = set()
    for u, w in g.edges:
        if u in body:
            continue
        b = merged if w in body else rem_map[w]
        rem_edges.add((rem_map[u], b))
    for x in exits:
        rem_edges.add((merged, rem_map[x]))
    rem_labels = {rem_map[v]: g.labels[v] for v in keep if v in g.labels and v != li.header}
    rem_labels[merged] = merged_label
    remainder = Graph(len(keep), rem_edges, rem_labels)
    for v in body:
        rem_map[v] = merged
    sinks = tuple(sorted(list(exit_copies.values()) + list(continue_copies.values())))
    return SplitResult(
        sub, remainder, merged, sub_map[li.header], sinks, sub_map, rem_map, exit_copies, continue_copies
    )


# ----------------------------------------------------- size arithmetic

def combined_mpc_size(size_remainder: int, k: int, size_sub: int) -> int:
    """Cover size of a graph rebuilt from a remainder cover and a subgraph cover."""
    if min(size_remainder, k, size_sub) < 0:
        raise ValueError("sizes must be non-negative")
    if k > size_remainder:
        raise ValueError("k cannot exceed the remainder cover size")
    return size_remainder - k + max(size_sub, k)


def max_k_through(
    remainder: Graph,
    merged: int,
    limit: int = 12,
    through_edges: Iterable[tuple[int, int]] | None = None,
) -> int:
    """Most paths through ``merged`` in any minimum cover of ``remainder`` (exhaustive).

    With ``through_edges`` the count is of paths using at least one of those
    edges instead (the loop case, where the merged vertex fans out to the
    exit vertices).
    """
    if remainder.n > limit:
        raise TooLargeError(f"{remainder.n} vertices exceeds the exhaustive limit {limit}")
    _, covers = brute_force_mpc(remainder, limit=limit, all_covers=True)
    edges = set(through_edges) if through_edges is not None else None

    def hits(path: Sequence[int]) -> bool:
        if edges is None:
            return merged in path
        return any((a, b) in edges for a, b in zip(path, path[1:]))

    return max(sum(1 for p in c.paths if hits(p)) for c in covers)


# ------------------------------------------------------- decomposition

@dataclass
class Region:
    """One acyclic piece of the decomposed iCFG.

    ``graph`` labels are references: ``("v", i)`` for iCFG vertex ``i``,
    ``("ret", fn)`` for a virtual return node, ``("sst", r)`` for the merged
    vertex of child region ``r``, ``("exit", r, ref)`` and
    ``("continue", r, ref)`` for the virtual sinks of loop region ``r``.
    """

    id: int
    kind: str  # root | function | loop
    name: str
    graph: Graph
    entry: int
    parent: int | None = None
    split: SplitResult | None = None
    entry_ref: tuple | None = None

    def ref(self, v: int) -> tuple:
        return self.graph.labels[v]

    def local(self) -> dict[tuple, int]:
        return {ref: v for v, ref in self.graph.labels.items()}


@dataclass
class Decomposition:
    icfg: ICfg
    regions: list[Region]
    kept_calls: dict[str, tuple[int, int]]  # callee -> (call vertex, return-site vertex)
    dropped_calls: list[tuple[int, int]]  # (call vertex, return-site vertex)
    removed_edges: list[tuple[int, int]]
    cut_edges: list[tuple[int, int]]  # retreating edges of extraordinary loops
    extraordinary: list[frozenset[int]]
    skipped_functions: list[str]
    loops: list[LoopInfo]

    def region(self, rid: int) -> Region:
        return self.regions[rid]

    def children(self, rid: int) -> list[int]:
        return [r.id for r in self.regions if r.parent == rid]

    def home(self) -> dict[int, tuple[int, int]]:
        """iCFG vertex -> (region id, local vertex) of the region that holds it."""
        out = {}
        for r in self.regions:
            for v, ref in r.graph.labels.items():
                if ref[0] == "v":
                    out[ref[1]] = (r.id, v)
        return out

    def to_json(self) -> dict[str, Any]:
        def ref_text(ref):
            if ref[0] == "v":
                return self.icfg.label(ref[1])
            if ref[0] == "ret":
                return f"{ref[1]}:return"
            if ref[0] == "sst":
                return f"merged:{self.regions[ref[1]].name}"
            return f"{ref[0]}:{self.regions[ref[1]].name}:{ref_text(ref[2])}"

        return {
            "regions": [
                {
                    "id": r.id,
                    "kind": r.kind,
                    "name": r.name,
                    "parent": r.parent,
                    "entry": r.entry,
                    "graph": {"vertices": r.graph.n, "edges": [list(e) for e in r.graph.edges]},
                    "labels": [ref_text(r.graph.labels[v]) for v in range(r.graph.n)],
                    "virtual": [v for v in range(r.graph.n) if r.graph.labels[v][0] != "v"],
                }
                for r in self.regions
            ],
            "kept_calls": {f: list(e) for f, e in sorted(self.kept_calls.items())},
            "dropped_calls": [list(e) for e in self.dropped_calls],
            "removed_edges": [list(e) for e in self.removed_edges],
            "cut_edges": [list(e) for e in self.cut_edges],
            "extraordinary_loops": [sorted(s) for s in self.extraordinary],
            "skipped_functions": self.skipped_functions,
        }


def _call_graph_sccs(icfg: ICfg, calls: Mapping[str, set[str]]) -> dict[str, int]:
    names = icfg.function_names()
    idx = {f: i for i, f in enumerate(names)}
    cg = Graph(len(names), {(idx[a], idx[b]) for a, bs in calls.items() for b in bs if a != b})
    comp_of: dict[str, int] = {}
    for k, comp in enumerate(strongly_connected_components(cg)):
        for i in comp:
            comp_of[names[i]] = k
    return comp_of


def decompose(icfg: ICfg, return_site: Mapping[int, int] | None = None, split_loops: bool = True) -> Decomposition:
    """Remove every cycle of ``icfg`` and split it into root, loop and function regions."""
    from .icfg import infer_return_sites

    if return_site is None:
        return_site = infer_return_sites(icfg)
    names = icfg.function_names()
    entries = {f: icfg.function_entry(f) for f in names}
    main = icfg.functions[icfg.entry]
    returns: dict[str, list[int]] = {f: [] for f in names}
    for r, _ in icfg.return_edges:
        returns[icfg.functions[r]].append(r)
    for v in range(icfg.n):
        if icfg.kinds[v] == "exit" and v not in returns[icfg.functions[v]]:
            returns[icfg.functions[v]].append(v)
    for f in returns:
        returns[f] = sorted(set(returns[f]))

    # Call sites per callee, in program order: entry function first, then file order.
    rank = {f: (0 if f == main else 1, i) for i, f in enumerate(names)}
    sites: dict[str, list[tuple[int, int]]] = {f: [] for f in names}
    calls: dict[str, set[str]] = {f: set() for f in names}
    for c, e in icfg.call_edges:
        callee = icfg.functions[e]
        sites[callee].append((c, return_site.get(c, c)))
        calls[icfg.functions[c]].add(callee)
    for f in sites:
        sites[f].sort(key=lambda s: (rank[icfg.functions[s[0]]], s[0]))
    comp = _call_graph_sccs(icfg, calls)

    skipped = [f for f in names if not returns[f]]
    kept: dict[str, tuple[int, int]] = {}
    dropped: list[tuple[int, int]] = []
    for f in names:
        for c, r in sites[f]:
            caller = icfg.functions[c]
            recursive = comp[caller] == comp[f]
            if f not in skipped and f not in kept and not recursive:
                kept[f] = (c, r)
            else:
                dropped.append((c, r))
    dropped.sort()

    # Loop cycles: dominance back edges per function, plus retreating edges of irreducible regions.
    lg = local_graph(icfg, return_site)
    loops_local: list[LoopInfo] = []
    back = set(icfg.back_edges)
    for f in names:
        loops_local.extend(natural_loops(lg, entries[f], [e for e in back if icfg.functions[e[0]] == f]))
    extraordinary = _extraordinary(lg, entries.values())
    acyclic_local = Graph(lg.n, set(lg.edges) - back)
    cut = sorted(retreating_edges(acyclic_local, [entries[f] for f in names]))

    # Working graph: references as labels.
    refs: list[tuple] = [("v", v) for v in range(icfg.n)]
    ret_node = {}
    for f in names:
        if returns[f]:
            ret_node[f] = len(refs)
            refs.append(("ret", f))
    edges = set()
    removed = sorted(back | set(cut))
    for u, w in icfg.intra_edges():
        if (u, w) not in back and (u, w) not in cut:
            edges.add((u, w))
    for f, rs in returns.items():
        for r in rs:
            edges.add((r, ret_node[f]))
    for f, (c, r) in kept.items():
        edges.add((c, entries[f]))
        edges.add((ret_node[f], r))
    for c, r in dropped:
        if r != c:
            edges.add((c, r))
    for c, e in icfg.call_edges:
        if icfg.functions[e] in skipped:
            edges.add((c, e))
    work = Graph(len(refs), edges, dict(enumerate(refs)))
    if not is_dag(work):
        raise SplitError("cycle survived cycle-edge removal")

    # graphs: region id -> working graph holding the still-unsplit vertices of that region
    regions: list[Region] = [Region(0, "root", main, work, entries[main])]
    graphs: dict[int, Graph] = {0: work}

    def where(ref) -> tuple[int, int]:
        for rid, g in graphs.items():
            for v, lab in g.labels.items():
                if lab == ref:
                    return rid, v
        raise KeyError(ref)

    def lift(ref, rid: int) -> int | None:
        """Vertex of graphs[rid] standing for ``ref``: itself, or the merged vertex of the child region holding it."""
        try:
            r, loc = where(ref)
        except KeyError:
            return None
        while r != rid:
            parent = regions[r].parent
            if parent is None:
                return None
            if parent == rid:
                return {lab: v for v, lab in graphs[rid].labels.items()}.get(("sst", r))
            r = parent
        return loc

    def register(new_id: int, res: SplitResult):
        for ref in res.subgraph.labels.values():
            if ref[0] == "sst":
                regions[ref[1]].parent = new_id

    loops_done: list[LoopInfo] = []
    if split_loops:
        # Bodies on the interprocedural graph, so a loop around a kept call contains the callee.
        cyc = Graph(work.n, set(work.edges) | back, work.labels)
        global_loops = []
        for li in loops_local:
            if any(li.header in s for s in extraordinary):
                continue
            body = {li.header}
            stack = [t for t, _ in li.back_edges]
            while stack:
                v = stack.pop()
                if v not in body:
                    body.add(v)
                    stack.extend(cyc.predecessors(v))
            global_loops.append((li, body))
        for li, body_refs in sorted(global_loops, key=lambda x: (len(x[1]), x[0].header)):
            rid, h = where(("v", li.header))
            g = graphs[rid]
            body = {lift(work.labels[v], rid) for v in body_refs} - {None}
            info = LoopInfo(
                h,
                frozenset(body),
                frozenset((lift(("v", t), rid), h) for t, _ in li.back_edges),
                frozenset((u, w) for u in body for w in g.successors(u) if w not in body),
                frozenset(w for u in body for w in g.successors(u) if w not in body),
            )
            new_id = len(regions)
            res = transform_loop(
                g,
                info,
                merged_label=("sst", new_id),
                exit_label=lambda x, i=new_id: ("exit", i, x),
                continue_label=lambda t, i=new_id: ("continue", i, t),
            )
            name = f"loop@{icfg.label(li.header)}"
            regions.append(Region(new_id, "loop", name, res.subgraph, res.entry, rid, res, g.labels[h]))
            register(new_id, res)
            graphs[rid] = res.remainder
            graphs[new_id] = res.subgraph
            loops_done.append(li)

    # Function regions, callees before callers.
    order = _callee_first(names, calls, comp)
    for f in order:
        if f == main or f in skipped:
            continue
        rid, r_loc = where(("ret", f))
        e_loc = lift(("v", entries[f]), rid)
        if e_loc is None:
            skipped.append(f)
            continue
        g = graphs[rid]
        new_id = len(regions)
        try:
            res = split_one_entry_one_exit(g, e_loc, r_loc, merged_label=("sst", new_id))
        except SplitError:
            skipped.append(f)
            continue
        regions.append(Region(new_id, "function", f, res.subgraph, res.entry, rid, res, g.labels[e_loc]))
        register(new_id, res)
        graphs[rid] = res.remainder
        graphs[new_id] = res.subgraph

    regions[0].entry_ref = graphs[0].labels[lift(("v", entries[main]), 0)]
    for rid, g in graphs.items():
        regions[rid].graph = g
        regions[rid].entry = regions[rid].local()[regions[rid].entry_ref]
    return Decomposition(
        icfg, regions, kept, dropped, removed, cut, extraordinary, sorted(set(skipped)), loops_done
    )


def _callee_first(names: list[str], calls: Mapping[str, set[str]], comp: Mapping[str, int]) -> list[str]:
    """Functions ordered so that callees come before their callers (SCC members by file order)."""
    idx = {f: i for i, f in enumerate(names)}
    comps = sorted(set(comp.values()))
    cg_edges = {(comp[a], comp[b]) for a, bs in calls.items() for b in bs if comp[a] != comp[b]}
    # Tarjan numbering already lists components in reverse topological order.
    members = {k: sorted((f for f in names if comp[f] == k), key=idx.get) for k in comps}
    order: list[str] = []
    done: set[int] = set()

    def visit(k: int):
        if k in done:
            return
        done.add(k)
        for a, b in sorted(cg_edges):
            if a == k:
                visit(b)
        order.extend(members[k])

    for f in names:
        visit(comp[f])
    return order


def transform_caller_callee(icfg: ICfg) -> tuple[Graph, list[SplitResult]]:
    """Caller-callee cycle removal and function extraction, without loop splitting.

    Returns the remainder graph (labels are references, see Region) and the
    function splits in extraction order. Functions whose bodies still hold
    loops fail the one-entry-one-exit check and are reported as skipped by
    ``decompose`` instead.
    """
    d = decompose(icfg, split_loops=False)
    root = d.regions[0]
    return root.graph, [r.split for r in d.regions if r.kind == "function" and r.split is not None]


def decomposition_is_acyclic(d: Decomposition) -> bool:
    return all(is_dag(r.graph) for r in d.regions)
