"""Symbolic execution over mini-IR programs with pluggable state selection.

A state carries the set of input rows (indices into the full input table)
whose concrete runs follow its path so far, plus the per-row values of its
local variables. Forking at a branch partitions the rows, so a child is
feasible exactly when its partition is nonempty: an exact stand-in for a
solver query on both outcomes.

The ``empc`` strategy steers states along paths of precomputed minimum path
covers, one group of covers per region of the decomposed iCFG (root,
functions, loops). Every region a state is inside gets a frame holding the
subpath walked in that region and, optionally, a target cover path. A state
that *claims* an unrealized target has a mission and stays active; forked
children that match no unclaimed path are ignored (kept, not run). When a
cover path turns out infeasible the dependence maps point to an ignored
state worth reviving.
"""

from __future__ import annotations

import copy
import csv
import io
import itertools
import json
import random
import time
from collections import Counter, deque
from dataclasses import dataclass, field
from typing import Any, Iterable, Sequence

import numpy as np

from .dependence import analyze
from .enumeration import DEFAULT_CAP, enumerate_mpcs
from .graph import Graph, reachability
from .icfg import Lowered, lower
from .interp import DEFAULT_FEASIBILITY_BUDGET, MAX_CALL_DEPTH, FeasibilityUnknown, PathPrefix
from .ir import Affine, Assign, Branch, Cond, Goto, MiniProgram, Return
from .transform import Decomposition, decompose

STRATEGIES = ("empc", "bfs", "dfs", "random-state", "random-path")

ACTIVE, IGNORED, COMPLETED, INFEASIBLE, ERROR, FORKED = (
    "active",
    "ignored",
    "completed",
    "infeasible",
    "error",
    "forked",
)


@dataclass
class EmpcConfig:
    handle_infeasible: bool = True
    cap: int = DEFAULT_CAP
    mpc_seed: int = 0


@dataclass
class EngineConfig:
    budget: int = 100_000
    seed: int = 0
    max_depth: int = MAX_CALL_DEPTH
    feasibility_budget: int = DEFAULT_FEASIBILITY_BUDGET
    empc: EmpcConfig = field(default_factory=EmpcConfig)


# ------------------------------------------------------------------ state

@dataclass
class Frame:
    region: int
    segment: list[int]
    target: tuple[int, ...] | None = None
    claimed: bool = False
    attempted: list[tuple[int, ...]] = field(default_factory=list)
    iteration: int = 0


@dataclass
class SymState:
    id: int
    pc: int
    rows: np.ndarray
    env: dict[str, np.ndarray]
    stack: list[tuple[dict[str, np.ndarray], str, int]]
    blocks: list[int]
    decisions: list[bool]
    status: str = ACTIVE
    fork_parent: int | None = None
    frames: list[Frame] = field(default_factory=list)
    detour: int | None = None

    @property
    def prefix(self) -> PathPrefix:
        return PathPrefix(tuple(self.blocks), tuple(self.decisions))

    def subset(self, mask: np.ndarray, new_id: int) -> "SymState":
        child = SymState(
            new_id,
            self.pc,
            self.rows[mask],
            {k: v[mask] for k, v in self.env.items()},
            [({k: v[mask] for k, v in env.items()}, dst, r) for env, dst, r in self.stack],
            list(self.blocks),
            list(self.decisions),
            ACTIVE,
            self.id,
            copy.deepcopy(self.frames),
            self.detour,
        )
        return child


@dataclass
class RunMetrics:
    strategy: str
    seed: int
    budget: int
    steps: int = 0
    covered_series: list[int] = field(default_factory=list)
    live_series: list[int] = field(default_factory=list)
    active_series: list[int] = field(default_factory=list)
    completed_paths: int = 0
    solver_calls: int = 0
    forks: int = 0
    infeasible_children: int = 0
    handler_invocations: int = 0
    fallback_count: int = 0
    error_states: int = 0
    warnings: list[str] = field(default_factory=list)
    covered: list[str] = field(default_factory=list)
    reachable_blocks: int = 0
    completed_traces: list[tuple[int, ...]] = field(default_factory=list)
    wall_seconds: float = 0.0

    @property
    def covered_blocks(self) -> int:
        return self.covered_series[-1] if self.covered_series else 0

    @property
    def coverage(self) -> float:
        return self.covered_blocks / self.reachable_blocks if self.reachable_blocks else 1.0

    @property
    def peak_live_states(self) -> int:
        return max(self.live_series, default=0)

    def to_json(self, include_timing: bool = False) -> dict[str, Any]:
        data = {
            "strategy": self.strategy,
            "seed": self.seed,
            "budget": self.budget,
            "steps": self.steps,
            "covered_blocks": self.covered_blocks,
            "reachable_blocks": self.reachable_blocks,
            "coverage": self.coverage,
            "completed_paths": self.completed_paths,
            "solver_calls": self.solver_calls,
            "forks": self.forks,
            "infeasible_children": self.infeasible_children,
            "handler_invocations": self.handler_invocations,
            "fallback_count": self.fallback_count,
            "error_states": self.error_states,
            "peak_live_states": self.peak_live_states,
            "covered": self.covered,
            "warnings": self.warnings,
            "series": {
                "covered_blocks": self.covered_series,
                "live_states": self.live_series,
                "active_states": self.active_series,
            },
        }
        if include_timing:
            data["wall_seconds"] = self.wall_seconds
        return data

    def to_csv(self) -> str:
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(["step", "covered_blocks", "live_states"])
        for i, (c, l) in enumerate(zip(self.covered_series, self.live_series), start=1):
            w.writerow([i, c, l])
        return buf.getvalue()

    def dumps(self) -> str:
        return json.dumps(self.to_json(), sort_keys=True)


# ----------------------------------------------------------- MPC groups

@dataclass
class MpcGroup:
    """Candidate covers of one region, pruned at run time, plus shared claim bookkeeping."""

    region: int
    graph: Graph
    covers: list[list[tuple[int, ...]]]
    virtual_sink: frozenset[int]  # exit and continue copies
    dead: set[tuple[int, ...]] = field(default_factory=set)  # paths not starting at the region entry
    claims: Counter = field(default_factory=Counter)
    realized: set[tuple[int, ...]] = field(default_factory=set)
    failed: set[tuple[int, ...]] = field(default_factory=set)
    instances: int = 0
    exhausted: bool = False

    @property
    def current(self) -> list[tuple[int, ...]]:
        return self.covers[0]

    def all_paths(self) -> list[tuple[int, ...]]:
        return list(dict.fromkeys(p for c in self.covers for p in c))

    def claimable(self, path: tuple[int, ...]) -> bool:
        return (
            path not in self.realized
            and path not in self.failed
            and path not in self.dead
            and self.claims[path] == 0
        )

    def consistent(self, view: Sequence[int], path: Sequence[int], finished: bool) -> bool:
        n = len(view)
        if n > len(path) or tuple(path[:n]) != tuple(view):
            return False
        return not finished or all(v in self.virtual_sink for v in path[n:])

    def prune(self, view: Sequence[int], finished: bool) -> None:
        """Drop covers without a path matching ``view``, keeping at least one."""
        keep = [c for c in self.covers if any(self.consistent(view, p, finished) for p in c)]
        if keep:
            self.covers = keep
        else:
            self.exhausted = True


def _extend(g: Graph, entry: int, path: tuple[int, ...]) -> tuple[tuple[int, ...], bool]:
    """Stretch a cover path into an entry-to-sink path; False when the entry cannot reach it."""
    head: list[int] = []
    if path[0] != entry:
        prev = {entry: None}
        queue = deque([entry])
        while queue:
            v = queue.popleft()
            for w in sorted(g.successors(v)):
                if w not in prev:
                    prev[w] = v
                    queue.append(w)
        if path[0] not in prev:
            return path, False
        v = prev[path[0]]
        while v is not None:
            head.append(v)
            v = prev[v]
        head.reverse()
    tail: list[int] = []
    prev2: dict[int, int | None] = {path[-1]: None}
    queue = deque([path[-1]])
    end = path[-1]
    while queue:
        v = queue.popleft()
        if not g.out_degree(v):
            end = v
            break
        for w in sorted(g.successors(v)):
            if w not in prev2:
                prev2[w] = v
                queue.append(w)
    v = end
    while v != path[-1]:
        tail.append(v)
        v = prev2[v]
    tail.reverse()
    return tuple(head) + path + tuple(tail), True


# ------------------------------------------------------------ the plan

class Plan:
    """Static data the empc strategy needs: regions, covers, lookups for frame moves."""

    def __init__(self, low: Lowered, cfg: EmpcConfig):
        self.low = low
        self.icfg = low.icfg
        self.d: Decomposition = decompose(low.icfg, low.return_site)
        self.ref_home: dict[tuple, tuple[int, int]] = {}
        for r in self.d.regions:
            for v, ref in r.graph.labels.items():
                self.ref_home[ref] = (r.id, v)
        self.chain: dict[int, list[int]] = {}
        for r in self.d.regions:
            c, x = [], r.id
            while x is not None:
                c.append(x)
                x = self.d.regions[x].parent
            self.chain[r.id] = c[::-1]
        self.chain_set = {r: set(c) for r, c in self.chain.items()}
        self.loop_of_header: dict[int, int] = {}
        self.function_region: dict[str, int] = {}
        for r in self.d.regions:
            if r.kind == "loop" and r.entry_ref and r.entry_ref[0] == "v":
                self.loop_of_header[r.entry_ref[1]] = r.id
            elif r.kind == "function":
                self.function_region[r.name] = r.id
        self.kept = self.d.kept_calls
        self.cut = set(self.d.cut_edges)
        self.groups: list[MpcGroup] = []
        for r in self.d.regions:
            virt = frozenset(v for v, ref in r.graph.labels.items() if ref[0] in ("exit", "continue"))
            covers, seen_keys, dead = [], set(), set()
            for cover in enumerate_mpcs(r.graph, cfg.cap, cfg.mpc_seed).covers:
                paths = []
                for p in cover.paths:
                    ext, ok = _extend(r.graph, r.entry, p)
                    if not ok:
                        dead.add(ext)
                    if ext not in paths:
                        paths.append(ext)
                key = tuple(sorted(paths))
                if key not in seen_keys:
                    seen_keys.add(key)
                    covers.append(paths)
            self.groups.append(MpcGroup(r.id, r.graph, covers, virt, dead))

    def local(self, region: int, ref: tuple) -> int:
        r, v = self.ref_home[ref]
        if r != region:
            raise KeyError(ref)
        return v

    def ref(self, region: int, v: int) -> tuple:
        return self.d.regions[region].graph.labels[v]

    def exit_copy(self, region: int, ref: tuple) -> int | None:
        r_b = self.ref_home[ref][0]
        for cand in [ref] + [("sst", x) for x in reversed(self.chain[r_b])]:
            hit = self.ref_home.get(("exit", region, cand))
            if hit is not None:
                return hit[1]
        return None

    def continue_copy(self, region: int, v: int) -> int | None:
        hit = self.ref_home.get(("continue", region, self.ref(region, v)))
        return None if hit is None else hit[1]

    def is_real(self, region: int, v: int) -> int | None:
        ref = self.ref(region, v)
        if ref[0] == "v" and not self.icfg.is_virtual(ref[1]):
            return ref[1]
        return None


# ------------------------------------------------------------ selection

class ForkTree:
    """Fork history; leaves are live states."""

    def __init__(self):
        self.children: dict[int, list[int]] = {}
        self.parent: dict[int, int | None] = {0: None}

    def add(self, parent: int, child: int) -> None:
        self.children.setdefault(parent, []).append(child)
        self.parent[child] = parent

    def walk(self, selectable: Iterable[int], rng: random.Random) -> int:
        """Random root-to-leaf walk through subtrees that still hold a selectable state."""
        sel = set(selectable)
        if not sel:
            raise ValueError("no selectable state")
        live: set[int] = set()
        for s in sel:
            x: int | None = s
            while x is not None and x not in live:
                live.add(x)
                x = self.parent.get(x)
        node = min(x for x in live if self.parent.get(x) is None or self.parent[x] not in live)
        while True:
            kids = [c for c in self.children.get(node, []) if c in live]
            options = kids + ([node] if node in sel else [])
            pick = options[rng.randrange(len(options))]
            if pick == node:
                return node
            node = pick


def baseline_select(
    active: Sequence[SymState], strategy: str, rng: random.Random, tree: ForkTree | None = None
) -> SymState:
    """bfs: oldest state; dfs: newest; random-state: uniform; random-path: walk of the fork tree."""
    if not active:
        raise ValueError("no active state")
    if strategy == "bfs":
        return min(active, key=lambda s: s.id)
    if strategy == "dfs":
        return max(active, key=lambda s: s.id)
    if strategy == "random-state":
        ordered = sorted(active, key=lambda s: s.id)
        return ordered[rng.randrange(len(ordered))]
    if strategy == "random-path":
        if tree is None:
            raise ValueError("random-path needs the fork tree")
        by_id = {s.id: s for s in active}
        return by_id[tree.walk(by_id, rng)]
    raise ValueError(f"unknown strategy {strategy!r}")


# ---------------------------------------------------------------- engine

class Engine:
    def __init__(self, p: MiniProgram | Lowered, strategy: str, config: EngineConfig):
        if strategy not in STRATEGIES:
            raise ValueError(f"unknown strategy {strategy!r}; expected one of {', '.join(STRATEGIES)}")
        self.low = p if isinstance(p, Lowered) else lower(p)
        self.prog = self.low.program
        self.icfg = self.low.icfg
        self.strategy = strategy
        self.cfg = config
        self.rng = random.Random(config.seed)
        self.metrics = RunMetrics(strategy, config.seed, config.budget)
        self.states: list[SymState] = []
        self.tree = ForkTree()
        self.covered: set[int] = set()
        self.counts: Counter = Counter()
        entry = self.low.entries[self.prog.entry_function]
        reach = reachability(self.icfg.graph)
        self.reach = reach
        self.reachable = {v for v in range(self.icfg.n) if v == entry or reach[entry, v]}
        self.reachable_real = {v for v in self.reachable if not self.icfg.is_virtual(v)}
        self.metrics.reachable_blocks = len(self.reachable_real)
        self.plan: Plan | None = None
        if strategy == "empc":
            self.plan = Plan(self.low, config.empc)
            self.dep = analyze(self.low)
            self.tried: dict[int, set[int]] = {}
            self.abandoned: set[int] = set()
        self.cols = {d.name: i for i, d in enumerate(self.prog.inputs)}

    # ---------------------------------------------------------- setup
    def _table(self) -> np.ndarray:
        space = self.prog.input_space()
        if space > self.cfg.feasibility_budget:
            raise FeasibilityUnknown(f"input space {space} exceeds budget {self.cfg.feasibility_budget}")
        ranges = [range(d.lo, d.hi + 1) for d in self.prog.inputs]
        rows = list(itertools.product(*ranges))
        return np.array(rows, dtype=np.int64).reshape(len(rows), len(ranges))

    def _set_status(self, st: SymState, status: str) -> None:
        self.counts[st.status] -= 1
        st.status = status
        self.counts[status] += 1

    def _new_state(self, st: SymState) -> SymState:
        self.states.append(st)
        self.counts[st.status] += 1
        return st

    # ------------------------------------------------------ execution
    def _value(self, st: SymState, e: Affine) -> np.ndarray:
        out = np.full(len(st.rows), e.const, dtype=np.int64)
        for var, c in e.terms:
            col = st.env[var] if var in st.env else self.table[st.rows, self.cols[var]]
            out = out + c * col
        return out

    def _cond(self, st: SymState, cond: Cond) -> np.ndarray:
        a, b = self._value(st, cond.lhs), self._value(st, cond.rhs)
        return {"<": a < b, "<=": a <= b, "==": a == b, "!=": a != b}[cond.op]

    def _kind(self, a: int, b: int) -> str:
        if (a, b) in self.icfg.back_edges:
            return "back"
        if self.plan is not None and (a, b) in self.plan.cut:
            return "back"
        return "intra"

    def _step(self, st: SymState) -> list[tuple[SymState, str, int]]:
        """Execute ``st.pc``; returns the successor states with their transition kinds and source."""
        v = st.pc
        c = self.low.code[v]
        if not self.icfg.is_virtual(v):
            self.covered.add(v)
        if c.latch_of is not None:
            return [(st, "back", v)] if self._goto(st, c.latch_of) else []
        for s in c.stmts:
            if isinstance(s, Assign):
                st.env[s.dst] = self._value(st, s.expr)
        if c.call is not None:
            if len(st.stack) >= self.cfg.max_depth:
                self.metrics.warnings.append(f"state {st.id}: call depth exceeds {self.cfg.max_depth}")
                self.metrics.error_states += 1
                self._set_status(st, ERROR)
                return []
            callee = self.prog.function(c.call.func)
            args = [self._value(st, a) for a in c.call.args]
            st.stack.append((st.env, c.call.dst, self.low.return_site[v]))
            st.env = dict(zip(callee.params, args))
            st.pc = self.low.entries[callee.name]
            st.blocks.append(st.pc)
            return [(st, "call", v)]
        term = c.term
        if isinstance(term, Goto):
            nxt = self.low.target(v, term.target)
            st.pc = nxt
            st.blocks.append(nxt)
            return [(st, self._kind(v, nxt), v)]
        if isinstance(term, Branch):
            mask = self._cond(st, term.cond)
            self.metrics.solver_calls += 2
            outcomes = [(True, mask, term.then), (False, ~mask, term.els)]
            feasible = [(d, m, lab) for d, m, lab in outcomes if m.any()]
            self.metrics.infeasible_children += 2 - len(feasible)
            if len(feasible) == 1:
                d, _, lab = feasible[0]
                nxt = self.low.target(v, lab)
                st.pc = nxt
                st.blocks.append(nxt)
                st.decisions.append(d)
                return [(st, self._kind(v, nxt), v)]
            self.metrics.forks += 1
            kids = []
            for d, m, lab in feasible:
                child = self._new_state(st.subset(m, len(self.states)))
                self.tree.add(st.id, child.id)
                nxt = self.low.target(v, lab)
                child.pc = nxt
                child.blocks.append(nxt)
                child.decisions.append(d)
                kids.append((child, self._kind(v, nxt), v))
            self._set_status(st, FORKED)
            return kids
        if isinstance(term, Return):
            value = self._value(st, term.expr)
            if not st.stack:
                self._set_status(st, COMPLETED)
                self.metrics.completed_paths += 1
                self.metrics.completed_traces.append(tuple(st.blocks))
                return [(st, "exit", v)]
            env, dst, r = st.stack.pop()
            st.env = env
            st.env[dst] = value
            st.pc = r
            st.blocks.append(r)
            return [(st, "return", v)]
        raise AssertionError("vertex without terminator")

    def _goto(self, st: SymState, nxt: int) -> bool:
        st.pc = nxt
        st.blocks.append(nxt)
        return True

    # ---------------------------------------------------------- run
    def run(self) -> RunMetrics:
        t0 = time.perf_counter()
        try:
            self.table = self._table()
        except FeasibilityUnknown as e:
            self.metrics.warnings.append(f"feasibility unknown: {e}")
            return self.metrics
        entry = self.low.entries[self.prog.entry_function]
        root = SymState(0, entry, np.arange(len(self.table)), {}, [], [entry], [])
        self._new_state(root)
        if self.plan is not None:
            self._init_frames(root)
        while self.metrics.steps < self.cfg.budget:
            active = [s for s in self.states if s.status == ACTIVE]
            if not active:
                if not self._recover():
                    break
                continue
            st = self._select(active)
            results = self._step(st)
            self.metrics.steps += 1
            if self.plan is not None:
                self._empc_update(st, results)
            self.metrics.covered_series.append(len(self.covered))
            live = self.counts[ACTIVE] + self.counts[IGNORED]
            self.metrics.live_series.append(live)
            self.metrics.active_series.append(self.counts[ACTIVE])
        self.metrics.covered = sorted(self.icfg.label(v) for v in self.covered)
        self.metrics.wall_seconds = time.perf_counter() - t0
        return self.metrics

    def _select(self, active: list[SymState]) -> SymState:
        if self.plan is None:
            return baseline_select(active, self.strategy, self.rng, self.tree)
        return empc_select(active, self.plan)

    # ------------------------------------------------ empc: frames
    def _init_frames(self, st: SymState) -> None:
        plan = self.plan
        st.frames = [Frame(0, [])]
        self._claim_root(st.frames[0])
        self._descend(st, ("v", st.pc))

    def _claim_root(self, fr: Frame) -> None:
        group = self.plan.groups[fr.region]
        for p in group.current:
            if group.claimable(p):
                fr.target, fr.claimed = p, True
                group.claims[p] += 1
                return

    def _push(self, st: SymState, region: int) -> None:
        fr = Frame(region, [])
        st.frames.append(fr)
        kind = self.plan.d.regions[region].kind
        if kind == "loop":
            self._loop_target(fr)
        else:
            self._call_target(fr)

    def _loop_target(self, fr: Frame) -> None:
        """Next cover path not yet tried in this loop instance, paths that iterate again first."""
        group = self.plan.groups[fr.region]
        ends_in_continue = lambda p: self.plan.ref(fr.region, p[-1])[0] == "continue"  # noqa: E731
        order = sorted(
            (p for p in group.current if p not in group.dead),
            key=lambda p: (0 if ends_in_continue(p) else 1, group.current.index(p)),
        )
        fr.target, fr.claimed = None, False
        for p in order:
            if p not in fr.attempted:
                fr.attempted.append(p)
                fr.target = p
                if group.claimable(p):
                    fr.claimed = True
                    group.claims[p] += 1
                return

    def _call_target(self, fr: Frame) -> None:
        """A fresh unrealized path per call instance, else round-robin over the cover."""
        group = self.plan.groups[fr.region]
        group.instances += 1
        for p in group.current:
            if group.claimable(p):
                fr.target, fr.claimed = p, True
                group.claims[p] += 1
                return
        live = [p for p in group.current if p not in group.dead]
        fr.target = live[(group.instances - 1) % len(live)] if live else None
        fr.claimed = False

    def _append(self, st: SymState, ref: tuple) -> None:
        fr = st.frames[-1]
        fr.segment.append(self.plan.local(fr.region, ref))

    def _descend(self, st: SymState, ref: tuple) -> None:
        r_b, loc = self.plan.ref_home[ref]
        chain = self.plan.chain[r_b]
        i = chain.index(st.frames[-1].region)
        for r in chain[i + 1 :]:
            self._append(st, ("sst", r))
            self._push(st, r)
        st.frames[-1].segment.append(loc)

    def _move(self, st: SymState, ref: tuple) -> None:
        plan = self.plan
        while True:
            top = st.frames[-1]
            r_b = plan.ref_home[ref][0]
            if top.region in plan.chain_set[r_b]:
                self._descend(st, ref)
                return
            cp = plan.exit_copy(top.region, ref)
            if cp is None or len(st.frames) == 1:
                raise AssertionError(f"cannot leave region {top.region} towards {ref}")
            top.segment.append(cp)
            self._finish(st, st.frames.pop(), "exit")

    def _back(self, st: SymState, a: int, h: int) -> None:
        plan = self.plan
        loop = plan.loop_of_header.get(h)
        regions = [f.region for f in st.frames]
        if loop is None or loop not in regions:
            # cut edge of an irreducible region: restart the enclosing frame at h
            r_h = plan.ref_home[("v", h)][0]
            while st.frames[-1].region != r_h and len(st.frames) > 1:
                self._finish(st, st.frames.pop(), "exit")
            fr = st.frames[-1]
            self._finish(st, fr, "iter")
            fr.segment = [plan.local(fr.region, ("v", h))]
            return
        while st.frames[-1].region != loop:
            fr = st.frames.pop()
            cont = plan.continue_copy(fr.region, fr.segment[-1])
            if cont is not None:
                fr.segment.append(cont)
            self._finish(st, fr, "exit")
        fr = st.frames[-1]
        cont = plan.continue_copy(fr.region, fr.segment[-1])
        if cont is not None:
            fr.segment.append(cont)
        self._finish(st, fr, "iter")
        fr.segment = [plan.local(loop, ("v", h))]
        fr.iteration += 1
        self._loop_target(fr)

    def _finish(self, st: SymState, fr: Frame, how: str) -> None:
        """Close a frame (or one loop iteration): record realized paths, release the claim."""
        group = self.plan.groups[fr.region]
        view = tuple(fr.segment)
        for p in group.all_paths():
            if group.consistent(view, p, True):
                group.realized.add(p)
        if fr.claimed:
            group.claims[fr.target] -= 1
        if getattr(st, "_probe", None) is fr and st._probe_view is None:
            st._probe_view = (view, True, how)
        fr.claimed, fr.target = False, None

    def _transition(self, st: SymState, kind: str, a: int) -> None:
        plan = self.plan
        b = st.pc
        if kind == "back":
            self._back(st, a, b)
        elif kind == "call":
            f = self.icfg.functions[b]
            rf = plan.function_region.get(f)
            if rf is None or plan.kept.get(f, (None,))[0] == a:
                self._move(st, ("v", b))
            else:
                self._push(st, rf)
                self._descend(st, ("v", b))
        elif kind == "return":
            f = self.icfg.functions[a]
            rf = plan.function_region.get(f)
            if ("ret", f) in plan.ref_home:
                self._move(st, ("ret", f))
            if rf is not None:
                while st.frames[-1].region != rf:
                    self._finish(st, st.frames.pop(), "exit")
                self._finish(st, st.frames.pop(), "exit")
            self._move(st, ("v", b))
        elif kind == "exit":
            self._move(st, ("ret", self.prog.entry_function))
            while st.frames:
                self._finish(st, st.frames.pop(), "exit")
        else:
            self._move(st, ("v", b))

    # ------------------------------------------------ empc: decisions
    def _has_mission(self, st: SymState) -> bool:
        for fr in st.frames:
            if fr.claimed and fr.target not in self.plan.groups[fr.region].realized:
                return True
        return False

    def _release(self, st: SymState) -> None:
        for fr in st.frames:
            if fr.claimed:
                self.plan.groups[fr.region].claims[fr.target] -= 1
            fr.claimed = False

    def _strip(self, st: SymState) -> None:
        """Forget copied claims without touching the counters (the keeper owns them)."""
        for fr in st.frames:
            fr.claimed = False
            if self.plan.d.regions[fr.region].kind != "loop":
                fr.target = None

    def _try_claim(self, st: SymState, search_others: bool) -> bool:
        for depth in range(len(st.frames) - 1, -1, -1):
            fr = st.frames[depth]
            group = self.plan.groups[fr.region]
            view = tuple(fr.segment)
            covers = group.covers if (search_others and depth == len(st.frames) - 1) else group.covers[:1]
            for ci, cover in enumerate(covers):
                for p in cover:
                    if group.claimable(p) and group.consistent(view, p, False):
                        if ci:
                            group.covers.insert(0, group.covers.pop(ci))
                            group.prune(view, False)
                        fr.target, fr.claimed = p, True
                        group.claims[p] += 1
                        return True
        return False

    def _ignore(self, st: SymState) -> None:
        self._release(st)
        st.detour = None
        self._set_status(st, IGNORED)

    def _empc_update(self, parent: SymState, results: list[tuple[SymState, str, int]]) -> None:
        if not results:
            if parent.status == ERROR:
                self._release(parent)
            return
        a = results[0][2]
        top = results[0][0].frames[-1]
        # the frame of the branch vertex, as it was before any child moved
        info = (top.region, top.target, top.claimed, copy.deepcopy(top))
        states, views = [], []
        for st, kind, src in results:
            st._probe = st.frames[-1]
            st._probe_view = None
            self._transition(st, kind, src)
            if st._probe_view is None:
                st._probe_view = (tuple(st._probe.segment), False, "plain")
            states.append(st)
            views.append(st._probe_view)
            del st._probe, st._probe_view
        if isinstance(self.low.code[a].term, Branch) and self.low.code[a].latch_of is None:
            self._decide(parent, states, views, info, a)
        for st in states:
            self._settle(st)

    def _settle(self, st: SymState) -> None:
        if st.status != ACTIVE:
            return
        if st.detour is not None:
            u = st.detour
            if u in self.covered or not (st.pc == u or self.reach[st.pc, u]):
                st.detour = None
        if st.detour is None and not self._has_mission(st):
            if not self._try_claim(st, False):
                self._ignore(st)

    def _decide(self, parent: SymState, kids: list[SymState], views: list, info, branch: int) -> None:
        """Choose which child keeps the parent's claims; the others claim afresh or are ignored."""
        region, target, claimed, frame = info
        group = self.plan.groups[region]
        if parent.detour is not None:
            keeper = self._detour_keeper(kids)
            for k in kids:
                if k is not keeper:
                    self._strip(k)
                    k.detour = None
            return
        matching = [
            k for k, (view, fin, _) in zip(kids, views) if target is not None and group.consistent(view, target, fin)
        ]
        lost = False
        keeper = None
        if len(matching) == 1:
            keeper = matching[0]
        elif len(matching) > 1:
            keeper = self._tiebreak(region, frame, matching, views, kids)
        elif claimed and target not in group.realized:
            lost = True
            group.failed.add(target)
        if keeper is None:
            keeper = self._steer(region, frame, kids, views, group)
        if not lost and target is not None:
            kv = views[kids.index(keeper)]
            group.prune(kv[0], kv[1])
        if lost:
            # the keeper goes on with the outer claims only
            group.claims[target] -= 1
            for k in kids:
                self._drop_claim_on(k, region, target)
        for k in kids:
            if k is not keeper:
                self._strip(k)
        any_active = False
        for k in kids:
            if k.status != ACTIVE:
                continue
            if self._has_mission(k) or self._try_claim(k, lost):
                any_active = True
        if lost and not any_active:
            for k in kids:
                if k.status == ACTIVE:
                    self._ignore(k)
            if self.cfg.empc.handle_infeasible:
                self._handle(context=(region, target, views[0][0], branch))

    def _drop_claim_on(self, st: SymState, region: int, target) -> None:
        for fr in st.frames:
            if fr.region == region and fr.target == target:
                fr.claimed = False

    def _tiebreak(self, region, frame, matching, views, kids):
        if self.plan.d.regions[region].kind == "loop":
            group = self.plan.groups[region]
            exhausted = all(p in frame.attempted for p in group.current if p not in group.dead)
            want = "exit" if exhausted else "iter"
            for k in matching:
                if views[kids.index(k)][2] == want:
                    return k
        return matching[0]

    def _steer(self, region, frame, kids, views, group: MpcGroup):
        if self.plan.d.regions[region].kind == "loop":
            exhausted = all(p in frame.attempted for p in group.current if p not in group.dead)
            if exhausted:
                for k, v in zip(kids, views):
                    if v[2] == "exit":
                        return k
        for k, (view, fin, _) in zip(kids, views):
            if any(group.consistent(view, p, fin) for p in group.current if p not in group.dead):
                return k
        return kids[0]

    def _detour_keeper(self, kids: list[SymState]) -> SymState:
        u = kids[0].detour

        def key(k: SymState):
            b = k.pc
            fresh = not self.icfg.is_virtual(b) and b not in self.covered
            reaches = b == u or bool(self.reach[b, u])
            return (0 if fresh else 1, 0 if reaches else 1, k.id)

        return min(kids, key=key)

    # --------------------------------------------- infeasible paths
    def _recover(self) -> bool:
        """Active set is empty: revive a state towards an uncovered block, if that is enabled."""
        if self.plan is None or not self.cfg.empc.handle_infeasible:
            return False
        while True:
            if not (self.reachable_real - self.covered - self.abandoned):
                return False
            if self._handle(context=None):
                return True

    def _pick_unvisited(self, context) -> tuple[int | None, int | None]:
        plan = self.plan
        if context is not None:
            region, path, view, br = context
            for v in path[len(view) - 1 :]:
                real = plan.is_real(region, v)
                if real is not None and real not in self.covered and real not in self.abandoned:
                    return real, br
            return None, None
        uncovered = self.reachable_real - self.covered - self.abandoned
        for group in plan.groups:
            for cover in group.covers:
                for p in cover:
                    if p in group.realized or p in group.dead:
                        continue
                    for i, v in enumerate(p):
                        real = plan.is_real(group.region, v)
                        if real is not None and real in uncovered:
                            for w in reversed(p[:i]):
                                wr = plan.is_real(group.region, w)
                                if wr is not None and self.icfg.kinds[wr] == "branch":
                                    return real, wr
                            return real, self._nearest_branch(real)
        u = min(uncovered)
        return u, self._nearest_branch(u)

    def _nearest_branch(self, u: int) -> int | None:
        seen = {u}
        queue = deque([u])
        while queue:
            v = queue.popleft()
            for p in sorted(self.icfg.graph.predecessors(v)):
                if p in seen:
                    continue
                if self.icfg.kinds[p] == "branch":
                    return p
                seen.add(p)
                queue.append(p)
        return None

    def _ancestors(self, br: int) -> list[int]:
        """Dependence targets of ``br`` in backward breadth-first order over the iCFG."""
        deps = set(self.dep.data_dep.get(br, ())) | set(self.dep.potential_dep.get(br, ()))
        out, seen = [], {br}
        queue = deque([br])
        while queue:
            v = queue.popleft()
            for p in sorted(self.icfg.graph.predecessors(v)):
                if p not in seen:
                    seen.add(p)
                    queue.append(p)
                    if p in deps:
                        out.append(p)
        return out

    def _handle(self, context) -> bool:
        """Redirect execution to a state that passed a block the blocked branch depends on."""
        u, br = self._pick_unvisited(context)
        if u is None:
            return False
        self.metrics.handler_invocations += 1
        tried = self.tried.setdefault(u, set())

        def usable(s: SymState) -> bool:
            return (
                s.status in (IGNORED, ACTIVE)
                and s.id not in tried
                and (s.pc == u or bool(self.reach[s.pc, u]))
            )

        pool = [s for s in self.states if usable(s)]
        if br is not None:
            for anc in self._ancestors(br):
                cands = [s for s in pool if anc in s.blocks]
                ignored = [s for s in cands if s.status == IGNORED]
                cands = ignored or cands
                if cands:
                    self._revive(cands[self.rng.randrange(len(cands))], u)
                    return True
        self.metrics.fallback_count += 1
        ignored = [s.id for s in pool if s.status == IGNORED]
        if ignored:
            pick = self.tree.walk(ignored, self.rng)
            self._revive(self.states[pick], u)
            return True
        if context is None:
            # nothing left that could still get there
            self.abandoned.add(u)
        return False

    def _revive(self, st: SymState, u: int) -> None:
        self.tried.setdefault(u, set()).add(st.id)
        st.detour = u
        if st.status == IGNORED:
            self._set_status(st, ACTIVE)


def empc_select(active: Sequence[SymState], plan: Plan) -> SymState:
    """Detours first, then the lowest root cover-path index, then the innermost one, then state id."""

    def index(fr: Frame) -> int:
        group = plan.groups[fr.region]
        if fr.target is None or fr.target not in group.current:
            return len(group.current)
        return group.current.index(fr.target)

    def key(s: SymState):
        root = index(s.frames[0]) if s.frames else 0
        inner = index(s.frames[-1]) if s.frames else 0
        return (s.detour is None, root, inner, s.id)

    return min(active, key=key)


def engine_run(
    p: MiniProgram | Lowered,
    strategy: str,
    budget: int = 100_000,
    seed: int = 0,
    config: EngineConfig | None = None,
) -> RunMetrics:
    cfg = copy.deepcopy(config) if config is not None else EngineConfig()
    cfg.budget, cfg.seed = budget, seed
    return Engine(p, strategy, cfg).run()
