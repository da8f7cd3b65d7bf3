"""Concrete execution and the brute-force feasibility oracle."""

from __future__ import annotations

import itertools
from dataclasses import dataclass
from typing import Iterator, Mapping

from .icfg import Lowered, lower
from .ir import Assign, Branch, Goto, MiniProgram, Return

DEFAULT_STEP_BUDGET = 100_000
DEFAULT_FEASIBILITY_BUDGET = 10**6
MAX_CALL_DEPTH = 8


class EngineError(RuntimeError):
    """Execution could not proceed (for example the recursion bound was hit)."""


class FeasibilityUnknown(RuntimeError):
    """The input space is larger than the enumeration budget."""


@dataclass(frozen=True)
class PathPrefix:
    """iCFG vertices entered, in order, and the outcome of every branch executed."""

    blocks: tuple[int, ...] = ()
    decisions: tuple[bool, ...] = ()

    def startswith(self, other: "PathPrefix") -> bool:
        return (
            self.blocks[: len(other.blocks)] == other.blocks
            and self.decisions[: len(other.decisions)] == other.decisions
        )

    def truncate(self, n_blocks: int, n_decisions: int) -> "PathPrefix":
        return PathPrefix(self.blocks[:n_blocks], self.decisions[:n_decisions])


@dataclass(frozen=True)
class ConcreteRun:
    trace: PathPrefix
    steps: int
    result: int | None
    truncated: bool


def run_concrete(
    p: MiniProgram | Lowered,
    inputs: Mapping[str, int],
    step_budget: int = DEFAULT_STEP_BUDGET,
    max_depth: int = MAX_CALL_DEPTH,
    stop_after: int | None = None,
) -> ConcreteRun:
    """Execute from the entry function until it returns.

    One step executes one iCFG vertex. The run stops early, with
    ``truncated`` set, when the step budget runs out or the trace reaches
    ``stop_after`` vertices.
    """
    low = p if isinstance(p, Lowered) else lower(p)
    prog = low.program
    for d in prog.inputs:
        if d.name not in inputs:
            raise ValueError(f"missing input {d.name}")
        if not d.lo <= inputs[d.name] <= d.hi:
            raise ValueError(f"input {d.name}={inputs[d.name]} outside [{d.lo}, {d.hi}]")
    globals_ = {d.name: int(inputs[d.name]) for d in prog.inputs}
    env = dict(globals_)
    stack: list[tuple[dict, str, int]] = []
    v = low.entries[prog.entry_function]
    blocks = [v]
    decisions: list[bool] = []
    steps = 0
    while True:
        if steps >= step_budget or (stop_after is not None and len(blocks) >= stop_after):
            return ConcreteRun(PathPrefix(tuple(blocks), tuple(decisions)), steps, None, True)
        steps += 1
        c = low.code[v]
        if c.latch_of is not None:
            v = c.latch_of
            blocks.append(v)
            continue
        for s in c.stmts:
            if isinstance(s, Assign):
                env[s.dst] = s.expr.eval(env)
        if c.call is not None:
            args = [a.eval(env) for a in c.call.args]
            if len(stack) >= max_depth:
                raise EngineError(f"call depth exceeds {max_depth}")
            stack.append((env, c.call.dst, low.return_site[v]))
            callee = prog.function(c.call.func)
            env = dict(globals_)
            env.update(zip(callee.params, args))
            v = low.entries[callee.name]
            blocks.append(v)
            continue
        term = c.term
        if isinstance(term, Goto):
            v = low.target(v, term.target)
        elif isinstance(term, Branch):
            taken = bool(term.cond.eval(env))
            decisions.append(taken)
            v = low.target(v, term.then if taken else term.els)
        elif isinstance(term, Return):
            value = int(term.expr.eval(env))
            if not stack:
                return ConcreteRun(PathPrefix(tuple(blocks), tuple(decisions)), steps, value, False)
            env, dst, v = stack.pop()
            env[dst] = value
        blocks.append(v)


def all_assignments(prog: MiniProgram) -> Iterator[dict[str, int]]:
    names = [d.name for d in prog.inputs]
    ranges = [range(d.lo, d.hi + 1) for d in prog.inputs]
    for combo in itertools.product(*ranges):
        yield dict(zip(names, combo))


def feasible(
    p: MiniProgram | Lowered,
    prefix: PathPrefix,
    budget: int = DEFAULT_FEASIBILITY_BUDGET,
) -> tuple[bool, dict[str, int] | None]:
    """True iff some input assignment's trace starts with ``prefix``.

    Decided by running every assignment in the input space, so the answer is
    exact. Raises FeasibilityUnknown instead of guessing when the space is
    larger than ``budget``.
    """
    low = p if isinstance(p, Lowered) else lower(p)
    space = low.program.input_space()
    if space > budget:
        raise FeasibilityUnknown(f"input space {space} exceeds budget {budget}")
    want = max(len(prefix.blocks), 1)
    for assignment in all_assignments(low.program):
        run = run_concrete(low, assignment, stop_after=want)
        if run.trace.startswith(prefix):
            return True, assignment
    return False, None
