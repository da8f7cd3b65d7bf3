"""A tiny imperative IR: integer variables, affine expressions, basic blocks.

Grammar (whitespace-insensitive, ``//`` starts a comment)::

    program   := input* function+
    input     := "input" NAME "in" "[" INT "," INT "]" ";"
    function  := "fn" NAME "(" [NAME ("," NAME)*] ")" "{" block* "}"
    block     := NAME ":" stmt* term
    stmt      := NAME ":=" expr ";"
               | "call" NAME "(" [expr ("," expr)*] ")" "->" NAME ";"
               | "nop" ";"
    term      := "br" expr CMP expr "?" NAME ":" NAME ";"
               | "goto" NAME ";"
               | "return" expr ";"
    CMP       := "<" | "<=" | "==" | "!="
    expr      := ["-"] atom (("+" | "-") atom)*
    atom      := INT | NAME | INT "*" NAME | NAME "*" INT

The entry function is ``main`` when present, otherwise the first function.
Inputs are global and read-only. Every other variable is local to its
function and must be assigned on every path before it is read. An empty
function body becomes a single ``return 0`` block.
"""

from __future__ import annotations

import re
from dataclasses import dataclass, field
from typing import Iterator, Mapping, Union

COMPARISONS = ("<", "<=", "==", "!=")


class IRError(ValueError):
    """Syntax or validation failure, with a source position when known."""

    def __init__(self, msg: str, line: int | None = None, col: int | None = None):
        self.line, self.col = line, col
        where = f"{line}:{col}: " if line is not None else ""
        super().__init__(where + msg)


@dataclass(frozen=True)
class Affine:
    """``const + sum(coef * var)`` with terms sorted by name and no zero coefficients."""

    const: int = 0
    terms: tuple[tuple[str, int], ...] = ()

    @staticmethod
    def build(const: int, coeffs: Mapping[str, int]) -> "Affine":
        return Affine(const, tuple(sorted((v, c) for v, c in coeffs.items() if c != 0)))

    def variables(self) -> set[str]:
        return {v for v, _ in self.terms}

    def eval(self, env: Mapping[str, object]):
        total = self.const
        for v, c in self.terms:
            total = total + c * env[v]
        return total

    def __str__(self) -> str:
        parts: list[str] = []
        for v, c in self.terms:
            mag = abs(c)
            text = v if mag == 1 else f"{mag}*{v}"
            if not parts:
                parts.append(text if c > 0 else f"-{text}")
            else:
                parts.append(("+ " if c > 0 else "- ") + text)
        if self.const or not parts:
            if not parts:
                parts.append(str(self.const))
            else:
                parts.append(("+ " if self.const > 0 else "- ") + str(abs(self.const)))
        return " ".join(parts)


@dataclass(frozen=True)
class Assign:
    dst: str
    expr: Affine


@dataclass(frozen=True)
class Call:
    func: str
    args: tuple[Affine, ...]
    dst: str


@dataclass(frozen=True)
class Nop:
    pass


Stmt = Union[Assign, Call, Nop]


@dataclass(frozen=True)
class Cond:
    lhs: Affine
    op: str
    rhs: Affine

    def variables(self) -> set[str]:
        return self.lhs.variables() | self.rhs.variables()

    def eval(self, env):
        a, b = self.lhs.eval(env), self.rhs.eval(env)
        if self.op == "<":
            return a < b
        if self.op == "<=":
            return a <= b
        if self.op == "==":
            return a == b
        return a != b

    def __str__(self) -> str:
        return f"{self.lhs} {self.op} {self.rhs}"


@dataclass(frozen=True)
class Branch:
    cond: Cond
    then: str
    els: str


@dataclass(frozen=True)
class Goto:
    target: str


@dataclass(frozen=True)
class Return:
    expr: Affine


Terminator = Union[Branch, Goto, Return]


@dataclass(frozen=True)
class BasicBlock:
    label: str
    stmts: tuple[Stmt, ...]
    term: Terminator

    def successors(self) -> tuple[str, ...]:
        if isinstance(self.term, Branch):
            return (self.term.then, self.term.els)
        if isinstance(self.term, Goto):
            return (self.term.target,)
        return ()


@dataclass(frozen=True)
class Function:
    name: str
    params: tuple[str, ...]
    blocks: tuple[BasicBlock, ...]

    @property
    def entry_block(self) -> str:
        return self.blocks[0].label

    def block(self, label: str) -> BasicBlock:
        for b in self.blocks:
            if b.label == label:
                return b
        raise KeyError(label)


@dataclass(frozen=True)
class InputDecl:
    name: str
    lo: int
    hi: int

    @property
    def size(self) -> int:
        return self.hi - self.lo + 1


@dataclass(frozen=True)
class MiniProgram:
    inputs: tuple[InputDecl, ...]
    functions: tuple[Function, ...]
    entry_function: str = field(default="")

    def function(self, name: str) -> Function:
        for f in self.functions:
            if f.name == name:
                return f
        raise KeyError(name)

    def input_names(self) -> tuple[str, ...]:
        return tuple(d.name for d in self.inputs)

    def input_space(self) -> int:
        total = 1
        for d in self.inputs:
            total *= d.size
        return total


# ----------------------------------------------------------------- lexing

_TOKEN = re.compile(
    r"(?P<ws>\s+|//[^\n]*)|(?P<int>\d+)|(?P<name>[A-Za-z_][A-Za-z0-9_]*)"
    r"|(?P<op>:=|<=|==|!=|->|[;:,()\[\]{}?<+\-*])"
)
_KEYWORDS = {"input", "in", "fn", "call", "nop", "br", "goto", "return"}


@dataclass(frozen=True)
class _Tok:
    kind: str
    text: str
    line: int
    col: int


def _lex(text: str) -> list[_Tok]:
    toks: list[_Tok] = []
    pos, line, line_start = 0, 1, 0
    while pos < len(text):
        m = _TOKEN.match(text, pos)
        if not m:
            raise IRError(f"unexpected character {text[pos]!r}", line, pos - line_start + 1)
        kind = m.lastgroup
        chunk = m.group()
        if kind != "ws":
            if kind == "name" and chunk in _KEYWORDS:
                kind = "kw"
            toks.append(_Tok(kind, chunk, line, pos - line_start + 1))
        nl = chunk.count("\n")
        if nl:
            line += nl
            line_start = pos + chunk.rindex("\n") + 1
        pos = m.end()
    toks.append(_Tok("eof", "", line, pos - line_start + 1))
    return toks


class _Parser:
    def __init__(self, text: str):
        self.toks = _lex(text)
        self.i = 0

    def peek(self, k: int = 0) -> _Tok:
        return self.toks[min(self.i + k, len(self.toks) - 1)]

    def take(self) -> _Tok:
        tok = self.toks[self.i]
        self.i += 1
        return tok

    def fail(self, msg: str, tok: _Tok | None = None):
        tok = tok or self.peek()
        raise IRError(msg, tok.line, tok.col)

    def expect(self, text: str) -> _Tok:
        tok = self.peek()
        if tok.text != text or tok.kind in ("int", "name"):
            self.fail(f"expected {text!r}, found {tok.text or 'end of input'!r}")
        return self.take()

    def name(self) -> str:
        tok = self.peek()
        if tok.kind != "name":
            self.fail(f"expected a name, found {tok.text or 'end of input'!r}")
        return self.take().text

    def integer(self) -> int:
        neg = False
        if self.peek().text == "-":
            self.take()
            neg = True
        tok = self.peek()
        if tok.kind != "int":
            self.fail(f"expected an integer, found {tok.text or 'end of input'!r}")
        val = int(self.take().text)
        return -val if neg else val

    def program(self) -> tuple[MiniProgram, dict]:
        inputs: list[InputDecl] = []
        where: dict = {}
        while self.peek().text == "input" and self.peek().kind == "kw":
            tok = self.take()
            name = self.name()
            self.expect("in")
            self.expect("[")
            lo = self.integer()
            self.expect(",")
            hi = self.integer()
            self.expect("]")
            self.expect(";")
            if lo > hi:
                raise IRError(f"empty domain for input {name}", tok.line, tok.col)
            inputs.append(InputDecl(name, lo, hi))
            where[("input", name)] = (tok.line, tok.col)
        functions: list[Function] = []
        while self.peek().kind != "eof":
            functions.append(self.function(where))
        if not functions:
            self.fail("program has no functions")
        names = [f.name for f in functions]
        entry = "main" if "main" in names else names[0]
        return MiniProgram(tuple(inputs), tuple(functions), entry), where

    def function(self, where: dict) -> Function:
        tok = self.peek()
        if tok.text != "fn":
            self.fail(f"expected 'fn', found {tok.text!r}")
        self.take()
        name = self.name()
        where[("fn", name)] = (tok.line, tok.col)
        self.expect("(")
        params: list[str] = []
        if self.peek().text != ")":
            params.append(self.name())
            while self.peek().text == ",":
                self.take()
                params.append(self.name())
        self.expect(")")
        self.expect("{")
        blocks: list[BasicBlock] = []
        while self.peek().text != "}":
            blocks.append(self.block(name, where))
        self.expect("}")
        if not blocks:
            blocks.append(BasicBlock("bb0", (), Return(Affine(0))))
        return Function(name, tuple(params), tuple(blocks))

    def block(self, fn: str, where: dict) -> BasicBlock:
        tok = self.peek()
        label = self.name()
        self.expect(":")
        where[("block", fn, label)] = (tok.line, tok.col)
        stmts: list[Stmt] = []
        while True:
            tok = self.peek()
            if tok.kind == "kw" and tok.text in ("br", "goto", "return"):
                term = self.terminator()
                where[("term", fn, label)] = (tok.line, tok.col)
                return BasicBlock(label, tuple(stmts), term)
            where[("stmt", fn, label, len(stmts))] = (tok.line, tok.col)
            stmts.append(self.statement())

    def statement(self) -> Stmt:
        tok = self.peek()
        if tok.kind == "kw" and tok.text == "nop":
            self.take()
            self.expect(";")
            return Nop()
        if tok.kind == "kw" and tok.text == "call":
            self.take()
            func = self.name()
            self.expect("(")
            args: list[Affine] = []
            if self.peek().text != ")":
                args.append(self.expr())
                while self.peek().text == ",":
                    self.take()
                    args.append(self.expr())
            self.expect(")")
            self.expect("->")
            dst = self.name()
            self.expect(";")
            return Call(func, tuple(args), dst)
        if tok.kind == "name" and self.peek(1).text == ":=":
            dst = self.take().text
            self.take()
            expr = self.expr()
            self.expect(";")
            return Assign(dst, expr)
        self.fail(f"expected a statement or terminator, found {tok.text or 'end of input'!r}")
        raise AssertionError  # unreachable

    def terminator(self) -> Terminator:
        tok = self.take()
        if tok.text == "goto":
            target = self.name()
            self.expect(";")
            return Goto(target)
        if tok.text == "return":
            expr = self.expr()
            self.expect(";")
            return Return(expr)
        lhs = self.expr()
        op = self.peek().text
        if op not in COMPARISONS or self.peek().kind != "op":
            self.fail(f"expected a comparison, found {op!r}")
        self.take()
        rhs = self.expr()
        self.expect("?")
        then = self.name()
        self.expect(":")
        els = self.name()
        self.expect(";")
        return Branch(Cond(lhs, op, rhs), then, els)

    def expr(self) -> Affine:
        const = 0
        coeffs: dict[str, int] = {}
        sign = 1
        if self.peek().text == "-":
            self.take()
            sign = -1
        while True:
            c, var = self.atom()
            if var is None:
                const += sign * c
            else:
                coeffs[var] = coeffs.get(var, 0) + sign * c
            nxt = self.peek().text
            if nxt not in ("+", "-") or self.peek().kind != "op":
                break
            self.take()
            sign = 1 if nxt == "+" else -1
        return Affine.build(const, coeffs)

    def atom(self) -> tuple[int, str | None]:
        tok = self.peek()
        if tok.kind == "int":
            val = int(self.take().text)
            if self.peek().text == "*":
                self.take()
                return val, self.name()
            return val, None
        if tok.kind == "name":
            var = self.take().text
            if self.peek().text == "*":
                self.take()
                tok = self.peek()
                if tok.kind != "int":
                    self.fail("expected an integer coefficient")
                return int(self.take().text), var
            return 1, var
        self.fail(f"expected a number or variable, found {tok.text or 'end of input'!r}")
        raise AssertionError  # unreachable


def parse_program(text: str) -> MiniProgram:
    """Parse and validate mini-IR source."""
    prog, where = _Parser(text).program()
    validate(prog, where)
    return prog


# ------------------------------------------------------------- validation

def _stmt_reads(stmt: Stmt) -> set[str]:
    if isinstance(stmt, Assign):
        return stmt.expr.variables()
    if isinstance(stmt, Call):
        return set().union(*(a.variables() for a in stmt.args)) if stmt.args else set()
    return set()


def _term_reads(term: Terminator) -> set[str]:
    if isinstance(term, Branch):
        return term.cond.variables()
    if isinstance(term, Return):
        return term.expr.variables()
    return set()


def _stmt_def(stmt: Stmt) -> str | None:
    if isinstance(stmt, (Assign, Call)):
        return stmt.dst
    return None


def validate(prog: MiniProgram, where: Mapping | None = None) -> None:
    """Structural checks; raises IRError on the first problem found."""
    where = where or {}

    def at(*key):
        return where.get(key, (None, None))

    seen_inputs: set[str] = set()
    for d in prog.inputs:
        if d.name in seen_inputs:
            raise IRError(f"duplicate input {d.name}", *at("input", d.name))
        if d.lo > d.hi:
            raise IRError(f"empty domain for input {d.name}", *at("input", d.name))
        seen_inputs.add(d.name)
    funcs: dict[str, Function] = {}
    for f in prog.functions:
        if f.name in funcs:
            raise IRError(f"duplicate function {f.name}", *at("fn", f.name))
        funcs[f.name] = f
    if prog.entry_function not in funcs:
        raise IRError(f"entry function {prog.entry_function!r} is not defined")
    for f in prog.functions:
        if len(set(f.params)) != len(f.params):
            raise IRError(f"repeated parameter in {f.name}", *at("fn", f.name))
        for p in f.params:
            if p in seen_inputs:
                raise IRError(f"parameter {p} shadows an input", *at("fn", f.name))
        labels = [b.label for b in f.blocks]
        if len(set(labels)) != len(labels):
            raise IRError(f"duplicate block label in {f.name}", *at("fn", f.name))
        for b in f.blocks:
            if isinstance(b.term, Branch) and b.term.then == b.term.els:
                raise IRError(f"branch in {f.name}:{b.label} has identical targets", *at("term", f.name, b.label))
            for succ in b.successors():
                if succ not in labels:
                    raise IRError(f"unknown block {succ} in {f.name}", *at("term", f.name, b.label))
            for k, s in enumerate(b.stmts):
                dst = _stmt_def(s)
                if dst in seen_inputs:
                    raise IRError(f"assignment to input {dst}", *at("stmt", f.name, b.label, k))
                if isinstance(s, Call):
                    if s.func not in funcs:
                        raise IRError(f"unknown function {s.func}", *at("stmt", f.name, b.label, k))
                    if len(s.args) != len(funcs[s.func].params):
                        raise IRError(
                            f"{s.func} expects {len(funcs[s.func].params)} arguments", *at("stmt", f.name, b.label, k)
                        )
        _check_structure(f, at)
        _check_definitions(f, seen_inputs, at)


def _check_structure(f: Function, at) -> None:
    succ = {b.label: b.successors() for b in f.blocks}
    seen = {f.entry_block}
    stack = [f.entry_block]
    while stack:
        for w in succ[stack.pop()]:
            if w not in seen:
                seen.add(w)
                stack.append(w)
    for b in f.blocks:
        if b.label not in seen:
            raise IRError(f"block {b.label} in {f.name} is unreachable", *at("block", f.name, b.label))
    # Every block must be able to reach a return.
    preds: dict[str, list[str]] = {b.label: [] for b in f.blocks}
    for b in f.blocks:
        for w in b.successors():
            preds[w].append(b.label)
    done = {b.label for b in f.blocks if isinstance(b.term, Return)}
    stack = list(done)
    while stack:
        for w in preds[stack.pop()]:
            if w not in done:
                done.add(w)
                stack.append(w)
    for b in f.blocks:
        if b.label not in done:
            raise IRError(f"block {b.label} in {f.name} cannot reach a return", *at("block", f.name, b.label))


def _check_definitions(f: Function, inputs: set[str], at) -> None:
    """Must-defined analysis: every read sees a definition on every path."""
    universe = set(inputs) | set(f.params)
    for b in f.blocks:
        for s in b.stmts:
            d = _stmt_def(s)
            if d:
                universe.add(d)
    base = set(inputs) | set(f.params)
    into: dict[str, set[str]] = {b.label: set(universe) for b in f.blocks}
    into[f.entry_block] = set(base)
    preds: dict[str, list[str]] = {b.label: [] for b in f.blocks}
    for b in f.blocks:
        for w in b.successors():
            preds[w].append(b.label)

    def out_of(b: BasicBlock) -> set[str]:
        cur = set(into[b.label])
        for s in b.stmts:
            d = _stmt_def(s)
            if d:
                cur.add(d)
        return cur

    changed = True
    while changed:
        changed = False
        for b in f.blocks:
            if b.label == f.entry_block:
                continue
            new = set(universe)
            for p in preds[b.label]:
                new &= out_of(f.block(p))
            if new != into[b.label]:
                into[b.label] = new
                changed = True
    for b in f.blocks:
        cur = set(into[b.label])
        for k, s in enumerate(b.stmts):
            missing = _stmt_reads(s) - cur
            if missing:
                raise IRError(f"{sorted(missing)[0]} may be undefined in {f.name}", *at("stmt", f.name, b.label, k))
            d = _stmt_def(s)
            if d:
                cur.add(d)
        missing = _term_reads(b.term) - cur
        if missing:
            raise IRError(f"{sorted(missing)[0]} may be undefined in {f.name}", *at("term", f.name, b.label))


# ---------------------------------------------------------- pretty printing

def _stmt_text(s: Stmt) -> str:
    if isinstance(s, Assign):
        return f"{s.dst} := {s.expr};"
    if isinstance(s, Call):
        return f"call {s.func}({', '.join(map(str, s.args))}) -> {s.dst};"
    return "nop;"


def _term_text(t: Terminator) -> str:
    if isinstance(t, Branch):
        return f"br {t.cond} ? {t.then} : {t.els};"
    if isinstance(t, Goto):
        return f"goto {t.target};"
    return f"return {t.expr};"


def pretty(prog: MiniProgram) -> str:
    lines: list[str] = [f"input {d.name} in [{d.lo}, {d.hi}];" for d in prog.inputs]
    for f in prog.functions:
        if lines:
            lines.append("")
        lines.append(f"fn {f.name}({', '.join(f.params)}) {{")
        for b in f.blocks:
            lines.append(f"  {b.label}:")
            lines.extend(f"    {_stmt_text(s)}" for s in b.stmts)
            lines.append(f"    {_term_text(b.term)}")
        lines.append("}")
    return "\n".join(lines) + "\n"


def iter_branches(prog: MiniProgram) -> Iterator[tuple[Function, BasicBlock]]:
    for f in prog.functions:
        for b in f.blocks:
            if isinstance(b.term, Branch):
                yield f, b
