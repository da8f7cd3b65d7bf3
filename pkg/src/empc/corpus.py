"""Synthetic mini-IR programs with controlled branching structure."""

from __future__ import annotations

import random
from dataclasses import dataclass, field
from importlib import resources
from pathlib import Path

SHAPES = ("fig1", "chain", "diamonds", "loops", "multi-caller", "mixed")


def fig1_source() -> str:
    return resources.files("empc.programs").joinpath("fig1.mir").read_text()


@dataclass
class ShapeParams:
    branches: int = 3
    loops: int = 1
    callers: int = 2
    max_blocks: int = 30
    domain: int = 3  # inputs range over [0, domain]
    inputs: int = 4


@dataclass
class _Fn:
    name: str
    params: list[str]
    blocks: list[tuple[str, list[str], str]] = field(default_factory=list)
    cur_label: str = "bb0"
    cur_stmts: list[str] = field(default_factory=list)
    next_id: int = 1

    def new_label(self) -> str:
        label = f"bb{self.next_id}"
        self.next_id += 1
        return label

    def close(self, term: str, next_label: str | None) -> None:
        self.blocks.append((self.cur_label, self.cur_stmts, term))
        if next_label is not None:
            self.cur_label, self.cur_stmts = next_label, []

    def block_count(self) -> int:
        return len(self.blocks) + 1

    def render(self) -> str:
        lines = [f"fn {self.name}({', '.join(self.params)}) {{"]
        for label, stmts, term in self.blocks:
            lines.append(f"  {label}:")
            lines.extend(f"    {s};" for s in stmts)
            lines.append(f"    {term};")
        lines.append("}")
        return "\n".join(lines)


class _Gen:
    def __init__(self, rng: random.Random, params: ShapeParams):
        self.rng = rng
        self.p = params
        self.inputs = [f"in{i}" for i in range(params.inputs)]
        self.next_input = 0
        self.locals = ["x", "y"]

    def fresh_input(self) -> str:
        name = self.inputs[self.next_input % len(self.inputs)]
        self.next_input += 1
        return name

    def input_cond(self) -> str:
        k = self.rng.randint(1, self.p.domain)
        return f"{self.fresh_input()} < {k}"

    def local_cond(self) -> str:
        v = self.rng.choice(self.locals)
        op = self.rng.choice(["<", "==", "!=", "<="])
        return f"{v} {op} {self.rng.randint(0, 3)}"

    def assign(self, fn: _Fn) -> None:
        v = self.rng.choice(self.locals)
        src = self.rng.choice(self.locals + self.inputs[:2])
        k = self.rng.randint(-1, 2)
        fn.cur_stmts.append(f"{v} := {src} {'-' if k < 0 else '+'} {abs(k)}")

    def diamond(self, fn: _Fn, cond: str, nested: bool = False) -> None:
        t, e, m = fn.new_label(), fn.new_label(), fn.new_label()
        fn.close(f"br {cond} ? {t} : {e}", t)
        if nested:
            self.diamond(fn, self.input_cond())
        self.assign(fn)
        fn.close(f"goto {m}", e)
        self.assign(fn)
        fn.close(f"goto {m}", m)

    def if_then(self, fn: _Fn, cond: str) -> None:
        t, m = fn.new_label(), fn.new_label()
        fn.close(f"br {cond} ? {t} : {m}", t)
        self.assign(fn)
        fn.close(f"goto {m}", m)

    def loop(self, fn: _Fn, bound: str) -> None:
        h, b, x = fn.new_label(), fn.new_label(), fn.new_label()
        fn.cur_stmts.append("i := 0")
        fn.close(f"goto {h}", h)
        fn.close(f"br i < {bound} ? {b} : {x}", b)
        self.diamond(fn, self.input_cond())
        fn.cur_stmts.append("i := i + 1")
        fn.close(f"goto {h}", x)

    def helper(self, name: str) -> _Fn:
        fn = _Fn(name, ["p"])
        fn.cur_stmts.append("r := p")
        t, e, m = fn.new_label(), fn.new_label(), fn.new_label()
        fn.close(f"br p < {self.rng.randint(1, 2)} ? {t} : {e}", t)
        fn.cur_stmts.append("r := p + 1")
        fn.close(f"goto {m}", e)
        fn.cur_stmts.append("r := p - 1")
        fn.close(f"goto {m}", m)
        fn.close("return r", None)
        return fn

    def program(self, fns: list[_Fn]) -> str:
        decls = [f"input {n} in [0, {self.p.domain}];" for n in self.inputs]
        return "\n".join(decls) + "\n\n" + "\n\n".join(f.render() for f in fns) + "\n"


def generate_program(shape: str, rng: random.Random, params: ShapeParams | None = None) -> str:
    """Mini-IR source of one program of the given shape."""
    p = params or ShapeParams()
    if shape == "fig1":
        return fig1_source()
    if shape not in SHAPES:
        raise ValueError(f"unknown shape {shape!r}; expected one of {', '.join(SHAPES)}")
    gen = _Gen(rng, p)
    main = _Fn("main", [])
    main.cur_stmts += ["x := 0", "y := 0"]
    fns: list[_Fn] = []
    room = lambda need: main.block_count() + need <= p.max_blocks  # noqa: E731
    if shape == "chain":
        for _ in range(p.branches):
            if room(2):
                gen.if_then(main, gen.input_cond())
            gen.assign(main)
    elif shape == "diamonds":
        for k in range(max(p.branches, 2)):
            if room(6):
                gen.diamond(main, gen.input_cond(), nested=(k == 0 and rng.random() < 0.5))
    elif shape == "loops":
        for _ in range(max(p.loops, 1)):
            if room(7):
                bound = rng.choice(["2", gen.fresh_input()])
                gen.loop(main, bound)
        if room(3):
            gen.diamond(main, gen.input_cond())
    elif shape == "multi-caller":
        helper = gen.helper("h")
        fns.append(helper)
        for k in range(max(p.callers, 2)):
            arg = gen.fresh_input()
            main.cur_stmts.append(f"call h({arg}) -> y")
            if room(3):
                gen.diamond(main, gen.input_cond() if k % 2 == 0 else gen.local_cond())
    else:  # mixed
        if rng.random() < 0.5:
            fns.append(gen.helper("h"))
        while room(7):
            pick = rng.random()
            if pick < 0.35:
                gen.diamond(main, rng.choice([gen.input_cond(), gen.local_cond()]), nested=rng.random() < 0.2)
            elif pick < 0.55:
                gen.if_then(main, rng.choice([gen.input_cond(), gen.local_cond()]))
            elif pick < 0.7 and fns:
                main.cur_stmts.append(f"call h({rng.choice(gen.locals + gen.inputs[:1])}) -> y")
            elif pick < 0.8:
                gen.loop(main, "2")
            else:
                gen.assign(main)
            if rng.random() < 0.15:
                break
    main.close("return x + y", None)
    return gen.program([main] + fns)


def generate_corpus(
    seed: int,
    count: int,
    shape: str = "diamonds",
    params: ShapeParams | None = None,
    out_dir: str | Path | None = None,
) -> list[tuple[str, str]]:
    """``count`` programs named ``<shape>_<i>``; written as ``.mir`` files when ``out_dir`` is given."""
    if count < 1:
        raise ValueError("count must be at least 1")
    rng = random.Random(seed)
    progs = [(f"{shape}_{i:03d}", generate_program(shape, rng, params)) for i in range(count)]
    if out_dir is not None:
        out = Path(out_dir)
        out.mkdir(parents=True, exist_ok=True)
        for name, text in progs:
            (out / f"{name}.mir").write_text(text)
    return progs
