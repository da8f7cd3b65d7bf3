"""Command-line front end.

Exit codes: 0 success, 1 usage error, 2 invalid input, 3 engine error.
"""

from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path
from typing import Any, Sequence

from .corpus import SHAPES, ShapeParams, generate_corpus
from .dependence import analyze
from .enumeration import DEFAULT_CAP, enumerate_mpcs
from .experiment import ExperimentError, ExperimentSpec, run_experiment
from .graph import GraphError, load_graph
from .icfg import ICfg, build_icfg, infer_return_sites, lower
from .interp import EngineError, FeasibilityUnknown
from .ir import IRError, parse_program
from .mpc import complete_cover, compute_mpc
from .searcher import STRATEGIES, EmpcConfig, EngineConfig, engine_run
from .transform import decompose

EXIT_OK, EXIT_USAGE, EXIT_INVALID, EXIT_ENGINE = 0, 1, 2, 3


class _Parser(argparse.ArgumentParser):
    def error(self, message: str):
        self.print_usage(sys.stderr)
        self.exit(EXIT_USAGE, f"{self.prog}: error: {message}\n")


class _Invalid(Exception):
    pass


def _emit(data: Any, out: str | None) -> None:
    text = json.dumps(data, sort_keys=True, indent=1) + "\n"
    if out:
        Path(out).parent.mkdir(parents=True, exist_ok=True)
        Path(out).write_text(text)
    else:
        sys.stdout.write(text)


def _read(path: str) -> str:
    try:
        return Path(path).read_text()
    except OSError as e:
        raise _Invalid(f"cannot read {path}: {e.strerror}") from e


def cmd_mpc_compute(a: argparse.Namespace) -> int:
    g = load_graph(_read(a.graph))
    cover = compute_mpc(g, seed=a.seed)
    if a.complete:
        cover = complete_cover(cover, g)
    _emit(cover.to_json(), a.out)
    return EXIT_OK


def cmd_mpc_enumerate(a: argparse.Namespace) -> int:
    g = load_graph(_read(a.graph))
    cap = None if a.cap <= 0 else a.cap
    _emit(enumerate_mpcs(g, cap, seed=a.seed).to_json(), a.out)
    return EXIT_OK


def cmd_icfg_transform(a: argparse.Namespace) -> int:
    if (a.input is None) == (a.program is None):
        raise _Invalid("give exactly one of --in and --program")
    if a.program:
        low = lower(parse_program(_read(a.program)))
        d = decompose(low.icfg, low.return_site)
    else:
        try:
            icfg = ICfg.from_json(json.loads(_read(a.input)))
        except (json.JSONDecodeError, KeyError, TypeError) as e:
            raise _Invalid(f"bad iCFG JSON: {e}") from e
        d = decompose(icfg, infer_return_sites(icfg))
    _emit(d.to_json(), a.out)
    return EXIT_OK


def cmd_icfg_build(a: argparse.Namespace) -> int:
    _emit(build_icfg(parse_program(_read(a.program))).to_json(), a.out)
    return EXIT_OK


def cmd_dep_analyze(a: argparse.Namespace) -> int:
    _emit(analyze(parse_program(_read(a.program))).to_json(), a.out)
    return EXIT_OK


def cmd_sym_run(a: argparse.Namespace) -> int:
    p = parse_program(_read(a.program))
    cfg = EngineConfig(empc=EmpcConfig(handle_infeasible=not a.no_handler, cap=a.cap))
    m = engine_run(p, a.strategy, a.budget, a.seed, cfg)
    _emit(m.to_json(), a.out)
    if a.csv:
        Path(a.csv).write_text(m.to_csv())
    if any(w.startswith("feasibility unknown") for w in m.warnings):
        print(m.warnings[0], file=sys.stderr)
    if m.error_states:
        print(f"engine error: {m.error_states} states failed, first: {m.warnings[0]}", file=sys.stderr)
        return EXIT_ENGINE
    return EXIT_OK


def cmd_corpus_generate(a: argparse.Namespace) -> int:
    params = ShapeParams(
        branches=a.branches, loops=a.loops, callers=a.callers, max_blocks=a.max_blocks, domain=a.domain
    )
    out = a.out or "corpus"
    progs = generate_corpus(a.seed, a.count, a.shape, params, out)
    for name, _ in progs:
        print(Path(out) / f"{name}.mir")
    return EXIT_OK


def cmd_experiment_run(a: argparse.Namespace) -> int:
    spec = ExperimentSpec(
        programs=a.programs,
        strategies=a.strategies,
        budget=a.budget,
        repeats=a.repeats,
        seed=a.seed,
        out_dir=a.out or "results",
        workers=a.workers,
    )
    report = run_experiment(spec)
    for row in report.rows:
        print(
            f"{row['program']:<20} {row['strategy']:<13} coverage={row['coverage_mean']:.3f} "
            f"paths={row['completed_paths_mean']:.1f} peak_states={row['peak_live_states_mean']:.1f}"
        )
    for e in report.errors:
        print(f"error: {e}", file=sys.stderr)
    return EXIT_ENGINE if report.errors else EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--seed", type=int, default=0, help="random seed (default 0)")
    common.add_argument("--out", default=None, help="output file or directory")
    common.add_argument("--workers", type=int, default=1, help="parallel worker processes")

    parser = _Parser(prog="empc", description="Minimum-path-cover guided symbolic execution toolkit.")
    top = parser.add_subparsers(dest="group", required=True, parser_class=_Parser)

    mpc = top.add_parser("mpc", help="minimum path covers of a DAG").add_subparsers(dest="cmd", required=True)
    p = mpc.add_parser("compute", parents=[common], help="one minimum path cover")
    p.add_argument("--graph", required=True, help="graph JSON or DOT file")
    p.add_argument("--complete", action="store_true", help="stretch every path to a source and a sink")
    p.set_defaults(func=cmd_mpc_compute)
    p = mpc.add_parser("enumerate", parents=[common], help="distinct minimum path covers")
    p.add_argument("--graph", required=True)
    p.add_argument("--cap", type=int, default=DEFAULT_CAP, help="maximum covers (<=0 disables the cap)")
    p.set_defaults(func=cmd_mpc_enumerate)

    icfg = top.add_parser("icfg", help="interprocedural CFG").add_subparsers(dest="cmd", required=True)
    p = icfg.add_parser("transform", parents=[common], help="decompose into acyclic regions")
    p.add_argument("--in", dest="input", default=None, help="iCFG JSON file")
    p.add_argument("--program", default=None, help="mini-IR source instead of iCFG JSON")
    p.set_defaults(func=cmd_icfg_transform)
    p = icfg.add_parser("build", parents=[common], help="iCFG JSON of a program")
    p.add_argument("--program", required=True)
    p.set_defaults(func=cmd_icfg_build)

    dep = top.add_parser("dep", help="branch dependences").add_subparsers(dest="cmd", required=True)
    p = dep.add_parser("analyze", parents=[common])
    p.add_argument("--program", required=True)
    p.set_defaults(func=cmd_dep_analyze)

    sym = top.add_parser("sym", help="symbolic execution").add_subparsers(dest="cmd", required=True)
    p = sym.add_parser("run", parents=[common])
    p.add_argument("--program", required=True)
    p.add_argument("--strategy", choices=STRATEGIES, default="empc")
    p.add_argument("--budget", type=int, default=100_000, help="step budget")
    p.add_argument("--cap", type=int, default=DEFAULT_CAP, help="covers kept per region")
    p.add_argument("--no-handler", action="store_true", help="disable infeasible-path handling")
    p.add_argument("--csv", default=None, help="also write the step series as CSV")
    p.set_defaults(func=cmd_sym_run)

    corpus = top.add_parser("corpus", help="synthetic programs").add_subparsers(dest="cmd", required=True)
    p = corpus.add_parser("generate", parents=[common])
    p.add_argument("--shape", choices=SHAPES, default="diamonds")
    p.add_argument("--count", type=int, default=10)
    p.add_argument("--branches", type=int, default=3)
    p.add_argument("--loops", type=int, default=1)
    p.add_argument("--callers", type=int, default=2)
    p.add_argument("--max-blocks", type=int, default=30)
    p.add_argument("--domain", type=int, default=3)
    p.set_defaults(func=cmd_corpus_generate)

    exp = top.add_parser("experiment", help="strategy comparison grid").add_subparsers(dest="cmd", required=True)
    p = exp.add_parser("run", parents=[common])
    p.add_argument("--programs", nargs="+", required=True)
    p.add_argument("--strategies", nargs="*", default=["empc", "bfs"])
    p.add_argument("--budget", type=int, default=100_000)
    p.add_argument("--repeats", type=int, default=1)
    p.set_defaults(func=cmd_experiment_run)
    return parser


def main(argv: Sequence[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except (_Invalid, IRError, GraphError, ExperimentError, FeasibilityUnknown) as e:
        print(f"error: {e}", file=sys.stderr)
        return EXIT_INVALID
    except ValueError as e:
        print(f"error: {e}", file=sys.stderr)
        return EXIT_INVALID
    except EngineError as e:
        print(f"engine error: {e}", file=sys.stderr)
        return EXIT_ENGINE


if __name__ == "__main__":
    sys.exit(main())
