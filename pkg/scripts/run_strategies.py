"""Generate a program corpus and compare search strategies on it.

    python3 scripts/run_strategies.py --out results --repeats 3
"""

import argparse
import tempfile
from pathlib import Path

from empc.corpus import generate_corpus
from empc.experiment import ExperimentSpec, run_experiment
from empc.searcher import STRATEGIES


def main() -> None:
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--shapes", nargs="+", default=["diamonds", "chain", "loops", "multi-caller"])
    ap.add_argument("--count", type=int, default=5, help="programs per shape")
    ap.add_argument("--repeats", type=int, default=3)
    ap.add_argument("--seed", type=int, default=0)
    ap.add_argument("--budget", type=int, default=100_000)
    ap.add_argument("--workers", type=int, default=1)
    ap.add_argument("--out", default="results")
    args = ap.parse_args()

    with tempfile.TemporaryDirectory() as tmp:
        for shape in args.shapes:
            generate_corpus(args.seed, args.count, shape, out_dir=tmp)
        programs = sorted(str(p) for p in Path(tmp).glob("*.mir"))
        spec = ExperimentSpec(
            programs, list(STRATEGIES), args.budget, args.repeats, args.seed, args.out, args.workers
        )
        report = run_experiment(spec)

    for row in report.rows:
        print(
            f"{row['program']:<18} {row['strategy']:<13} "
            f"coverage={row['coverage_mean']:.3f} paths={row['completed_paths_mean']:.1f}"
        )
    for err in report.errors:
        print("error:", err)


if __name__ == "__main__":
    main()
