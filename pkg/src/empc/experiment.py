"""Run grids of (program, strategy, repeat) cells and aggregate their metrics."""

from __future__ import annotations

import csv
import io
import json
import statistics
from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict, dataclass, field
from pathlib import Path
from typing import Any

from .ir import parse_program
from .searcher import STRATEGIES, EngineConfig, engine_run


class ExperimentError(ValueError):
    pass


@dataclass
class ExperimentSpec:
    programs: list[str]
    strategies: list[str]
    budget: int = 100_000
    repeats: int = 1
    seed: int = 0
    out_dir: str | None = None
    workers: int = 1
    config: EngineConfig = field(default_factory=EngineConfig)

    def validate(self) -> None:
        if not self.strategies:
            raise ExperimentError("strategy list is empty")
        bad = [s for s in self.strategies if s not in STRATEGIES]
        if bad:
            raise ExperimentError(f"unknown strategies: {', '.join(bad)}")
        if self.repeats < 1:
            raise ExperimentError("repeats must be at least 1")
        if self.budget < 1:
            raise ExperimentError("budget must be positive")
        if not self.programs:
            raise ExperimentError("no programs given")
        missing = [p for p in self.programs if not Path(p).is_file()]
        if missing:
            raise ExperimentError(f"missing program files: {', '.join(missing)}")


@dataclass
class Report:
    rows: list[dict[str, Any]]
    runs: list[dict[str, Any]]
    errors: list[str]

    def to_json(self) -> dict[str, Any]:
        return {"rows": self.rows, "errors": self.errors}

    def to_csv(self) -> str:
        buf = io.StringIO()
        if self.rows:
            w = csv.DictWriter(buf, fieldnames=list(self.rows[0]), lineterminator="\n")
            w.writeheader()
            w.writerows(self.rows)
        return buf.getvalue()


def _mean_std(xs: list[float]) -> tuple[float, float]:
    if not xs:
        return 0.0, 0.0
    return statistics.fmean(xs), (statistics.stdev(xs) if len(xs) > 1 else 0.0)


def aggregate(runs: list[dict[str, Any]]) -> list[dict[str, Any]]:
    """Mean and sample standard deviation per (program, strategy), from raw run records."""
    cells: dict[tuple[str, str], list[dict[str, Any]]] = {}
    for r in runs:
        cells.setdefault((r["program"], r["strategy"]), []).append(r["metrics"])
    rows = []
    for (prog, strat), ms in sorted(cells.items()):
        row: dict[str, Any] = {"program": prog, "strategy": strat, "runs": len(ms)}
        for key in ("coverage", "completed_paths", "peak_live_states"):
            mean, std = _mean_std([float(m[key]) for m in ms])
            row[f"{key}_mean"] = round(mean, 9)
            row[f"{key}_std"] = round(std, 9)
        rows.append(row)
    return rows


def _cell(args: tuple[str, str, int, int, dict]) -> dict[str, Any]:
    path, strategy, repeat, seed, cfg = args
    name = Path(path).stem
    try:
        p = parse_program(Path(path).read_text())
        config = EngineConfig(**{k: v for k, v in cfg.items() if k != "empc"})
        config.empc = type(config.empc)(**cfg["empc"])
        m = engine_run(p, strategy, config.budget, seed, config)
        return {
            "program": name,
            "strategy": strategy,
            "repeat": repeat,
            "seed": seed,
            "metrics": m.to_json(),
            "csv": m.to_csv(),
        }
    except Exception as e:  # noqa: BLE001 - reported per cell
        return {"program": name, "strategy": strategy, "repeat": repeat, "seed": seed, "error": f"{type(e).__name__}: {e}"}


def run_experiment(spec: ExperimentSpec) -> Report:
    """Every cell runs with seed ``spec.seed + repeat``; raw metrics land under ``out_dir/runs``."""
    spec.validate()
    cfg = asdict(spec.config)
    cfg["budget"] = spec.budget
    tasks = [
        (prog, strat, i, spec.seed + i, cfg)
        for prog in spec.programs
        for strat in spec.strategies
        for i in range(spec.repeats)
    ]
    if spec.workers > 1:
        with ProcessPoolExecutor(spec.workers) as pool:
            results = list(pool.map(_cell, tasks))
    else:
        results = [_cell(t) for t in tasks]
    errors = [f"{r['program']}/{r['strategy']}/{r['repeat']}: {r['error']}" for r in results if "error" in r]
    runs = [r for r in results if "error" not in r]
    errors += [
        f"{r['program']}/{r['strategy']}/{r['repeat']}: {r['metrics']['error_states']} states hit an engine error"
        for r in runs
        if r["metrics"]["error_states"]
    ]
    report = Report(aggregate(runs), runs, errors)
    if spec.out_dir is not None:
        write_report(report, Path(spec.out_dir))
    return report


def write_report(report: Report, out: Path) -> None:
    out.mkdir(parents=True, exist_ok=True)
    runs_dir = out / "runs"
    runs_dir.mkdir(exist_ok=True)
    for r in report.runs:
        stem = f"{r['program']}__{r['strategy']}__{r['repeat']}"
        record = {k: v for k, v in r.items() if k != "csv"}
        (runs_dir / f"{stem}.json").write_text(json.dumps(record, sort_keys=True, indent=1) + "\n")
        (runs_dir / f"{stem}.csv").write_text(r["csv"])
    (out / "report.json").write_text(json.dumps(report.to_json(), sort_keys=True, indent=1) + "\n")
    (out / "report.csv").write_text(report.to_csv())


def load_runs(out: Path) -> list[dict[str, Any]]:
    return [json.loads(p.read_text()) for p in sorted((Path(out) / "runs").glob("*.json"))]
