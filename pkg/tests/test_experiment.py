import json
import statistics

import pytest

from empc.corpus import fig1_source
from empc.experiment import ExperimentError, ExperimentSpec, aggregate, load_runs, run_experiment


@pytest.fixture
def fig1_file(tmp_path):
    path = tmp_path / "fig1.mir"
    path.write_text(fig1_source())
    return path


def _files(root):
    return {p.relative_to(root): p.read_bytes() for p in sorted(root.rglob("*")) if p.is_file()}


def test_fig1_grid(fig1_file):
    report = run_experiment(ExperimentSpec([str(fig1_file)], ["empc", "bfs"]))
    paths = {r["strategy"]: r["completed_paths_mean"] for r in report.rows}
    assert paths == {"empc": 3.0, "bfs": 6.0} and not report.errors


@pytest.mark.parametrize(
    "kwargs",
    [
        {"strategies": []},
        {"strategies": ["nurs"]},
        {"repeats": 0},
        {"budget": 0},
        {"programs": []},
        {"programs": ["/nonexistent/p.mir"]},
    ],
)
def test_invalid_specs(fig1_file, kwargs):
    base = {"programs": [str(fig1_file)], "strategies": ["bfs"]}
    base.update(kwargs)
    with pytest.raises(ExperimentError):
        run_experiment(ExperimentSpec(**base))


def test_repeats_are_byte_identical(fig1_file, tmp_path):
    for out in ("a", "b"):
        spec = ExperimentSpec([str(fig1_file)], ["random-path", "empc"], repeats=5, seed=11, out_dir=str(tmp_path / out))
        run_experiment(spec)
    a, b = _files(tmp_path / "a"), _files(tmp_path / "b")
    assert a == b and len(a) == 2 * 5 * 2 + 2


def test_derived_seeds(fig1_file):
    report = run_experiment(ExperimentSpec([str(fig1_file)], ["random-state"], repeats=3, seed=4))
    assert [r["seed"] for r in report.runs] == [4, 5, 6]


def test_parallel_matches_serial(fig1_file, tmp_path):
    for out, workers in (("s", 1), ("p", 2)):
        run_experiment(ExperimentSpec([str(fig1_file)], ["random-path", "bfs"], repeats=3, out_dir=str(tmp_path / out), workers=workers))
    assert _files(tmp_path / "s") == _files(tmp_path / "p")


def test_aggregates_recompute_from_raw_files(fig1_file, tmp_path):
    out = tmp_path / "r"
    report = run_experiment(ExperimentSpec([str(fig1_file)], ["random-path", "random-state"], repeats=4, out_dir=str(out)))
    raw = load_runs(out)
    assert aggregate(raw) == report.rows == json.loads((out / "report.json").read_text())["rows"]
    # independent recomputation of one cell
    cov = [r["metrics"]["peak_live_states"] for r in raw if r["strategy"] == "random-path"]
    row = next(r for r in report.rows if r["strategy"] == "random-path")
    assert row["peak_live_states_mean"] == pytest.approx(statistics.fmean(cov))
    assert row["peak_live_states_std"] == pytest.approx(statistics.stdev(cov))


def test_report_csv(fig1_file):
    report = run_experiment(ExperimentSpec([str(fig1_file)], ["bfs"]))
    header, line = report.to_csv().splitlines()
    assert header.startswith("program,strategy,runs,coverage_mean")
    assert line.startswith("fig1,bfs,1,1.0")
