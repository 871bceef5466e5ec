"""
Tests for suite execution, aggregation and result emission.
"""

import io
import json
import os
import sys
from unittest.mock import patch

import pytest

sys.path.insert(0, os.path.join(os.path.dirname(__file__), "..", "src"))

from models import RunConfig, RunRecord
from runner import (
    ResultsError,
    SuiteReport,
    SuiteRunner,
    Task,
    TaskResult,
    aggregate,
    export_results,
    fit_summary,
    noise_curves,
    print_summary,
    read_records,
    render_csv,
    strip_timing,
)
from trainer import derive_seed


def _record(benchmark="Nguyen-1", r2=None, **overrides) -> RunRecord:
    values = {
        "task": 0,
        "command": "benchmark",
        "benchmark": benchmark,
        "group": benchmark.split("-", 1)[0],
        "repeat": 0,
        "seed": 0,
        "r2": r2,
    }
    values.update(overrides)
    return RunRecord(**values)


@pytest.fixture
def bench_config(fast_hyper):
    """Two Nguyen benchmarks, two repeats each."""
    return RunConfig(
        command="benchmark",
        benchmarks=["Nguyen-1", "Nguyen-8"],
        repeats=2,
        hyper=fast_hyper,
    )


class TestBuildTasks:
    """Tests for task expansion."""

    def test_benchmark_order(self, bench_config):
        """Benchmarks outer, repeats inner, seeds derived from the task index."""
        tasks = SuiteRunner(bench_config, master_seed=5).build_tasks()
        assert [(t.benchmark, t.repeat) for t in tasks] == [
            ("Nguyen-1", 0),
            ("Nguyen-1", 1),
            ("Nguyen-8", 0),
            ("Nguyen-8", 1),
        ]
        assert [t.index for t in tasks] == [0, 1, 2, 3]
        assert [t.seed for t in tasks] == [derive_seed(5, i) for i in range(4)]

    def test_noise_sweep_levels_outermost(self, fast_hyper):
        """Each noise level repeats the whole benchmark x repeat grid."""
        config = RunConfig(
            command="noise-sweep",
            benchmarks=["Nguyen-1"],
            repeats=2,
            noise_levels=[0.0, 0.05],
            hyper=fast_hyper,
        )
        tasks = SuiteRunner(config).build_tasks()
        assert [t.noise_level for t in tasks] == [0.0, 0.0, 0.05, 0.05]
        assert len({t.seed for t in tasks}) == 4

    def test_fit_uses_seeds_directly(self, identity_dataset, fast_hyper):
        """fit runs one task per listed seed."""
        config = RunConfig(command="fit", data_path="identity.csv", seeds=[3, 9], hyper=fast_hyper)
        tasks = SuiteRunner(config, dataset=identity_dataset).build_tasks()
        assert [(t.benchmark, t.seed) for t in tasks] == [("identity", 3), ("identity", 9)]


class TestSuiteRun:
    """End-to-end suite runs on small budgets."""

    def test_benchmark_records(self, bench_config):
        """Every task yields a scored row in task order."""
        report = SuiteRunner(bench_config, master_seed=0).run()
        assert [r.task for r in report.records] == [0, 1, 2, 3]
        for record in report.records:
            assert record.error is None
            assert record.ned is not None and 0.0 <= record.ned <= 1.0
            assert record.node_count >= 1
            assert record.expression
        assert [row["benchmark"] for row in report.by_benchmark] == ["Nguyen-1", "Nguyen-8"]
        assert report.by_group[0]["runs"] == 4

    def test_parallelism_does_not_change_results(self, bench_config):
        """Apart from timing, output is identical for 1 and 4 workers."""
        serial = SuiteRunner(bench_config, master_seed=1).run()
        parallel = SuiteRunner(bench_config.model_copy(update={"parallelism": 4}), master_seed=1).run()
        assert strip_timing(serial.to_dict()) == strip_timing(parallel.to_dict())
        assert render_csv(serial.records) == render_csv(parallel.records)

    def test_master_seed_changes_results(self, bench_config):
        """Different master seeds give different task seeds."""
        a = SuiteRunner(bench_config, master_seed=0).run()
        b = SuiteRunner(bench_config, master_seed=1).run()
        assert [r.seed for r in a.records] != [r.seed for r in b.records]

    def test_extrapolation_column(self, fast_hyper):
        """An extrapolation range adds a scored column."""
        config = RunConfig(
            command="benchmark",
            benchmarks=["Nguyen-1"],
            repeats=1,
            hyper=fast_hyper,
            extrapolate=(-2.0, 2.0),
        )
        record = SuiteRunner(config).run().records[0]
        assert record.extrapolation_r2 is not None

    def test_noise_sweep(self, fast_hyper):
        """A sweep produces one curve per benchmark."""
        config = RunConfig(
            command="noise-sweep",
            benchmarks=["Nguyen-1"],
            repeats=1,
            noise_levels=[0.0, 0.1],
            hyper=fast_hyper,
        )
        report = SuiteRunner(config).run()
        assert [r.noise_level for r in report.records] == [0.0, 0.1]
        curve = report.noise_curves[0]
        assert curve["benchmark"] == "Nguyen-1"
        assert curve["levels"] == [0.0, 0.1]
        assert curve["max_rise"] >= 0.0

    def test_fit_dataset(self, identity_dataset, fast_hyper):
        """Fitting a dataset reports training R² and a fit summary."""
        config = RunConfig(command="fit", data_path="identity.csv", seeds=[0, 1], hyper=fast_hyper)
        report = SuiteRunner(config, dataset=identity_dataset).run()
        assert len(report.records) == 2
        assert all(r.r2 == r.train_r2 for r in report.records)
        assert report.fit_summary["runs"] == 2
        assert "fit" in report.to_dict()["aggregates"]

    def test_failed_task_becomes_error_row(self, bench_config):
        """An exception in one fit is recorded, not raised."""
        with patch("runner.alternating_fit", side_effect=RuntimeError("boom")):
            report = SuiteRunner(bench_config).run()
        assert len(report.records) == 4
        assert all(r.error == "RuntimeError: boom" for r in report.records)
        assert report.by_benchmark[0]["errors"] == 2
        assert report.by_benchmark[0]["mean_r2"] is None
        assert report.any_converged is False


class TestAggregation:
    """Tests for aggregate, fit_summary and noise_curves."""

    def test_aggregate(self):
        """Means skip missing R² and rates skip missing flags."""
        records = [
            _record(r2=0.9, recovered=True, converged=True, node_count=3),
            _record(r2=1.0, recovered=False, converged=True, node_count=5),
            _record(error="RuntimeError: boom"),
            _record("Korns-1", r2=0.5, recovered=False),
        ]
        rows = {row["benchmark"]: row for row in aggregate(records, "benchmark")}
        nguyen = rows["Nguyen-1"]
        assert nguyen["runs"] == 3
        assert nguyen["errors"] == 1
        assert nguyen["scored_runs"] == 2
        assert nguyen["mean_r2"] == pytest.approx(0.95)
        assert nguyen["mean_node_count"] == 4.0
        assert nguyen["auto_recovery_rate"] == 0.5
        assert nguyen["converged_rate"] == 1.0
        assert rows["Korns-1"]["std_r2"] == 0.0

    def test_aggregate_by_group(self):
        """Groups come from the benchmark name prefix."""
        records = [_record("Nguyen-1", r2=0.5), _record("Nguyen-2", r2=0.7)]
        rows = aggregate(records, "group")
        assert len(rows) == 1
        assert rows[0]["group"] == "Nguyen"
        assert rows[0]["mean_r2"] == pytest.approx(0.6)

    def test_fit_summary(self):
        """Rows without a report still count as runs."""
        results = [
            TaskResult(Task(0, "identity", 0, 0), _record(r2=0.8, converged=False, node_count=3)),
            TaskResult(Task(1, "identity", 1, 1), _record(r2=1.0, converged=True, node_count=1)),
        ]
        summary = fit_summary(results)
        assert summary["runs"] == 2
        assert summary["mean_r2"] == pytest.approx(0.9)
        assert summary["converged_rate"] == 0.5
        assert summary["mean_node_count"] == 2.0
        assert summary["mean_wall_time_s"] is None

    def test_noise_curves(self):
        """Per-level means with a non-increasing trend."""
        records = [
            _record(r2=0.9, noise_level=0.0),
            _record(r2=0.95, noise_level=0.05),
            _record(r2=0.7, noise_level=0.1),
        ]
        curve = noise_curves(records)[0]
        assert curve["levels"] == [0.0, 0.05, 0.1]
        assert curve["mean_r2"] == [0.9, 0.95, 0.7]
        assert curve["isotonic_r2"] == pytest.approx([0.925, 0.925, 0.7])
        assert curve["max_rise"] == pytest.approx(0.05)


class TestEmission:
    """Tests for export_results, read_records and print_summary."""

    def test_csv_file_reads_back(self, tmp_path):
        """Emitted CSV parses back into identical records."""
        records = [
            _record(r2=0.123456789012345678, mse=1e-12, recovered=True, expression="+ x1 x1"),
            _record("Korns-1", task=1, error="RuntimeError: boom"),
        ]
        report = SuiteReport("benchmark", [TaskResult(Task(i, r.benchmark, 0, 0), r) for i, r in enumerate(records)])
        path = tmp_path / "out" / "results.csv"
        export_results(report, str(path), "csv")
        assert read_records(path) == records
        assert path.read_text().splitlines()[0] == ",".join(RunRecord.columns())

    def test_json_file_is_not_records(self, tmp_path):
        """A JSON document read as CSV is rejected with ResultsError."""
        path = tmp_path / "results.csv"
        path.write_text('{\n  "command": "benchmark"\n}\n')
        with pytest.raises(ResultsError, match="header"):
            read_records(path)

    def test_ragged_row_is_rejected(self, tmp_path):
        """A row with an extra cell names the offending line."""
        path = tmp_path / "results.csv"
        export_results(
            SuiteReport("benchmark", [TaskResult(Task(0, "Nguyen-1", 0, 0), _record(r2=0.5))]),
            str(path),
            "csv",
        )
        path.write_text(path.read_text().rstrip("\n") + ",extra\n")
        with pytest.raises(ResultsError, match=":2:"):
            read_records(path)

    def test_invalid_cell_is_rejected(self, tmp_path):
        """Cells RunRecord refuses surface as ResultsError."""
        path = tmp_path / "results.csv"
        columns = RunRecord.columns()
        cells = ["" for _ in columns]
        cells[columns.index("task")] = "-1"
        path.write_text(",".join(columns) + "\n" + ",".join(cells) + "\n")
        with pytest.raises(ResultsError, match=":2:"):
            read_records(path)

    def test_json_to_stream(self):
        """JSON goes to the given stream when no path is set."""
        report = SuiteReport("benchmark", [TaskResult(Task(0, "Nguyen-1", 0, 0), _record(r2=0.5))])
        report.by_benchmark = aggregate(report.records, "benchmark")
        buffer = io.StringIO()
        export_results(report, None, "json", stream=buffer)
        data = json.loads(buffer.getvalue())
        assert data["command"] == "benchmark"
        assert data["runs"][0]["r2"] == 0.5
        assert data["runs"][0]["report"] is None
        assert data["aggregates"]["by_benchmark"][0]["mean_r2"] == 0.5

    def test_strip_timing(self):
        """Timing keys vanish at any depth."""
        data = {"a": 1, "wall_time_s": 2.0, "nested": [{"r2_trace": [], "b": 2}]}
        assert strip_timing(data) == {"a": 1, "nested": [{"b": 2}]}

    def test_print_summary(self):
        """The summary names the command and each benchmark."""
        records = [_record(r2=0.5), _record(error="RuntimeError: boom")]
        report = SuiteReport("benchmark", [TaskResult(Task(i, "Nguyen-1", 0, 0), r) for i, r in enumerate(records)])
        report.by_benchmark = aggregate(report.records, "benchmark")
        buffer = io.StringIO()
        print_summary(report, stream=buffer)
        text = buffer.getvalue()
        assert "BENCHMARK REPORT" in text
        assert "Failed runs: 1" in text
        assert "Nguyen-1: R² 0.5000" in text
