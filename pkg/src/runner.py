"""
Suite execution for the CLI.

Turns a RunConfig into tasks (dataset/benchmark x seed or repeat x noise
level), fits them on a thread pool, and collects RunRecord rows in task order
so the output does not depend on the degree of parallelism. Each task seed is
derived from (master seed, task index).
"""

import csv
import io
import json
import sys
from collections import defaultdict
from concurrent.futures import ThreadPoolExecutor, as_completed
from dataclasses import dataclass, field, replace
from pathlib import Path
from typing import Any, TextIO

import pydantic

from benchmarks import (
    Dataset,
    add_noise,
    get_benchmark,
    realize,
    sample,
)
from expression import evaluate
from logging_config import get_logger
from metrics import (
    MetricReport,
    extrapolation_r2,
    is_recovered,
    isotonic_trend,
    ned,
    r2_value,
    r_squared,
    summarize,
)
from models import RunConfig, RunRecord
from operators import DEFAULT_POLICY, EvalPolicy
from trainer import DATA_STREAM, FitReport, alternating_fit, derive_seed

logger = get_logger(__name__)

# sub-seed keys under a task seed
TRAIN_SAMPLE, TEST_SAMPLE, NOISE, EXTRAPOLATION = 1, 2, 3, 4

TIMING_KEYS = ("wall_time_s", "r2_trace", "mean_wall_time_s")


class ResultsError(ValueError):
    """An emitted results file does not parse back into RunRecord rows."""

    pass


@dataclass(frozen=True)
class Task:
    index: int
    benchmark: str
    repeat: int
    seed: int
    noise_level: float = 0.0


def _data_seed(task: Task, key: int) -> int:
    return derive_seed(task.seed, key, stream=DATA_STREAM)


@dataclass
class TaskResult:
    task: Task
    record: RunRecord
    report: FitReport | None = None

    def to_dict(self, include_trace: bool = False) -> dict[str, Any]:
        data = self.record.model_dump()
        data["report"] = self.report.to_dict(include_trace) if self.report else None
        return data


@dataclass
class SuiteReport:
    command: str
    results: list[TaskResult] = field(default_factory=list)
    by_benchmark: list[dict[str, Any]] = field(default_factory=list)
    by_group: list[dict[str, Any]] = field(default_factory=list)
    noise_curves: list[dict[str, Any]] = field(default_factory=list)
    fit_summary: dict[str, Any] | None = None

    @property
    def records(self) -> list[RunRecord]:
        return [result.record for result in self.results]

    @property
    def any_converged(self) -> bool:
        return any(record.converged for record in self.records)

    def to_dict(self, include_trace: bool = False) -> dict[str, Any]:
        data: dict[str, Any] = {
            "command": self.command,
            "runs": [result.to_dict(include_trace) for result in self.results],
            "aggregates": {"by_benchmark": self.by_benchmark, "by_group": self.by_group},
        }
        if self.noise_curves:
            data["aggregates"]["noise_curves"] = self.noise_curves
        if self.fit_summary is not None:
            data["aggregates"]["fit"] = self.fit_summary
        return data


class SuiteRunner:
    """Runs the fits a RunConfig describes and aggregates their rows."""

    def __init__(
        self,
        config: RunConfig,
        master_seed: int = 0,
        dataset: Dataset | None = None,
        policy: EvalPolicy = DEFAULT_POLICY,
    ):
        self.config = config
        self.master_seed = master_seed
        self.dataset = dataset
        self.policy = policy
        self.hyper = config.effective_hyper

    def build_tasks(self) -> list[Task]:
        config = self.config
        if config.command == "fit":
            name = self.dataset.name if self.dataset is not None else config.benchmarks[0]
            return [Task(i, name, i, seed) for i, seed in enumerate(config.seeds)]

        levels = config.noise_levels if config.command == "noise-sweep" else [0.0]
        tasks: list[Task] = []
        for level in levels:
            for name in config.benchmarks:
                for repeat in range(config.repeats):
                    index = len(tasks)
                    tasks.append(
                        Task(index, name, repeat, derive_seed(self.master_seed, index), level)
                    )
        return tasks

    def run(self) -> SuiteReport:
        tasks = self.build_tasks()
        logger.info(
            "Starting suite",
            extra={
                "command": self.config.command,
                "tasks": len(tasks),
                "parallelism": self.config.parallelism,
            },
        )
        results: dict[int, TaskResult] = {}
        with ThreadPoolExecutor(max_workers=self.config.parallelism) as executor:
            future_to_task = {executor.submit(self._run_task, task): task for task in tasks}
            for future in as_completed(future_to_task):
                task = future_to_task[future]
                try:
                    results[task.index] = future.result()
                except Exception as e:
                    logger.error(
                        "Task generated an exception",
                        extra={"task": task.index, "benchmark": task.benchmark, "error": str(e)},
                    )
                    results[task.index] = TaskResult(task, self._error_record(task, e))

        report = SuiteReport(self.config.command, [results[i] for i in sorted(results)])
        report.by_benchmark = aggregate(report.records, "benchmark")
        report.by_group = aggregate(report.records, "group")
        if self.config.command == "noise-sweep":
            report.noise_curves = noise_curves(report.records)
        if self.config.command == "fit":
            report.fit_summary = fit_summary(report.results)
        return report

    def _base_record(self, task: Task) -> dict[str, Any]:
        return {
            "task": task.index,
            "command": self.config.command,
            "benchmark": task.benchmark,
            "group": task.benchmark.split("-", 1)[0],
            "repeat": task.repeat,
            "seed": task.seed,
            "noise_level": task.noise_level,
        }

    def _error_record(self, task: Task, error: Exception) -> RunRecord:
        return RunRecord(**self._base_record(task), error=f"{type(error).__name__}: {error}")

    def _run_task(self, task: Task) -> TaskResult:
        if self.dataset is not None:
            return self._fit_dataset(task)
        return self._fit_benchmark(task)

    def _fit_dataset(self, task: Task) -> TaskResult:
        report = alternating_fit(self.dataset, self.hyper, task.seed, self.policy, self.config.trace)
        record = RunRecord(
            **self._base_record(task),
            train_r2=r2_value(report.r2),
            r2=r2_value(report.r2),
            mse=report.mse,
            node_count=report.node_count,
            evaluation_count=report.evaluation_count,
            converged=report.converged,
            selection_confidence=report.selection_confidence,
            expression=report.prefix,
        )
        return TaskResult(task, record, report)

    def _fit_benchmark(self, task: Task) -> TaskResult:
        entry = get_benchmark(task.benchmark)
        train = realize(entry, _data_seed(task, TRAIN_SAMPLE), self.policy)
        if task.noise_level > 0:
            noisy = add_noise(train.y, task.noise_level, _data_seed(task, NOISE))
            train = Dataset(train.X, noisy, train.name, train.sampling)

        report = alternating_fit(train, self.hyper, task.seed, self.policy, self.config.trace)
        expr = report.expression

        # held-out in-domain sample scored against the clean target
        test_spec = replace(entry.spec, seed=_data_seed(task, TEST_SAMPLE))
        X_test = sample(test_spec, entry.k)
        test_r2 = r_squared(entry.evaluate_target(X_test, self.policy), evaluate(expr, X_test, self.policy))

        extrapolated = None
        if self.config.extrapolate is not None:
            a, b = self.config.extrapolate
            extrapolated = r2_value(
                extrapolation_r2(expr, entry, a, b, _data_seed(task, EXTRAPOLATION), self.policy)
            )

        metric = MetricReport(
            r2=test_r2,
            mse=report.mse,
            ned=ned(expr, entry.expression),
            node_count=report.node_count,
            evaluation_count=report.evaluation_count,
            recovered=is_recovered(expr, entry.expression, train.sampling, self.policy),
        )
        record = RunRecord(
            **self._base_record(task),
            **metric.to_dict(),
            train_r2=r2_value(report.r2),
            converged=report.converged,
            selection_confidence=report.selection_confidence,
            extrapolation_r2=extrapolated,
            expression=report.prefix,
        )
        logger.info(
            "Task complete",
            extra={"task": task.index, "benchmark": task.benchmark, "r2": record.r2},
        )
        return TaskResult(task, record, report)


# =============================================================================
# Aggregation
# =============================================================================


def _rate(values) -> float | None:
    usable = [bool(v) for v in values if v is not None]
    return sum(usable) / len(usable) if usable else None


def aggregate(records: list[RunRecord], key: str) -> list[dict[str, Any]]:
    """Per-key summary rows (mean/std R², mean size, recovery and convergence rates)."""
    grouped: dict[str, list[RunRecord]] = defaultdict(list)
    for record in records:
        grouped[getattr(record, key)].append(record)

    rows = []
    for name in sorted(grouped):
        group = grouped[name]
        mean_r2, std_r2, n = summarize(r.r2 for r in group)
        rows.append(
            {
                key: name,
                "runs": len(group),
                "errors": sum(1 for r in group if r.error),
                "scored_runs": n,
                "mean_r2": mean_r2,
                "std_r2": std_r2,
                "mean_node_count": summarize(r.node_count for r in group)[0],
                "mean_evaluation_count": summarize(r.evaluation_count for r in group)[0],
                "mean_selection_confidence": summarize(r.selection_confidence for r in group)[0],
                "auto_recovery_rate": _rate(r.recovered for r in group),
                "converged_rate": _rate(r.converged for r in group),
            }
        )
    return rows


def fit_summary(results: list[TaskResult]) -> dict[str, Any]:
    """Mean/std over the seeds of a fit command."""
    reports = [r.report for r in results if r.report is not None]
    mean_r2, std_r2, n = summarize(r.record.r2 for r in results)
    mean_wall = summarize(rep.wall_time_s for rep in reports)[0]
    return {
        "runs": len(results),
        "scored_runs": n,
        "mean_r2": mean_r2,
        "std_r2": std_r2,
        "mean_node_count": summarize(r.record.node_count for r in results)[0],
        "mean_evaluation_count": summarize(r.record.evaluation_count for r in results)[0],
        "mean_wall_time_s": mean_wall,
        "converged_rate": _rate(r.record.converged for r in results),
    }


def noise_curves(records: list[RunRecord]) -> list[dict[str, Any]]:
    """Mean R² per noise level for each benchmark, with its isotonic trend."""
    by_benchmark: dict[str, dict[float, list]] = defaultdict(lambda: defaultdict(list))
    for record in records:
        by_benchmark[record.benchmark][record.noise_level].append(record.r2)

    curves = []
    for name in sorted(by_benchmark):
        per_level = by_benchmark[name]
        levels = sorted(per_level)
        points = [(level, *summarize(per_level[level])) for level in levels]
        scored = [(level, mean) for level, mean, _, _ in points if mean is not None]
        trend, max_rise = (None, None)
        if scored:
            fitted, max_rise = isotonic_trend([p[0] for p in scored], [p[1] for p in scored])
            trend = [float(v) for v in fitted]
        curves.append(
            {
                "benchmark": name,
                "levels": levels,
                "mean_r2": [p[1] for p in points],
                "std_r2": [p[2] for p in points],
                "runs": [p[3] for p in points],
                "isotonic_r2": trend,
                "max_rise": max_rise,
            }
        )
    return curves


# =============================================================================
# Emission
# =============================================================================


def render_csv(records: list[RunRecord]) -> str:
    buffer = io.StringIO()
    writer = csv.writer(buffer, lineterminator="\n")
    writer.writerow(RunRecord.columns())
    for record in records:
        writer.writerow(record.to_csv_cells())
    return buffer.getvalue()


def render(report: SuiteReport, format: str = "json", include_trace: bool = False) -> str:
    if format == "csv":
        return render_csv(report.records)
    return json.dumps(report.to_dict(include_trace), indent=2) + "\n"


def export_results(
    report: SuiteReport,
    output: str | None = None,
    format: str = "json",
    include_trace: bool = False,
    stream: TextIO | None = None,
) -> None:
    """
    Write the report to a file, or to stdout when no output path is given.

    CSV files are read back through RunRecord after writing.
    """
    text = render(report, format, include_trace)
    if output is None:
        (stream or sys.stdout).write(text)
        return
    Path(output).parent.mkdir(parents=True, exist_ok=True)
    with open(output, "w", newline="", encoding="utf-8") as f:
        f.write(text)
    if format == "csv":
        read_records(output)
    logger.info("Results exported", extra={"path": output, "format": format, "runs": len(report.results)})


def read_records(path: str | Path) -> list[RunRecord]:
    """
    Parse an emitted CSV back into validated RunRecord rows.

    Raises:
        ResultsError: The header or a row does not match RunRecord
    """
    columns = RunRecord.columns()
    records: list[RunRecord] = []
    with open(path, newline="", encoding="utf-8") as f:
        reader = csv.DictReader(f)
        if reader.fieldnames != columns:
            raise ResultsError(f"{path}: header does not match the result columns")
        for line, row in enumerate(reader, start=2):
            if None in row or None in row.values():
                raise ResultsError(f"{path}:{line}: expected {len(columns)} cells")
            try:
                records.append(RunRecord(**row))
            except pydantic.ValidationError as e:
                raise ResultsError(f"{path}:{line}: {e.errors()[0]['msg']}") from e
    return records


def strip_timing(data: Any) -> Any:
    """Copy of a JSON-ready structure without wall-clock dependent keys."""
    if isinstance(data, dict):
        return {k: strip_timing(v) for k, v in data.items() if k not in TIMING_KEYS}
    if isinstance(data, list):
        return [strip_timing(v) for v in data]
    return data


def _fmt(value: float | None, spec: str = ".4f") -> str:
    return "n/a" if value is None else format(value, spec)


def print_summary(report: SuiteReport, stream: TextIO | None = None) -> None:
    """Human-readable summary of a suite run (stderr by default)."""
    out = stream or sys.stderr
    print("\n" + "=" * 60, file=out)
    print(f"{report.command.upper()} REPORT", file=out)
    print("=" * 60, file=out)
    print(f"Runs: {len(report.results)}", file=out)
    errors = [r for r in report.records if r.error]
    if errors:
        print(f"Failed runs: {len(errors)}", file=out)
    print(file=out)

    for title, rows, key in (
        ("By benchmark:", report.by_benchmark, "benchmark"),
        ("By group:", report.by_group, "group"),
    ):
        if not rows:
            continue
        print(title, file=out)
        for row in rows:
            print(
                f"  {row[key]}: R² {_fmt(row['mean_r2'])} ± {_fmt(row['std_r2'])}, "
                f"nodes {_fmt(row['mean_node_count'], '.1f')}, "
                f"evaluations {_fmt(row['mean_evaluation_count'], '.1f')}, "
                f"auto-recovery {_fmt(row['auto_recovery_rate'], '.2f')}",
                file=out,
            )
        print(file=out)

    if report.fit_summary is not None:
        fit = report.fit_summary
        print(
            f"Fit over {fit['runs']} seed(s): R² {_fmt(fit['mean_r2'])} ± {_fmt(fit['std_r2'])}, "
            f"nodes {_fmt(fit['mean_node_count'], '.1f')}, "
            f"evaluations {_fmt(fit['mean_evaluation_count'], '.1f')}, "
            f"converged {_fmt(fit['converged_rate'], '.2f')}",
            file=out,
        )
        print(file=out)

    for curve in report.noise_curves:
        print(f"Noise curve {curve['benchmark']}:", file=out)
        for level, mean in zip(curve["levels"], curve["mean_r2"]):
            print(f"  level {level:.2f}: R² {_fmt(mean)}", file=out)
        print(f"  max rise: {_fmt(curve['max_rise'])}", file=out)
        print(file=out)
    print("=" * 60, file=out)
