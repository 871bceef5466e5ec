"""
metasymnet - command-line front end

Commands:
    fit          search for an expression on a CSV dataset or one benchmark
    benchmark    fit every named benchmark several times and score the results
    noise-sweep  repeat a benchmark suite over a list of noise levels
    list         print the registered benchmark names
    validate     check config/settings.yaml
"""

import argparse
import os
import sys
from pathlib import Path
from typing import Any

import pydantic
import yaml

sys.path.insert(0, str(Path(__file__).parent))

from benchmarks import (
    DatasetError,
    UnknownBenchmarkError,
    describe,
    get_benchmark,
    list_benchmarks,
    load_csv,
    resolve_names,
)
from config_validator import DEFAULT_CONFIG_PATH, load_settings, validate_config
from logging_config import get_logger, setup_logging
from models import DEFAULT_NOISE_LEVELS, RunConfig
from runner import ResultsError, SuiteRunner, export_results, print_summary

SEED_ENV = "METASYMNET_SEED"

EXIT_OK = 0
EXIT_ERROR = 1
EXIT_NOT_CONVERGED = 2

# (flag, Hyperparams field, type)
HYPER_FLAGS: list[tuple[str, str, Any]] = [
    ("--entropy-coef", "entropy_coef", float),
    ("--n-wb", "n_wb", int),
    ("--n-dz", "n_dz", int),
    ("--r2-threshold", "r2_threshold", float),
    ("--learning-rate", "learning_rate", float),
    ("--max-outer-iters", "max_outer_iters", int),
    ("--temperature", "temperature", float),
    ("--init-depth", "init_depth", int),
    ("--refine-iters", "refine_iters", int),
    ("--max-nodes", "max_nodes", int),
    ("--warmup-rounds", "warmup_rounds", int),
]


class CommandError(Exception):
    """A run could not start; reported as a one-line error with exit code 1."""

    pass


class CLIParser(argparse.ArgumentParser):
    """ArgumentParser whose usage errors exit with code 1."""

    def error(self, message: str):
        self.print_usage(sys.stderr)
        print(f"Error: {message}", file=sys.stderr)
        sys.exit(EXIT_ERROR)


# =============================================================================
# Argument types
# =============================================================================


def _int_list(text: str) -> list[int]:
    try:
        return [int(part) for part in text.split(",") if part.strip()]
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected comma-separated integers, got {text!r}") from None


def _float_list(text: str) -> list[float]:
    try:
        return [float(part) for part in text.split(",") if part.strip()]
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected comma-separated numbers, got {text!r}") from None


def _range(text: str) -> tuple[float, float]:
    values = _float_list(text)
    if len(values) != 2:
        raise argparse.ArgumentTypeError(f"expected A,B, got {text!r}")
    return values[0], values[1]


def _time_budget(text: str) -> float | None:
    if text.lower() == "none":
        return None
    try:
        return float(text)
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected seconds or 'none', got {text!r}") from None


# =============================================================================
# Parser
# =============================================================================


def _add_run_arguments(parser: argparse.ArgumentParser) -> None:
    """Flags shared by every command that fits something."""
    parser.add_argument("--seed", type=int, help=f"Master seed (default: ${SEED_ENV}, then run.seed)")
    parser.add_argument("--parallelism", type=int, help="Concurrent fits (default: run.parallelism)")
    parser.add_argument("--output", "-o", help="Write results here instead of stdout")
    parser.add_argument("--format", choices=["json", "csv"], help="Output format (default: run.format)")
    parser.add_argument("--trace", action="store_true", help="Include extraction traces in JSON output")
    parser.add_argument(
        "--no-entropy-loss", action="store_true", help="Train without the entropy term (lambda = 0)"
    )

    hyper = parser.add_argument_group("hyperparameters (override settings.yaml training)")
    for flag, dest, kind in HYPER_FLAGS:
        hyper.add_argument(flag, dest=dest, type=kind, default=argparse.SUPPRESS)
    hyper.add_argument(
        "--time-budget",
        dest="time_budget_s",
        type=_time_budget,
        default=argparse.SUPPRESS,
        help="Seconds per fit, or 'none'",
    )


def build_parser() -> CLIParser:
    parser = CLIParser(prog="metasymnet", description="Symbolic regression with a meta-network")
    parser.add_argument(
        "-c", "--config", default=None, help=f"Path to config file (default: {DEFAULT_CONFIG_PATH})"
    )
    parser.add_argument("-v", "--verbose", action="store_true", help="Enable verbose logging")
    parser.add_argument(
        "--skip-validation", action="store_true", help="Skip configuration validation"
    )
    parser.add_argument("--log-format", choices=["json", "text"], help="Log format (default: $LOG_FORMAT)")
    parser.add_argument("--log-file", help="Also write the log to this file")

    subparsers = parser.add_subparsers(dest="command", help="Commands")

    fit_parser = subparsers.add_parser("fit", help="Fit one dataset or benchmark")
    source = fit_parser.add_mutually_exclusive_group(required=True)
    source.add_argument("--data", help="CSV file with header x1,...,xk,y")
    source.add_argument("--benchmark", help="Registered benchmark name")
    fit_parser.add_argument("--seeds", type=_int_list, help="Comma-separated seeds, one fit each")
    _add_run_arguments(fit_parser)

    bench_parser = subparsers.add_parser("benchmark", help="Run a benchmark suite")
    bench_parser.add_argument(
        "--names", required=True, help="Comma-separated benchmark names or globs (e.g. 'Nguyen-*')"
    )
    bench_parser.add_argument("--repeats", type=int, help="Fits per benchmark (default: evaluation.repeats)")
    bench_parser.add_argument(
        "--extrapolate", type=_range, metavar="A,B", help="Also score R² on U(A, B)"
    )
    _add_run_arguments(bench_parser)

    noise_parser = subparsers.add_parser("noise-sweep", help="Run a suite over noise levels")
    noise_parser.add_argument("--names", required=True, help="Comma-separated benchmark names or globs")
    noise_parser.add_argument("--repeats", type=int, help="Fits per benchmark and level")
    noise_parser.add_argument(
        "--levels", type=_float_list, help="Comma-separated noise levels (default: 0.00..0.10)"
    )
    _add_run_arguments(noise_parser)

    list_parser = subparsers.add_parser("list", help="List registered benchmarks")
    list_parser.add_argument("pattern", nargs="?", help="Optional glob, e.g. 'Keijzer-*'")
    list_parser.add_argument(
        "--long", "-l", action="store_true", help="Also show variable count, sampling and size"
    )

    subparsers.add_parser("validate", help="Validate configuration file")

    return parser


# =============================================================================
# Config assembly
# =============================================================================


def _env_seed() -> int | None:
    raw = os.environ.get(SEED_ENV)
    if raw is None or raw.strip() == "":
        return None
    try:
        seed = int(raw)
    except ValueError:
        raise CommandError(f"{SEED_ENV} must be a non-negative integer, got {raw!r}") from None
    if seed < 0:
        raise CommandError(f"{SEED_ENV} must be a non-negative integer, got {raw!r}")
    return seed


def master_seed(args: argparse.Namespace, settings: dict) -> int:
    """--seed, then $METASYMNET_SEED, then run.seed, then 0."""
    if args.seed is not None:
        return args.seed
    env = _env_seed()
    if env is not None:
        return env
    return (settings.get("run") or {}).get("seed", 0)


def _names(text: str) -> list[str]:
    return resolve_names(text.split(","))


def _suffix_format(output: str | None) -> str | None:
    """Output format implied by a .csv or .json path suffix, else None."""
    if output is None:
        return None
    suffix = Path(output).suffix.lower().lstrip(".")
    return suffix if suffix in ("csv", "json") else None


def build_run_config(args: argparse.Namespace, settings: dict) -> tuple[RunConfig, int]:
    """
    Merge built-in defaults, settings.yaml and flags into a RunConfig.

    Returns:
        (config, master seed)
    """
    training = dict(settings.get("training") or {})
    evaluation = settings.get("evaluation") or {}
    run = settings.get("run") or {}

    for _, dest, _ in HYPER_FLAGS + [("", "time_budget_s", None)]:
        if dest in vars(args):
            training[dest] = getattr(args, dest)

    seed = master_seed(args, settings)
    output_format = args.format or _suffix_format(args.output) or run.get("format")

    fields: dict[str, Any] = {
        "command": args.command,
        "hyper": training,
        "seeds": [seed],
        "repeats": evaluation.get("repeats"),
        "parallelism": args.parallelism or run.get("parallelism"),
        "entropy_loss": False if args.no_entropy_loss else run.get("entropy_loss", True),
        "noise_levels": evaluation.get("noise_levels") or DEFAULT_NOISE_LEVELS,
        "output": args.output,
        "format": output_format,
        "trace": args.trace,
        "extrapolate": evaluation.get("extrapolate"),
    }

    if args.command == "fit":
        fields["data_path"] = args.data
        if args.benchmark is not None:
            names = _names(args.benchmark)
            if len(names) != 1:
                raise CommandError(f"fit takes exactly one benchmark, {args.benchmark!r} matches {len(names)}")
            fields["benchmarks"] = names
        if args.seeds:
            fields["seeds"] = args.seeds
    else:
        fields["benchmarks"] = _names(args.names)
        if args.repeats is not None:
            fields["repeats"] = args.repeats
        if getattr(args, "extrapolate", None) is not None:
            fields["extrapolate"] = args.extrapolate
        if getattr(args, "levels", None):
            fields["noise_levels"] = args.levels

    config = RunConfig(**{key: value for key, value in fields.items() if value is not None})
    return config, seed


def _validation_message(error: pydantic.ValidationError) -> str:
    first = error.errors()[0]
    location = ".".join(str(part) for part in first["loc"])
    return f"{location}: {first['msg']}" if location else first["msg"]


# =============================================================================
# Commands
# =============================================================================


def _run_suite(config: RunConfig, seed: int, dataset=None):
    report = SuiteRunner(config, master_seed=seed, dataset=dataset).run()
    export_results(report, config.output, config.format, config.trace)
    print_summary(report)
    return report


def cmd_fit(config: RunConfig, seed: int) -> int:
    """One fit per seed. Exit 0 if any run converged, 2 if none did."""
    dataset = load_csv(config.data_path) if config.data_path else None
    report = _run_suite(config, seed, dataset)
    errors = [record.error for record in report.records if record.error]
    if len(errors) == len(report.records):
        raise CommandError(errors[0])
    return EXIT_OK if report.any_converged else EXIT_NOT_CONVERGED


def cmd_benchmark(config: RunConfig, seed: int) -> int:
    """Benchmark x repeat suite; failed runs stay as rows with an error cell."""
    _run_suite(config, seed)
    return EXIT_OK


def cmd_noise_sweep(config: RunConfig, seed: int) -> int:
    """Level x benchmark x repeat suite scored against the clean target."""
    _run_suite(config, seed)
    return EXIT_OK


def cmd_list(pattern: str | None = None, long: bool = False) -> int:
    for name in list_benchmarks(pattern):
        if long:
            info = describe(get_benchmark(name))
            print(f"{name}\t{info['k']}\t{info['sampling']}\t{info['nodes']}")
        else:
            print(name)
    return EXIT_OK


COMMANDS = {
    "fit": cmd_fit,
    "benchmark": cmd_benchmark,
    "noise-sweep": cmd_noise_sweep,
}


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)

    setup_logging(verbose=args.verbose, log_format=args.log_format, log_file=args.log_file)
    logger = get_logger(__name__)

    config_path = args.config or DEFAULT_CONFIG_PATH

    if args.command is None:
        parser.print_help(sys.stderr)
        return EXIT_ERROR

    # Handle validate command separately (the file must exist here)
    if args.command == "validate":
        result = validate_config(config_path)
        if result.is_valid:
            print(f"Configuration file '{config_path}' is valid.")
            return EXIT_OK
        print(result, file=sys.stderr)
        return EXIT_ERROR

    if args.command == "list":
        return cmd_list(args.pattern, args.long)

    # The default file is optional, an explicitly named one is not
    config_exists = Path(config_path).exists()
    if not config_exists and args.config is not None:
        print(f"Error: Configuration file not found: {config_path}", file=sys.stderr)
        return EXIT_ERROR

    if config_exists and not args.skip_validation:
        result = validate_config(config_path)
        if not result.is_valid:
            print(result, file=sys.stderr)
            return EXIT_ERROR
        logger.info("Configuration validation passed", extra={"config_path": config_path})

    try:
        settings = load_settings(config_path)
        config, seed = build_run_config(args, settings)
        return COMMANDS[args.command](config, seed)
    except pydantic.ValidationError as e:
        print(f"Error: {_validation_message(e)}", file=sys.stderr)
    except (CommandError, DatasetError, UnknownBenchmarkError, ResultsError, OSError, yaml.YAMLError) as e:
        print(f"Error: {e}", file=sys.stderr)
    return EXIT_ERROR


if __name__ == "__main__":
    sys.exit(main())
