"""
Configuration validation for metasymnet.

Validates config/settings.yaml on startup with clear, actionable error messages.
"""

from dataclasses import dataclass, field
from pathlib import Path
from typing import Any

import yaml

DEFAULT_CONFIG_PATH = str(Path(__file__).resolve().parent.parent / "config" / "settings.yaml")

SECTIONS = ("training", "evaluation", "run")


@dataclass
class ValidationError:
    """Represents a single validation error."""

    path: str
    message: str
    value: Any = None

    def __str__(self) -> str:
        if self.value is not None:
            return f"settings.yaml:{self.path} {self.message}, got {type(self.value).__name__}: {self.value!r}"
        return f"settings.yaml:{self.path} {self.message}"


@dataclass
class ValidationResult:
    """Result of configuration validation."""

    errors: list[ValidationError] = field(default_factory=list)

    @property
    def is_valid(self) -> bool:
        return len(self.errors) == 0

    def add_error(self, path: str, message: str, value: Any = None) -> None:
        self.errors.append(ValidationError(path, message, value))

    def __str__(self) -> str:
        if self.is_valid:
            return "Configuration is valid"
        lines = ["Configuration validation failed:"]
        for error in self.errors:
            lines.append(f"  - {error}")
        return "\n".join(lines)


def _is_number(value: Any) -> bool:
    # bool is an int subclass but never a valid numeric setting
    return isinstance(value, (int, float)) and not isinstance(value, bool)


def _is_integer(value: Any) -> bool:
    return isinstance(value, int) and not isinstance(value, bool)


class ConfigValidator:
    """Validates the settings.yaml configuration file."""

    # key -> (integer?, lower bound, lower bound inclusive?)
    TRAINING_FIELDS: dict[str, tuple[bool, float, bool]] = {
        "entropy_coef": (False, 0.0, True),
        "n_wb": (True, 1, True),
        "n_dz": (True, 1, True),
        "r2_threshold": (False, 0.0, False),
        "learning_rate": (False, 0.0, False),
        "max_outer_iters": (True, 1, True),
        "time_budget_s": (False, 0.0, False),
        "temperature": (False, 0.0, False),
        "init_depth": (True, 1, True),
        "refine_iters": (True, 0, True),
        "max_nodes": (True, 1, True),
        "grad_clip": (False, 0.0, False),
        "rebuild_margin": (False, 0.0, True),
        "init_std": (False, 0.0, True),
        "warmup_rounds": (True, 0, True),
    }

    def __init__(self, config_path: str = DEFAULT_CONFIG_PATH):
        self.config_path = Path(config_path)
        self.result = ValidationResult()

    def validate(self) -> ValidationResult:
        """
        Validate the configuration file.

        Returns:
            ValidationResult with any errors found.
        """
        self.result = ValidationResult()

        if not self.config_path.exists():
            self.result.add_error("", f"Configuration file not found: {self.config_path}")
            return self.result

        try:
            with open(self.config_path) as f:
                config = yaml.safe_load(f)
        except yaml.YAMLError as e:
            self.result.add_error("", f"Invalid YAML syntax: {e}")
            return self.result

        if config is None:
            self.result.add_error("", "Configuration file is empty")
            return self.result

        if not isinstance(config, dict):
            self.result.add_error("", "must be a mapping", config)
            return self.result

        for key in config:
            if key not in SECTIONS:
                self.result.add_error(str(key), f"is not a known section (expected one of {', '.join(SECTIONS)})")

        self._validate_training(config)
        self._validate_evaluation(config)
        self._validate_run(config)

        return self.result

    def _section(self, config: dict, name: str) -> dict | None:
        section = config.get(name)
        if section is None:
            return None
        if not isinstance(section, dict):
            self.result.add_error(name, "must be a mapping", section)
            return None
        return section

    def _check_bound(self, path: str, value: Any, integer: bool, lower: float, inclusive: bool) -> None:
        if integer and not _is_integer(value):
            self.result.add_error(path, "must be an integer", value)
        elif not integer and not _is_number(value):
            self.result.add_error(path, "must be a number", value)
        elif inclusive and value < lower:
            self.result.add_error(path, f"must be >= {lower}", value)
        elif not inclusive and value <= lower:
            self.result.add_error(path, f"must be > {lower}", value)

    def _validate_training(self, config: dict) -> None:
        """Validate the training section (hyperparameters of one fit)."""
        training = self._section(config, "training")
        if training is None:
            return

        for key, value in training.items():
            path = f"training.{key}"
            if key not in self.TRAINING_FIELDS:
                self.result.add_error(path, "is not a known hyperparameter")
                continue
            # null switches the wall-clock budget off
            if key == "time_budget_s" and value is None:
                continue
            integer, lower, inclusive = self.TRAINING_FIELDS[key]
            self._check_bound(path, value, integer, lower, inclusive)

        threshold = training.get("r2_threshold")
        if _is_number(threshold) and threshold > 1.0:
            self.result.add_error("training.r2_threshold", "must be <= 1.0", threshold)

    def _validate_evaluation(self, config: dict) -> None:
        """Validate the evaluation section (suite shape)."""
        evaluation = self._section(config, "evaluation")
        if evaluation is None:
            return

        repeats = evaluation.get("repeats")
        if repeats is not None:
            self._check_bound("evaluation.repeats", repeats, True, 1, True)

        levels = evaluation.get("noise_levels")
        if levels is not None:
            if not isinstance(levels, list):
                self.result.add_error("evaluation.noise_levels", "must be a list", levels)
            elif len(levels) == 0:
                self.result.add_error("evaluation.noise_levels", "must not be empty")
            else:
                for i, level in enumerate(levels):
                    self._check_bound(f"evaluation.noise_levels[{i}]", level, False, 0.0, True)

        extrapolate = evaluation.get("extrapolate")
        if extrapolate is not None:
            if (
                not isinstance(extrapolate, list)
                or len(extrapolate) != 2
                or not all(_is_number(v) for v in extrapolate)
            ):
                self.result.add_error("evaluation.extrapolate", "must be a list [a, b] of two numbers", extrapolate)
            elif not extrapolate[0] < extrapolate[1]:
                self.result.add_error("evaluation.extrapolate", "must satisfy a < b", extrapolate)

        for key in evaluation:
            if key not in ("repeats", "noise_levels", "extrapolate"):
                self.result.add_error(f"evaluation.{key}", "is not a known setting")

    def _validate_run(self, config: dict) -> None:
        """Validate the run section (seeding, parallelism, output)."""
        run = self._section(config, "run")
        if run is None:
            return

        seed = run.get("seed")
        if seed is not None:
            self._check_bound("run.seed", seed, True, 0, True)

        parallelism = run.get("parallelism")
        if parallelism is not None:
            self._check_bound("run.parallelism", parallelism, True, 1, True)

        fmt = run.get("format")
        if fmt is not None and fmt not in ("json", "csv"):
            self.result.add_error("run.format", "must be 'json' or 'csv'", fmt)

        entropy_loss = run.get("entropy_loss")
        if entropy_loss is not None and not isinstance(entropy_loss, bool):
            self.result.add_error("run.entropy_loss", "must be a boolean", entropy_loss)

        for key in run:
            if key not in ("seed", "parallelism", "format", "entropy_loss"):
                self.result.add_error(f"run.{key}", "is not a known setting")


def validate_config(config_path: str = DEFAULT_CONFIG_PATH) -> ValidationResult:
    """
    Convenience function to validate a configuration file.

    Args:
        config_path: Path to the settings.yaml file.

    Returns:
        ValidationResult with any errors found.
    """
    validator = ConfigValidator(config_path)
    return validator.validate()


def load_settings(config_path: str = DEFAULT_CONFIG_PATH) -> dict:
    """Read settings.yaml without validating it; a missing file gives {}."""
    path = Path(config_path)
    if not path.exists():
        return {}
    with open(path) as f:
        return yaml.safe_load(f) or {}
