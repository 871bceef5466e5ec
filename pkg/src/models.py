"""
Pydantic models for run parameters and emitted result rows
"""

from typing import Any, Literal

from pydantic import BaseModel, ConfigDict, Field, field_validator, model_validator

DEFAULT_NOISE_LEVELS = [round(0.01 * i, 2) for i in range(11)]


# =============================================================================
# Training parameters
# =============================================================================


class Hyperparams(BaseModel):
    """Parameters of one alternating fit"""

    model_config = ConfigDict(frozen=True, extra="forbid")

    entropy_coef: float = Field(0.2, ge=0.0)
    n_wb: int = Field(10, ge=1)
    n_dz: int = Field(10, ge=1)
    r2_threshold: float = Field(0.9999, gt=0.0, le=1.0)
    learning_rate: float = Field(0.01, gt=0.0)
    max_outer_iters: int = Field(200, ge=1)
    # None disables the wall-clock budget; any number makes results timing dependent
    time_budget_s: float | None = Field(None, gt=0.0)
    temperature: float = Field(1.0, gt=0.0)
    init_depth: int = Field(2, ge=1)
    refine_iters: int = Field(500, ge=0)
    max_nodes: int = Field(40, ge=1)
    grad_clip: float = Field(100.0, gt=0.0)
    rebuild_margin: float = Field(3.0, ge=0.0)
    init_std: float = Field(0.1, ge=0.0)
    # extra WB/ZD alternations before the first extraction
    warmup_rounds: int = Field(100, ge=0)


# =============================================================================
# Run configuration
# =============================================================================


class RunConfig(BaseModel):
    """Everything a CLI command needs after merging defaults, settings.yaml and flags"""

    command: Literal["fit", "benchmark", "noise-sweep", "list"]
    data_path: str | None = None
    benchmarks: list[str] = []
    hyper: Hyperparams = Hyperparams()
    seeds: list[int] = [0]
    repeats: int = Field(10, ge=1)
    parallelism: int = Field(1, ge=1)
    entropy_loss: bool = True
    noise_levels: list[float] = DEFAULT_NOISE_LEVELS
    output: str | None = None
    format: Literal["json", "csv"] = "json"
    trace: bool = False
    extrapolate: tuple[float, float] | None = None

    @field_validator("noise_levels")
    @classmethod
    def validate_noise_levels(cls, v: list[float]) -> list[float]:
        if not v:
            raise ValueError("at least one noise level is required")
        if any(level < 0 for level in v):
            raise ValueError("noise levels must be >= 0")
        return v

    @field_validator("seeds")
    @classmethod
    def validate_seeds(cls, v: list[int]) -> list[int]:
        if not v:
            raise ValueError("at least one seed is required")
        if any(seed < 0 for seed in v):
            raise ValueError("seeds must be >= 0")
        return v

    @field_validator("extrapolate")
    @classmethod
    def validate_extrapolate(cls, v: tuple[float, float] | None) -> tuple[float, float] | None:
        if v is not None and not v[0] < v[1]:
            raise ValueError("extrapolation range needs a < b")
        return v

    @model_validator(mode="after")
    def validate_source(self) -> "RunConfig":
        if self.command == "fit" and (self.data_path is None) == (not self.benchmarks):
            raise ValueError("fit needs exactly one of a data file or a benchmark")
        if self.command in ("benchmark", "noise-sweep") and not self.benchmarks:
            raise ValueError(f"{self.command} needs at least one benchmark name")
        return self

    @property
    def effective_hyper(self) -> Hyperparams:
        """Hyperparameters with the entropy term switched off when entropy_loss is False."""
        if self.entropy_loss:
            return self.hyper
        return self.hyper.model_copy(update={"entropy_coef": 0.0})


# =============================================================================
# Result rows
# =============================================================================


class RunRecord(BaseModel):
    """One emitted CSV row; every row parses back through this model"""

    task: int = Field(..., ge=0)
    command: str
    benchmark: str
    group: str
    repeat: int = Field(..., ge=0)
    seed: int
    noise_level: float = Field(0.0, ge=0.0)
    train_r2: float | None = None
    r2: float | None = None
    mse: float | None = Field(None, ge=0.0)
    ned: float | None = Field(None, ge=0.0, le=1.0)
    node_count: int | None = Field(None, ge=1)
    evaluation_count: int | None = Field(None, ge=0)
    recovered: bool | None = None
    converged: bool | None = None
    selection_confidence: float | None = Field(None, ge=0.0)
    extrapolation_r2: float | None = None
    expression: str | None = None
    error: str | None = None

    @field_validator(
        "train_r2",
        "r2",
        "mse",
        "ned",
        "node_count",
        "evaluation_count",
        "recovered",
        "converged",
        "selection_confidence",
        "extrapolation_r2",
        "expression",
        "error",
        mode="before",
    )
    @classmethod
    def empty_cell_is_none(cls, v: Any) -> Any:
        if isinstance(v, str) and v == "":
            return None
        return v

    @field_validator("r2", "train_r2", "extrapolation_r2")
    @classmethod
    def validate_r2(cls, v: float | None) -> float | None:
        if v is not None and v > 1.0 + 1e-12:
            raise ValueError("R² cannot exceed 1")
        return v

    @classmethod
    def columns(cls) -> list[str]:
        return list(cls.model_fields)

    def to_csv_cells(self) -> list[str]:
        cells = []
        for name in self.columns():
            value = getattr(self, name)
            if value is None:
                cells.append("")
            elif isinstance(value, bool):
                cells.append("true" if value else "false")
            elif isinstance(value, float):
                cells.append(f"{value:.17g}")
            else:
                cells.append(str(value))
        return cells
