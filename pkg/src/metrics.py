"""
Evaluation metrics: R², normalized tree edit distance, automated recovery,
seed aggregation and noise-curve smoothing.
"""

from dataclasses import asdict, dataclass, replace

import numpy as np
from sklearn.isotonic import IsotonicRegression

from benchmarks import BenchmarkEntry, SamplingSpec, sample, with_sampling
from expression import Expression, evaluate, node_count, tree_edit_distance
from logging_config import get_logger
from operators import DEFAULT_POLICY, EvalPolicy

logger = get_logger(__name__)

RECOVERY_R2 = 1.0 - 1e-10
RECOVERY_SIZE_SLACK = 2
DENSE_FACTOR = 10


class DegenerateR2:
    """R² of a constant target: the denominator vanishes, so there is no value."""

    __slots__ = ()

    def __repr__(self) -> str:
        return "DEGENERATE"

    def __str__(self) -> str:
        return "degenerate"


DEGENERATE = DegenerateR2()


def is_degenerate(value) -> bool:
    return isinstance(value, DegenerateR2)


def r2_value(value) -> float | None:
    """Plain float for output, None for a degenerate R²."""
    return None if is_degenerate(value) else float(value)


def r_squared(y, y_hat) -> float | DegenerateR2:
    """1 - SS_res / SS_tot, or DEGENERATE when y is constant."""
    y = np.asarray(y, dtype=np.float64)
    y_hat = np.asarray(y_hat, dtype=np.float64)
    if y.shape != y_hat.shape:
        raise ValueError(f"Length mismatch: y {y.shape} vs y_hat {y_hat.shape}")
    ss_tot = float(np.sum((y - np.mean(y)) ** 2))
    if y.size < 2 or ss_tot == 0.0:
        return DEGENERATE
    with np.errstate(over="ignore", invalid="ignore"):
        ss_res = float(np.sum((y - y_hat) ** 2))
    if not np.isfinite(ss_res):
        return -float(np.finfo(np.float64).max)
    return 1.0 - ss_res / ss_tot


def ned(f_pred: Expression, f_true: Expression) -> float:
    """min(1, ED(pred, true) / |true|) over constant-masked trees."""
    distance = tree_edit_distance(f_pred, f_true)
    return min(1.0, distance / node_count(f_true))


def is_recovered(
    f_pred: Expression,
    f_true: Expression,
    sampling: SamplingSpec,
    policy: EvalPolicy = DEFAULT_POLICY,
) -> bool:
    """
    Automated stand-in for a manual symbolic comparison.

    True when the masked trees are identical, or when the prediction is
    numerically exact on a dense fresh sample (10x the benchmark's count,
    new seed) and at most two nodes larger than the truth.
    """
    if ned(f_pred, f_true) == 0.0:
        return True
    if node_count(f_pred) > node_count(f_true) + RECOVERY_SIZE_SLACK:
        return False
    dense = replace(sampling, count=sampling.count * DENSE_FACTOR, seed=sampling.seed + 1)
    X = sample(dense, f_true.k)
    y_true = evaluate(f_true, X, policy)
    y_pred = evaluate(f_pred, X, policy)
    r2 = r_squared(y_true, y_pred)
    if is_degenerate(r2):
        return bool(np.max(np.abs(y_true - y_pred)) <= 1e-10 * max(1.0, float(np.max(np.abs(y_true)))))
    return r2 > RECOVERY_R2


@dataclass
class MetricReport:
    r2: float | DegenerateR2
    mse: float
    ned: float
    node_count: int
    evaluation_count: int
    recovered: bool

    def to_dict(self) -> dict:
        data = asdict(self)
        data["r2"] = r2_value(self.r2)
        return data


def summarize(values) -> tuple[float | None, float | None, int]:
    """
    Mean, sample standard deviation and count over the usable values.

    Degenerate R² markers and None are skipped; std is 0.0 for a single value.
    """
    usable = [float(v) for v in values if v is not None and not is_degenerate(v)]
    if not usable:
        return None, None, 0
    array = np.asarray(usable)
    std = float(np.std(array, ddof=1)) if len(usable) > 1 else 0.0
    return float(np.mean(array)), std, len(usable)


def isotonic_trend(levels, values) -> tuple[np.ndarray, float]:
    """
    Non-increasing isotonic fit of a noise-robustness curve.

    Returns:
        (fitted curve, largest rise anywhere along the raw curve); the rise is
        max over i < j of values[j] - values[i], floored at 0
    """
    levels = np.asarray(levels, dtype=np.float64)
    values = np.asarray(values, dtype=np.float64)
    fitted = IsotonicRegression(increasing=False).fit_transform(levels, values)
    order = np.argsort(levels, kind="stable")
    ordered = values[order]
    running_min = np.minimum.accumulate(ordered)
    rise = float(np.max(ordered - running_min)) if ordered.size else 0.0
    return fitted, max(0.0, rise)


def extrapolation_r2(
    expr: Expression,
    entry: BenchmarkEntry,
    a: float,
    b: float,
    seed: int,
    policy: EvalPolicy = DEFAULT_POLICY,
) -> float | DegenerateR2:
    """R² of expr against the entry's target on a wider U(a, b) interval."""
    wide = with_sampling(entry, kind="U", a=a, b=b, seed=seed)
    X = sample(wide.spec, entry.k)
    return r_squared(wide.evaluate_target(X, policy), evaluate(expr, X, policy))
