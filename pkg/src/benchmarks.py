"""
Benchmark registry, samplers, noise injection and CSV datasets.

Registry formulas are written with the builder helpers below over the same
symbol library the network searches. Forms outside the library are encoded as:
- real powers a**p as exp(p * log(a)), i.e. |a|**p under the protected log
- tan(u) as sin(u) / cos(u)
- tanh(u) as 1 - 2 / (exp(2u) + 1)
- |u| inside log and sqrt is implicit in the protected operators
- constants as variable leaves with w = 0 and b = value

Sampling conventions:
- U(a, b, c): c i.i.d. uniform rows on [a, b] per variable, seeded
- E(a, b, c): c evenly spaced points on [a, b] inclusive, the same grid in
  every column (rows zipped, not a product grid)
"""

import csv
import fnmatch
import math
from collections.abc import Callable, Iterable
from dataclasses import dataclass, replace
from pathlib import Path

import numpy as np

from expression import Expression, ExprNode, Symbol, evaluate, node_count
from logging_config import get_logger
from operators import DEFAULT_POLICY, Array, EvalPolicy

logger = get_logger(__name__)

EULER_GAMMA = 0.5772156649015329


class DatasetError(ValueError):
    """Raised for unreadable or invalid datasets."""

    pass


class UnknownBenchmarkError(KeyError):
    """Raised when a benchmark name or pattern matches nothing in the registry."""

    def __str__(self) -> str:
        return str(self.args[0]) if self.args else "Unknown benchmark"


@dataclass(frozen=True)
class SamplingSpec:
    kind: str  # "U" or "E"
    a: float
    b: float
    count: int
    seed: int = 0

    def __post_init__(self):
        if self.kind not in ("U", "E"):
            raise DatasetError(f"Sampling kind must be 'U' or 'E', got {self.kind!r}")
        if not self.a < self.b:
            raise DatasetError(f"Sampling range needs a < b, got ({self.a}, {self.b})")
        if self.count < 1:
            raise DatasetError(f"Sampling count must be >= 1, got {self.count}")

    def __str__(self) -> str:
        return f"{self.kind}({self.a:g}, {self.b:g}, {self.count})"


@dataclass
class Dataset:
    X: Array
    y: Array
    name: str = ""
    sampling: SamplingSpec | None = None

    def __post_init__(self):
        self.X = np.asarray(self.X, dtype=np.float64)
        self.y = np.asarray(self.y, dtype=np.float64)
        if self.X.ndim != 2 or self.X.shape[0] < 1 or self.X.shape[1] < 1:
            raise DatasetError(f"Dataset {self.name!r} needs an (m, k) input matrix, got {self.X.shape}")
        if self.y.shape != (self.X.shape[0],):
            raise DatasetError(
                f"Dataset {self.name!r} target length {self.y.shape} does not match m={self.X.shape[0]}"
            )
        if not (np.all(np.isfinite(self.X)) and np.all(np.isfinite(self.y))):
            raise DatasetError(f"Dataset {self.name!r} contains non-finite values")

    @property
    def m(self) -> int:
        return self.X.shape[0]

    @property
    def k(self) -> int:
        return self.X.shape[1]


@dataclass(frozen=True)
class BenchmarkEntry:
    name: str
    expression: Expression
    spec: SamplingSpec
    # exact target when the expression is only an approximation (Neat-6)
    target: Callable[[Array], Array] | None = None

    @property
    def k(self) -> int:
        return self.expression.k

    @property
    def group(self) -> str:
        return self.name.split("-", 1)[0]

    def evaluate_target(self, X, policy: EvalPolicy = DEFAULT_POLICY) -> Array:
        if self.target is not None:
            return self.target(np.asarray(X, dtype=np.float64))
        return evaluate(self.expression, X, policy)


# =============================================================================
# Sampling, realization, noise
# =============================================================================


def sample(spec: SamplingSpec, k: int) -> Array:
    """Input matrix of shape (spec.count, k)."""
    if spec.kind == "U":
        rng = np.random.default_rng(spec.seed)
        return rng.uniform(spec.a, spec.b, size=(spec.count, k))
    grid = np.linspace(spec.a, spec.b, spec.count)
    return np.tile(grid[:, np.newaxis], (1, k))


def realize(entry: BenchmarkEntry, seed: int, policy: EvalPolicy = DEFAULT_POLICY) -> Dataset:
    spec = replace(entry.spec, seed=seed)
    X = sample(spec, entry.k)
    return Dataset(X, entry.evaluate_target(X, policy), entry.name, spec)


def with_sampling(
    entry: BenchmarkEntry,
    kind: str | None = None,
    a: float | None = None,
    b: float | None = None,
    count: int | None = None,
    seed: int | None = None,
) -> BenchmarkEntry:
    """Copy of entry with some sampling fields replaced (dense or wider ranges)."""
    changes = {
        name: value
        for name, value in (("kind", kind), ("a", a), ("b", b), ("count", count), ("seed", seed))
        if value is not None
    }
    return replace(entry, spec=replace(entry.spec, **changes))


def add_noise(y, level: float, seed: int) -> Array:
    """y plus i.i.d. uniform noise on [-level * Span, level * Span], Span = |max(y) - min(y)|."""
    y = np.asarray(y, dtype=np.float64)
    if level < 0:
        raise DatasetError(f"Noise level must be >= 0, got {level}")
    span = abs(float(np.max(y)) - float(np.min(y)))
    if level == 0 or span == 0:
        return y.copy()
    rng = np.random.default_rng(seed)
    return y + rng.uniform(-level * span, level * span, size=y.shape)


# =============================================================================
# CSV datasets
# =============================================================================


def load_csv(path: str | Path) -> Dataset:
    """
    Read a dataset with header "x1,...,xk,y".

    Raises:
        DatasetError: missing file, malformed header, bad cell or empty body
    """
    path = Path(path)
    if not path.is_file():
        raise DatasetError(f"Dataset file not found: {path}")

    with open(path, newline="", encoding="utf-8") as f:
        rows = [row for row in csv.reader(f) if row and any(cell.strip() for cell in row)]
    if not rows:
        raise DatasetError(f"{path}: empty file")

    header = [cell.strip() for cell in rows[0]]
    k = len(header) - 1
    expected = [f"x{i + 1}" for i in range(k)] + ["y"]
    if k < 1 or header != expected:
        raise DatasetError(f"{path}: malformed header {','.join(header)!r}, expected 'x1,...,xk,y'")

    values = []
    for line_no, row in enumerate(rows[1:], start=2):
        if len(row) != len(header):
            raise DatasetError(f"{path}: row {line_no} has {len(row)} cells, expected {len(header)}")
        parsed = []
        for column, cell in zip(header, row):
            try:
                value = float(cell)
            except ValueError:
                raise DatasetError(
                    f"{path}: non-numeric value {cell.strip()!r} at row {line_no}, column {column}"
                ) from None
            if not math.isfinite(value):
                raise DatasetError(
                    f"{path}: non-finite value {cell.strip()!r} at row {line_no}, column {column}"
                )
            parsed.append(value)
        values.append(parsed)
    if not values:
        raise DatasetError(f"{path}: no data rows")

    data = np.array(values, dtype=np.float64)
    logger.debug("Loaded dataset", extra={"path": str(path), "m": data.shape[0], "k": k})
    return Dataset(data[:, :k], data[:, k], path.stem)


def write_csv(dataset: Dataset, path: str | Path) -> None:
    """Write a dataset with 17 significant digits and LF line endings."""
    with open(path, "w", newline="", encoding="utf-8") as f:
        writer = csv.writer(f, lineterminator="\n")
        writer.writerow([f"x{i + 1}" for i in range(dataset.k)] + ["y"])
        for features, target in zip(dataset.X, dataset.y):
            writer.writerow([f"{v:.17g}" for v in features] + [f"{target:.17g}"])


# =============================================================================
# Formula builders
# =============================================================================


def x(i: int) -> ExprNode:
    """Input variable x_i (1-based)."""
    return ExprNode(Symbol.variable(i - 1))


def const(value: float) -> ExprNode:
    return ExprNode(Symbol.variable(0), (), 0.0, float(value))


def _op(name: str, *children: ExprNode) -> ExprNode:
    return ExprNode(Symbol.operator(name), tuple(children))


def add(a: ExprNode, b: ExprNode) -> ExprNode:
    return _op("+", a, b)


def sub(a: ExprNode, b: ExprNode) -> ExprNode:
    return _op("-", a, b)


def mul(a: ExprNode, b: ExprNode) -> ExprNode:
    return _op("*", a, b)


def div(a: ExprNode, b: ExprNode) -> ExprNode:
    return _op("/", a, b)


def sin(u: ExprNode) -> ExprNode:
    return _op("sin", u)


def cos(u: ExprNode) -> ExprNode:
    return _op("cos", u)


def exp(u: ExprNode) -> ExprNode:
    return _op("exp", u)


def log(u: ExprNode) -> ExprNode:
    return _op("log", u)


def sqrt(u: ExprNode) -> ExprNode:
    return _op("sqrt", u)


def affine(node: ExprNode, w: float, b: float = 0.0) -> ExprNode:
    """w * node + b, folded into the node's own constants."""
    return replace(node, w=w * node.w, b=w * node.b + b)


def scale(node: ExprNode, w: float) -> ExprNode:
    return affine(node, w, 0.0)


def shift(node: ExprNode, b: float) -> ExprNode:
    return affine(node, 1.0, b)


def powi(a: ExprNode, n: int) -> ExprNode:
    result = a
    for _ in range(n - 1):
        result = mul(result, a)
    return result


def powr(a: ExprNode, p: float) -> ExprNode:
    return exp(scale(log(a), p))


def tan(u: ExprNode) -> ExprNode:
    return div(sin(u), cos(u))


def tanh(u: ExprNode) -> ExprNode:
    return affine(div(const(1.0), shift(exp(scale(u, 2.0)), 1.0)), -2.0, 1.0)


def total(*terms: ExprNode) -> ExprNode:
    result = terms[0]
    for term in terms[1:]:
        result = add(result, term)
    return result


def poly(v: ExprNode, coefficients: dict[int, float]) -> ExprNode:
    """Sum of coefficient * v**power, highest power first."""
    terms = [scale(powi(v, p), c) if c != 1 else powi(v, p) for p, c in sorted(coefficients.items(), reverse=True)]
    return total(*terms)


def _power_sum(v: ExprNode, top: int) -> ExprNode:
    return poly(v, {p: 1.0 for p in range(1, top + 1)})


def _quartic_ratio(v: ExprNode) -> ExprNode:
    """1 / (1 + v**-4) written as v**4 / (v**4 + 1), defined at v = 0."""
    return div(powi(v, 4), shift(powi(v, 4), 1.0))


def _gaussian_bump(v1: ExprNode, v2: ExprNode, offset: float) -> ExprNode:
    """exp(-(v1 + offset)**2) / (1.2 + (v2 - 2.5)**2)"""
    return div(exp(scale(powi(shift(v1, offset), 2), -1.0)), shift(powi(shift(v2, -2.5), 2), 1.2))


def _harmonic(X: Array) -> Array:
    n = np.floor(X[:, 0]).astype(np.int64)
    table = np.concatenate([[0.0], np.cumsum(1.0 / np.arange(1, max(int(n.max()), 1) + 1))])
    return table[np.clip(n, 0, None)]


# =============================================================================
# Registry
# =============================================================================


def U(a: float, b: float, count: int) -> SamplingSpec:
    return SamplingSpec("U", a, b, count)


def E(a: float, b: float, count: int) -> SamplingSpec:
    return SamplingSpec("E", a, b, count)


_REGISTRY: dict[str, BenchmarkEntry] = {}


def _register(name: str, k: int, root: ExprNode, spec: SamplingSpec, target=None) -> None:
    _REGISTRY[name] = BenchmarkEntry(name, Expression(root, k), spec, target)


def _build_registry() -> None:
    x1, x2, x3, x4, x5 = x(1), x(2), x(3), x(4), x(5)
    sin_sq_cos = mul(sin(powi(x1, 2)), cos(x1))

    # Nguyen
    _register("Nguyen-1", 1, _power_sum(x1, 3), U(-1, 1, 20))
    _register("Nguyen-2", 1, _power_sum(x1, 4), U(-1, 1, 20))
    _register("Nguyen-3", 1, _power_sum(x1, 5), U(-1, 1, 20))
    _register("Nguyen-4", 1, _power_sum(x1, 6), U(-1, 1, 20))
    _register("Nguyen-5", 1, shift(sin_sq_cos, -1.0), U(-1, 1, 20))
    _register("Nguyen-6", 1, add(sin(x1), sin(add(x1, powi(x1, 2)))), U(-1, 1, 20))
    _register("Nguyen-7", 1, add(log(shift(x1, 1.0)), log(shift(powi(x1, 2), 1.0))), U(0, 2, 20))
    _register("Nguyen-8", 1, sqrt(x1), U(0, 4, 20))
    _register("Nguyen-9", 2, add(sin(x1), sin(powi(x2, 2))), U(0, 1, 20))
    _register("Nguyen-10", 2, scale(mul(sin(x1), cos(x2)), 2.0), U(0, 1, 20))
    _register("Nguyen-11", 2, exp(mul(x2, log(x1))), U(0, 1, 20))
    _register(
        "Nguyen-12",
        2,
        total(powi(x1, 4), scale(powi(x1, 3), -1.0), scale(powi(x2, 2), 0.5), scale(x2, -1.0)),
        U(0, 1, 20),
    )
    _register("NguyenP-2", 1, poly(x1, {4: 4.0, 3: 3.0, 2: 2.0, 1: 1.0}), U(-1, 1, 20))
    _register("NguyenP-5", 1, shift(sin_sq_cos, -2.0), U(-1, 1, 20))
    _register("NguyenP-8", 1, powr(x1, 1.0 / 3.0), U(0, 4, 20))
    _register("NguyenPP-8", 1, powr(powi(x1, 2), 1.0 / 3.0), U(0, 4, 20))
    _register("NguyenC-1", 1, poly(x1, {3: 3.39, 2: 2.12, 1: 1.78}), U(-1, 1, 20))
    _register("NguyenC-5", 1, shift(sin_sq_cos, -0.75), U(-1, 1, 20))
    _register("NguyenC-7", 1, add(log(shift(x1, 1.4)), log(shift(powi(x1, 2), 1.3))), U(0, 2, 20))
    _register("NguyenC-8", 1, sqrt(scale(x1, 1.23)), U(0, 4, 20))
    _register("NguyenC-10", 2, mul(sin(scale(x1, 1.5)), cos(scale(x2, 0.5))), U(0, 1, 20))

    # Korns
    korns = U(-1, 1, 20)
    _register("Korns-1", 1, affine(powi(x1, 4), 24.3, 1.57), korns)
    _register("Korns-2", 4, affine(div(add(x4, x1), scale(x2, 3.0)), 14.2, 0.23), korns)
    _register(
        "Korns-3", 3, affine(div(add(sub(x2, x1), div(x1, x3)), scale(x3, 3.0)), 4.9, -5.41), korns
    )
    _register("Korns-4", 1, affine(sin(x1), 0.13, -2.3), korns)
    _register("Korns-5", 5, affine(log(x5), 2.13, 3.0), korns)
    _register("Korns-6", 1, affine(sqrt(x1), 0.13, 1.3), korns)
    _register("Korns-7", 1, affine(exp(scale(x1, -0.55)), -2.1, 2.1), korns)
    _register("Korns-8", 5, affine(sqrt(scale(mul(mul(x1, x4), x5), 7.23)), 11.0, 6.87), korns)
    _register("Korns-9", 2, scale(sqrt(scale(mul(mul(x1, x2), x2), 4.2)), 12.0), korns)
    _register(
        "Korns-10",
        4,
        affine(
            div(
                add(scale(x1, 2.0), scale(powi(x2, 2), 3.0)),
                add(scale(powi(x3, 3), 4.0), scale(powi(x4, 4), 5.0)),
            ),
            24.3,
            0.81,
        ),
        korns,
    )
    _register("Korns-11", 1, affine(cos(scale(powi(x1, 3), 7.23)), 11.0, 6.87), korns)
    _register(
        "Korns-12", 5, affine(mul(cos(scale(powi(x1, 3), 9.8)), sin(scale(x5, 1.3))), -2.1, 2.0), korns
    )
    _register("Korns-13", 4, affine(mul(div(tan(x1), tan(x2)), div(tan(x3), tan(x4))), -3.0, 32.0), korns)
    _register(
        "Korns-14",
        4,
        affine(mul(sub(scale(cos(x1), 4.2), tan(x2)), div(tanh(x3), sin(x4))), -1.0, 22.0),
        korns,
    )
    _register(
        "Korns-15", 4, affine(mul(div(tan(x1), exp(x2)), sub(log(x3), tan(x4))), -6.0, 12.0), korns
    )

    # Jin
    jin = U(-3, 3, 100)
    _register(
        "Jin-1",
        2,
        total(scale(powi(x1, 4), 2.5), scale(powi(x1, 3), -1.3), scale(powi(x2, 2), 0.5), scale(x2, -1.7)),
        jin,
    )
    _register("Jin-2", 2, shift(add(scale(powi(x1, 2), 8.0), scale(powi(x2, 3), 8.0)), -15.0), jin)
    _register(
        "Jin-3",
        2,
        total(scale(powi(x1, 3), 0.2), scale(powi(x2, 3), 0.5), scale(x2, -1.2), scale(x1, -0.5)),
        jin,
    )
    _register("Jin-4", 2, add(scale(exp(x1), 1.5), scale(cos(x2), 5.0)), jin)
    _register("Jin-5", 2, scale(mul(sin(x1), cos(x2)), 6.0), jin)
    _register(
        "Jin-6",
        2,
        add(scale(mul(x1, x2), 1.35), scale(sin(mul(shift(x1, -1.0), shift(x2, -1.0))), 5.5)),
        jin,
    )

    # Neat
    harmonic_tail = total(
        log(x1),
        const(EULER_GAMMA),
        div(const(0.5), x1),
        div(const(-1.0 / 12.0), powi(x1, 2)),
        div(const(1.0 / 120.0), powi(x1, 4)),
    )
    _register("Neat-1", 1, _power_sum(x1, 4), U(-1, 1, 20))
    _register("Neat-2", 1, _power_sum(x1, 5), U(-1, 1, 20))
    _register("Neat-3", 1, shift(sin_sq_cos, -1.0), U(-1, 1, 20))
    _register("Neat-4", 1, add(log(shift(x1, 1.0)), log(shift(powi(x1, 2), 1.0))), U(0, 2, 20))
    _register("Neat-5", 2, scale(mul(sin(x1), cos(x2)), 2.0), U(-1, 1, 100))
    _register("Neat-6", 1, harmonic_tail, E(1, 50, 50), target=_harmonic)
    _register(
        "Neat-7", 2, affine(mul(cos(scale(x1, 9.8)), sin(scale(x2, 1.3))), -2.1, 2.0), E(-50, 50, 100_000)
    )
    _register("Neat-8", 2, _gaussian_bump(x1, x2, 0.0), U(0.3, 4, 100))
    _register("Neat-9", 2, add(_quartic_ratio(x1), _quartic_ratio(x2)), E(-5, 5, 21))

    # Keijzer
    keijzer = U(-1, 1, 20)
    _register("Keijzer-1", 1, scale(mul(x1, sin(scale(x1, 2 * math.pi))), 0.3), keijzer)
    _register("Keijzer-2", 1, scale(mul(x1, sin(scale(x1, 0.5 * math.pi))), 2.0), keijzer)
    _register("Keijzer-3", 1, scale(mul(x1, sin(scale(x1, 2.41 * math.pi))), 0.92), keijzer)
    _register(
        "Keijzer-4",
        1,
        shift(
            mul(
                mul(mul(mul(mul(powi(x1, 3), exp(scale(x1, -1.0))), cos(x1)), sin(x1)), powi(sin(x1), 2)),
                cos(x1),
            ),
            -1.0,
        ),
        keijzer,
    )
    _register("Keijzer-5", 5, affine(log(x5), 2.13, 3.0), keijzer)
    _register("Keijzer-6", 1, scale(mul(x1, shift(x1, 1.0)), 0.5), keijzer)
    _register("Keijzer-7", 1, log(x1), U(0, 1, 20))
    _register("Keijzer-8", 1, sqrt(x1), U(0, 1, 20))
    _register("Keijzer-9", 1, log(add(x1, shift(sqrt(powi(x1, 2)), 1.0))), keijzer)
    _register("Keijzer-10", 2, exp(mul(x2, log(x1))), keijzer)
    _register("Keijzer-11", 2, add(mul(x1, x2), sin(mul(shift(x1, -1.0), shift(x2, -1.0)))), keijzer)
    _register(
        "Keijzer-12",
        2,
        total(powi(x1, 4), scale(powi(x1, 3), -1.0), scale(powi(x2, 2), 0.5), scale(x2, -1.0)),
        keijzer,
    )
    _register("Keijzer-13", 2, scale(mul(sin(x1), cos(x2)), 6.0), keijzer)
    _register("Keijzer-14", 2, div(const(8.0), shift(add(powi(x1, 2), powi(x2, 2)), 2.0)), keijzer)
    _register(
        "Keijzer-15",
        2,
        total(scale(powi(x1, 3), 0.2), scale(powi(x2, 3), 0.5), scale(x2, -1.0), scale(x1, -1.0)),
        keijzer,
    )

    # Livermore
    liv = U(-3, 3, 100)
    _register("Livermore-1", 1, total(const(1.0 / 3.0), x1, sin(powi(x1, 2))), liv)
    _register("Livermore-2", 1, shift(sin_sq_cos, -2.0), liv)
    _register("Livermore-3", 1, shift(mul(sin(powi(x1, 3)), cos(powi(x1, 2))), -1.0), liv)
    _register(
        "Livermore-4", 1, total(log(shift(x1, 1.0)), log(shift(powi(x1, 2), 1.0)), log(x1)), liv
    )
    _register("Livermore-5", 2, total(powi(x1, 4), scale(powi(x1, 3), -1.0), powi(x2, 2), scale(x2, -1.0)), liv)
    _register("Livermore-6", 1, poly(x1, {4: 4.0, 3: 3.0, 2: 2.0, 1: 1.0}), liv)
    _register("Livermore-7", 1, scale(sub(exp(x1), exp(scale(x1, -1.0))), 0.5), U(-1, 1, 100))
    _register("Livermore-8", 1, scale(add(exp(x1), exp(scale(x1, -1.0))), 1.0 / 3.0), liv)
    _register("Livermore-9", 1, _power_sum(x1, 9), U(-1, 1, 100))
    _register("Livermore-10", 2, scale(mul(sin(x1), cos(x2)), 6.0), liv)
    _register("Livermore-11", 2, div(mul(powi(x1, 2), powi(x2, 2)), add(x1, x2)), liv)
    _register("Livermore-12", 2, div(powi(x1, 5), powi(x2, 3)), liv)
    _register("Livermore-13", 1, powr(x1, 1.0 / 3.0), liv)
    _register(
        "Livermore-14", 2, total(_power_sum(x1, 3), sin(x1), sin(powi(x2, 2))), U(-1, 1, 100)
    )
    _register("Livermore-15", 1, powr(x1, 1.0 / 5.0), liv)
    _register("Livermore-16", 1, powr(x1, 2.0 / 3.0), liv)
    _register("Livermore-17", 2, scale(mul(sin(x1), cos(x2)), 4.0), liv)
    _register("Livermore-18", 1, shift(sin_sq_cos, -5.0), liv)
    _register("Livermore-19", 1, poly(x1, {5: 1.0, 4: 1.0, 2: 1.0, 1: 1.0}), liv)
    _register("Livermore-20", 1, exp(scale(powi(x1, 2), -1.0)), liv)
    _register("Livermore-21", 1, _power_sum(x1, 8), U(-1, 1, 20))
    _register("Livermore-22", 1, exp(scale(powi(x1, 2), -0.5)), liv)

    # Vladislavleva
    vlad_core = mul(
        mul(mul(mul(exp(scale(x1, -1.0)), powi(x1, 3)), cos(x1)), sin(x1)),
        shift(mul(cos(x1), powi(sin(x1), 2)), -1.0),
    )
    _register("Vladislavleva-1", 2, _gaussian_bump(x1, x2, -1.0), U(-1, 1, 20))
    _register("Vladislavleva-2", 1, vlad_core, U(-1, 1, 20))
    _register("Vladislavleva-3", 2, mul(vlad_core, shift(x2, -5.0)), U(-1, 1, 20))
    _register(
        "Vladislavleva-4",
        5,
        div(const(10.0), shift(total(*[powi(shift(v, -3.0), 2) for v in (x1, x2, x3, x4, x5)]), 5.0)),
        U(0, 2, 20),
    )
    _register(
        "Vladislavleva-5",
        3,
        mul(
            mul(scale(shift(x1, -1.0), 30.0), div(shift(x3, -1.0), shift(x1, -10.0))),
            powi(x2, 2),
        ),
        U(-1, 1, 100),
    )
    _register("Vladislavleva-6", 2, scale(mul(sin(x1), cos(x2)), 6.0), E(1, 50, 50))
    _register(
        "Vladislavleva-7",
        2,
        affine(mul(cos(scale(x1, 9.8)), sin(scale(x2, 1.3))), -2.1, 2.0),
        E(-50, 50, 100_000),
    )
    _register("Vladislavleva-8", 2, _gaussian_bump(x1, x2, -1.0), U(0.3, 4, 100))

    # Others
    x_ = [x(i) for i in range(1, 11)]
    _register("Test-2", 1, scale(powi(x1, 2), 3.14), U(-1, 1, 20))
    _register("Const-Test-1", 1, scale(powi(x1, 2), 5.0), U(-1, 1, 20))
    _register("GrammarVAE-1", 1, total(const(1.0 / 3.0), x1, sin(powi(x1, 2))), U(-1, 1, 20))
    _register("Sine", 1, add(sin(x1), sin(add(x1, powi(x1, 2)))), U(-1, 1, 20))
    _register("Nonic", 1, _power_sum(x1, 9), U(-1, 1, 100))
    _register("Pagie-1", 2, add(_quartic_ratio(x1), _quartic_ratio(x2)), E(1, 50, 50))
    _register("Meier-3", 2, div(mul(powi(x1, 2), powi(x2, 2)), add(x1, x2)), E(-50, 50, 100_000))
    _register("Meier-4", 2, div(powi(x1, 5), powi(x2, 3)), U(0.3, 4, 100))
    _register(
        "Poly-10",
        10,
        total(
            mul(x_[0], x_[1]),
            mul(x_[2], x_[3]),
            mul(x_[4], x_[5]),
            mul(mul(x_[0], x_[6]), x_[8]),
            mul(mul(x_[2], x_[5]), x_[9]),
        ),
        E(-1, 1, 100),
    )

    # Constant
    _register("Constant-1", 1, poly(x1, {3: 3.39, 2: 2.12, 1: 1.78}), U(-4, 4, 100))
    _register("Constant-2", 1, shift(sin_sq_cos, -0.75), U(-4, 4, 100))
    _register("Constant-3", 2, mul(sin(scale(x1, 1.5)), cos(scale(x2, 0.5))), U(0.1, 4, 100))
    _register("Constant-4", 2, scale(exp(mul(x2, log(x1))), 2.7), U(0.3, 4, 100))
    _register("Constant-5", 1, sqrt(scale(x1, 1.23)), U(0.1, 4, 100))
    _register("Constant-6", 1, powr(x1, 0.426), U(0.0, 4, 100))
    _register("Constant-7", 2, scale(mul(sin(scale(x1, 1.3)), cos(x2)), 2.0), U(-4, 4, 100))
    _register("Constant-8", 1, add(log(shift(x1, 1.4)), log(shift(powi(x1, 2), 1.3))), U(-4, 4, 100))

    # R
    _register("R1", 1, div(powi(shift(x1, 1.0), 3), shift(sub(powi(x1, 2), x1), 1.0)), U(-5, 5, 100))
    _register(
        "R2",
        1,
        div(shift(sub(powi(x1, 2), scale(powi(x1, 2), 3.0)), 1.0), shift(powi(x1, 2), 1.0)),
        U(-4, 4, 100),
    )
    _register("R3", 1, div(add(powi(x1, 6), powi(x1, 5)), shift(_power_sum(x1, 4), 1.0)), U(-4, 4, 100))

    # Feynman subset; Planck's h is an input and 1/(2*pi) a constant factor
    feynman = U(1, 5, 100)
    inv_two_pi = 1.0 / (2.0 * math.pi)
    _register(
        "Feynman-I.6.20a",
        1,
        scale(exp(scale(powi(x1, 2), -0.5)), 1.0 / math.sqrt(2.0 * math.pi)),
        U(1, 3, 100),
    )
    _register("Feynman-I.12.1", 2, mul(x1, x2), feynman)
    _register("Feynman-I.12.5", 2, mul(x1, x2), feynman)
    _register("Feynman-I.25.13", 2, div(x1, x2), feynman)
    _register("Feynman-I.29.4", 2, div(x1, x2), feynman)
    _register("Feynman-I.34.27", 2, scale(mul(x1, x2), inv_two_pi), feynman)
    _register("Feynman-II.8.31", 2, scale(mul(x1, powi(x2, 2)), 0.5), feynman)
    _register("Feynman-II.27.18", 2, mul(x1, powi(x2, 2)), feynman)
    _register("Feynman-II.38.3", 4, div(mul(mul(x1, x2), x3), x4), feynman)
    _register("Feynman-III.12.43", 2, scale(mul(x1, x2), inv_two_pi), feynman)


_build_registry()


def get_benchmark(name: str) -> BenchmarkEntry:
    try:
        return _REGISTRY[name]
    except KeyError:
        raise UnknownBenchmarkError(f"Unknown benchmark: {name}") from None


def list_benchmarks(pattern: str | None = None) -> list[str]:
    """Registry names sorted ascending, optionally filtered by an fnmatch glob."""
    names = sorted(_REGISTRY)
    if pattern is None:
        return names
    return [name for name in names if fnmatch.fnmatchcase(name, pattern)]


def resolve_names(patterns: Iterable[str]) -> list[str]:
    """
    Expand names and globs into registry names, keeping first-seen order.

    Raises:
        UnknownBenchmarkError: a pattern matches nothing
    """
    resolved: list[str] = []
    for pattern in patterns:
        pattern = pattern.strip()
        if not pattern:
            continue
        matches = list_benchmarks(pattern) if any(ch in pattern for ch in "*?[") else (
            [pattern] if pattern in _REGISTRY else []
        )
        if not matches:
            raise UnknownBenchmarkError(f"Unknown benchmark: {pattern}")
        resolved.extend(name for name in matches if name not in resolved)
    return resolved


def registry_size() -> int:
    return len(_REGISTRY)


def describe(entry: BenchmarkEntry) -> dict:
    return {
        "name": entry.name,
        "k": entry.k,
        "sampling": str(entry.spec),
        "nodes": node_count(entry.expression),
    }
