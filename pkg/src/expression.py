"""
Expression trees over the fixed symbol library.

The library for k input variables is, in order:
    [+, -, *, /, sin, cos, exp, log, sqrt, x1, ..., xk]

Every node carries an affine pair (w, b) and evaluates to w*op(children) + b.
A variable leaf with w == 0 is a constant leaf whose value is b.

Prefix text format (one expression per line, space separated):
    + x1 x2
    affine 2.0 1.0 sin x1      # 2*sin(x1) + 1
"""

import math
from collections.abc import Iterator, Sequence
from dataclasses import dataclass, field
from enum import Enum

import numpy as np
import zss

from logging_config import get_logger
from operators import (
    BINARY_OPERATORS,
    DEFAULT_POLICY,
    OPERATORS,
    UNARY_OPERATORS,
    Array,
    EvalPolicy,
    apply_binary,
    apply_unary,
    binary_partials,
    bound_mask,
    bound_output,
    unary_derivative,
)

logger = get_logger(__name__)

AFFINE_TOKEN = "affine"
CONST_LABEL = "CONST"


class ExpressionError(ValueError):
    """Raised for malformed expressions."""

    pass


class ExpressionParseError(ExpressionError):
    """Raised when prefix text cannot be parsed into an expression."""

    pass


class DimensionError(ExpressionError):
    """Raised when input width does not match the variable count k."""

    pass


class SymbolKind(Enum):
    BINARY = "binary"
    UNARY = "unary"
    VARIABLE = "variable"

    @property
    def arity(self) -> int:
        return {"binary": 2, "unary": 1, "variable": 0}[self.value]


@dataclass(frozen=True)
class Symbol:
    kind: SymbolKind
    name: str
    var_index: int | None = None

    @classmethod
    def operator(cls, name: str) -> "Symbol":
        if name in BINARY_OPERATORS:
            return cls(SymbolKind.BINARY, name)
        if name in UNARY_OPERATORS:
            return cls(SymbolKind.UNARY, name)
        raise ExpressionError(f"Unknown operator: {name!r}")

    @classmethod
    def variable(cls, index: int) -> "Symbol":
        if index < 0:
            raise ExpressionError(f"Variable index must be >= 0, got {index}")
        return cls(SymbolKind.VARIABLE, f"x{index + 1}", index)

    @property
    def arity(self) -> int:
        return self.kind.arity

    @property
    def is_variable(self) -> bool:
        return self.kind is SymbolKind.VARIABLE


class SymbolLibrary:
    """Ordered candidate list fixing the index <-> symbol mapping for a given k."""

    def __init__(self, k: int):
        if k < 1:
            raise ExpressionError(f"Variable count k must be >= 1, got {k}")
        self.k = k
        self.symbols: tuple[Symbol, ...] = tuple(
            [Symbol.operator(name) for name in OPERATORS]
            + [Symbol.variable(i) for i in range(k)]
        )
        self._by_name = {symbol.name: i for i, symbol in enumerate(self.symbols)}

    @property
    def size(self) -> int:
        return len(self.symbols)

    def symbol_at(self, index: int) -> Symbol:
        return self.symbols[index]

    def index_of(self, symbol: Symbol) -> int:
        try:
            return self._by_name[symbol.name]
        except KeyError:
            raise ExpressionError(f"Symbol {symbol.name} not in library for k={self.k}") from None

    def from_token(self, token: str) -> Symbol | None:
        index = self._by_name.get(token)
        return None if index is None else self.symbols[index]

    def __len__(self) -> int:
        return self.size

    def __repr__(self) -> str:
        return f"SymbolLibrary(k={self.k})"


@dataclass(frozen=True)
class ExprNode:
    symbol: Symbol
    children: tuple["ExprNode", ...] = field(default=())
    w: float = 1.0
    b: float = 0.0

    def __post_init__(self):
        if len(self.children) != self.symbol.arity:
            raise ExpressionError(
                f"Symbol {self.symbol.name} expects {self.symbol.arity} children, "
                f"got {len(self.children)}"
            )
        if not (math.isfinite(self.w) and math.isfinite(self.b)):
            raise ExpressionError(f"Node constants must be finite, got w={self.w}, b={self.b}")

    @property
    def is_constant(self) -> bool:
        return self.symbol.is_variable and self.w == 0.0

    def iter_preorder(self) -> Iterator["ExprNode"]:
        stack = [self]
        while stack:
            node = stack.pop()
            yield node
            stack.extend(reversed(node.children))


@dataclass(frozen=True)
class Expression:
    """Immutable expression tree over the library for k variables."""

    root: ExprNode
    k: int

    def __post_init__(self):
        if self.k < 1:
            raise ExpressionError(f"Variable count k must be >= 1, got {self.k}")
        for node in self.root.iter_preorder():
            if node.symbol.is_variable and node.symbol.var_index >= self.k:
                raise ExpressionError(
                    f"Variable {node.symbol.name} out of range for k={self.k}"
                )

    @property
    def library(self) -> SymbolLibrary:
        return SymbolLibrary(self.k)

    def nodes(self) -> list[ExprNode]:
        return list(self.root.iter_preorder())

    def __str__(self) -> str:
        return to_infix(self)


# =============================================================================
# Evaluation
# =============================================================================


def _evaluate_node(node: ExprNode, X: Array, policy: EvalPolicy) -> Array:
    if node.symbol.is_variable:
        op = X[:, node.symbol.var_index]
    elif node.symbol.kind is SymbolKind.UNARY:
        op = apply_unary(node.symbol.name, _evaluate_node(node.children[0], X, policy), policy)
    else:
        left = _evaluate_node(node.children[0], X, policy)
        right = _evaluate_node(node.children[1], X, policy)
        op = apply_binary(node.symbol.name, left, right, policy)
    return bound_output(node.w * op + node.b, policy)


def _as_batch(expr: Expression, X) -> Array:
    X = np.asarray(X, dtype=np.float64)
    if X.ndim != 2 or X.shape[1] != expr.k:
        raise DimensionError(f"Expected inputs of shape (m, {expr.k}), got {X.shape}")
    return X


def evaluate(expr: Expression, X, policy: EvalPolicy = DEFAULT_POLICY) -> Array:
    """Evaluate an expression on every row of an (m, k) input matrix."""
    X = _as_batch(expr, X)
    with np.errstate(over="ignore", invalid="ignore"):
        return _evaluate_node(expr.root, X, policy)


def eval_expr(expr: Expression, x, policy: EvalPolicy = DEFAULT_POLICY) -> float:
    """Evaluate an expression at a single point x of length k."""
    x = np.asarray(x, dtype=np.float64)
    if x.ndim != 1 or x.shape[0] != expr.k:
        raise DimensionError(f"Expected a point of length {expr.k}, got shape {x.shape}")
    return float(evaluate(expr, x[np.newaxis, :], policy)[0])


def node_count(expr: Expression | ExprNode) -> int:
    """Number of tree nodes (operators and leaves); constants w, b are not nodes."""
    root = expr.root if isinstance(expr, Expression) else expr
    return sum(1 for _ in root.iter_preorder())


# =============================================================================
# Constants
# =============================================================================


def constants(expr: Expression) -> tuple[Array, Array]:
    """(w, b) of every node in preorder."""
    nodes = expr.nodes()
    return (
        np.array([node.w for node in nodes], dtype=np.float64),
        np.array([node.b for node in nodes], dtype=np.float64),
    )


def with_constants(expr: Expression, w: Sequence[float], b: Sequence[float]) -> Expression:
    """Copy of expr with its preorder (w, b) replaced."""
    if len(w) != len(b) or len(w) != node_count(expr):
        raise ExpressionError(
            f"Expected {node_count(expr)} constants, got w={len(w)}, b={len(b)}"
        )
    values = iter(zip(w, b))

    def rebuild(node: ExprNode) -> ExprNode:
        node_w, node_b = next(values)
        children = tuple(rebuild(child) for child in node.children)
        return ExprNode(node.symbol, children, float(node_w), float(node_b))

    return Expression(rebuild(expr.root), expr.k)


@dataclass
class _ConstantTapeEntry:
    node: ExprNode
    op: Array
    pre: Array
    child_values: list[Array]
    child_ids: list[int]


def _forward_with_tape(
    node: ExprNode, X: Array, policy: EvalPolicy, tape: list[_ConstantTapeEntry]
) -> Array:
    position = len(tape)
    tape.append(None)  # placeholder keeps preorder positions
    child_ids, child_values = [], []
    for child in node.children:
        child_ids.append(len(tape))
        child_values.append(_forward_with_tape(child, X, policy, tape))

    if node.symbol.is_variable:
        op = X[:, node.symbol.var_index]
    elif node.symbol.kind is SymbolKind.UNARY:
        op = apply_unary(node.symbol.name, child_values[0], policy)
    else:
        op = apply_binary(node.symbol.name, child_values[0], child_values[1], policy)
    pre = node.w * op + node.b
    tape[position] = _ConstantTapeEntry(node, op, pre, child_values, child_ids)
    return bound_output(pre, policy)


def constant_gradients(
    expr: Expression, X, y, policy: EvalPolicy = DEFAULT_POLICY
) -> tuple[float, Array, Array]:
    """
    Mean squared error of expr on (X, y) and its exact gradient.

    Returns:
        (mse, dmse_dw, dmse_db) with gradients in preorder node order
    """
    X = _as_batch(expr, X)
    y = np.asarray(y, dtype=np.float64)
    tape: list[_ConstantTapeEntry] = []
    with np.errstate(over="ignore", invalid="ignore"):
        y_hat = _forward_with_tape(expr.root, X, policy, tape)
        residual = y_hat - y
        mse = float(np.mean(residual**2))

        grad_w = np.zeros(len(tape))
        grad_b = np.zeros(len(tape))
        upstream: list[Array | None] = [None] * len(tape)
        upstream[0] = 2.0 * residual / len(y)

        for i, entry in enumerate(tape):
            g = upstream[i] * bound_mask(entry.pre, policy)
            grad_w[i] = np.sum(g * entry.op)
            grad_b[i] = np.sum(g)
            g_op = g * entry.node.w
            symbol = entry.node.symbol
            if symbol.kind is SymbolKind.UNARY:
                upstream[entry.child_ids[0]] = g_op * unary_derivative(
                    symbol.name, entry.child_values[0], policy
                )
            elif symbol.kind is SymbolKind.BINARY:
                d_left, d_right = binary_partials(symbol.name, *entry.child_values, policy)
                upstream[entry.child_ids[0]] = g_op * d_left
                upstream[entry.child_ids[1]] = g_op * d_right

    return mse, grad_w, grad_b


# =============================================================================
# Prefix codec and rendering
# =============================================================================


def _format_constant(value: float) -> str:
    return repr(float(value))


def to_prefix(expr: Expression) -> str:
    tokens: list[str] = []
    for node in expr.root.iter_preorder():
        if node.w != 1.0 or node.b != 0.0:
            tokens += [AFFINE_TOKEN, _format_constant(node.w), _format_constant(node.b)]
        tokens.append(node.symbol.name)
    return " ".join(tokens)


def parse_prefix(tokens: str | Sequence[str], k: int) -> Expression:
    """
    Parse prefix tokens into an Expression over the library for k variables.

    Raises:
        ExpressionParseError: unknown token, missing operand, bad literal, or
            tokens left over after a complete expression
    """
    library = SymbolLibrary(k)
    if isinstance(tokens, str):
        tokens = tokens.split()
    tokens = list(tokens)
    if not tokens:
        raise ExpressionParseError("Empty expression")

    position = 0

    def take_literal(owner: int) -> float:
        nonlocal position
        if position >= len(tokens):
            raise ExpressionParseError(f"'affine' at position {owner} is missing a constant")
        token = tokens[position]
        try:
            value = float(token)
        except ValueError:
            raise ExpressionParseError(
                f"Invalid constant {token!r} at position {position}"
            ) from None
        if not math.isfinite(value):
            raise ExpressionParseError(f"Non-finite constant {token!r} at position {position}")
        position += 1
        return value

    def parse_node(parent: tuple[str, int] | None) -> ExprNode:
        nonlocal position
        if position >= len(tokens):
            if parent is None:
                raise ExpressionParseError("Expression ended unexpectedly")
            raise ExpressionParseError(
                f"Operator {parent[0]!r} at position {parent[1]} is missing an operand"
            )
        w, b = 1.0, 0.0
        if tokens[position] == AFFINE_TOKEN:
            owner = position
            position += 1
            w = take_literal(owner)
            b = take_literal(owner)
            if position >= len(tokens):
                raise ExpressionParseError(
                    f"'affine' at position {owner} is not followed by a symbol"
                )
        token = tokens[position]
        symbol = library.from_token(token)
        if symbol is None:
            raise ExpressionParseError(f"Unknown token {token!r} at position {position}")
        here = (token, position)
        position += 1
        children = tuple(parse_node(here) for _ in range(symbol.arity))
        return ExprNode(symbol, children, w, b)

    root = parse_node(None)
    if position != len(tokens):
        raise ExpressionParseError(
            f"Trailing tokens after position {position - 1}: {' '.join(tokens[position:])}"
        )
    return Expression(root, k)


def _render(node: ExprNode) -> str:
    if node.is_constant:
        return f"{node.b:.6g}"
    if node.symbol.is_variable:
        inner = node.symbol.name
    elif node.symbol.kind is SymbolKind.UNARY:
        inner = f"{node.symbol.name}({_render(node.children[0])})"
    else:
        left, right = (_render(child) for child in node.children)
        inner = f"({left} {node.symbol.name} {right})"
    if node.w != 1.0:
        inner = f"{node.w:.6g}*{inner}"
    if node.b > 0:
        inner = f"({inner} + {node.b:.6g})"
    elif node.b < 0:
        inner = f"({inner} - {-node.b:.6g})"
    return inner


def to_infix(expr: Expression) -> str:
    """Human-readable rendering, constants shown to 6 significant digits."""
    return _render(expr.root)


# =============================================================================
# Tree edit distance
# =============================================================================


def masked_label(node: ExprNode) -> str:
    """Node label with constant values masked; variables stay distinct."""
    return CONST_LABEL if node.is_constant else node.symbol.name


def _to_zss(node: ExprNode) -> zss.Node:
    return zss.Node(masked_label(node), [_to_zss(child) for child in node.children])


def _unit_cost(a: str, b: str) -> int:
    return 0 if a == b else 1


def tree_edit_distance(a: Expression, b: Expression) -> int:
    """
    Ordered-tree edit distance with unit relabel/insert/delete costs.

    Affine constants are ignored and constant leaves share a single label.
    """
    distance = zss.simple_distance(_to_zss(a.root), _to_zss(b.root), label_dist=_unit_cost)
    return int(round(distance))
