"""
Expression extraction from a trained MetaNetwork, and the rebuild step that
turns an extracted expression back into a network (structure growth and
reduction).

Extraction rules:
- PanguNode: the symbol at argmax(Z). Binary symbols keep both children,
  unary symbols keep the left child, a variable symbol prunes the subtree.
- VariableNode: v is the leaf's mean output over the probe batch, w and b
  included. The two most probable variables (xl, xr) feed every library
  candidate; the candidate whose raw batch mean is closest to v wins. An
  operator candidate grows the leaf into an operator over xl (and xr).
  Near-ties keep the variable D already selects, and a leaf with w == 0
  never grows.
Other ties go to the lowest index.
"""

from dataclasses import asdict, dataclass, field

import numpy as np

from expression import Expression, ExprNode, Symbol, SymbolKind, SymbolLibrary, evaluate
from logging_config import get_logger
from meta_network import (
    MetaNetwork,
    NetworkError,
    PanguNode,
    VariableNode,
    forward,
    snapshot,
)
from operators import DEFAULT_POLICY, OPERATORS, EvalPolicy, candidate_outputs

logger = get_logger(__name__)

PANGU_ARGMAX = "pangu-argmax"
LEAF_CLOSEST = "leaf-top2-closest"

SATURATION_MARGIN = 40.0
TIE_TOLERANCE = 1e-9


@dataclass
class NodeDecision:
    node_id: int
    kind: str
    symbol: str
    in_expression: bool = True
    var_pair: tuple[int, int] | None = None
    distances: list[float] | None = None

    def to_dict(self) -> dict:
        return asdict(self)


@dataclass
class ExtractionTrace:
    decisions: list[NodeDecision] = field(default_factory=list)

    def to_dict(self) -> dict:
        return {"decisions": [decision.to_dict() for decision in self.decisions]}

    def __len__(self) -> int:
        return len(self.decisions)


def argmax2(D) -> tuple[int, int]:
    """Indices of the two largest entries, largest first; (0, 0) when k == 1."""
    D = np.asarray(D, dtype=np.float64)
    if D.size == 0:
        raise NetworkError("argmax2 needs at least one entry")
    if D.size == 1:
        return 0, 0
    order = np.argsort(-D, kind="stable")
    return int(order[0]), int(order[1])


def _leaf_candidates(
    node: VariableNode, out, X, policy: EvalPolicy, allow_growth: bool
) -> tuple[tuple[int, int], np.ndarray]:
    i_l, i_r = argmax2(node.D)
    O = candidate_outputs(X[:, i_l], X[:, i_r], X, policy)
    v = np.mean(out)
    distances = np.abs(np.mean(O, axis=0) - v)
    distances = np.where(np.isfinite(distances), distances, np.inf)
    # a constant leaf (w == 0) stays a constant
    if not allow_growth or node.w == 0.0:
        distances[: len(OPERATORS)] = np.inf
    return (i_l, i_r), distances


def _closest(distances: np.ndarray, preferred: int, scale: float) -> int:
    """argmin of distances; candidates within TIE_TOLERANCE of the minimum lose to `preferred`."""
    best = int(np.argmin(distances))
    tolerance = TIE_TOLERANCE * max(1.0, scale)
    if distances[preferred] - distances[best] <= tolerance:
        return preferred
    return best


def _leaf_expression(symbol: Symbol, pair: tuple[int, int], w: float, b: float) -> ExprNode:
    if symbol.kind is SymbolKind.VARIABLE:
        return ExprNode(symbol, (), w, b)
    left = ExprNode(Symbol.variable(pair[0]))
    if symbol.kind is SymbolKind.UNARY:
        return ExprNode(symbol, (left,), w, b)
    return ExprNode(symbol, (left, ExprNode(Symbol.variable(pair[1]))), w, b)


def extract_expression(
    net: MetaNetwork,
    X_probe,
    policy: EvalPolicy = DEFAULT_POLICY,
    c: float = 1.0,
    allow_growth: bool = True,
) -> tuple[Expression, ExtractionTrace]:
    """
    Map every selection vector to a single symbol and build the expression.

    Args:
        net: Network to read (not modified)
        X_probe: Inputs whose batch means define leaf values
        policy: Protection thresholds
        c: PanguNode softmax temperature for the probe forward pass
        allow_growth: When False, leaves only select variables

    Returns:
        (expression, trace) with one trace record per network node
    """
    library = SymbolLibrary(net.k)
    _, tape = forward(net, X_probe, policy, c)
    X = np.asarray(X_probe, dtype=np.float64)

    decisions: list[NodeDecision] = []
    with np.errstate(over="ignore", invalid="ignore"):
        for node_id, entry in enumerate(tape.entries):
            node = entry.node
            if isinstance(node, PanguNode):
                symbol = library.symbol_at(int(np.argmax(node.Z)))
                decisions.append(NodeDecision(node_id, PANGU_ARGMAX, symbol.name))
            else:
                pair, distances = _leaf_candidates(node, entry.out, X, policy, allow_growth)
                preferred = len(OPERATORS) + pair[0]
                scale = abs(float(np.mean(entry.out)))
                symbol = library.symbol_at(_closest(distances, preferred, scale))
                decisions.append(
                    NodeDecision(
                        node_id,
                        LEAF_CLOSEST,
                        symbol.name,
                        var_pair=pair,
                        distances=[float(d) for d in distances],
                    )
                )

    for decision in decisions:
        decision.in_expression = False
    entries = tape.entries

    def build(node_id: int) -> ExprNode:
        decision = decisions[node_id]
        decision.in_expression = True
        node = entries[node_id].node
        symbol = library.from_token(decision.symbol)
        if isinstance(node, VariableNode):
            return _leaf_expression(symbol, decision.var_pair, node.w, node.b)
        left_id, right_id = entries[node_id].child_ids
        if symbol.kind is SymbolKind.VARIABLE:
            children = ()
        elif symbol.kind is SymbolKind.UNARY:
            children = (build(left_id),)
        else:
            children = (build(left_id), build(right_id))
        return ExprNode(symbol, children, node.w, node.b)

    expr = Expression(build(0), net.k)
    return expr, ExtractionTrace(decisions)


def rebuild_network(
    expr: Expression, k: int, seed: int, margin: float = 3.0, std: float = 0.1
) -> MetaNetwork:
    """
    Completion structure for an extracted expression.

    Operators become PanguNodes and leaves become VariableNodes, each with
    logits N(0, std) plus `margin` on the slot of its current symbol. Unary
    operators get a fresh VariableNode as right child. (w, b) carry over.
    """
    library = SymbolLibrary(k)
    n = library.size
    rng = np.random.default_rng(seed)

    def build(node: ExprNode):
        if node.symbol.is_variable:
            D = rng.normal(0.0, std, k)
            D[node.symbol.var_index] += margin
            return VariableNode(D=D, w=node.w, b=node.b)
        Z = rng.normal(0.0, std, n)
        Z[library.index_of(node.symbol)] += margin
        left = build(node.children[0])
        if node.symbol.kind is SymbolKind.UNARY:
            right = VariableNode(D=rng.normal(0.0, std, k))
        else:
            right = build(node.children[1])
        return PanguNode(Z=Z, left=left, right=right, w=node.w, b=node.b)

    return MetaNetwork(build(expr.root), k, seed)


def saturate(net: MetaNetwork, margin: float = SATURATION_MARGIN) -> MetaNetwork:
    """Set every logit vector to `margin` at its argmax and 0 elsewhere, in place."""
    for node in net.nodes:
        logits = node.logits
        chosen = int(np.argmax(logits))
        logits[:] = 0.0
        logits[chosen] = margin
    return net


def saturate_and_check(
    net: MetaNetwork,
    X,
    policy: EvalPolicy = DEFAULT_POLICY,
    c: float = 1.0,
    margin: float = SATURATION_MARGIN,
) -> float:
    """
    Max |network output - extracted expression| over the batch after saturating
    a copy of net.
    """
    saturated = saturate(snapshot(net), margin)
    y_net, _ = forward(saturated, X, policy, c)
    expr, _ = extract_expression(saturated, X, policy, c)
    y_expr = evaluate(expr, X, policy)
    deviation = float(np.max(np.abs(y_net - y_expr)))
    logger.debug("Saturation check", extra={"deviation": deviation, "nodes": net.node_count()})
    return deviation
