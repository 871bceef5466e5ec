"""
Differentiable tree network of softmax-gated operator nodes.

A PanguNode mixes every library candidate evaluated on its two children:

    O = [xl+xr, xl-xr, xl*xr, xl/xr, sin xl, cos xl, exp xl, log xl, sqrt xl, x1..xk]
    E = softmax(c * (Z - max Z))
    out = w * (O . E) + b

A VariableNode (leaf) mixes the raw inputs: out = w * (softmax(D) . x) + b.
The temperature c only sharpens PanguNode selections.

forward() records a preorder tape; backward() runs exact reverse mode over it
for the loss MSE + entropy term (see trainer.loss).
"""

import copy
from dataclasses import dataclass, field

import numpy as np

from expression import DimensionError, SymbolLibrary
from logging_config import get_logger
from operators import (
    DEFAULT_POLICY,
    OPERATORS,
    Array,
    EvalPolicy,
    bound_mask,
    bound_output,
    candidate_outputs,
    candidate_partials,
)

logger = get_logger(__name__)

# selection weights below this are treated as exactly zero
WEIGHT_FLOOR = 1e-15


class NetworkError(ValueError):
    """Raised for invalid network construction or use."""

    pass


class TapeMismatchError(NetworkError):
    """Raised when a tape does not belong to the network or batch given to backward."""

    pass


def selection_weights(logits: Array, c: float = 1.0) -> Array:
    """
    Softmax of c*(logits - max) over the candidates whose weight reaches WEIGHT_FLOOR.

    Candidates under the floor get exactly 0 and the rest are renormalised, which
    is an exact softmax over the kept set.
    """
    logits = np.asarray(logits, dtype=np.float64)
    scaled = c * (logits - np.max(logits))
    weights = np.exp(scaled)
    weights /= weights.sum()
    kept = weights >= WEIGHT_FLOOR
    if not kept.all():
        weights = np.where(kept, np.exp(scaled), 0.0)
        weights /= weights.sum()
    return weights


@dataclass
class VariableNode:
    D: Array
    w: float = 1.0
    b: float = 0.0

    @property
    def children(self) -> tuple:
        return ()

    @property
    def logits(self) -> Array:
        return self.D


@dataclass
class PanguNode:
    Z: Array
    left: "PanguNode | VariableNode"
    right: "PanguNode | VariableNode"
    w: float = 1.0
    b: float = 0.0

    @property
    def children(self) -> tuple:
        return (self.left, self.right)

    @property
    def logits(self) -> Array:
        return self.Z


Node = PanguNode | VariableNode


@dataclass
class MetaNetwork:
    root: Node
    k: int
    rng_seed: int = 0

    def __post_init__(self):
        if self.k < 1:
            raise NetworkError(f"Variable count k must be >= 1, got {self.k}")
        n = len(OPERATORS) + self.k
        for node in self.nodes:
            if isinstance(node, PanguNode) and node.Z.shape != (n,):
                raise NetworkError(f"PanguNode Z must have length {n}, got {node.Z.shape}")
            if isinstance(node, VariableNode) and node.D.shape != (self.k,):
                raise NetworkError(f"VariableNode D must have length {self.k}, got {node.D.shape}")

    @property
    def library(self) -> SymbolLibrary:
        return SymbolLibrary(self.k)

    @property
    def nodes(self) -> list[Node]:
        """All nodes in preorder (parent, left subtree, right subtree)."""
        ordered, stack = [], [self.root]
        while stack:
            node = stack.pop()
            ordered.append(node)
            stack.extend(reversed(node.children))
        return ordered

    @property
    def pangu_nodes(self) -> list[PanguNode]:
        return [node for node in self.nodes if isinstance(node, PanguNode)]

    @property
    def variable_nodes(self) -> list[VariableNode]:
        return [node for node in self.nodes if isinstance(node, VariableNode)]

    # Parameter-group views. W and B are copies; Z and D list the live arrays.
    @property
    def W(self) -> Array:
        return np.array([node.w for node in self.nodes], dtype=np.float64)

    @property
    def B(self) -> Array:
        return np.array([node.b for node in self.nodes], dtype=np.float64)

    @property
    def Z(self) -> list[Array]:
        return [node.Z for node in self.pangu_nodes]

    @property
    def D(self) -> list[Array]:
        return [node.D for node in self.variable_nodes]

    def node_count(self) -> int:
        return len(self.nodes)

    def parameter_count(self) -> int:
        return sum(2 + node.logits.size for node in self.nodes)

    def selection_confidence(self, c: float = 1.0) -> float:
        """Mean of max(E) over PanguNodes; 1.0 for a network without any."""
        pangu = self.pangu_nodes
        if not pangu:
            return 1.0
        return float(np.mean([selection_weights(node.Z, c).max() for node in pangu]))


@dataclass(frozen=True)
class InitSpec:
    depth: int = 2
    std: float = 0.1


def init_network(k: int, init: InitSpec, seed: int) -> MetaNetwork:
    """
    Full tree of PanguNodes to the given depth with VariableNode leaves.

    Logits are drawn i.i.d. N(0, std) in preorder from a generator seeded with
    `seed`; every w = 1 and b = 0.
    """
    if k < 1:
        raise NetworkError(f"Variable count k must be >= 1, got {k}")
    if init.depth < 1:
        raise NetworkError(f"Initial depth must be >= 1, got {init.depth}")
    rng = np.random.default_rng(seed)
    n = len(OPERATORS) + k

    def build(level: int) -> Node:
        if level == init.depth:
            return VariableNode(D=rng.normal(0.0, init.std, k))
        z = rng.normal(0.0, init.std, n)
        left = build(level + 1)
        right = build(level + 1)
        return PanguNode(Z=z, left=left, right=right)

    net = MetaNetwork(build(0), k, seed)
    logger.debug(
        "Network initialised",
        extra={"k": k, "depth": init.depth, "seed": seed, "nodes": net.node_count()},
    )
    return net


def snapshot(net: MetaNetwork) -> MetaNetwork:
    return copy.deepcopy(net)


# =============================================================================
# Forward / backward
# =============================================================================


@dataclass
class TapeEntry:
    node: Node
    O: Array  # (m, 9 + k) candidates for PanguNodes, (m, k) inputs for leaves
    E: Array
    mix: Array
    pre: Array
    out: Array
    xl: Array | None = None
    xr: Array | None = None
    child_ids: tuple[int, ...] = ()


@dataclass
class ForwardTape:
    entries: list[TapeEntry]
    batch_size: int
    c: float
    policy: EvalPolicy

    @property
    def output(self) -> Array:
        return self.entries[0].out

    def pangu_entries(self) -> list[TapeEntry]:
        return [entry for entry in self.entries if isinstance(entry.node, PanguNode)]


@dataclass
class Gradients:
    """Gradient layout mirroring MetaNetwork.W, .B, .Z and .D."""

    w: Array
    b: Array
    z: list[Array] = field(default_factory=list)
    d: list[Array] = field(default_factory=list)

    def group(self, name: str) -> list[Array]:
        if name == "WB":
            return [self.w, self.b]
        if name == "ZD":
            return [*self.z, *self.d]
        raise NetworkError(f"Unknown parameter group: {name!r}")

    def is_finite(self, name: str) -> bool:
        return all(np.all(np.isfinite(g)) for g in self.group(name))


def _forward_node(
    node: Node, X: Array, policy: EvalPolicy, c: float, entries: list[TapeEntry]
) -> Array:
    position = len(entries)
    entries.append(None)  # preorder slot
    if isinstance(node, VariableNode):
        E = selection_weights(node.logits)
        O, xl, xr, child_ids = X, None, None, ()
    else:
        E = selection_weights(node.logits, c)
        left_id = len(entries)
        xl = _forward_node(node.left, X, policy, c, entries)
        right_id = len(entries)
        xr = _forward_node(node.right, X, policy, c, entries)
        O = candidate_outputs(xl, xr, X, policy)
        child_ids = (left_id, right_id)
    mix = O @ E
    pre = node.w * mix + node.b
    out = bound_output(pre, policy)
    entries[position] = TapeEntry(node, O, E, mix, pre, out, xl, xr, child_ids)
    return out


def forward(
    net: MetaNetwork, X, policy: EvalPolicy = DEFAULT_POLICY, c: float = 1.0
) -> tuple[Array, ForwardTape]:
    """Evaluate the network on an (m, k) batch and record the tape for backward."""
    X = np.asarray(X, dtype=np.float64)
    if X.ndim != 2 or X.shape[1] != net.k:
        raise DimensionError(f"Expected inputs of shape (m, {net.k}), got {X.shape}")
    entries: list[TapeEntry] = []
    with np.errstate(over="ignore", invalid="ignore", divide="ignore"):
        y_hat = _forward_node(net.root, X, policy, c, entries)
    return y_hat, ForwardTape(entries, X.shape[0], c, policy)


def entropy_term(tape: ForwardTape, entropy_coef: float) -> float:
    """-lambda * mean over PanguNodes of log(max E); 0 without PanguNodes."""
    pangu = tape.pangu_entries()
    if not pangu:
        return 0.0
    return float(-entropy_coef * np.mean([np.log(entry.E.max()) for entry in pangu]))


def _softmax_backward(E: Array, g_E: Array, c: float) -> Array:
    return c * E * (g_E - E @ g_E)


def backward(net: MetaNetwork, tape: ForwardTape, y, entropy_coef: float) -> Gradients:
    """
    Exact gradients of MSE + entropy term for every w, b, Z and D.

    Raises:
        TapeMismatchError: the tape was recorded on another network or batch
    """
    nodes = net.nodes
    if len(nodes) != len(tape.entries) or any(
        entry.node is not node for entry, node in zip(tape.entries, nodes)
    ):
        raise TapeMismatchError("Tape was not recorded on this network")
    y = np.asarray(y, dtype=np.float64)
    if y.shape != (tape.batch_size,):
        raise TapeMismatchError(
            f"Target of shape {y.shape} does not match tape batch size {tape.batch_size}"
        )

    c = tape.c
    policy = tape.policy
    n_pangu = sum(isinstance(node, PanguNode) for node in nodes)
    grad_w = np.zeros(len(nodes))
    grad_b = np.zeros(len(nodes))
    grad_z: list[Array] = []
    grad_d: list[Array] = []
    upstream: list[Array | None] = [None] * len(nodes)

    with np.errstate(over="ignore", invalid="ignore"):
        upstream[0] = 2.0 * (tape.output - y) / tape.batch_size
        for i, entry in enumerate(tape.entries):
            node = entry.node
            g = upstream[i] * bound_mask(entry.pre, policy)
            grad_w[i] = np.sum(g * entry.mix)
            grad_b[i] = np.sum(g)
            g_mix = g * node.w
            if isinstance(node, VariableNode):
                grad_d.append(_softmax_backward(entry.E, entry.O.T @ g_mix, 1.0))
                continue

            g_logits = _softmax_backward(entry.E, entry.O.T @ g_mix, c)

            # entropy term: d/dZ of -lambda/M * log(E_a), a = argmax
            chosen = np.zeros_like(entry.E)
            chosen[int(np.argmax(entry.E))] = 1.0
            g_logits = g_logits - entropy_coef / n_pangu * c * (chosen - entry.E)
            grad_z.append(g_logits)

            d_left, d_right = candidate_partials(entry.xl, entry.xr, net.k, policy)
            left_id, right_id = entry.child_ids
            upstream[left_id] = g_mix * (d_left @ entry.E)
            upstream[right_id] = g_mix * (d_right @ entry.E)

    return Gradients(grad_w, grad_b, grad_z, grad_d)


# =============================================================================
# Debugging dump
# =============================================================================


def _format_vector(values: Array) -> str:
    return "[" + ", ".join(repr(float(v)) for v in values) + "]"


def dump_network(net: MetaNetwork) -> str:
    """Prefix-order dump, one node per line, indented by depth, with raw logits."""
    lines = [f"# MetaNetwork k={net.k} nodes={net.node_count()} seed={net.rng_seed}"]

    def visit(node: Node, depth: int) -> None:
        pad = "  " * depth
        if isinstance(node, PanguNode):
            lines.append(f"{pad}pangu w={node.w!r} b={node.b!r} Z={_format_vector(node.Z)}")
            visit(node.left, depth + 1)
            visit(node.right, depth + 1)
        else:
            lines.append(f"{pad}var w={node.w!r} b={node.b!r} D={_format_vector(node.D)}")

    visit(net.root, 0)
    return "\n".join(lines)
