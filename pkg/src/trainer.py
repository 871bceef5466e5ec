"""
Loss, alternating optimization and constant refinement.

One outer iteration:
    1. n_wb SGD steps on every w and b (selection logits frozen)
    2. n_dz SGD steps on every Z and D (w, b frozen)
       (the first iteration repeats 1-2 another warmup_rounds times)
    3. extract an expression, refine its constants, score it
    4. stop on R² > threshold or budget, otherwise rebuild the network from it
"""

import time
from dataclasses import dataclass, field
from typing import Any, NamedTuple

import numpy as np

from benchmarks import Dataset
from expression import (
    Expression,
    constant_gradients,
    constants,
    evaluate,
    node_count,
    to_infix,
    to_prefix,
    with_constants,
)
from extractor import ExtractionTrace, extract_expression, rebuild_network
from logging_config import get_logger
from meta_network import InitSpec, MetaNetwork, backward, entropy_term, forward, init_network
from metrics import DegenerateR2, is_degenerate, r2_value, r_squared
from models import Hyperparams
from operators import DEFAULT_POLICY, EvalPolicy

logger = get_logger(__name__)

GROUPS = ("WB", "ZD")
MIN_REFINE_STEP = 1e-15


class TrainingError(ValueError):
    """Raised for unusable training inputs."""

    pass


class LossBreakdown(NamedTuple):
    total: float
    mse: float
    entropy: float


# stream words keep the seed families apart
TASK_STREAM, DATA_STREAM, REBUILD_STREAM = 1, 2, 3


def derive_seed(seed: int, *keys: int, stream: int = TASK_STREAM) -> int:
    """
    Deterministic child seed for (seed, keys...) within one stream.

    The key count is mixed in, so (1,) and (1, 0) give different seeds.
    """
    entropy = [seed, stream, len(keys), *keys]
    return int(np.random.SeedSequence(entropy).generate_state(1)[0])


def loss(
    net: MetaNetwork,
    X,
    y,
    entropy_coef: float,
    c: float = 1.0,
    policy: EvalPolicy = DEFAULT_POLICY,
) -> LossBreakdown:
    """MSE + entropy term, where entropy = -lambda * mean over PanguNodes of log(max E)."""
    y = np.asarray(y, dtype=np.float64)
    if y.size == 0:
        raise TrainingError("Cannot compute loss on an empty dataset")
    y_hat, tape = forward(net, X, policy, c)
    mse = float(np.mean((y_hat - y) ** 2))
    entropy = entropy_term(tape, entropy_coef)
    return LossBreakdown(mse + entropy, mse, entropy)


def optimize_group(
    net: MetaNetwork,
    group: str,
    steps: int,
    learning_rate: float,
    data: Dataset,
    entropy_coef: float,
    c: float = 1.0,
    policy: EvalPolicy = DEFAULT_POLICY,
    grad_clip: float = 100.0,
) -> MetaNetwork:
    """
    Full-batch SGD on one parameter group, in place.

    "WB" updates every w and b, "ZD" every selection logit vector; the other
    group is never written. Steps with a non-finite gradient are skipped.
    """
    if group not in GROUPS:
        raise TrainingError(f"Unknown parameter group: {group!r}")
    if steps < 1:
        raise TrainingError(f"steps must be >= 1, got {steps}")

    for step in range(steps):
        _, tape = forward(net, data.X, policy, c)
        grads = backward(net, tape, data.y, entropy_coef)
        if not grads.is_finite(group):
            logger.debug("Skipping non-finite step", extra={"group": group, "step": step})
            continue
        if group == "WB":
            w_step = np.clip(grads.w, -grad_clip, grad_clip)
            b_step = np.clip(grads.b, -grad_clip, grad_clip)
            for node, dw, db in zip(net.nodes, w_step, b_step):
                node.w = float(node.w - learning_rate * dw)
                node.b = float(node.b - learning_rate * db)
        else:
            for logits, g in zip(net.Z + net.D, grads.z + grads.d):
                logits -= learning_rate * np.clip(g, -grad_clip, grad_clip)
    return net


def refine_constants(
    expr: Expression,
    data: Dataset,
    iters: int = 500,
    learning_rate: float = 0.01,
    policy: EvalPolicy = DEFAULT_POLICY,
    grad_clip: float = 100.0,
) -> Expression:
    """
    Gradient descent on an expression's (w, b) with the structure frozen.

    Step control backtracks: a step that does not lower the MSE is rejected and
    the step size halved, an accepted step grows it by 10%. The result never
    has a higher MSE than the input. Constant leaves (w == 0) keep w == 0.
    """
    w, b = constants(expr)
    mse, grad_w, grad_b = constant_gradients(expr, data.X, data.y, policy)
    if not np.isfinite(mse):
        return expr
    frozen_w = w == 0.0
    best, step = expr, learning_rate

    for _ in range(iters):
        if step < MIN_REFINE_STEP:
            break
        if not (np.all(np.isfinite(grad_w)) and np.all(np.isfinite(grad_b))):
            break
        grad_w = np.where(frozen_w, 0.0, grad_w)
        cand_w = w - step * np.clip(grad_w, -grad_clip, grad_clip)
        cand_b = b - step * np.clip(grad_b, -grad_clip, grad_clip)
        candidate = with_constants(best, cand_w, cand_b)
        cand_mse, cand_grad_w, cand_grad_b = constant_gradients(candidate, data.X, data.y, policy)
        if np.isfinite(cand_mse) and cand_mse < mse:
            best, w, b, mse = candidate, cand_w, cand_b, cand_mse
            grad_w, grad_b = cand_grad_w, cand_grad_b
            step *= 1.1
        else:
            step *= 0.5
    return best


@dataclass
class FitReport:
    expression: Expression
    r2: float | DegenerateR2
    mse: float
    node_count: int
    evaluation_count: int
    loss_trace: list[tuple[int, float, float, float]] = field(default_factory=list)
    wall_time_s: float = 0.0
    seed: int = 0
    converged: bool = False
    # (evaluation, elapsed seconds, R²) per extraction
    r2_trace: list[tuple[int, float, float | None]] = field(default_factory=list)
    selection_confidence: float = 1.0
    network_nodes: int = 1
    traces: list[ExtractionTrace] = field(default_factory=list)

    @property
    def prefix(self) -> str:
        return to_prefix(self.expression)

    def to_dict(self, include_trace: bool = False) -> dict[str, Any]:
        data = {
            "expression": to_infix(self.expression),
            "prefix": self.prefix,
            "r2": r2_value(self.r2),
            "mse": self.mse,
            "node_count": self.node_count,
            "evaluation_count": self.evaluation_count,
            "converged": self.converged,
            "seed": self.seed,
            "selection_confidence": self.selection_confidence,
            "network_nodes": self.network_nodes,
            "wall_time_s": self.wall_time_s,
            "loss_trace": [list(row) for row in self.loss_trace],
            "r2_trace": [list(row) for row in self.r2_trace],
        }
        if include_trace:
            data["extraction_traces"] = [trace.to_dict() for trace in self.traces]
        return data


def _reached(r2: float | DegenerateR2, mse: float, threshold: float) -> bool:
    if is_degenerate(r2):
        return mse == 0.0
    return r2 > threshold


def alternating_fit(
    data: Dataset,
    hyper: Hyperparams,
    seed: int,
    policy: EvalPolicy = DEFAULT_POLICY,
    record_trace: bool = False,
) -> FitReport:
    """
    Search for an expression fitting data.

    Returns the best extraction seen (lowest MSE, i.e. highest R²). Running out
    of outer iterations or time is reported as converged=False.
    """
    start = time.perf_counter()
    c = hyper.temperature
    net = init_network(data.k, InitSpec(hyper.init_depth, hyper.init_std), seed)

    loss_trace: list[tuple[int, float, float, float]] = []
    r2_trace: list[tuple[int, float, float | None]] = []
    traces: list[ExtractionTrace] = []
    best: tuple[Expression, float | DegenerateR2, float, int] | None = None
    evaluation_count = 0
    converged = False
    confidence = net.selection_confidence(c)

    for outer in range(hyper.max_outer_iters):
        rounds = 1 + hyper.warmup_rounds if outer == 0 else 1
        for _ in range(rounds):
            optimize_group(
                net, "WB", hyper.n_wb, hyper.learning_rate, data, hyper.entropy_coef, c, policy, hyper.grad_clip
            )
            optimize_group(
                net, "ZD", hyper.n_dz, hyper.learning_rate, data, hyper.entropy_coef, c, policy, hyper.grad_clip
            )
        breakdown = loss(net, data.X, data.y, hyper.entropy_coef, c, policy)
        loss_trace.append((outer, breakdown.total, breakdown.mse, breakdown.entropy))

        network_nodes = net.node_count()
        confidence = net.selection_confidence(c)
        expr, trace = extract_expression(
            net, data.X, policy, c, allow_growth=network_nodes < hyper.max_nodes
        )
        expr = refine_constants(
            expr, data, hyper.refine_iters, hyper.learning_rate, policy, hyper.grad_clip
        )
        evaluation_count += 1
        if record_trace:
            traces.append(trace)

        y_hat = evaluate(expr, data.X, policy)
        mse = float(np.mean((y_hat - data.y) ** 2))
        r2 = r_squared(data.y, y_hat)
        elapsed = time.perf_counter() - start
        r2_trace.append((evaluation_count, elapsed, r2_value(r2)))
        logger.debug(
            "Extraction",
            extra={
                "evaluation": evaluation_count,
                "r2": r2_value(r2),
                "nodes": node_count(expr),
                "loss": breakdown.total,
            },
        )

        if best is None or mse < best[2]:
            best = (expr, r2, mse, network_nodes)
        if _reached(r2, mse, hyper.r2_threshold):
            converged = True
            break
        if hyper.time_budget_s is not None and elapsed > hyper.time_budget_s:
            logger.debug("Time budget exhausted", extra={"evaluation": evaluation_count})
            break
        net = rebuild_network(
            expr,
            data.k,
            derive_seed(seed, outer, stream=REBUILD_STREAM),
            hyper.rebuild_margin,
            hyper.init_std,
        )

    best_expr, best_r2, best_mse, best_nodes = best
    report = FitReport(
        expression=best_expr,
        r2=best_r2,
        mse=best_mse,
        node_count=node_count(best_expr),
        evaluation_count=evaluation_count,
        loss_trace=loss_trace,
        wall_time_s=time.perf_counter() - start,
        seed=seed,
        converged=converged,
        r2_trace=r2_trace,
        selection_confidence=confidence,
        network_nodes=best_nodes,
        traces=traces,
    )
    logger.info(
        "Fit complete",
        extra={
            "dataset": data.name,
            "seed": seed,
            "r2": r2_value(best_r2),
            "evaluations": evaluation_count,
            "converged": converged,
        },
    )
    return report
