"""
Protected numeric primitives for the operator library.

Every operator is total on finite inputs:
- ÷ uses the denominator sign(d)*max(|d|, epsilon), with sign(0) taken as +1
- log uses log(max(|u|, epsilon))
- sqrt uses sqrt(|u|)
- exp uses exp(min(u, clamp_exp))

Derivatives are those of the protected forms, so analytic gradients agree with
finite differences away from the epsilon kinks.
"""

from dataclasses import dataclass

import numpy as np
import numpy.typing as npt

Array = npt.NDArray[np.float64]

BINARY_OPERATORS: tuple[str, ...] = ("+", "-", "*", "/")
UNARY_OPERATORS: tuple[str, ...] = ("sin", "cos", "exp", "log", "sqrt")
OPERATORS: tuple[str, ...] = BINARY_OPERATORS + UNARY_OPERATORS


@dataclass(frozen=True)
class EvalPolicy:
    """Protection thresholds shared by evaluation, training and extraction."""

    epsilon: float = 1e-6
    clamp_exp: float = 50.0
    # node outputs are clipped to [-bound, bound]; bound**2 must stay finite
    bound: float = 1e150

    def __post_init__(self):
        if not self.epsilon > 0:
            raise ValueError(f"epsilon must be > 0, got {self.epsilon!r}")
        if not self.clamp_exp > 0:
            raise ValueError(f"clamp_exp must be > 0, got {self.clamp_exp!r}")
        if not 0 < self.bound <= 1e150:
            raise ValueError(f"bound must be in (0, 1e150], got {self.bound!r}")


DEFAULT_POLICY = EvalPolicy()


def _denominator(d: Array, epsilon: float) -> Array:
    return np.where(d < 0, -1.0, 1.0) * np.maximum(np.abs(d), epsilon)


def protected_div(a: Array, d: Array, epsilon: float) -> Array:
    return a / _denominator(d, epsilon)


def protected_log(u: Array, epsilon: float) -> Array:
    return np.log(np.maximum(np.abs(u), epsilon))


def protected_sqrt(u: Array) -> Array:
    return np.sqrt(np.abs(u))


def protected_exp(u: Array, clamp_exp: float) -> Array:
    return np.exp(np.minimum(u, clamp_exp))


def apply_binary(name: str, a: Array, b: Array, policy: EvalPolicy) -> Array:
    if name == "+":
        return a + b
    if name == "-":
        return a - b
    if name == "*":
        return a * b
    if name == "/":
        return protected_div(a, b, policy.epsilon)
    raise KeyError(f"Unknown binary operator: {name}")


def apply_unary(name: str, u: Array, policy: EvalPolicy) -> Array:
    if name == "sin":
        return np.sin(u)
    if name == "cos":
        return np.cos(u)
    if name == "exp":
        return protected_exp(u, policy.clamp_exp)
    if name == "log":
        return protected_log(u, policy.epsilon)
    if name == "sqrt":
        return protected_sqrt(u)
    raise KeyError(f"Unknown unary operator: {name}")


def binary_partials(name: str, a: Array, b: Array, policy: EvalPolicy) -> tuple[Array, Array]:
    """Partial derivatives of a binary operator with respect to (a, b)."""
    if name == "+":
        return np.ones_like(a), np.ones_like(b)
    if name == "-":
        return np.ones_like(a), -np.ones_like(b)
    if name == "*":
        return b.copy(), a.copy()
    if name == "/":
        den = _denominator(b, policy.epsilon)
        outside = np.abs(b) >= policy.epsilon
        return 1.0 / den, np.where(outside, -a / (den * den), 0.0)
    raise KeyError(f"Unknown binary operator: {name}")


def unary_derivative(name: str, u: Array, policy: EvalPolicy) -> Array:
    if name == "sin":
        return np.cos(u)
    if name == "cos":
        return -np.sin(u)
    if name == "exp":
        return np.where(u < policy.clamp_exp, protected_exp(u, policy.clamp_exp), 0.0)
    if name == "log":
        outside = np.abs(u) >= policy.epsilon
        return np.where(outside, 1.0 / np.where(outside, u, 1.0), 0.0)
    if name == "sqrt":
        # sqrt(|u|) has an unbounded slope at 0; floor |u| at epsilon**2
        return 0.5 * np.sign(u) / np.sqrt(np.maximum(np.abs(u), policy.epsilon**2))
    raise KeyError(f"Unknown unary operator: {name}")


def bound_output(pre: Array, policy: EvalPolicy) -> Array:
    return np.clip(pre, -policy.bound, policy.bound)


def bound_mask(pre: Array, policy: EvalPolicy) -> Array:
    """Derivative of bound_output: 1 inside the bound, 0 where clipped."""
    return (np.abs(pre) < policy.bound).astype(np.float64)


def candidate_outputs(xl: Array, xr: Array, X: Array, policy: EvalPolicy) -> Array:
    """
    Evaluate every library candidate on (xl, xr) per sample.

    Columns follow library order: the four binary operators on (xl, xr), the
    five unary operators on xl, then the raw input variables.

    Returns:
        Array of shape (m, 9 + k)
    """
    columns = [apply_binary(name, xl, xr, policy) for name in BINARY_OPERATORS]
    columns += [apply_unary(name, xl, policy) for name in UNARY_OPERATORS]
    return np.column_stack([*columns, X])


def candidate_partials(
    xl: Array, xr: Array, k: int, policy: EvalPolicy
) -> tuple[Array, Array]:
    """
    Per-sample derivatives of every candidate with respect to xl and xr.

    Returns:
        (d_left, d_right), each of shape (m, 9 + k); variable columns are zero
    """
    m = xl.shape[0]
    d_left = np.zeros((m, len(OPERATORS) + k))
    d_right = np.zeros((m, len(OPERATORS) + k))
    for col, name in enumerate(BINARY_OPERATORS):
        d_left[:, col], d_right[:, col] = binary_partials(name, xl, xr, policy)
    offset = len(BINARY_OPERATORS)
    for col, name in enumerate(UNARY_OPERATORS):
        d_left[:, offset + col] = unary_derivative(name, xl, policy)
    return d_left, d_right
