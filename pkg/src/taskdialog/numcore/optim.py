"""Adam with bias correction over named parameter dicts."""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .tensor import Tensor


class OptimError(RuntimeError):
    """Raised when an update cannot proceed (e.g. NaN gradients)."""


@dataclass
class OptimizerState:
    learning_rate: float = 0.00025
    beta1: float = 0.9
    beta2: float = 0.999
    epsilon: float = 1e-8
    step_count: int = 0
    first_moment: dict[str, np.ndarray] = field(default_factory=dict)
    second_moment: dict[str, np.ndarray] = field(default_factory=dict)


def adam_step(params: dict[str, Tensor], state: OptimizerState) -> OptimizerState:
    """One Adam update reading grads from param.grad; missing grads are
    treated as zero (the moments still decay). Updates in place.
    """
    state.step_count += 1
    t = state.step_count
    b1, b2 = state.beta1, state.beta2
    bias1 = 1.0 - b1 ** t
    bias2 = 1.0 - b2 ** t
    for name, p in params.items():
        g = p.grad if p.grad is not None else np.zeros_like(p.data)
        if not np.all(np.isfinite(g)):
            raise OptimError(f"non-finite gradient for parameter '{name}' at step {t}")
        m = state.first_moment.get(name)
        v = state.second_moment.get(name)
        if m is None:
            m = np.zeros_like(p.data)
            v = np.zeros_like(p.data)
            state.first_moment[name] = m
            state.second_moment[name] = v
        m *= b1
        m += (1.0 - b1) * g
        v *= b2
        v += (1.0 - b2) * (g * g)
        m_hat = m / bias1
        v_hat = v / bias2
        p.data -= state.learning_rate * m_hat / (np.sqrt(v_hat) + state.epsilon)
    return state


def zero_grads(params: dict[str, Tensor]):
    for p in params.values():
        p.grad = None
