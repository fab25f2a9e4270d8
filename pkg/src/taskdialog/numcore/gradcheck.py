"""Central finite-difference gradient checking.

Run in float64: the checks compare analytic grads against
(f(x+eps) - f(x-eps)) / (2 eps) elementwise with a relative error that
falls back to an absolute scale for near-zero gradients.
"""

from __future__ import annotations

import numpy as np

from .tensor import Tensor, backward


def analytic_grads(loss_fn, params: dict[str, Tensor]) -> dict[str, np.ndarray]:
    for p in params.values():
        p.grad = None
    loss = loss_fn()
    backward(loss)
    return {name: (p.grad.copy() if p.grad is not None else np.zeros_like(p.data))
            for name, p in params.items()}


def numeric_grads(loss_fn, params: dict[str, Tensor], eps: float = 1e-5) -> dict[str, np.ndarray]:
    out = {}
    for name, p in params.items():
        flat = p.data.reshape(-1)
        grad = np.zeros_like(flat)
        for i in range(flat.size):
            orig = flat[i]
            flat[i] = orig + eps
            up = float(loss_fn().data)
            flat[i] = orig - eps
            down = float(loss_fn().data)
            flat[i] = orig
            grad[i] = (up - down) / (2.0 * eps)
        out[name] = grad.reshape(p.data.shape)
    return out


def max_relative_error(analytic: dict[str, np.ndarray],
                       numeric: dict[str, np.ndarray],
                       floor: float = 1e-3) -> tuple[float, str]:
    """Worst elementwise |a-n| / max(|a|, |n|, floor) and where it occurs."""
    worst, worst_name = 0.0, ""
    for name in analytic:
        a, n = analytic[name], numeric[name]
        denom = np.maximum(np.maximum(np.abs(a), np.abs(n)), floor)
        err = np.abs(a - n) / denom
        local = float(err.max()) if err.size else 0.0
        if local > worst:
            worst, worst_name = local, name
    return worst, worst_name


def check_gradients(loss_fn, params: dict[str, Tensor],
                    eps: float = 1e-5, tol: float = 1e-4) -> float:
    """Assert-style check; returns the max relative error."""
    ana = analytic_grads(loss_fn, params)
    num = numeric_grads(loss_fn, params, eps=eps)
    worst, name = max_relative_error(ana, num)
    if worst >= tol:
        raise AssertionError(f"gradient mismatch on '{name}': max rel err {worst:.3e} >= {tol:g}")
    return worst
