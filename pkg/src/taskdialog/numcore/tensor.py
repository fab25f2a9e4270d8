"""Reverse-mode autodiff over dense numpy arrays.

Deliberately small: only the ops the dialogue network needs. Every op
records its parents and a backward closure on a tape; `backward()` walks
the tape once in reverse topological order. float32 is the training
dtype, float64 is used by the finite-difference gradient checks; ops
inherit the dtype of their inputs.
"""

from __future__ import annotations

import numpy as np


class ShapeError(ValueError):
    """Operand shapes are inconsistent with the op contract."""


class GraphError(RuntimeError):
    """Misuse of the tape (e.g. backward on a non-scalar)."""


class EmptySourceError(ValueError):
    """An op that needs a nonempty source got an empty one."""


_grad_enabled = True


class no_grad:
    """Context manager that stops ops from recording the tape."""

    def __enter__(self):
        global _grad_enabled
        self._prev = _grad_enabled
        _grad_enabled = False
        return self

    def __exit__(self, *exc):
        global _grad_enabled
        _grad_enabled = self._prev
        return False


def _as_array(data, dtype=None):
    arr = np.asarray(data, dtype=dtype)
    if arr.dtype not in (np.float32, np.float64):
        arr = arr.astype(np.float32)
    return arr


class Tensor:
    __slots__ = ("data", "grad", "requires_grad", "_parents", "_backward")

    def __init__(self, data, requires_grad: bool = False, dtype=None):
        self.data = _as_array(data, dtype)
        self.grad = None
        self.requires_grad = bool(requires_grad)
        self._parents: tuple[Tensor, ...] = ()
        self._backward = None

    @property
    def shape(self):
        return self.data.shape

    @property
    def dtype(self):
        return self.data.dtype

    def item(self) -> float:
        return float(self.data)

    def zero_grad(self):
        self.grad = None

    def detach(self) -> "Tensor":
        return Tensor(self.data.copy())

    def __repr__(self):
        return f"Tensor(shape={self.data.shape}, dtype={self.data.dtype.name}, requires_grad={self.requires_grad})"

    # arithmetic sugar; the real work is in the module-level ops
    def __add__(self, other):
        return add(self, other)

    def __mul__(self, other):
        return mul(self, other)

    def __sub__(self, other):
        return sub(self, other)

    def __neg__(self):
        return neg(self)

    def __matmul__(self, other):
        return matmul(self, other)


def _node(data, parents, backward) -> Tensor:
    """Create an op result, recording the tape only when grads are on."""
    out = Tensor(data)
    if _grad_enabled and any(p.requires_grad for p in parents):
        out.requires_grad = True
        out._parents = tuple(parents)
        out._backward = backward
    return out


def accumulate_grad(t: Tensor, g: np.ndarray):
    if not t.requires_grad:
        return
    if t.grad is None:
        t.grad = np.array(g, dtype=t.data.dtype, copy=True)
    else:
        t.grad += g


def _unbroadcast(g: np.ndarray, shape) -> np.ndarray:
    """Sum g down to `shape` (inverse of numpy broadcasting)."""
    while g.ndim > len(shape):
        g = g.sum(axis=0)
    for axis, n in enumerate(shape):
        if n == 1 and g.shape[axis] != 1:
            g = g.sum(axis=axis, keepdims=True)
    return g


def _wrap(x) -> Tensor:
    return x if isinstance(x, Tensor) else Tensor(x)


# ---------------------------------------------------------------------------
# elementwise ops
# ---------------------------------------------------------------------------


def add(a, b) -> Tensor:
    a, b = _wrap(a), _wrap(b)
    data = a.data + b.data

    def backward(g):
        accumulate_grad(a, _unbroadcast(g, a.data.shape))
        accumulate_grad(b, _unbroadcast(g, b.data.shape))

    return _node(data, (a, b), backward)


def sub(a, b) -> Tensor:
    a, b = _wrap(a), _wrap(b)
    data = a.data - b.data

    def backward(g):
        accumulate_grad(a, _unbroadcast(g, a.data.shape))
        accumulate_grad(b, _unbroadcast(-g, b.data.shape))

    return _node(data, (a, b), backward)


def neg(a) -> Tensor:
    a = _wrap(a)

    def backward(g):
        accumulate_grad(a, -g)

    return _node(-a.data, (a,), backward)


def mul(a, b) -> Tensor:
    a, b = _wrap(a), _wrap(b)
    data = a.data * b.data

    def backward(g):
        accumulate_grad(a, _unbroadcast(g * b.data, a.data.shape))
        accumulate_grad(b, _unbroadcast(g * a.data, b.data.shape))

    return _node(data, (a, b), backward)


def scale(a: Tensor, c: float) -> Tensor:
    c = float(c)

    def backward(g):
        accumulate_grad(a, g * c)

    return _node(a.data * c, (a,), backward)


def tanh(a: Tensor) -> Tensor:
    out_data = np.tanh(a.data)

    def backward(g):
        accumulate_grad(a, g * (1.0 - out_data * out_data))

    return _node(out_data, (a,), backward)


def sigmoid(a: Tensor) -> Tensor:
    out_data = 1.0 / (1.0 + np.exp(-a.data))

    def backward(g):
        accumulate_grad(a, g * out_data * (1.0 - out_data))

    return _node(out_data, (a,), backward)


def exp(a: Tensor) -> Tensor:
    out_data = np.exp(a.data)

    def backward(g):
        accumulate_grad(a, g * out_data)

    return _node(out_data, (a,), backward)


def log(a: Tensor) -> Tensor:
    def backward(g):
        accumulate_grad(a, g / a.data)

    return _node(np.log(a.data), (a,), backward)


def log_clamped(a: Tensor, floor: float = 1e-10) -> Tensor:
    """log(max(x, floor)); gradient is zero in the clamped region."""
    clamped = np.maximum(a.data, floor)
    inside = a.data >= floor

    def backward(g):
        accumulate_grad(a, np.where(inside, g / clamped, 0.0))

    return _node(np.log(clamped), (a,), backward)


# ---------------------------------------------------------------------------
# reductions and contractions
# ---------------------------------------------------------------------------


def tsum(a: Tensor) -> Tensor:
    def backward(g):
        accumulate_grad(a, np.full_like(a.data, g))

    return _node(a.data.sum(), (a,), backward)


def mean(a: Tensor) -> Tensor:
    n = a.data.size
    if n == 0:
        raise EmptySourceError("mean of an empty tensor")

    def backward(g):
        accumulate_grad(a, np.full_like(a.data, g / n))

    return _node(a.data.mean(), (a,), backward)


def dot(a: Tensor, b: Tensor) -> Tensor:
    if a.data.shape != b.data.shape or a.data.ndim != 1:
        raise ShapeError(f"dot needs equal 1-D shapes, got {a.data.shape} and {b.data.shape}")

    def backward(g):
        accumulate_grad(a, g * b.data)
        accumulate_grad(b, g * a.data)

    return _node(a.data @ b.data, (a, b), backward)


def matmul(a: Tensor, b: Tensor) -> Tensor:
    """numpy @ semantics for the 1-D/2-D cases this model uses."""
    if a.data.ndim == 0 or b.data.ndim == 0:
        raise ShapeError("matmul does not take scalars")
    try:
        data = a.data @ b.data
    except ValueError as err:
        raise ShapeError(str(err)) from None

    def backward(g):
        if a.data.ndim == 2 and b.data.ndim == 1:
            accumulate_grad(a, np.outer(g, b.data))
            accumulate_grad(b, a.data.T @ g)
        elif a.data.ndim == 1 and b.data.ndim == 2:
            accumulate_grad(a, g @ b.data.T)
            accumulate_grad(b, np.outer(a.data, g))
        elif a.data.ndim == 2 and b.data.ndim == 2:
            accumulate_grad(a, g @ b.data.T)
            accumulate_grad(b, a.data.T @ g)
        else:
            raise GraphError(f"unsupported matmul arity {a.data.ndim}x{b.data.ndim}")

    return _node(data, (a, b), backward)


def transpose(a: Tensor) -> Tensor:
    if a.data.ndim != 2:
        raise ShapeError("transpose expects a matrix")

    def backward(g):
        accumulate_grad(a, g.T)

    return _node(a.data.T.copy(), (a,), backward)


# ---------------------------------------------------------------------------
# structural ops
# ---------------------------------------------------------------------------


def concat(parts: list[Tensor]) -> Tensor:
    parts = [_wrap(p) for p in parts]
    if not parts:
        raise EmptySourceError("concat of nothing")
    for p in parts:
        if p.data.ndim != 1:
            raise ShapeError("concat expects 1-D tensors")
    sizes = [p.data.shape[0] for p in parts]
    data = np.concatenate([p.data for p in parts]) if len(parts) > 1 else parts[0].data.copy()

    def backward(g):
        off = 0
        for p, n in zip(parts, sizes):
            accumulate_grad(p, g[off:off + n])
            off += n

    return _node(data, tuple(parts), backward)


def stack(rows_: list[Tensor]) -> Tensor:
    """Stack 1-D tensors into a (k, D) matrix."""
    if not rows_:
        raise EmptySourceError("stack of nothing")
    for r in rows_:
        if r.data.ndim != 1:
            raise ShapeError("stack expects 1-D tensors")
    data = np.stack([r.data for r in rows_])

    def backward(g):
        for i, r in enumerate(rows_):
            accumulate_grad(r, g[i])

    return _node(data, tuple(rows_), backward)


def rows(table: Tensor, ids: list[int]) -> Tensor:
    """Gather rows of a matrix (embedding lookup); backward scatter-adds."""
    if table.data.ndim != 2:
        raise ShapeError("rows expects a matrix table")
    idx = np.asarray(ids, dtype=np.intp)
    data = table.data[idx]

    def backward(g):
        if table.requires_grad:
            if table.grad is None:
                table.grad = np.zeros_like(table.data)
            np.add.at(table.grad, idx, g)

    return _node(data, (table,), backward)


def row(table: Tensor, i: int) -> Tensor:
    if table.data.ndim != 2:
        raise ShapeError("row expects a matrix table")

    def backward(g):
        if table.requires_grad:
            if table.grad is None:
                table.grad = np.zeros_like(table.data)
            table.grad[i] += g

    return _node(table.data[i].copy(), (table,), backward)


def gather_sum(a: Tensor, ids: list[int]) -> Tensor:
    """Sum of selected entries of a 1-D tensor; empty selection is 0."""
    if a.data.ndim != 1:
        raise ShapeError("gather_sum expects a vector")
    idx = np.asarray(ids, dtype=np.intp)
    data = a.data[idx].sum() if len(ids) else a.data.dtype.type(0.0)

    def backward(g):
        if a.requires_grad and len(ids):
            if a.grad is None:
                a.grad = np.zeros_like(a.data)
            np.add.at(a.grad, idx, g)

    return _node(data, (a,), backward)


def softmax(a: Tensor) -> Tensor:
    if a.data.ndim != 1:
        raise ShapeError("softmax expects a vector")
    if a.data.size == 0:
        raise EmptySourceError("softmax of an empty vector")
    shifted = a.data - a.data.max()
    e = np.exp(shifted)
    out_data = e / e.sum()

    def backward(g):
        # J^T g = p * (g - p.g)
        accumulate_grad(a, out_data * (g - np.dot(out_data, g)))

    return _node(out_data, (a,), backward)


def pack(scalars: list[Tensor]) -> Tensor:
    """Pack scalar tensors into a 1-D vector."""
    if not scalars:
        raise EmptySourceError("pack of nothing")
    for s in scalars:
        if s.data.ndim != 0:
            raise ShapeError("pack expects scalars")
    data = np.array([s.data for s in scalars])

    def backward(g):
        for i, s in enumerate(scalars):
            accumulate_grad(s, g[i])

    return _node(data, tuple(scalars), backward)


def add_n(parts: list[Tensor]) -> Tensor:
    """Sum of same-shaped tensors without building a deep add chain."""
    if not parts:
        raise EmptySourceError("add_n of nothing")
    data = parts[0].data.copy()
    for p in parts[1:]:
        if p.data.shape != parts[0].data.shape:
            raise ShapeError("add_n shape mismatch")
        data += p.data

    def backward(g):
        for p in parts:
            accumulate_grad(p, g)

    return _node(data, tuple(parts), backward)


# ---------------------------------------------------------------------------
# tape walk
# ---------------------------------------------------------------------------


def backward(loss: Tensor):
    """Populate .grad for everything reachable from a scalar loss."""
    if loss.data.shape != ():
        raise GraphError(f"backward needs a scalar loss, got shape {loss.data.shape}")
    topo: list[Tensor] = []
    seen = {id(loss)}
    stack_ = [(loss, iter(loss._parents))]
    while stack_:
        node, it = stack_[-1]
        advanced = False
        for parent in it:
            if id(parent) not in seen and parent.requires_grad:
                seen.add(id(parent))
                stack_.append((parent, iter(parent._parents)))
                advanced = True
                break
        if not advanced:
            topo.append(node)
            stack_.pop()

    loss.grad = np.ones_like(loss.data)
    for node in reversed(topo):
        if node._backward is not None and node.grad is not None:
            node._backward(node.grad)
