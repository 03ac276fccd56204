"""Small reverse-mode differentiation engine over 2-D float64 arrays.

Only the operations the diagnosers need are provided. Every tensor is a
``(rows, cols)`` matrix; elementwise ops broadcast along size-1 axes the
way numpy does and reduce gradients back to the operand shape.
"""
from __future__ import annotations

import threading
from contextlib import contextmanager
from typing import Callable, Iterable, Optional, Sequence

import numpy as np

_state = threading.local()


def grad_enabled() -> bool:
    return getattr(_state, "enabled", True)


@contextmanager
def no_grad():
    """Evaluate without recording a graph (per thread)."""
    prev = grad_enabled()
    _state.enabled = False
    try:
        yield
    finally:
        _state.enabled = prev


class ShapeError(ValueError):
    pass


class Tensor:
    __slots__ = ("value", "grad", "requires_grad", "_parents", "_backward", "name")

    def __init__(self, value, requires_grad: bool = False, name: str = ""):
        arr = np.array(value, dtype=np.float64)
        if arr.ndim == 0:
            arr = arr.reshape(1, 1)
        elif arr.ndim == 1:
            arr = arr.reshape(1, -1)
        elif arr.ndim != 2:
            raise ShapeError(f"tensors are 2-D, got shape {arr.shape}")
        _check_finite(arr, "tensor construction")
        self.value = arr
        self.grad: Optional[np.ndarray] = np.zeros_like(arr) if requires_grad else None
        self.requires_grad = requires_grad
        self._parents: tuple = ()
        self._backward: Optional[Callable[[np.ndarray], None]] = None
        self.name = name

    @property
    def shape(self) -> tuple:
        return self.value.shape

    def item(self) -> float:
        if self.value.size != 1:
            raise ShapeError(f"item() needs a 1x1 tensor, got {self.shape}")
        return float(self.value[0, 0])

    def zero_grad(self) -> None:
        if self.requires_grad:
            self.grad = np.zeros_like(self.value)

    def __repr__(self) -> str:
        label = f" {self.name!r}" if self.name else ""
        return f"Tensor{label}(shape={self.shape}, requires_grad={self.requires_grad})"

    __add__ = lambda self, other: add(self, _lift(other))
    __radd__ = lambda self, other: add(_lift(other), self)
    __sub__ = lambda self, other: sub(self, _lift(other))
    __rsub__ = lambda self, other: sub(_lift(other), self)
    __matmul__ = lambda self, other: matmul(self, other)

    def __mul__(self, other):
        if isinstance(other, Tensor):
            return elementwise_mul(self, other)
        return scalar_mul(self, float(other))

    __rmul__ = __mul__


def _lift(x) -> Tensor:
    return x if isinstance(x, Tensor) else Tensor(x)


def _check_finite(arr: np.ndarray, op: str) -> None:
    if not np.all(np.isfinite(arr)):
        raise FloatingPointError(f"non-finite value produced by {op}")


def _result(value: np.ndarray, parents: Sequence[Tensor], backward, op: str) -> Tensor:
    _check_finite(value, op)
    out = Tensor.__new__(Tensor)
    out.value = value
    out.name = op
    out.requires_grad = grad_enabled() and any(p.requires_grad for p in parents)
    out.grad = None
    if out.requires_grad:
        out._parents = tuple(parents)
        out._backward = backward
    else:
        out._parents = ()
        out._backward = None
    return out


def _unbroadcast(grad: np.ndarray, shape: tuple) -> np.ndarray:
    if grad.shape == shape:
        return grad
    axes = tuple(ax for ax in range(2) if shape[ax] == 1 and grad.shape[ax] != 1)
    return grad.sum(axis=axes, keepdims=True)


def _broadcast_shape(a: Tensor, b: Tensor, op: str) -> tuple:
    try:
        return np.broadcast_shapes(a.shape, b.shape)
    except ValueError:
        raise ShapeError(f"{op}: incompatible shapes {a.shape} and {b.shape}") from None


def _accumulate(t: Tensor, g: np.ndarray) -> None:
    if not t.requires_grad:
        return
    if t.grad is None:
        t.grad = g.copy()
    else:
        t.grad = t.grad + g


# --- forward ops -----------------------------------------------------------

def add(a: Tensor, b: Tensor) -> Tensor:
    _broadcast_shape(a, b, "add")

    def backward(g):
        _accumulate(a, _unbroadcast(g, a.shape))
        _accumulate(b, _unbroadcast(g, b.shape))

    return _result(a.value + b.value, (a, b), backward, "add")


def sub(a: Tensor, b: Tensor) -> Tensor:
    _broadcast_shape(a, b, "sub")

    def backward(g):
        _accumulate(a, _unbroadcast(g, a.shape))
        _accumulate(b, _unbroadcast(-g, b.shape))

    return _result(a.value - b.value, (a, b), backward, "sub")


def elementwise_mul(a: Tensor, b: Tensor) -> Tensor:
    _broadcast_shape(a, b, "elementwise_mul")

    def backward(g):
        _accumulate(a, _unbroadcast(g * b.value, a.shape))
        _accumulate(b, _unbroadcast(g * a.value, b.shape))

    return _result(a.value * b.value, (a, b), backward, "elementwise_mul")


def scalar_mul(a: Tensor, c: float) -> Tensor:
    def backward(g):
        _accumulate(a, g * c)

    return _result(a.value * c, (a,), backward, "scalar_mul")


def matmul(a: Tensor, b: Tensor) -> Tensor:
    if a.shape[1] != b.shape[0]:
        raise ShapeError(f"matmul: {a.shape} @ {b.shape}")

    def backward(g):
        _accumulate(a, g @ b.value.T)
        _accumulate(b, a.value.T @ g)

    return _result(a.value @ b.value, (a, b), backward, "matmul")


def row_lookup(table: Tensor, index) -> Tensor:
    """Gather rows of ``table``; the gradient scatters back with accumulation."""
    idx = np.asarray(index, dtype=np.intp).reshape(-1)
    n = table.shape[0]
    if idx.size and (idx.min() < 0 or idx.max() >= n):
        raise IndexError(f"row_lookup: index out of range for table with {n} rows")

    def backward(g):
        if table.requires_grad:
            full = np.zeros_like(table.value)
            np.add.at(full, idx, g)
            _accumulate(table, full)

    return _result(table.value[idx], (table,), backward, "row_lookup")


def sigmoid(a: Tensor) -> Tensor:
    out = _sigmoid(a.value)

    def backward(g):
        _accumulate(a, g * out * (1.0 - out))

    return _result(out, (a,), backward, "sigmoid")


def softplus(a: Tensor) -> Tensor:
    x = a.value
    out = np.logaddexp(0.0, x)

    def backward(g):
        _accumulate(a, g * _sigmoid(x))

    return _result(out, (a,), backward, "softplus")


def softmax_row(a: Tensor) -> Tensor:
    shifted = a.value - a.value.max(axis=1, keepdims=True)
    e = np.exp(shifted)
    out = e / e.sum(axis=1, keepdims=True)

    def backward(g):
        inner = (g * out).sum(axis=1, keepdims=True)
        _accumulate(a, out * (g - inner))

    return _result(out, (a,), backward, "softmax_row")


def sum_row(a: Tensor) -> Tensor:
    """Sum across columns, giving a ``(rows, 1)`` tensor."""
    def backward(g):
        _accumulate(a, np.broadcast_to(g, a.shape))

    return _result(a.value.sum(axis=1, keepdims=True), (a,), backward, "sum_row")


def sum_all(a: Tensor) -> Tensor:
    def backward(g):
        _accumulate(a, np.broadcast_to(g, a.shape))

    return _result(np.array([[a.value.sum()]]), (a,), backward, "sum_all")


_BCE_FLOOR = 1e-12


def bce_loss(pred: Tensor, target) -> Tensor:
    """Mean binary cross-entropy between probabilities ``pred`` and targets."""
    y = _target_like(pred, target, "bce_loss")
    p = np.clip(pred.value, _BCE_FLOOR, 1.0 - _BCE_FLOOR)
    n = p.size
    loss = -np.mean(y * np.log(p) + (1.0 - y) * np.log(1.0 - p))

    def backward(g):
        _accumulate(pred, g * (p - y) / (p * (1.0 - p)) / n)

    return _result(np.array([[loss]]), (pred,), backward, "bce_loss")


def mse_loss(pred: Tensor, target) -> Tensor:
    y = _target_like(pred, target, "mse_loss")
    diff = pred.value - y
    n = diff.size

    def backward(g):
        _accumulate(pred, g * 2.0 * diff / n)

    return _result(np.array([[np.mean(diff * diff)]]), (pred,), backward, "mse_loss")


def _target_like(pred: Tensor, target, op: str) -> np.ndarray:
    y = target.value if isinstance(target, Tensor) else np.asarray(target, dtype=np.float64)
    if y.size == pred.value.size:
        y = y.reshape(pred.shape)
    if y.shape != pred.shape:
        raise ShapeError(f"{op}: target shape {y.shape} vs prediction {pred.shape}")
    return y


def _sigmoid(x: np.ndarray) -> np.ndarray:
    # split by sign so exp never overflows
    out = np.empty_like(x)
    pos = x >= 0
    out[pos] = 1.0 / (1.0 + np.exp(-x[pos]))
    ex = np.exp(x[~pos])
    out[~pos] = ex / (1.0 + ex)
    return out


# --- backward --------------------------------------------------------------

def backward(loss: Tensor) -> None:
    """Populate ``.grad`` on every leaf reachable from the scalar ``loss``."""
    if loss.value.size != 1:
        raise ShapeError(f"backward needs a scalar loss, got shape {loss.shape}")
    if not loss.requires_grad or loss._backward is None:
        raise RuntimeError("backward called on a tensor with no recorded graph")

    order = _topological(loss)
    grads = {id(loss): np.ones_like(loss.value)}
    # interior nodes keep their gradient only for the duration of this pass
    for node in reversed(order):
        g = grads.pop(id(node), None)
        if g is None or node._backward is None:
            continue
        saved = [(p, p.grad) for p in node._parents if p._backward is not None]
        for p, _ in saved:
            p.grad = None
        node._backward(g)
        for p, _ in saved:
            if p.grad is not None:
                grads[id(p)] = grads.get(id(p), 0) + p.grad
                p.grad = None


def _topological(root: Tensor) -> list:
    order, seen = [], set()
    stack = [(root, False)]
    while stack:
        node, done = stack.pop()
        if done:
            order.append(node)
            continue
        if id(node) in seen:
            continue
        seen.add(id(node))
        stack.append((node, True))
        for p in node._parents:
            if id(p) not in seen and p.requires_grad:
                stack.append((p, False))
    return order


def parameter(value, name: str = "") -> Tensor:
    return Tensor(value, requires_grad=True, name=name)


def zero_grads(params: Iterable[Tensor]) -> None:
    for p in params:
        p.zero_grad()
