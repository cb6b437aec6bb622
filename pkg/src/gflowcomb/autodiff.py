"""Reverse-mode autodiff over float64 numpy arrays.

Small tape-based engine: every op records its parents and a closure
that routes the output gradient to them.  backward() walks the tape in
reverse topological order from a scalar loss.  Gradients accumulate
into .grad buffers until explicitly zeroed, so parameters that never
appear on a tape keep zero gradients.

Only the ops the models need are provided; matmul requires both
operands to have ndim >= 2.
"""

from __future__ import annotations

import contextlib

import numpy as np

_grad_enabled = True


@contextlib.contextmanager
def no_grad():
    """Disable tape recording (rollouts, evaluation)."""
    global _grad_enabled
    prev = _grad_enabled
    _grad_enabled = False
    try:
        yield
    finally:
        _grad_enabled = prev


class Tensor:
    __slots__ = ("data", "grad", "requires_grad", "_parents", "_backward_fn")

    def __init__(self, data, requires_grad: bool = False):
        self.data = np.asarray(data, dtype=np.float64)
        self.requires_grad = bool(requires_grad)
        self.grad = np.zeros_like(self.data) if requires_grad else None
        self._parents: tuple = ()
        self._backward_fn = None

    @property
    def shape(self):
        return self.data.shape

    def item(self) -> float:
        return float(self.data)

    def __repr__(self) -> str:
        flag = ", grad" if self.requires_grad else ""
        return f"Tensor(shape={self.data.shape}{flag})"

    # -- arithmetic ----------------------------------------------------

    def __add__(self, other):
        return _add(self, _ensure(other))

    __radd__ = __add__

    def __mul__(self, other):
        return _mul(self, _ensure(other))

    __rmul__ = __mul__

    def __neg__(self):
        return self * (-1.0)

    def __sub__(self, other):
        return self + (-_ensure(other))

    def __rsub__(self, other):
        return _ensure(other) + (-self)

    def __matmul__(self, other):
        return _matmul(self, _ensure(other))

    def __getitem__(self, key):
        if not isinstance(key, slice):
            raise TypeError("only contiguous slices along axis 0 are supported")
        return _slice0(self, key)

    def relu(self):
        return _relu(self)

    def square(self):
        return _square(self)

    def sum(self, axis=None, keepdims: bool = False):
        return _sum(self, axis, keepdims)

    def mean(self):
        return self.sum() * (1.0 / self.data.size)

    def reshape(self, *shape):
        if len(shape) == 1 and isinstance(shape[0], (tuple, list)):
            shape = tuple(shape[0])
        return _reshape(self, shape)

    def backward(self):
        backward(self)


def _ensure(x) -> Tensor:
    return x if isinstance(x, Tensor) else Tensor(x)


def _result(data, parents, backward_fn) -> Tensor:
    out = Tensor(data)
    if _grad_enabled and any(p.requires_grad for p in parents):
        out.requires_grad = True
        out.grad = None
        out._parents = tuple(parents)
        out._backward_fn = backward_fn
    return out


def _accum(t: Tensor, g: np.ndarray) -> None:
    if not t.requires_grad:
        return
    if t.grad is None:
        t.grad = np.zeros_like(t.data)
    t.grad += g


def _unbroadcast(g: np.ndarray, shape: tuple) -> np.ndarray:
    while g.ndim > len(shape):
        g = g.sum(axis=0)
    for i, s in enumerate(shape):
        if s == 1 and g.shape[i] != 1:
            g = g.sum(axis=i, keepdims=True)
    return g


# -- ops ---------------------------------------------------------------


def _add(a: Tensor, b: Tensor) -> Tensor:
    def bwd(gout):
        _accum(a, _unbroadcast(gout, a.data.shape))
        _accum(b, _unbroadcast(gout, b.data.shape))

    return _result(a.data + b.data, (a, b), bwd)


def _mul(a: Tensor, b: Tensor) -> Tensor:
    def bwd(gout):
        _accum(a, _unbroadcast(gout * b.data, a.data.shape))
        _accum(b, _unbroadcast(gout * a.data, b.data.shape))

    return _result(a.data * b.data, (a, b), bwd)


def _matmul(a: Tensor, b: Tensor) -> Tensor:
    if a.data.ndim < 2 or b.data.ndim < 2:
        raise ValueError("matmul operands must have ndim >= 2")

    def bwd(gout):
        _accum(a, _unbroadcast(np.matmul(gout, np.swapaxes(b.data, -1, -2)),
                               a.data.shape))
        _accum(b, _unbroadcast(np.matmul(np.swapaxes(a.data, -1, -2), gout),
                               b.data.shape))

    return _result(np.matmul(a.data, b.data), (a, b), bwd)


def _relu(a: Tensor) -> Tensor:
    def bwd(gout):
        _accum(a, gout * (a.data > 0))

    return _result(np.maximum(a.data, 0.0), (a,), bwd)


def _square(a: Tensor) -> Tensor:
    def bwd(gout):
        _accum(a, gout * (2.0 * a.data))

    return _result(a.data * a.data, (a,), bwd)


def _sum(a: Tensor, axis, keepdims: bool) -> Tensor:
    def bwd(gout):
        g = gout
        if axis is not None and not keepdims:
            g = np.expand_dims(g, axis)
        _accum(a, np.broadcast_to(g, a.data.shape))

    return _result(a.data.sum(axis=axis, keepdims=keepdims), (a,), bwd)


def _reshape(a: Tensor, shape) -> Tensor:
    old = a.data.shape

    def bwd(gout):
        _accum(a, gout.reshape(old))

    return _result(a.data.reshape(shape), (a,), bwd)


def _slice0(a: Tensor, key: slice) -> Tensor:
    def bwd(gout):
        g = np.zeros_like(a.data)
        g[key] = gout
        _accum(a, g)

    return _result(a.data[key], (a,), bwd)


def embedding(table: Tensor, idx: np.ndarray) -> Tensor:
    """Row lookup: out[..., :] = table[idx[...], :]."""
    idx = np.asarray(idx)

    def bwd(gout):
        if table.requires_grad:
            if table.grad is None:
                table.grad = np.zeros_like(table.data)
            np.add.at(table.grad, idx, gout)

    return _result(table.data[idx], (table,), bwd)


def take_per_row(a: Tensor, idx: np.ndarray) -> Tensor:
    """out[b] = a[b, idx[b]] for a 2-d tensor."""
    if a.data.ndim != 2:
        raise ValueError("take_per_row expects a 2-d tensor")
    idx = np.asarray(idx, dtype=np.int64)
    rows = np.arange(a.data.shape[0])

    def bwd(gout):
        if a.requires_grad:
            if a.grad is None:
                a.grad = np.zeros_like(a.data)
            np.add.at(a.grad, (rows, idx), gout)

    return _result(a.data[rows, idx], (a,), bwd)


def masked_log_softmax(logits: Tensor, mask: np.ndarray) -> Tensor:
    """Log-softmax over the last axis restricted to mask; -inf elsewhere.

    Every row of mask must contain at least one True entry.  Gradients
    flow only through masked positions.
    """
    mask = np.asarray(mask, dtype=bool)
    if mask.shape != logits.data.shape:
        raise ValueError("mask shape must match logits shape")
    if not mask.any(axis=-1).all():
        raise ValueError("mask has a row with no legal entry")

    z = np.where(mask, logits.data, -np.inf)
    zmax = z.max(axis=-1, keepdims=True)
    ex = np.where(mask, np.exp(z - zmax), 0.0)
    denom = ex.sum(axis=-1, keepdims=True)
    out = np.where(mask, z - (zmax + np.log(denom)), -np.inf)
    softmax = ex / denom

    def bwd(gout):
        gm = np.where(mask, gout, 0.0)
        _accum(logits, gm - softmax * gm.sum(axis=-1, keepdims=True))

    return _result(out, (logits,), bwd)


def backward(loss: Tensor) -> None:
    """Populate .grad on every requires_grad tensor reachable from loss."""
    if loss.data.size != 1:
        raise ValueError("backward needs a scalar loss")
    if not loss.requires_grad:
        return

    topo: list[Tensor] = []
    seen: set[int] = set()
    stack: list[tuple[Tensor, bool]] = [(loss, False)]
    while stack:
        node, processed = stack.pop()
        if processed:
            topo.append(node)
            continue
        if id(node) in seen:
            continue
        seen.add(id(node))
        stack.append((node, True))
        for p in node._parents:
            if p.requires_grad and id(p) not in seen:
                stack.append((p, False))

    if loss.grad is None:
        loss.grad = np.zeros_like(loss.data)
    loss.grad += np.ones_like(loss.data)
    for node in reversed(topo):
        if node._backward_fn is not None and node.grad is not None:
            node._backward_fn(node.grad)
