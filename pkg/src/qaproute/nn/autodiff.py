"""Minimal reverse-mode autodiff over float64 numpy arrays.

Just enough of a tape for the encoder stack: binary arithmetic with
broadcasting, matmul, reductions, a few elementwise nonlinearities, row
gather and concatenation. Values are ndarrays; call backward() on a
scalar-shaped Tensor to populate .grad on every reachable leaf.
"""

from __future__ import annotations

import numpy as np


def _unbroadcast(grad: np.ndarray, shape: tuple) -> np.ndarray:
    """Reduce a broadcasted gradient back to the operand's shape."""
    while grad.ndim > len(shape):
        grad = grad.sum(axis=0)
    for axis, size in enumerate(shape):
        if size == 1 and grad.shape[axis] != 1:
            grad = grad.sum(axis=axis, keepdims=True)
    return grad.reshape(shape)


class Tensor:
    __slots__ = ("v", "grad", "parents", "bw")

    def __init__(self, value, parents=(), bw=None):
        self.v = np.asarray(value, dtype=np.float64)
        self.grad = None
        self.parents = parents
        self.bw = bw

    @property
    def shape(self):
        return self.v.shape

    def backward(self):
        if self.v.size != 1:
            raise ValueError("backward() needs a scalar-sized tensor")
        order: list[Tensor] = []
        seen: set[int] = set()
        stack: list[tuple[Tensor, bool]] = [(self, False)]
        while stack:
            node, expanded = stack.pop()
            if expanded:
                order.append(node)
                continue
            if id(node) in seen:
                continue
            seen.add(id(node))
            stack.append((node, True))
            for p in node.parents:
                stack.append((p, False))
        for node in order:
            node.grad = np.zeros_like(node.v)
        self.grad = np.ones_like(self.v)
        for node in reversed(order):
            if node.bw is not None:
                node.bw(node.grad)

    # operators defer to the module-level ops
    def __add__(self, other):
        return add(self, other)

    def __radd__(self, other):
        return add(other, self)

    def __sub__(self, other):
        return sub(self, other)

    def __rsub__(self, other):
        return sub(other, self)

    def __mul__(self, other):
        return mul(self, other)

    def __rmul__(self, other):
        return mul(other, self)

    def __truediv__(self, other):
        return div(self, other)

    def __matmul__(self, other):
        return matmul(self, other)

    def __neg__(self):
        return mul(self, -1.0)


def _wrap(x) -> Tensor:
    return x if isinstance(x, Tensor) else Tensor(x)


def _binary(a, b, value, bw_a, bw_b) -> Tensor:
    out = Tensor(value, parents=(a, b))

    def bw(g):
        a.grad += _unbroadcast(bw_a(g), a.v.shape)
        b.grad += _unbroadcast(bw_b(g), b.v.shape)

    out.bw = bw
    return out


def add(a, b):
    a, b = _wrap(a), _wrap(b)
    return _binary(a, b, a.v + b.v, lambda g: g, lambda g: g)


def sub(a, b):
    a, b = _wrap(a), _wrap(b)
    return _binary(a, b, a.v - b.v, lambda g: g, lambda g: -g)


def mul(a, b):
    a, b = _wrap(a), _wrap(b)
    return _binary(a, b, a.v * b.v, lambda g: g * b.v, lambda g: g * a.v)


def div(a, b):
    a, b = _wrap(a), _wrap(b)
    return _binary(a, b, a.v / b.v, lambda g: g / b.v,
                   lambda g: -g * a.v / (b.v * b.v))


def matmul(a, b):
    a, b = _wrap(a), _wrap(b)
    return _binary(a, b, a.v @ b.v, lambda g: g @ b.v.T, lambda g: a.v.T @ g)


def transpose(a):
    a = _wrap(a)
    out = Tensor(a.v.T, parents=(a,))
    out.bw = lambda g: a.grad.__iadd__(g.T)
    return out


def exp(a):
    a = _wrap(a)
    out = Tensor(np.exp(a.v), parents=(a,))
    out.bw = lambda g: a.grad.__iadd__(g * out.v)
    return out


def log(a):
    a = _wrap(a)
    out = Tensor(np.log(a.v), parents=(a,))
    out.bw = lambda g: a.grad.__iadd__(g / a.v)
    return out


def pow_const(a, c: float):
    a = _wrap(a)
    out = Tensor(a.v**c, parents=(a,))
    out.bw = lambda g: a.grad.__iadd__(g * c * a.v ** (c - 1.0))
    return out


def relu(a):
    a = _wrap(a)
    out = Tensor(np.maximum(a.v, 0.0), parents=(a,))
    out.bw = lambda g: a.grad.__iadd__(g * (a.v > 0.0))
    return out


def absolute(a):
    a = _wrap(a)
    out = Tensor(np.abs(a.v), parents=(a,))
    out.bw = lambda g: a.grad.__iadd__(g * np.sign(a.v))
    return out


def tsum(a, axis=None, keepdims=False):
    a = _wrap(a)
    out = Tensor(a.v.sum(axis=axis, keepdims=keepdims), parents=(a,))

    def bw(g):
        if axis is not None and not keepdims:
            g = np.expand_dims(g, axis)
        a.grad += np.broadcast_to(g, a.v.shape)

    out.bw = bw
    return out


def tmean(a, axis=None, keepdims=False):
    a = _wrap(a)
    count = a.v.size if axis is None else a.v.shape[axis]
    out = Tensor(a.v.mean(axis=axis, keepdims=keepdims), parents=(a,))

    def bw(g):
        if axis is not None and not keepdims:
            g = np.expand_dims(g, axis)
        a.grad += np.broadcast_to(g, a.v.shape) / count

    out.bw = bw
    return out


def concat(parts, axis=0):
    parts = [_wrap(p) for p in parts]
    out = Tensor(np.concatenate([p.v for p in parts], axis=axis),
                 parents=tuple(parts))
    sizes = [p.v.shape[axis] for p in parts]

    def bw(g):
        offset = 0
        for p, size in zip(parts, sizes):
            sl = [slice(None)] * g.ndim
            sl[axis] = slice(offset, offset + size)
            p.grad += g[tuple(sl)]
            offset += size

    out.bw = bw
    return out


def take_rows(a, idx):
    """Gather rows (axis 0) by an integer index array."""
    a = _wrap(a)
    idx = np.asarray(idx, dtype=np.int64)
    out = Tensor(a.v[idx], parents=(a,))

    def bw(g):
        np.add.at(a.grad, idx, g)

    out.bw = bw
    return out


# composites ----------------------------------------------------------------

def softmax_rows(a):
    """Row softmax; the max shift is value-neutral so it carries no grad."""
    a = _wrap(a)
    shifted = sub(a, a.v.max(axis=-1, keepdims=True))
    e = exp(shifted)
    return div(e, tsum(e, axis=-1, keepdims=True))


def softplus(a):
    return log(add(exp(a), 1.0))


def layer_norm(x, gain, bias, eps: float = 1e-5):
    mu = tmean(x, axis=-1, keepdims=True)
    centered = sub(x, mu)
    var = tmean(mul(centered, centered), axis=-1, keepdims=True)
    normed = div(centered, pow_const(add(var, eps), 0.5))
    return add(mul(normed, gain), bias)
