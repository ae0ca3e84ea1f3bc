"""Reverse-mode automatic differentiation over float64 numpy arrays.

A Tensor wraps an ndarray and remembers, when it was produced by an
operation, its parent tensors and a closure that pushes the output gradient
back to them. backward(root) runs the closures in reverse topological order
and accumulates gradients on every tensor in the graph, then consumes the
tape: running backward twice on the same graph raises StaleGraphError.

Only the operations the segmentation stack needs are provided. Everything
is float64; gradients match central finite differences to about 1e-9 in
relative error, far inside the 1e-4 contract checked by the gradcheck
suite. Tensors are not thread safe while a graph is being built; parameter
tensors may be read concurrently once training is done.
"""
from __future__ import annotations

from typing import Callable, Sequence

import numpy as np

from .errors import StaleGraphError

Array = np.ndarray


def _arr(x) -> Array:
    return np.asarray(x, dtype=np.float64)


class Tensor:
    __slots__ = ("data", "grad", "_parents", "_bwd", "_spent", "name")

    def __init__(self, data, parents: tuple = (), bwd: Callable | None = None,
                 name: str | None = None):
        self.data = _arr(data)
        self.grad: Array | None = None
        self._parents = parents
        self._bwd = bwd
        self._spent = False
        self.name = name

    @property
    def shape(self) -> tuple[int, ...]:
        return self.data.shape

    def item(self) -> float:
        return self.data.item()

    def detach(self) -> "Tensor":
        """A view of the same values cut off from the graph."""
        return Tensor(self.data)

    def zero_grad(self) -> None:
        self.grad = None

    def _accumulate(self, g: Array) -> None:
        if self.grad is None:
            self.grad = np.zeros_like(self.data)
        self.grad += g

    def __repr__(self) -> str:
        tag = f" name={self.name}" if self.name else ""
        return f"Tensor(shape={self.shape}{tag})"

    def __add__(self, other):
        return add(self, other)

    __radd__ = __add__

    def __mul__(self, other):
        return mul(self, other)

    __rmul__ = __mul__

    def __neg__(self):
        return scale(self, -1.0)

    def __sub__(self, other):
        return sub(self, other)

    def __matmul__(self, other):
        return matmul(self, other)


def tensor(data, name: str | None = None) -> Tensor:
    return Tensor(data, name=name)


def _to_tensor(x) -> Tensor:
    return x if isinstance(x, Tensor) else Tensor(x)


def _unbroadcast(g: Array, shape: tuple[int, ...]) -> Array:
    """Reduce a gradient back to the shape the operand had before numpy
    broadcasting."""
    if g.shape == shape:
        return g
    extra = g.ndim - len(shape)
    if extra > 0:
        g = g.sum(axis=tuple(range(extra)))
    axes = tuple(i for i, d in enumerate(shape) if d == 1 and g.shape[i] != 1)
    if axes:
        g = g.sum(axis=axes, keepdims=True)
    return g.reshape(shape)


def add(a, b) -> Tensor:
    a, b = _to_tensor(a), _to_tensor(b)
    out = Tensor(a.data + b.data, (a, b))

    def bwd(g: Array) -> None:
        a._accumulate(_unbroadcast(g, a.data.shape))
        b._accumulate(_unbroadcast(g, b.data.shape))

    out._bwd = bwd
    return out


def sub(a, b) -> Tensor:
    a, b = _to_tensor(a), _to_tensor(b)
    out = Tensor(a.data - b.data, (a, b))

    def bwd(g: Array) -> None:
        a._accumulate(_unbroadcast(g, a.data.shape))
        b._accumulate(_unbroadcast(-g, b.data.shape))

    out._bwd = bwd
    return out


def mul(a, b) -> Tensor:
    a, b = _to_tensor(a), _to_tensor(b)
    out = Tensor(a.data * b.data, (a, b))

    def bwd(g: Array) -> None:
        a._accumulate(_unbroadcast(g * b.data, a.data.shape))
        b._accumulate(_unbroadcast(g * a.data, b.data.shape))

    out._bwd = bwd
    return out


def scale(a, s: float) -> Tensor:
    a = _to_tensor(a)
    out = Tensor(a.data * s, (a,))

    def bwd(g: Array) -> None:
        a._accumulate(g * s)

    out._bwd = bwd
    return out


def matmul(a, b) -> Tensor:
    a, b = _to_tensor(a), _to_tensor(b)
    out = Tensor(a.data @ b.data, (a, b))

    def bwd(g: Array) -> None:
        a._accumulate(g @ b.data.T)
        b._accumulate(a.data.T @ g)

    out._bwd = bwd
    return out


def sigmoid(a) -> Tensor:
    a = _to_tensor(a)
    y = np.empty_like(a.data)
    pos = a.data >= 0
    y[pos] = 1.0 / (1.0 + np.exp(-a.data[pos]))
    ez = np.exp(a.data[~pos])
    y[~pos] = ez / (1.0 + ez)
    out = Tensor(y, (a,))

    def bwd(g: Array) -> None:
        a._accumulate(g * y * (1.0 - y))

    out._bwd = bwd
    return out


def log(a) -> Tensor:
    a = _to_tensor(a)
    out = Tensor(np.log(a.data), (a,))

    def bwd(g: Array) -> None:
        a._accumulate(g / a.data)

    out._bwd = bwd
    return out


def clamp(a, lo: float, hi: float) -> Tensor:
    """Clip values to [lo, hi]; gradient is zero where the clip is active."""
    a = _to_tensor(a)
    clipped = np.clip(a.data, lo, hi)
    inside = (a.data > lo) & (a.data < hi)
    out = Tensor(clipped, (a,))

    def bwd(g: Array) -> None:
        a._accumulate(g * inside)

    out._bwd = bwd
    return out


def sum_all(a) -> Tensor:
    a = _to_tensor(a)
    out = Tensor(a.data.sum(), (a,))

    def bwd(g: Array) -> None:
        a._accumulate(np.full_like(a.data, float(g)))

    out._bwd = bwd
    return out


def mean_all(a) -> Tensor:
    a = _to_tensor(a)
    n = a.data.size
    return scale(sum_all(a), 1.0 / n)


def concat_cols(parts: Sequence[Tensor]) -> Tensor:
    """Concatenate 2-d tensors along axis 1."""
    parts = [_to_tensor(p) for p in parts]
    out = Tensor(np.concatenate([p.data for p in parts], axis=1), tuple(parts))
    widths = [p.data.shape[1] for p in parts]

    def bwd(g: Array) -> None:
        off = 0
        for p, w in zip(parts, widths):
            p._accumulate(g[:, off:off + w])
            off += w

    out._bwd = bwd
    return out


def conv1d(x: Tensor, w: Tensor, pad_left: int, pad_right: int) -> Tensor:
    """1-d convolution over rows of x.

    x has shape (n, d_in), w has shape (k, d_in, d_out); the output row t is
    sum over offsets o of padded_x[t + o] @ w[o], so with pad_left =
    pad_right = (k - 1) // 2 and odd k the output length equals n.
    """
    x, w = _to_tensor(x), _to_tensor(w)
    k, d_in, d_out = w.data.shape
    xp = np.pad(x.data, ((pad_left, pad_right), (0, 0)))
    n_out = xp.shape[0] - k + 1
    if n_out < 1:
        raise ValueError("input shorter than kernel after padding")
    y = np.zeros((n_out, d_out))
    for o in range(k):
        y += xp[o:o + n_out] @ w.data[o]
    out = Tensor(y, (x, w))

    def bwd(g: Array) -> None:
        dxp = np.zeros_like(xp)
        dw = np.zeros_like(w.data)
        for o in range(k):
            dw[o] = xp[o:o + n_out].T @ g
            dxp[o:o + n_out] += g @ w.data[o].T
        n = x.data.shape[0]
        x._accumulate(dxp[pad_left:pad_left + n])
        w._accumulate(dw)

    out._bwd = bwd
    return out


def gather_rows(table: Tensor, idx: np.ndarray) -> Tensor:
    """Select rows of a 2-d table; gradients scatter-add back."""
    table = _to_tensor(table)
    idx = np.asarray(idx, dtype=np.int64)
    out = Tensor(table.data[idx], (table,))

    def bwd(g: Array) -> None:
        if table.grad is None:
            table.grad = np.zeros_like(table.data)
        np.add.at(table.grad, idx, g)

    out._bwd = bwd
    return out


def max_over_time(x: Tensor) -> Tensor:
    """Max over rows: (t, f) -> (1, f). Ties send the gradient to the
    earliest row, matching np.argmax."""
    x = _to_tensor(x)
    am = np.argmax(x.data, axis=0)
    cols = np.arange(x.data.shape[1])
    out = Tensor(x.data[am, cols][None, :], (x,))

    def bwd(g: Array) -> None:
        if x.grad is None:
            x.grad = np.zeros_like(x.data)
        np.add.at(x.grad, (am, cols), g[0])

    out._bwd = bwd
    return out


def dropout(x: Tensor, rate: float, rng: np.random.Generator) -> Tensor:
    """Inverted dropout: zero entries with probability rate, scale the rest
    by 1/(1 - rate) so the expectation is unchanged."""
    if not 0.0 <= rate < 1.0:
        raise ValueError("dropout rate must be in [0, 1)")
    if rate == 0.0:
        return x
    keep = (rng.random(x.data.shape) >= rate) / (1.0 - rate)
    return mul(x, Tensor(keep))


def _topo(root: Tensor) -> list[Tensor]:
    order: list[Tensor] = []
    seen: set[int] = set()
    stack: list[tuple[Tensor, bool]] = [(root, False)]
    while stack:
        node, expanded = stack.pop()
        if expanded:
            order.append(node)
            continue
        if id(node) in seen:
            continue
        seen.add(id(node))
        stack.append((node, True))
        for p in node._parents:
            if id(p) not in seen:
                stack.append((p, False))
    return order


def backward(root: Tensor) -> None:
    """Accumulate d(root)/d(node) into node.grad for every node reachable
    from root. root must hold a single value. The tape is consumed; a second
    call on the same graph raises StaleGraphError."""
    if root._spent:
        raise StaleGraphError("backward() already ran on this graph")
    if root.data.size != 1:
        raise ValueError("backward root must be a scalar")
    order = _topo(root)
    root.grad = np.ones_like(root.data)
    for node in reversed(order):
        if node._parents and node._bwd is None:
            raise StaleGraphError("graph shares nodes with a consumed tape")
        if node._bwd is not None:
            node._bwd(node.grad if node.grad is not None
                      else np.zeros_like(node.data))
            node._bwd = None
            node._spent = True
    root._spent = True
