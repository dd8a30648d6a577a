"""Tape-style reverse-mode autodiff over dense float64 numpy arrays.

A :class:`Graph` is a flat, append-only list of nodes. Every op whose inputs
include a gradient-carrying tensor appends one node, so the list is already in
topological order and backward is a single reversed sweep. Ops on constants
alone record nothing, which makes "no-grad" forward passes free: pass params
in as constants.
"""
from __future__ import annotations

from typing import Callable, Sequence

import numpy as np

from ..errors import ConfigError, ContractError


class Node:
    __slots__ = ("inputs", "vjp", "out")

    def __init__(self, inputs: tuple, vjp: Callable, out: "Tensor"):
        self.inputs = inputs
        self.vjp = vjp
        self.out = out


class Graph:
    """Records operations for one forward pass; rebuild it every step."""

    def __init__(self) -> None:
        self.nodes: list[Node] = []
        self.params: dict[str, Tensor] = {}

    def param(self, path: str, value: np.ndarray) -> "Tensor":
        if path in self.params:
            raise ContractError(f"parameter {path!r} registered twice")
        t = Tensor(value, graph=self, requires_grad=True)
        self.params[path] = t
        return t

    def params_from(self, tree, prefix: str = "") -> dict[str, "Tensor"]:
        """Register every entry of ``tree`` under ``prefix`` as a parameter."""
        return {p: self.param(p, v) for p, v in tree.items() if p.startswith(prefix)}

    def _record(self, out: "Tensor", inputs: tuple, vjp: Callable) -> "Tensor":
        out.graph = self
        out.requires_grad = True
        out.index = len(self.nodes)
        self.nodes.append(Node(inputs, vjp, out))
        return out


class Tensor:
    __slots__ = ("data", "graph", "requires_grad", "index")

    def __init__(self, data, graph: Graph | None = None, requires_grad: bool = False):
        self.data = np.asarray(data, dtype=np.float64)
        self.graph = graph
        self.requires_grad = requires_grad
        self.index = -1

    @property
    def shape(self) -> tuple[int, ...]:
        return self.data.shape

    def item(self) -> float:
        return float(self.data)

    def __repr__(self) -> str:
        return f"Tensor(shape={self.shape}, requires_grad={self.requires_grad})"

    __add__ = lambda self, o: add(self, o)
    __radd__ = lambda self, o: add(o, self)
    __sub__ = lambda self, o: sub(self, o)
    __rsub__ = lambda self, o: sub(o, self)
    __mul__ = lambda self, o: mul(self, o)
    __rmul__ = lambda self, o: mul(o, self)
    __matmul__ = lambda self, o: matmul(self, o)
    __neg__ = lambda self: neg(self)


def as_tensor(x) -> Tensor:
    return x if isinstance(x, Tensor) else Tensor(x)


def constant(x) -> Tensor:
    return Tensor(np.array(x, dtype=np.float64, copy=True))


def _graph_of(*ts: Tensor) -> Graph | None:
    g = None
    for t in ts:
        if t.requires_grad:
            if g is None:
                g = t.graph
            elif t.graph is not g:
                raise ContractError("tensors from different graphs combined")
    return g


def _unbroadcast(grad: np.ndarray, shape: tuple[int, ...]) -> np.ndarray:
    if grad.shape == shape:
        return grad
    while grad.ndim > len(shape):
        grad = grad.sum(axis=0)
    for axis, n in enumerate(shape):
        if n == 1 and grad.shape[axis] != 1:
            grad = grad.sum(axis=axis, keepdims=True)
    return grad


def _op(inputs: Sequence[Tensor], value: np.ndarray, vjp: Callable) -> Tensor:
    out = Tensor(value)
    g = _graph_of(*inputs)
    if g is None:
        return out
    return g._record(out, tuple(inputs), vjp)


# --- elementwise and linear-algebra ops -----------------------------------

def add(a, b) -> Tensor:
    a, b = as_tensor(a), as_tensor(b)
    sa, sb = a.shape, b.shape
    return _op((a, b), a.data + b.data,
               lambda g: (_unbroadcast(g, sa), _unbroadcast(g, sb)))


def sub(a, b) -> Tensor:
    a, b = as_tensor(a), as_tensor(b)
    sa, sb = a.shape, b.shape
    return _op((a, b), a.data - b.data,
               lambda g: (_unbroadcast(g, sa), _unbroadcast(-g, sb)))


def mul(a, b) -> Tensor:
    a, b = as_tensor(a), as_tensor(b)
    ad, bd = a.data, b.data
    return _op((a, b), ad * bd,
               lambda g: (_unbroadcast(g * bd, ad.shape), _unbroadcast(g * ad, bd.shape)))


def neg(a) -> Tensor:
    a = as_tensor(a)
    return _op((a,), -a.data, lambda g: (-g,))


def matmul(a, b) -> Tensor:
    a, b = as_tensor(a), as_tensor(b)
    if a.data.ndim != 2 or b.data.ndim != 2 or a.shape[1] != b.shape[0]:
        raise ConfigError(f"matmul shape mismatch {a.shape} @ {b.shape}")
    ad, bd = a.data, b.data
    need_a, need_b = a.requires_grad, b.requires_grad

    def vjp(g):
        return (g @ bd.T if need_a else None, ad.T @ g if need_b else None)

    return _op((a, b), ad @ bd, vjp)


def linear(x, w, b) -> Tensor:
    """Fused ``x @ w + b`` for a 2-D batch ``x`` and bias vector ``b``."""
    x, w, b = as_tensor(x), as_tensor(w), as_tensor(b)
    if x.data.ndim != 2 or w.data.ndim != 2 or x.shape[1] != w.shape[0] or b.shape != (w.shape[1],):
        raise ConfigError(f"linear shape mismatch: x {x.shape}, w {w.shape}, b {b.shape}")
    xd, wd = x.data, w.data
    need_x, need_w, need_b = x.requires_grad, w.requires_grad, b.requires_grad

    def vjp(g):
        return (g @ wd.T if need_x else None,
                xd.T @ g if need_w else None,
                g.sum(axis=0) if need_b else None)

    out = xd @ wd
    out += b.data
    return _op((x, w, b), out, vjp)


def relu(a) -> Tensor:
    a = as_tensor(a)
    y = np.maximum(a.data, 0.0)
    return _op((a,), y, lambda g: (g * (y > 0.0),))


def tanh(a) -> Tensor:
    a = as_tensor(a)
    y = np.tanh(a.data)
    return _op((a,), y, lambda g: (g * (1.0 - y * y),))


def exp(a) -> Tensor:
    a = as_tensor(a)
    y = np.exp(a.data)
    return _op((a,), y, lambda g: (g * y,))


def log(a) -> Tensor:
    a = as_tensor(a)
    x = a.data
    return _op((a,), np.log(x), lambda g: (g / x,))


def square(a) -> Tensor:
    a = as_tensor(a)
    x = a.data
    return _op((a,), x * x, lambda g: (2.0 * g * x,))


def clip(a, lo: float, hi: float) -> Tensor:
    """Clamp; gradient is passed only where the input lies inside [lo, hi]."""
    a = as_tensor(a)
    inside = (a.data >= lo) & (a.data <= hi)
    return _op((a,), np.clip(a.data, lo, hi), lambda g: (g * inside,))


def minimum(a, b) -> Tensor:
    """Elementwise min; ties route the gradient to ``a``."""
    a, b = as_tensor(a), as_tensor(b)
    pick_a = a.data <= b.data
    return _op((a, b), np.where(pick_a, a.data, b.data),
               lambda g: (_unbroadcast(g * pick_a, a.shape), _unbroadcast(g * ~pick_a, b.shape)))


def sum(a, axis: int | None = None) -> Tensor:  # noqa: A001 - mirrors numpy
    a = as_tensor(a)
    shape = a.shape

    def vjp(g):
        if axis is None:
            return (np.broadcast_to(g, shape).copy(),)
        return (np.broadcast_to(np.expand_dims(g, axis), shape).copy(),)

    return _op((a,), a.data.sum(axis=axis), vjp)


def mean(a, axis: int | None = None) -> Tensor:
    a = as_tensor(a)
    n = a.data.size if axis is None else a.shape[axis]
    return mul(sum(a, axis), 1.0 / n)


def concat(parts: Sequence, axis: int = -1) -> Tensor:
    ts = [as_tensor(p) for p in parts]
    axis = axis % ts[0].data.ndim
    bounds = np.cumsum([t.shape[axis] for t in ts])[:-1]

    def vjp(g):
        return tuple(np.split(g, bounds, axis=axis))

    return _op(ts, np.concatenate([t.data for t in ts], axis=axis), vjp)


def columns(a, start: int, stop: int) -> Tensor:
    """Slice ``a[:, start:stop]``."""
    a = as_tensor(a)
    shape = a.shape

    def vjp(g):
        full = np.zeros(shape)
        full[:, start:stop] = g
        return (full,)

    return _op((a,), a.data[:, start:stop], vjp)


def reshape(a, shape: tuple[int, ...]) -> Tensor:
    a = as_tensor(a)
    old = a.shape
    return _op((a,), a.data.reshape(shape), lambda g: (g.reshape(old),))


# --- backward --------------------------------------------------------------

def backward(graph: Graph, loss: Tensor) -> dict[str, np.ndarray]:
    """Gradient of a scalar ``loss`` w.r.t. every parameter registered in ``graph``.

    Parameters the loss does not depend on get exact zeros.
    """
    if loss.data.size != 1:
        raise ContractError(f"backward needs a scalar loss, got shape {loss.shape}")
    grads: dict[int, np.ndarray] = {}
    if loss.requires_grad:
        if loss.graph is not graph:
            raise ContractError("loss was not recorded on this graph")
        grads[id(loss)] = np.ones_like(loss.data)
        for node in reversed(graph.nodes):
            g = grads.pop(id(node.out), None)
            if g is None:
                continue
            for inp, gi in zip(node.inputs, node.vjp(g)):
                if gi is None or not inp.requires_grad:
                    continue
                key = id(inp)
                if key in grads:
                    grads[key] = grads[key] + gi
                else:
                    grads[key] = gi
    out = {}
    for path, t in graph.params.items():
        g = grads.get(id(t))
        out[path] = np.zeros_like(t.data) if g is None else np.asarray(g, dtype=np.float64).reshape(t.shape)
    return out
