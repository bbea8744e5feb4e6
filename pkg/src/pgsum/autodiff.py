"""Reverse-mode automatic differentiation over dense float64 arrays.

The primitive set is deliberately small: everything the LSTM
encoder-decoder with attention needs, and nothing else.  Larger
structures (LSTM cells, attention, the copy mixture) are compositions
of these primitives, which keeps the gradient-check surface small.
"""
from __future__ import annotations

import numpy as np


class ShapeError(ValueError):
    """Raised when primitive inputs do not conform to the op's shape rules."""


class Tensor:
    """A node in the computation graph.

    Leaf tensors (parameters and constants) have no parents.  Non-leaf
    tensors carry a closure that maps the upstream gradient to per-parent
    gradients.  The graph itself is the tape: walking it in reverse
    topological order replays every recorded primitive.
    """

    __slots__ = ("data", "_parents", "_backward")

    def __init__(self, data, _parents=(), _backward=None):
        self.data = np.asarray(data, dtype=np.float64)
        self._parents = _parents
        self._backward = _backward

    @property
    def shape(self):
        return self.data.shape

    def item(self) -> float:
        return float(self.data)

    def __repr__(self):
        return f"Tensor(shape={self.data.shape})"


def const(value) -> Tensor:
    """Wrap a plain value as a constant leaf."""
    return Tensor(value)


def _as_tensor(x) -> Tensor:
    return x if isinstance(x, Tensor) else Tensor(x)


def _unbroadcast(g: np.ndarray, shape: tuple) -> np.ndarray:
    """Sum a broadcast gradient back down to the original shape."""
    while g.ndim > len(shape):
        g = g.sum(axis=0)
    for axis, dim in enumerate(shape):
        if dim == 1 and g.shape[axis] != 1:
            g = g.sum(axis=axis, keepdims=True)
    return g


def add(a, b) -> Tensor:
    a, b = _as_tensor(a), _as_tensor(b)
    try:
        out = a.data + b.data
    except ValueError:
        raise ShapeError(f"add: incompatible shapes {a.shape} and {b.shape}")
    return Tensor(out, (a, b),
                  lambda g: (_unbroadcast(g, a.shape), _unbroadcast(g, b.shape)))


def sub(a, b) -> Tensor:
    a, b = _as_tensor(a), _as_tensor(b)
    try:
        out = a.data - b.data
    except ValueError:
        raise ShapeError(f"sub: incompatible shapes {a.shape} and {b.shape}")
    return Tensor(out, (a, b),
                  lambda g: (_unbroadcast(g, a.shape), _unbroadcast(-g, b.shape)))


def mul(a, b) -> Tensor:
    a, b = _as_tensor(a), _as_tensor(b)
    try:
        out = a.data * b.data
    except ValueError:
        raise ShapeError(f"mul: incompatible shapes {a.shape} and {b.shape}")
    return Tensor(out, (a, b),
                  lambda g: (_unbroadcast(g * b.data, a.shape),
                             _unbroadcast(g * a.data, b.shape)))


def neg(a) -> Tensor:
    a = _as_tensor(a)
    return Tensor(-a.data, (a,), lambda g: (-g,))


def matmul(a: Tensor, b: Tensor) -> Tensor:
    """Matrix/vector product for the 2D/1D combinations the model uses."""
    an, bn = a.data.ndim, b.data.ndim
    if an not in (1, 2) or bn not in (1, 2):
        raise ShapeError(f"matmul: only 1D/2D operands, got {a.shape} @ {b.shape}")
    if a.data.shape[-1] != b.data.shape[0]:
        raise ShapeError(f"matmul: inner dimensions differ, {a.shape} @ {b.shape}")
    out = a.data @ b.data

    def backward(g):
        if an == 2 and bn == 2:
            return g @ b.data.T, a.data.T @ g
        if an == 2 and bn == 1:
            return np.outer(g, b.data), a.data.T @ g
        if an == 1 and bn == 2:
            return b.data @ g, np.outer(a.data, g)
        return g * b.data, g * a.data

    return Tensor(out, (a, b), backward)


def sigmoid(a: Tensor) -> Tensor:
    a = _as_tensor(a)
    # stable both directions
    e = np.exp(-np.abs(a.data))
    out = np.where(a.data >= 0, 1.0 / (1.0 + e), e / (1.0 + e))
    return Tensor(out, (a,), lambda g: (g * out * (1.0 - out),))


def tanh(a: Tensor) -> Tensor:
    a = _as_tensor(a)
    out = np.tanh(a.data)
    return Tensor(out, (a,), lambda g: (g * (1.0 - out * out),))


def log(a: Tensor) -> Tensor:
    a = _as_tensor(a)
    out = np.log(a.data)
    return Tensor(out, (a,), lambda g: (g / a.data,))


def softmax(a: Tensor) -> Tensor:
    """Softmax over a 1D vector."""
    if a.data.ndim != 1:
        raise ShapeError(f"softmax: expected 1D input, got shape {a.shape}")
    shifted = a.data - a.data.max()
    e = np.exp(shifted)
    out = e / e.sum()

    def backward(g):
        return ((g - np.dot(g, out)) * out,)

    return Tensor(out, (a,), backward)


def concat(parts: list[Tensor]) -> Tensor:
    """Concatenate 1D vectors."""
    for p in parts:
        if p.data.ndim != 1:
            raise ShapeError(f"concat: expected 1D parts, got shape {p.shape}")
    out = np.concatenate([p.data for p in parts])
    sizes = [p.data.shape[0] for p in parts]

    def backward(g):
        grads, off = [], 0
        for s in sizes:
            grads.append(g[off:off + s])
            off += s
        return tuple(grads)

    return Tensor(out, tuple(parts), backward)


def narrow(a: Tensor, start: int, length: int) -> Tensor:
    """Contiguous slice of a 1D vector."""
    if a.data.ndim != 1:
        raise ShapeError(f"narrow: expected 1D input, got shape {a.shape}")
    if start < 0 or start + length > a.data.shape[0]:
        raise ShapeError(
            f"narrow: [{start}:{start + length}] out of range for shape {a.shape}")
    out = a.data[start:start + length]

    def backward(g):
        full = np.zeros_like(a.data)
        full[start:start + length] = g
        return (full,)

    return Tensor(out, (a,), backward)


def stack(parts: list[Tensor]) -> Tensor:
    """Stack same-shaped tensors along a new leading axis.

    Scalars stack to a vector; vectors stack to a matrix.
    """
    shapes = {p.data.shape for p in parts}
    if len(shapes) != 1:
        raise ShapeError(f"stack: mixed shapes {sorted(shapes)}")
    out = np.stack([p.data for p in parts])

    def backward(g):
        return tuple(g[i] for i in range(len(parts)))

    return Tensor(out, tuple(parts), backward)


def lookup(table: Tensor, index: int) -> Tensor:
    """Embedding lookup: one row of a 2D table."""
    if table.data.ndim != 2:
        raise ShapeError(f"lookup: table must be 2D, got shape {table.shape}")
    if not 0 <= index < table.data.shape[0]:
        raise ShapeError(f"lookup: index {index} out of range for {table.shape}")
    out = table.data[index].copy()

    def backward(g):
        full = np.zeros_like(table.data)
        full[index] = g
        return (full,)

    return Tensor(out, (table,), backward)


def take(a: Tensor, index: int) -> Tensor:
    """One element of a 1D vector, as a scalar tensor."""
    if a.data.ndim != 1:
        raise ShapeError(f"take: expected 1D input, got shape {a.shape}")
    if not 0 <= index < a.data.shape[0]:
        raise ShapeError(f"take: index {index} out of range for {a.shape}")
    out = a.data[index]

    def backward(g):
        full = np.zeros_like(a.data)
        full[index] = g
        return (full,)

    return Tensor(out, (a,), backward)


def scatter_add(values: Tensor, indices, size: int) -> Tensor:
    """out[indices[i]] += values[i] into a fresh zero vector of `size`."""
    idx = np.asarray(indices, dtype=np.intp)
    if values.data.ndim != 1 or idx.ndim != 1 or idx.shape[0] != values.data.shape[0]:
        raise ShapeError(
            f"scatter_add: values {values.shape} and indices {idx.shape} misaligned")
    if idx.size and (idx.min() < 0 or idx.max() >= size):
        raise ShapeError(f"scatter_add: index out of range for size {size}")
    out = np.zeros(size)
    np.add.at(out, idx, values.data)

    def backward(g):
        return (g[idx],)

    return Tensor(out, (values,), backward)


def clip_min(a: Tensor, floor: float) -> Tensor:
    """Elementwise max(a, floor); gradient passes only where a > floor."""
    a = _as_tensor(a)
    out = np.maximum(a.data, floor)
    mask = (a.data > floor).astype(np.float64)
    return Tensor(out, (a,), lambda g: (g * mask,))


def vsum(a: Tensor) -> Tensor:
    """Sum of all elements, as a scalar tensor."""
    a = _as_tensor(a)
    out = a.data.sum()
    return Tensor(out, (a,), lambda g: (np.broadcast_to(g, a.data.shape).copy(),))


def _topo_order(loss: Tensor) -> list[Tensor]:
    order, seen, stack_ = [], set(), [(loss, False)]
    while stack_:
        node, expanded = stack_.pop()
        if expanded:
            order.append(node)
            continue
        if id(node) in seen:
            continue
        seen.add(id(node))
        stack_.append((node, True))
        for p in node._parents:
            stack_.append((p, False))
    return order


def gradient(loss: Tensor, params: list[Tensor]) -> list[np.ndarray]:
    """d loss / d p for each parameter, by reverse traversal of the graph.

    Returns gradients aligned with `params`; parameters the loss does not
    reach get zero gradients of the right shape.
    """
    if loss.data.ndim != 0:
        raise ShapeError(f"gradient: loss must be scalar, got shape {loss.shape}")
    grads: dict[int, np.ndarray] = {id(loss): np.ones(())}
    for node in reversed(_topo_order(loss)):
        g = grads.get(id(node))
        if g is None or node._backward is None:
            continue
        for parent, pg in zip(node._parents, node._backward(g)):
            acc = grads.get(id(parent))
            grads[id(parent)] = pg if acc is None else acc + pg
    return [grads.get(id(p), np.zeros_like(p.data)) for p in params]


def finite_difference_check(f, params: list[Tensor], step: float = 1e-5) -> float:
    """Max relative error between analytic and central-difference gradients.

    `f` takes no arguments, reads the current `params` data, and returns a
    scalar Tensor.  It must be deterministic: fix any seeds before calling.
    """
    if step <= 0:
        raise ValueError("finite_difference_check: step must be positive")
    grads = gradient(f(), params)
    max_err = 0.0
    for p, g in zip(params, grads):
        flat = p.data.reshape(-1)
        gflat = np.asarray(g).reshape(-1)
        for i in range(flat.size):
            orig = flat[i]
            flat[i] = orig + step
            up = float(f().data)
            flat[i] = orig - step
            down = float(f().data)
            flat[i] = orig
            numeric = (up - down) / (2.0 * step)
            err = abs(gflat[i] - numeric) / (abs(numeric) + 1e-8)
            max_err = max(max_err, err)
    return max_err
