"""Dense n-d arrays with reverse-mode automatic differentiation.

Values are float64 by default (float32 available via ``dtype``). Every op
records a backward rule on an implicit tape; ``Tensor.backward`` walks the
graph once in reverse topological order and accumulates gradients, so shared
subexpressions sum their contributions.
"""

from __future__ import annotations

import contextlib

import numpy as np

_GRAD_ENABLED = True


@contextlib.contextmanager
def no_grad():
    """Disable tape recording inside the block (inference / target nets)."""
    global _GRAD_ENABLED
    prev = _GRAD_ENABLED
    _GRAD_ENABLED = False
    try:
        yield
    finally:
        _GRAD_ENABLED = prev


def grad_enabled() -> bool:
    return _GRAD_ENABLED


class ShapeError(ValueError):
    pass


class Tensor:
    __slots__ = ("data", "grad", "requires_grad", "_parents", "_backward_fn")

    def __init__(self, data, requires_grad: bool = False, dtype=None):
        arr = np.asarray(data)
        if dtype is not None:
            arr = arr.astype(dtype, copy=False)
        elif arr.dtype not in (np.float32, np.float64):
            arr = arr.astype(np.float64)
        self.data = arr
        self.grad: np.ndarray | None = None
        self.requires_grad = requires_grad
        self._parents: tuple[Tensor, ...] = ()
        self._backward_fn = None

    @property
    def shape(self):
        return self.data.shape

    @property
    def ndim(self):
        return self.data.ndim

    @property
    def dtype(self):
        return self.data.dtype

    @property
    def size(self):
        return self.data.size

    def item(self) -> float:
        return float(self.data)

    def detach(self) -> "Tensor":
        return Tensor(self.data)

    def zero_grad(self) -> None:
        self.grad = None

    def _accumulate(self, g: np.ndarray) -> None:
        if self.grad is None:
            self.grad = np.zeros_like(self.data)
        self.grad += g

    def backward(self, grad=None) -> None:
        """Reverse pass from this node; visits each tape node exactly once."""
        if grad is None:
            grad = np.ones_like(self.data)
        else:
            grad = np.asarray(grad, dtype=self.data.dtype)
        # Iterative topological sort: training unrolls are deep enough to
        # blow the recursion limit.
        topo: list[Tensor] = []
        visited: set[int] = set()
        stack: list[tuple[Tensor, bool]] = [(self, False)]
        while stack:
            node, done = stack.pop()
            if done:
                topo.append(node)
                continue
            if id(node) in visited:
                continue
            visited.add(id(node))
            stack.append((node, True))
            for p in node._parents:
                if id(p) not in visited:
                    stack.append((p, False))
        self._accumulate(grad)
        for node in reversed(topo):
            if node._backward_fn is not None:
                node._backward_fn(node.grad)

    def __repr__(self):
        return f"Tensor(shape={self.shape}, dtype={self.data.dtype}, grad={self.requires_grad})"

    # operator sugar
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

    def __neg__(self):
        return mul(self, -1.0)

    def __matmul__(self, other):
        return matmul(self, other)

    def reshape(self, *shape):
        return reshape(self, shape if len(shape) != 1 or isinstance(shape[0], int) else shape[0])


def as_tensor(x, dtype=None) -> Tensor:
    return x if isinstance(x, Tensor) else Tensor(x, dtype=dtype)


def _node(data: np.ndarray, parents: tuple[Tensor, ...], backward_fn) -> Tensor:
    out = Tensor(data)
    if _GRAD_ENABLED and any(p.requires_grad for p in parents):
        out.requires_grad = True
        out._parents = tuple(p for p in parents if p.requires_grad)
        out._backward_fn = backward_fn
    return out


def _unbroadcast(g: np.ndarray, shape: tuple) -> np.ndarray:
    """Sum a broadcast gradient back down to the operand's shape."""
    if g.shape == shape:
        return g
    while g.ndim > len(shape):
        g = g.sum(axis=0)
    for axis, dim in enumerate(shape):
        if dim == 1 and g.shape[axis] != 1:
            g = g.sum(axis=axis, keepdims=True)
    return g


def _check_broadcast(a: Tensor, b: Tensor, opname: str) -> None:
    try:
        np.broadcast_shapes(a.shape, b.shape)
    except ValueError:
        raise ShapeError(f"{opname}: shapes {a.shape} and {b.shape} do not broadcast") from None


def _coerce_pair(a, b) -> tuple[Tensor, Tensor]:
    """Wrap operands; plain scalars/arrays adopt the tensor operand's dtype."""
    if isinstance(a, Tensor) and not isinstance(b, Tensor):
        return a, Tensor(b, dtype=a.dtype)
    if isinstance(b, Tensor) and not isinstance(a, Tensor):
        return Tensor(a, dtype=b.dtype), b
    return as_tensor(a), as_tensor(b)


# ---------------------------------------------------------------------------
# elementwise arithmetic

def add(a, b) -> Tensor:
    a, b = _coerce_pair(a, b)
    _check_broadcast(a, b, "add")
    out_data = a.data + b.data

    def backward(g):
        if a.requires_grad:
            a._accumulate(_unbroadcast(g, a.shape))
        if b.requires_grad:
            b._accumulate(_unbroadcast(g, b.shape))

    return _node(out_data, (a, b), backward)


def sub(a, b) -> Tensor:
    a, b = _coerce_pair(a, b)
    _check_broadcast(a, b, "sub")
    out_data = a.data - b.data

    def backward(g):
        if a.requires_grad:
            a._accumulate(_unbroadcast(g, a.shape))
        if b.requires_grad:
            b._accumulate(_unbroadcast(-g, b.shape))

    return _node(out_data, (a, b), backward)


def mul(a, b) -> Tensor:
    a, b = _coerce_pair(a, b)
    _check_broadcast(a, b, "mul")
    out_data = a.data * b.data

    def backward(g):
        if a.requires_grad:
            a._accumulate(_unbroadcast(g * b.data, a.shape))
        if b.requires_grad:
            b._accumulate(_unbroadcast(g * a.data, b.shape))

    return _node(out_data, (a, b), backward)


def matmul(a, b) -> Tensor:
    """Matrix product; supports 2-d and batched 3-d operands (numpy rules)."""
    a, b = as_tensor(a), as_tensor(b)
    if a.ndim < 1 or b.ndim < 2:
        raise ShapeError(f"matmul: needs >=2-d operands, got {a.shape} and {b.shape}")
    if a.shape[-1] != b.shape[-2]:
        raise ShapeError(f"matmul: inner dims differ, {a.shape} vs {b.shape}")
    out_data = np.matmul(a.data, b.data)

    def backward(g):
        if a.requires_grad:
            ga = np.matmul(g, np.swapaxes(b.data, -1, -2))
            a._accumulate(_unbroadcast(ga, a.shape))
        if b.requires_grad:
            gb = np.matmul(np.swapaxes(a.data, -1, -2), g)
            b._accumulate(_unbroadcast(gb, b.shape))

    return _node(out_data, (a, b), backward)


# ---------------------------------------------------------------------------
# nonlinearities

def relu(x) -> Tensor:
    x = as_tensor(x)
    out_data = np.maximum(x.data, 0.0)

    def backward(g):
        x._accumulate(g * (x.data > 0))

    return _node(out_data, (x,), backward)


def elu(x) -> Tensor:
    """ELU with alpha = 1: x for x > 0, exp(x) - 1 otherwise."""
    x = as_tensor(x)
    neg = x.data <= 0
    out_data = np.where(neg, np.expm1(x.data), x.data)

    def backward(g):
        # derivative is exp(x) = y + 1 on the negative branch
        x._accumulate(g * np.where(neg, out_data + 1.0, 1.0))

    return _node(out_data, (x,), backward)


def abs(x) -> Tensor:  # noqa: A001 - numpy-style namespace
    """|x|; subgradient at 0 is 0."""
    x = as_tensor(x)
    out_data = np.fabs(x.data)

    def backward(g):
        x._accumulate(g * np.sign(x.data))

    return _node(out_data, (x,), backward)


def tanh(x) -> Tensor:
    x = as_tensor(x)
    out_data = np.tanh(x.data)

    def backward(g):
        x._accumulate(g * (1.0 - out_data * out_data))

    return _node(out_data, (x,), backward)


def sigmoid(x) -> Tensor:
    x = as_tensor(x)
    out_data = 1.0 / (1.0 + np.exp(-x.data))

    def backward(g):
        x._accumulate(g * out_data * (1.0 - out_data))

    return _node(out_data, (x,), backward)


def softmax(x, axis: int = -1) -> Tensor:
    x = as_tensor(x)
    shifted = x.data - x.data.max(axis=axis, keepdims=True)
    e = np.exp(shifted)
    out_data = e / e.sum(axis=axis, keepdims=True)

    def backward(g):
        dot = (g * out_data).sum(axis=axis, keepdims=True)
        x._accumulate((g - dot) * out_data)

    return _node(out_data, (x,), backward)


def log(x) -> Tensor:
    x = as_tensor(x)
    out_data = np.log(x.data)

    def backward(g):
        x._accumulate(g / x.data)

    return _node(out_data, (x,), backward)


def apply_mask(x, mask) -> Tensor:
    """Zero out entries where ``mask`` is falsy, NaN-safely.

    Uses np.where rather than multiplication: a poisoned (NaN) entry under a
    zero mask stays zero in both the value and the gradient.
    """
    x = as_tensor(x)
    m = np.asarray(mask).astype(bool)
    out_data = np.where(m, x.data, 0.0)

    def backward(g):
        x._accumulate(np.where(m, g, 0.0))

    return _node(out_data, (x,), backward)


# ---------------------------------------------------------------------------
# shape / selection

def reshape(x, shape) -> Tensor:
    x = as_tensor(x)
    out_data = x.data.reshape(shape)

    def backward(g):
        x._accumulate(g.reshape(x.shape))

    return _node(out_data, (x,), backward)


def transpose(x, axes) -> Tensor:
    x = as_tensor(x)
    out_data = np.transpose(x.data, axes)
    inverse = np.argsort(axes)

    def backward(g):
        x._accumulate(np.transpose(g, inverse))

    return _node(out_data, (x,), backward)


def concat(tensors, axis: int = 0) -> Tensor:
    tensors = [as_tensor(t) for t in tensors]
    out_data = np.concatenate([t.data for t in tensors], axis=axis)
    sizes = [t.shape[axis] for t in tensors]
    offsets = np.cumsum([0] + sizes)

    def backward(g):
        for t, lo, hi in zip(tensors, offsets[:-1], offsets[1:]):
            if t.requires_grad:
                idx = [slice(None)] * g.ndim
                idx[axis] = slice(lo, hi)
                t._accumulate(g[tuple(idx)])

    return _node(out_data, tuple(tensors), backward)


def split(x, sections: int, axis: int = -1) -> list[Tensor]:
    """Split into equal sections along ``axis``; each part is its own node."""
    x = as_tensor(x)
    parts = np.split(x.data, sections, axis=axis)
    outs = []
    width = parts[0].shape[axis]
    for i, part in enumerate(parts):
        lo = i * width

        def backward(g, lo=lo):
            full = np.zeros_like(x.data)
            idx = [slice(None)] * full.ndim
            idx[axis] = slice(lo, lo + width)
            full[tuple(idx)] = g
            x._accumulate(full)

        outs.append(_node(part, (x,), backward))
    return outs


def gather(x, index, axis: int = -1) -> Tensor:
    """Pick entries along ``axis`` (take_along_axis semantics).

    ``index`` is an integer array whose size along ``axis`` must not repeat
    positions within a slice (always 1 in this codebase: chosen actions).
    """
    x = as_tensor(x)
    idx = np.asarray(index)
    if idx.ndim != x.ndim:
        raise ShapeError(f"gather: index ndim {idx.ndim} != input ndim {x.ndim}")
    out_data = np.take_along_axis(x.data, idx, axis=axis)

    def backward(g):
        full = np.zeros_like(x.data)
        np.put_along_axis(full, idx, g, axis=axis)
        x._accumulate(full)

    return _node(out_data, (x,), backward)


def one_hot(index, depth: int, dtype=np.float64) -> Tensor:
    """Constant one-hot encoding (no gradient)."""
    idx = np.asarray(index, dtype=np.int64)
    out = np.zeros(idx.shape + (depth,), dtype=dtype)
    np.put_along_axis(out, idx[..., None], 1.0, axis=-1)
    return Tensor(out)


# ---------------------------------------------------------------------------
# reductions

def sum(x, axis=None, keepdims: bool = False) -> Tensor:  # noqa: A001
    x = as_tensor(x)
    out_data = x.data.sum(axis=axis, keepdims=keepdims)

    def backward(g):
        if axis is None:
            x._accumulate(np.broadcast_to(g, x.shape).copy() if np.ndim(g) else np.full_like(x.data, g))
        else:
            gg = g if keepdims else np.expand_dims(g, axis)
            x._accumulate(np.broadcast_to(gg, x.shape).copy())

    return _node(out_data, (x,), backward)


def mean(x, axis=None, keepdims: bool = False) -> Tensor:
    x = as_tensor(x)
    out_data = x.data.mean(axis=axis, keepdims=keepdims)
    if axis is None:
        n = x.size
    else:
        n = x.shape[axis] if isinstance(axis, int) else int(np.prod([x.shape[a] for a in axis]))

    def backward(g):
        if axis is None:
            x._accumulate(np.full_like(x.data, g / n))
        else:
            gg = g if keepdims else np.expand_dims(g, axis)
            x._accumulate(np.broadcast_to(gg / n, x.shape).copy())

    return _node(out_data, (x,), backward)


def mse(pred, target) -> Tensor:
    """Mean squared error over all elements."""
    pred, target = as_tensor(pred), as_tensor(target)
    if pred.shape != target.shape:
        raise ShapeError(f"mse: shapes differ, {pred.shape} vs {target.shape}")
    diff = pred.data - target.data
    out_data = np.asarray((diff * diff).mean())
    n = pred.size

    def backward(g):
        scaled = (2.0 * g / n) * diff
        if pred.requires_grad:
            pred._accumulate(scaled)
        if target.requires_grad:
            target._accumulate(-scaled)

    return _node(out_data, (pred, target), backward)
