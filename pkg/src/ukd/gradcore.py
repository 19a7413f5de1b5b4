"""Dense float64 tensors with reverse-mode automatic differentiation.

A small define-by-run engine: every operation on linked tensors records a
``Node`` (parent tensors + a rule mapping the output gradient to per-parent
contributions) tagged with a global insertion number. ``backward`` walks the
nodes reachable from a scalar loss in reverse insertion order, which is a
valid topological order because parents are always recorded before children.
Graphs are rebuilt on every forward pass and never reused.

Every operation checks its output for NaN/Inf and raises ``NumericError``
instead of propagating non-finite values.
"""

from __future__ import annotations

import itertools
from contextlib import contextmanager

import numpy as np

from .errors import ContractError, NumericError, ParameterError, ShapeError

_SEQ = itertools.count()
_GRAD_ENABLED = True


@contextmanager
def no_grad():
    """Disable graph recording for the duration of the block."""
    global _GRAD_ENABLED
    prev = _GRAD_ENABLED
    _GRAD_ENABLED = False
    try:
        yield
    finally:
        _GRAD_ENABLED = prev


def grad_enabled() -> bool:
    return _GRAD_ENABLED


class Node:
    """One recorded operation in a computation graph.

    ``grad_fn(g)`` receives the gradient w.r.t. the op's output and returns
    one contribution per parent (``None`` for parents that need none).
    ``seq`` is the global insertion number; parents always carry smaller
    numbers than their children.
    """

    __slots__ = ("op", "parents", "grad_fn", "seq")

    def __init__(self, op: str, parents: tuple, grad_fn):
        self.op = op
        self.parents = parents
        self.grad_fn = grad_fn
        self.seq = next(_SEQ)


class Tensor:
    """A dense float64 array with an optional gradient slot and graph link.

    Leaves are created directly (``requires_grad=True`` for parameters);
    results of operations carry a ``node`` linking them into the graph.
    """

    __slots__ = ("data", "requires_grad", "grad", "node")

    def __init__(self, data, requires_grad: bool = False):
        self.data = np.asarray(data, dtype=np.float64)
        self.requires_grad = requires_grad
        self.grad = None
        self.node = None

    @property
    def shape(self):
        return self.data.shape

    def detach(self) -> "Tensor":
        return detach(self)

    def backward(self) -> None:
        backward(self)

    def __matmul__(self, other):
        return matmul(self, _lift(other))

    def __add__(self, other):
        return add(self, _lift(other))

    def __sub__(self, other):
        return sub(self, _lift(other))

    def __mul__(self, other):
        if isinstance(other, (int, float)):
            return scale(self, float(other))
        return mul(self, _lift(other))

    __rmul__ = __mul__

    def __neg__(self):
        return scale(self, -1.0)

    def __repr__(self):
        flags = []
        if self.requires_grad:
            flags.append("requires_grad")
        if self.node is not None:
            flags.append(f"op={self.node.op}")
        tail = ", ".join([f"shape={self.shape}"] + flags)
        return f"Tensor({tail})"


def _lift(x) -> Tensor:
    return x if isinstance(x, Tensor) else Tensor(x)


def _finite_or_raise(arr: np.ndarray, op: str) -> None:
    if not np.isfinite(arr).all():
        raise NumericError(f"{op} produced non-finite values")


def _result(op: str, data: np.ndarray, parents: tuple, grad_fn) -> Tensor:
    _finite_or_raise(data, op)
    out = Tensor(data)
    if _GRAD_ENABLED and any(p.node is not None or p.requires_grad for p in parents):
        out.node = Node(op, parents, grad_fn)
    return out


def matmul(a: Tensor, b: Tensor) -> Tensor:
    """Matrix product of a 2-d [m,k] by a 2-d [k,n] tensor."""
    if a.data.ndim != 2 or b.data.ndim != 2 or a.shape[1] != b.shape[0]:
        raise ShapeError(f"matmul needs [m,k]@[k,n], got {a.shape} @ {b.shape}")
    ad, bd = a.data, b.data

    def grad_fn(g):
        return g @ bd.T, ad.T @ g

    # overflow becomes a NumericError in _result; the warning would be noise
    with np.errstate(over="ignore", invalid="ignore"):
        value = ad @ bd
    return _result("matmul", value, (a, b), grad_fn)


def add(a: Tensor, b: Tensor) -> Tensor:
    """Elementwise sum; also accepts a 1-d bias added to every row of a."""
    if a.shape == b.shape:
        def grad_fn(g):
            return g, g
    elif a.data.ndim == 2 and b.data.ndim == 1 and b.shape[0] == a.shape[1]:
        def grad_fn(g):
            return g, g.sum(axis=0)
    else:
        raise ShapeError(f"add needs equal shapes or [m,n]+[n], got {a.shape} + {b.shape}")
    with np.errstate(over="ignore", invalid="ignore"):
        value = a.data + b.data
    return _result("add", value, (a, b), grad_fn)


def sub(a: Tensor, b: Tensor) -> Tensor:
    if a.shape != b.shape:
        raise ShapeError(f"sub needs equal shapes, got {a.shape} - {b.shape}")

    def grad_fn(g):
        return g, -g

    with np.errstate(over="ignore", invalid="ignore"):
        value = a.data - b.data
    return _result("sub", value, (a, b), grad_fn)


def mul(a: Tensor, b: Tensor) -> Tensor:
    """Elementwise (Hadamard) product of equal-shape tensors."""
    if a.shape != b.shape:
        raise ShapeError(f"mul needs equal shapes, got {a.shape} * {b.shape}")
    ad, bd = a.data, b.data

    def grad_fn(g):
        return g * bd, g * ad

    with np.errstate(over="ignore", invalid="ignore"):
        value = ad * bd
    return _result("mul", value, (a, b), grad_fn)


def scale(x: Tensor, c: float) -> Tensor:
    """Multiply by a python float constant (no gradient for the constant)."""
    c = float(c)

    def grad_fn(g):
        return (g * c,)

    with np.errstate(over="ignore", invalid="ignore"):
        value = x.data * c
    return _result("scale", value, (x,), grad_fn)


def relu(x: Tensor) -> Tensor:
    """Elementwise max(0, x). The gradient at exactly 0 is defined as 0."""
    mask = x.data > 0

    def grad_fn(g):
        return (g * mask,)

    return _result("relu", np.where(mask, x.data, 0.0), (x,), grad_fn)


def exp(x: Tensor) -> Tensor:
    # Overflow surfaces as NumericError via the finite check, not as a warning.
    with np.errstate(over="ignore"):
        out_data = np.exp(x.data)

    def grad_fn(g):
        return (g * out_data,)

    return _result("exp", out_data, (x,), grad_fn)


def log_softmax(z: Tensor, temperature: float) -> Tensor:
    """Row-wise log-softmax of z/temperature, stabilized by max subtraction.

    Rows of ``exp(log_softmax(z, t))`` sum to 1 to within 1e-12.
    """
    if not temperature > 0:
        raise ParameterError(f"temperature must be positive, got {temperature}")
    if z.data.ndim != 2 or z.shape[1] < 2:
        raise ShapeError(f"log_softmax needs [batch, C>=2] logits, got {z.shape}")
    t = float(temperature)
    s = z.data / t
    m = s.max(axis=1, keepdims=True)
    shifted = s - m
    log_z = np.log(np.exp(shifted).sum(axis=1, keepdims=True))
    out_data = shifted - log_z
    probs = np.exp(out_data)

    def grad_fn(g):
        return ((g - probs * g.sum(axis=1, keepdims=True)) / t,)

    return _result("log_softmax", out_data, (z,), grad_fn)


def row_sum(x: Tensor) -> Tensor:
    """Sum each row of a 2-d tensor, producing a 1-d tensor."""
    if x.data.ndim != 2:
        raise ShapeError(f"row_sum needs a 2-d tensor, got {x.shape}")
    n = x.shape[1]

    def grad_fn(g):
        return (np.broadcast_to(g[:, None], (g.shape[0], n)),)

    return _result("row_sum", x.data.sum(axis=1), (x,), grad_fn)


def tensor_sum(x: Tensor) -> Tensor:
    """Sum of all elements, producing a scalar (0-d) tensor."""
    shape = x.shape

    def grad_fn(g):
        return (np.full(shape, float(g)),)

    return _result("sum", np.asarray(x.data.sum()), (x,), grad_fn)


def mean(x: Tensor) -> Tensor:
    """Mean of all elements, producing a scalar (0-d) tensor."""
    shape = x.shape
    n = x.data.size

    def grad_fn(g):
        return (np.full(shape, float(g) / n),)

    return _result("mean", np.asarray(x.data.mean()), (x,), grad_fn)


def detach(x: Tensor) -> Tensor:
    """Value-identical tensor with no graph linkage; gradients stop here."""
    return Tensor(x.data.copy())


def backward(loss: Tensor) -> None:
    """Accumulate d(loss)/d(leaf) into ``grad`` of every requires_grad leaf.

    Repeated calls without ``zero_grad`` sum gradients. The loss must be a
    scalar (0-d) tensor.
    """
    if loss.data.shape != ():
        raise ContractError(f"backward needs a scalar loss, got shape {loss.data.shape}")
    seed = np.ones((), dtype=np.float64)
    if loss.node is None:
        if loss.requires_grad:
            _accumulate(loss, seed)
        return

    # Gather every tensor reachable from the loss that owns a node, then
    # replay their rules in reverse insertion order (children first).
    order = []
    seen = {id(loss)}
    stack = [loss]
    while stack:
        t = stack.pop()
        if t.node is None:
            continue
        order.append(t)
        for p in t.node.parents:
            if id(p) not in seen:
                seen.add(id(p))
                stack.append(p)
    order.sort(key=lambda t: t.node.seq, reverse=True)

    adjoint = {id(loss): seed}
    for t in order:
        g = adjoint.pop(id(t), None)
        if g is None:
            continue
        contribs = t.node.grad_fn(g)
        for p, c in zip(t.node.parents, contribs):
            if c is None:
                continue
            if p.node is not None:
                pid = id(p)
                adjoint[pid] = adjoint[pid] + c if pid in adjoint else c
            elif p.requires_grad:
                _accumulate(p, c)


def _accumulate(leaf: Tensor, contribution) -> None:
    if leaf.grad is None:
        leaf.grad = np.zeros_like(leaf.data)
    leaf.grad += contribution


def zero_grad(params) -> None:
    """Zero the gradient array of every tensor in ``params`` (allocating if absent)."""
    for p in params:
        if p.grad is None:
            p.grad = np.zeros_like(p.data)
        else:
            p.grad[...] = 0.0
