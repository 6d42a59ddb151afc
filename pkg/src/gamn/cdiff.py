"""Reverse-mode automatic differentiation for complex-valued computations.

Gradients follow the Wirtinger convention: for a real scalar loss f and a
complex variable z = x + iy, the stored gradient is

    g = 2 * df/d(conj(z))  =  df/dx + i * df/dy,

entrywise, so ``g`` coincides with the gradient of f seen as a function of
the stacked real parameters (x, y). For purely real variables the imaginary
part of ``g`` is zero. Only real-valued losses are supported.

The graph is define-by-run: every operation appends a node holding its
cached forward value (complex128 ndarray) and a vector-Jacobian closure.
``backward`` walks the DAG once and returns a :class:`GradientMap`; it never
mutates the graph, so repeated calls give bit-identical results.
"""

from __future__ import annotations

import itertools
import math
from typing import Callable

import numpy as np

_LN2 = math.log(2.0)
_ids = itertools.count()


class CdiffError(Exception):
    """Base class for graph construction/evaluation errors."""


class ShapeMismatchError(CdiffError):
    def __init__(self, op: str, *shapes):
        super().__init__(f"{op}: incompatible shapes {' and '.join(str(s) for s in shapes)}")


class DomainError(CdiffError):
    """Input outside an op's documented domain (e.g. log2 of non-positive value)."""


class NonRealLossError(CdiffError):
    """backward() was asked to differentiate a non-real or non-scalar node."""


class Node:
    """One tape node: cached complex value plus the vjp linking it to its parents."""

    __slots__ = ("value", "op", "parents", "requires_grad", "_vjp", "_id")

    def __init__(self, value, op, parents=(), vjp=None, requires_grad=None):
        self.value = np.asarray(value, dtype=np.complex128)
        self.op = op
        self.parents = tuple(parents)
        self._vjp = vjp
        self._id = next(_ids)
        if requires_grad is None:
            requires_grad = any(p.requires_grad for p in self.parents)
        self.requires_grad = requires_grad

    @property
    def shape(self):
        return self.value.shape

    def __repr__(self):
        return f"Node({self.op}, shape={self.value.shape}, id={self._id})"


def variable(value) -> Node:
    """Leaf that participates in differentiation."""
    return Node(value, "leaf", requires_grad=True)


def constant(value) -> Node:
    """Leaf treated as a constant (no gradient tracked; detach point)."""
    return Node(value, "const", requires_grad=False)


def _same_shape(op, a, b):
    if a.value.shape != b.value.shape:
        raise ShapeMismatchError(op, a.value.shape, b.value.shape)


def add(a: Node, b: Node) -> Node:
    _same_shape("add", a, b)
    return Node(a.value + b.value, "add", (a, b), lambda g: (g, g))


def sub(a: Node, b: Node) -> Node:
    _same_shape("sub", a, b)
    return Node(a.value - b.value, "sub", (a, b), lambda g: (g, -g))


def neg(a: Node) -> Node:
    return Node(-a.value, "neg", (a,), lambda g: (-g,))


def mul(a: Node, b: Node) -> Node:
    """Elementwise product (same shapes)."""
    _same_shape("mul", a, b)
    return Node(a.value * b.value, "mul", (a, b),
                lambda g: (g * np.conj(b.value), g * np.conj(a.value)))


def div(a: Node, b: Node) -> Node:
    """Elementwise quotient (same shapes)."""
    _same_shape("div", a, b)
    w = a.value / b.value
    return Node(w, "div", (a, b),
                lambda g: (g * np.conj(1.0 / b.value), -g * np.conj(w / b.value)))


def scale(a: Node, c: complex) -> Node:
    """Multiply by a Python scalar constant."""
    c = complex(c)
    return Node(a.value * c, "scale", (a,), lambda g: (g * np.conj(c),))


def smul(s: Node, a: Node) -> Node:
    """Scalar node times tensor node (the one broadcast this engine supports)."""
    if s.value.shape != ():
        raise ShapeMismatchError("smul", s.value.shape, a.value.shape)
    return Node(s.value * a.value, "smul", (s, a),
                lambda g: (np.sum(g * np.conj(a.value)), g * np.conj(s.value)))


def matmul(a: Node, b: Node) -> Node:
    """Matrix product: (m,n)@(n,p) or (m,n)@(n,)."""
    av, bv = a.value, b.value
    if av.ndim != 2 or bv.ndim not in (1, 2) or av.shape[1] != bv.shape[0]:
        raise ShapeMismatchError("matmul", av.shape, bv.shape)
    if bv.ndim == 2:
        vjp = lambda g: (g @ bv.conj().T, av.conj().T @ g)
    else:
        vjp = lambda g: (g[:, None] * np.conj(bv)[None, :], av.conj().T @ g)
    return Node(av @ bv, "matmul", (a, b), vjp)


def transpose(a: Node) -> Node:
    if a.value.ndim != 2:
        raise ShapeMismatchError("transpose", a.value.shape)
    return Node(a.value.T, "transpose", (a,), lambda g: (g.T,))


def hermitian(a: Node) -> Node:
    """Conjugate transpose."""
    if a.value.ndim != 2:
        raise ShapeMismatchError("hermitian", a.value.shape)
    return Node(a.value.conj().T, "hermitian", (a,), lambda g: (g.conj().T,))


def conj(a: Node) -> Node:
    return Node(np.conj(a.value), "conj", (a,), lambda g: (np.conj(g),))


def abs2(a: Node) -> Node:
    """Squared modulus |z|^2, a real-valued output."""
    av = a.value
    return Node(av.real ** 2 + av.imag ** 2, "abs2", (a,),
                lambda g: (2.0 * g.real * av,))


def real(a: Node) -> Node:
    return Node(a.value.real, "real", (a,), lambda g: (g.real.astype(np.complex128),))


def imag(a: Node) -> Node:
    return Node(a.value.imag, "imag", (a,), lambda g: (1j * g.real,))


def combine(x: Node, y: Node) -> Node:
    """Form Re(x) + i*Re(y) from two real-valued nodes."""
    _same_shape("combine", x, y)
    return Node(x.value.real + 1j * y.value.real, "combine", (x, y),
                lambda g: (g.real.astype(np.complex128), g.imag.astype(np.complex128)))


def summ(a: Node) -> Node:
    """Sum of all entries (scalar output)."""
    return Node(np.sum(a.value), "sum", (a,),
                lambda g: (np.broadcast_to(g, a.value.shape).copy(),))


def log2(a: Node) -> Node:
    """Base-2 log of a strictly positive real-valued node."""
    av = a.value.real
    if np.any(av <= 0.0):
        raise DomainError(f"log2: non-positive input (min {av.min():.6g})")
    return Node(np.log2(av), "log2", (a,), lambda g: (g.real / (av * _LN2),))


def pow_real(a: Node, p: float) -> Node:
    """a**p for a strictly positive real-valued node and constant real p."""
    av = a.value.real
    if np.any(av <= 0.0):
        raise DomainError(f"pow_real: non-positive base (min {av.min():.6g})")
    w = av ** p
    return Node(w, "pow_real", (a,), lambda g: (g.real * p * av ** (p - 1.0),))


def relu(a: Node) -> Node:
    """max(Re(a), 0) for a real-valued node."""
    mask = a.value.real > 0.0
    return Node(np.where(mask, a.value.real, 0.0), "relu", (a,),
                lambda g: (g.real * mask,))


def crelu(a: Node) -> Node:
    """Split complex ReLU: relu(Re z) + i*relu(Im z)."""
    av = a.value
    mre, mim = av.real > 0.0, av.imag > 0.0
    w = np.where(mre, av.real, 0.0) + 1j * np.where(mim, av.imag, 0.0)
    return Node(w, "crelu", (a,), lambda g: (g.real * mre + 1j * (g.imag * mim),))


def exp_i(a: Node) -> Node:
    """exp(i*x) for a real-valued node x."""
    w = np.exp(1j * a.value.real)
    return Node(w, "exp_i", (a,),
                lambda g: ((np.conj(g) * 1j * w).real.astype(np.complex128),))


def unit_normalize(a: Node) -> Node:
    """Elementwise z/|z| (complex-circle retraction)."""
    r = np.abs(a.value)
    if np.any(r == 0.0):
        raise DomainError("unit_normalize: zero entry has no direction")
    w = a.value / r
    av = a.value
    return Node(w, "unit_normalize", (a,),
                lambda g: (g / (2.0 * r) - np.conj(g) * av * av / (2.0 * r ** 3),))


def reshape(a: Node, shape, order: str = "C") -> Node:
    old = a.value.shape
    return Node(a.value.reshape(shape, order=order), "reshape", (a,),
                lambda g: (g.reshape(old, order=order),))


def slice1d(a: Node, start: int, stop: int) -> Node:
    """Contiguous slice of a 1-D node."""
    if a.value.ndim != 1:
        raise ShapeMismatchError("slice1d", a.value.shape)

    def vjp(g):
        out = np.zeros_like(a.value)
        out[start:stop] = g
        return (out,)

    return Node(a.value[start:stop], "slice1d", (a,), vjp)


_OPS: dict[str, Callable[..., Node]] = {
    "add": add, "sub": sub, "neg": neg, "mul": mul, "div": div, "scale": scale,
    "smul": smul, "matmul": matmul, "transpose": transpose, "hermitian": hermitian,
    "conj": conj, "abs2": abs2, "real": real, "imag": imag, "combine": combine,
    "sum": summ, "log2": log2, "pow_real": pow_real, "relu": relu, "crelu": crelu,
    "exp_i": exp_i, "unit_normalize": unit_normalize, "reshape": reshape,
    "slice1d": slice1d,
}


def forward_op(kind: str, *inputs, **attrs) -> Node:
    """Apply the named op to input nodes; kind must be one of the registered tags."""
    try:
        fn = _OPS[kind]
    except KeyError:
        raise CdiffError(f"unknown op kind {kind!r}") from None
    return fn(*inputs, **attrs)


class GradientMap:
    """node -> gradient array; unreachable leaves read as zeros."""

    def __init__(self, grads: dict):
        self._grads = grads

    def __getitem__(self, node: Node) -> np.ndarray:
        g = self._grads.get(node)
        if g is None:
            return np.zeros_like(node.value)
        return g

    def __contains__(self, node: Node) -> bool:
        return node in self._grads

    def __len__(self) -> int:
        return len(self._grads)


def _reachable(loss: Node) -> list[Node]:
    """Nodes reachable from loss, in creation (= topological) order."""
    seen = {id(loss): loss}
    stack = [loss]
    while stack:
        for p in stack.pop().parents:
            if id(p) not in seen:
                seen[id(p)] = p
                stack.append(p)
    return sorted(seen.values(), key=lambda n: n._id)


def backward(loss: Node) -> GradientMap:
    """Accumulate gradients of a real scalar loss for every reachable node.

    Raises NonRealLossError unless the loss is a scalar with
    |Im| <= 1e-9 * (1 + |Re|).
    """
    lv = loss.value
    if lv.shape != ():
        raise NonRealLossError(f"loss must be scalar, got shape {lv.shape}")
    if abs(lv.imag) > 1e-9 * (1.0 + abs(lv.real)):
        raise NonRealLossError(f"loss has imaginary part {lv.imag:.3e}")

    order = _reachable(loss)
    grads: dict[Node, np.ndarray] = {loss: np.ones((), dtype=np.complex128)}
    for node in reversed(order):
        g = grads.get(node)
        if g is None or node._vjp is None:
            continue
        for parent, pg in zip(node.parents, node._vjp(g)):
            if not parent.requires_grad:
                continue
            acc = grads.get(parent)
            grads[parent] = pg if acc is None else acc + pg
    return GradientMap(grads)


def grad_check(build: Callable[[Node], Node], point: np.ndarray, eps: float = 1e-5) -> float:
    """Max relative error of backward() vs central finite differences at point.

    ``build`` maps a leaf node to a real scalar loss node. Real and imaginary
    parts are perturbed independently with step eps*(1+|entry|); the error per
    entry is |g_ad - g_fd| / (1 + |g_fd|).
    """
    if not 1e-8 <= eps <= 1e-3:
        raise ValueError(f"eps must lie in [1e-8, 1e-3], got {eps}")
    point = np.asarray(point, dtype=np.complex128)
    leaf = variable(point)
    g_ad = backward(build(leaf))[leaf]

    def f(x: np.ndarray) -> float:
        return float(build(constant(x)).value.real)

    worst = 0.0
    flat = point.ravel()
    for i in range(flat.size):
        h = eps * (1.0 + abs(flat[i]))
        for step, pick in ((h, "re"), (1j * h, "im")):
            plus = point.copy()
            plus.ravel()[i] += step
            minus = point.copy()
            minus.ravel()[i] -= step
            d = (f(plus) - f(minus)) / (2.0 * h)
            got = g_ad.ravel()[i].real if pick == "re" else g_ad.ravel()[i].imag
            worst = max(worst, abs(got - d) / (1.0 + abs(d)))
    return worst
