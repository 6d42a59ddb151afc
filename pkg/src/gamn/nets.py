"""Phase-learner and precoder-learner networks.

The phase learner is a complex-valued single-hidden-layer MLP with a split
CReLU activation; the precoder learner is a real MLP acting on the precoder
gradient flattened as [Re(vec); Im(vec)] with column-major vec. Forward
passes are built as cdiff graphs so the meta loss can differentiate through
them with respect to the network parameters; the gradient fed *in* is always
a detached constant.
"""

from __future__ import annotations

import struct
from dataclasses import dataclass

import numpy as np

from . import cdiff

HIDDEN_WIDTH = 200

_MAGIC = b"GMNW"
_HEADER = "<4sHHHHH"  # magic, version, n_ris, n_tx, n_users, hidden (+2 pad bytes)
_VERSION = 1


def _glorot(rng: np.random.Generator, fan_in: int, fan_out: int,
            shape: tuple[int, ...], complex_valued: bool) -> np.ndarray:
    bound = np.sqrt(6.0 / (fan_in + fan_out))
    if not complex_valued:
        return rng.uniform(-bound, bound, size=shape)
    b = bound / np.sqrt(2.0)
    return rng.uniform(-b, b, size=shape) + 1j * rng.uniform(-b, b, size=shape)


@dataclass
class ComplexMLP:
    """Single-hidden-layer complex MLP: (n,) -> hidden -> (n,) with CReLU."""

    w1: np.ndarray
    b1: np.ndarray
    w2: np.ndarray
    b2: np.ndarray

    @classmethod
    def init(cls, seed: int, n: int, hidden: int = HIDDEN_WIDTH) -> "ComplexMLP":
        rng = np.random.default_rng(seed)
        return cls(w1=_glorot(rng, n, hidden, (hidden, n), True),
                   b1=_glorot(rng, n, hidden, (hidden,), True),
                   w2=_glorot(rng, hidden, n, (n, hidden), True),
                   b2=_glorot(rng, hidden, n, (n,), True))

    def params(self) -> list[np.ndarray]:
        return [self.w1, self.b1, self.w2, self.b2]

    def set_params(self, values) -> None:
        self.w1, self.b1, self.w2, self.b2 = values

    def forward(self, param_nodes, grad_in: cdiff.Node) -> cdiff.Node:
        """delta = W2 @ crelu(W1 @ g + b1) + b2 as a graph over the parameters."""
        w1, b1, w2, b2 = param_nodes
        hidden = cdiff.crelu(cdiff.add(cdiff.matmul(w1, grad_in), b1))
        return cdiff.add(cdiff.matmul(w2, hidden), b2)


@dataclass
class RealMLP:
    """Single-hidden-layer real MLP on stacked [Re; Im] vectors with ReLU.

    Outputs a complex (m, k) update; for the phase-learner ablation m=n, k=1.
    """

    w1: np.ndarray
    b1: np.ndarray
    w2: np.ndarray
    b2: np.ndarray
    out_shape: tuple[int, int]

    @classmethod
    def init(cls, seed: int, m: int, k: int, hidden: int = HIDDEN_WIDTH) -> "RealMLP":
        rng = np.random.default_rng(seed)
        dim = 2 * m * k
        return cls(w1=_glorot(rng, dim, hidden, (hidden, dim), False),
                   b1=_glorot(rng, dim, hidden, (hidden,), False),
                   w2=_glorot(rng, hidden, dim, (dim, hidden), False),
                   b2=_glorot(rng, hidden, dim, (dim,), False),
                   out_shape=(m, k))

    def params(self) -> list[np.ndarray]:
        return [self.w1, self.b1, self.w2, self.b2]

    def set_params(self, values) -> None:
        self.w1, self.b1, self.w2, self.b2 = values

    def forward(self, param_nodes, grad_in: cdiff.Node) -> cdiff.Node:
        """Complex (m, k) update from a stacked real (2mk,) input node."""
        w1, b1, w2, b2 = param_nodes
        m, k = self.out_shape
        hidden = cdiff.relu(cdiff.add(cdiff.matmul(w1, grad_in), b1))
        out = cdiff.add(cdiff.matmul(w2, hidden), b2)
        re = cdiff.slice1d(out, 0, m * k)
        im = cdiff.slice1d(out, m * k, 2 * m * k)
        return cdiff.reshape(cdiff.combine(re, im), (m, k), order="F")


def flatten_complex(z: np.ndarray) -> np.ndarray:
    """[Re(vec(z)); Im(vec(z))] with column-major vec, as a real vector."""
    v = z.reshape(-1, order="F")
    return np.concatenate([v.real, v.imag])


def unflatten_complex(x: np.ndarray, shape: tuple[int, int]) -> np.ndarray:
    """Inverse of flatten_complex."""
    half = x.size // 2
    return (x[:half] + 1j * x[half:]).reshape(shape, order="F")


def pl_forward(net: ComplexMLP, grad_theta: np.ndarray) -> np.ndarray:
    """Plain (non-graph) phase-learner evaluation."""
    if grad_theta.shape != net.b2.shape:
        raise ValueError(f"expected input shape {net.b2.shape}, got {grad_theta.shape}")
    nodes = [cdiff.constant(p) for p in net.params()]
    return net.forward(nodes, cdiff.constant(grad_theta)).value


def prl_forward(net: RealMLP, grad_w: np.ndarray) -> np.ndarray:
    """Plain (non-graph) precoder-learner evaluation."""
    if grad_w.shape != net.out_shape:
        raise ValueError(f"expected input shape {net.out_shape}, got {grad_w.shape}")
    nodes = [cdiff.constant(p) for p in net.params()]
    return net.forward(nodes, cdiff.constant(flatten_complex(grad_w))).value


def save_checkpoint(path, net: ComplexMLP | RealMLP, n_ris: int, n_tx: int,
                    n_users: int) -> None:
    """Binary dump: 16-byte header then float64s in param order (w1, b1, w2, b2).

    Complex parameters are written as interleaved (re, im) pairs in row-major
    order, i.e. the raw complex128 memory layout.
    """
    hidden = net.b1.shape[0]
    header = struct.pack(_HEADER, _MAGIC, _VERSION, n_ris, n_tx, n_users, hidden)
    header += b"\x00" * (16 - len(header))
    with open(path, "wb") as fh:
        fh.write(header)
        for p in net.params():
            fh.write(np.ascontiguousarray(p).view(np.float64).tobytes())


def load_checkpoint(path, template: ComplexMLP | RealMLP) -> tuple[int, int, int]:
    """Fill `template`'s parameters in place; returns the header (N, M, K)."""
    with open(path, "rb") as fh:
        raw = fh.read(16)
        magic, version, n_ris, n_tx, n_users, hidden = struct.unpack(_HEADER, raw[:14])
        if magic != _MAGIC or version != _VERSION:
            raise ValueError(f"not a gamn checkpoint: magic={magic!r} version={version}")
        if hidden != template.b1.shape[0]:
            raise ValueError(f"hidden width mismatch: file {hidden}, net {template.b1.shape[0]}")
        data = np.frombuffer(fh.read(), dtype=np.float64)
    values = []
    pos = 0
    for p in template.params():
        n_floats = p.size * (2 if np.iscomplexobj(p) else 1)
        chunk = data[pos:pos + n_floats]
        if chunk.size != n_floats:
            raise ValueError("checkpoint payload truncated")
        pos += n_floats
        if np.iscomplexobj(p):
            values.append(chunk.view(np.complex128).reshape(p.shape).copy())
        else:
            values.append(chunk.reshape(p.shape).copy())
    if pos != data.size:
        raise ValueError("checkpoint payload has trailing data")
    template.set_params(values)
    return n_ris, n_tx, n_users
