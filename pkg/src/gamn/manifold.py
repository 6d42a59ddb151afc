"""Riemannian geometry for the complex-circle product and the power sphere,
plus the Riemannian ADAM step used for weight updates.

All manifolds share the real inner product <a, b> = Re(sum(conj(a) * b)),
under which the circle tangency test is Re(conj(x_n) v_n) = 0 per entry and
the sphere test is Re(trace(x^H v)) = 0. On the Euclidean manifold the ADAM
step reduces exactly to the textbook recursion.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

_ON_MANIFOLD_TOL = 1e-8


class ManifoldError(Exception):
    pass


class OffManifoldError(ManifoldError):
    """Point handed to a manifold operation violates its constraint."""


class DegenerateRetractionError(ManifoldError):
    """x + v hit the origin, where the retraction is undefined."""


class Manifold:
    """Tangent projection + retraction for one constraint set."""

    def check_point(self, x: np.ndarray) -> None:
        raise NotImplementedError

    def project(self, x: np.ndarray, g: np.ndarray) -> np.ndarray:
        raise NotImplementedError

    def retract(self, x: np.ndarray, v: np.ndarray) -> np.ndarray:
        raise NotImplementedError

    def second_moment(self, v: np.ndarray) -> np.ndarray:
        """Squared-magnitude statistic matching the manifold's product structure."""
        raise NotImplementedError


class CircleProduct(Manifold):
    """Product of n unit circles in C: points are (n,) vectors, |x_i| = 1."""

    def __init__(self, n: int):
        self.n = n

    def check_point(self, x):
        if x.shape != (self.n,):
            raise OffManifoldError(f"expected shape ({self.n},), got {x.shape}")
        err = np.max(np.abs(np.abs(x) - 1.0))
        if err > _ON_MANIFOLD_TOL:
            raise OffManifoldError(f"point off unit circle by {err:.3e}")

    def project(self, x, g):
        self.check_point(x)
        return g - (np.conj(x) * g).real * x

    def retract(self, x, v):
        z = x + v
        r = np.abs(z)
        if np.any(r == 0.0):
            raise DegenerateRetractionError("x + v has a zero entry")
        return z / r

    def second_moment(self, v):
        return np.abs(v) ** 2  # one scalar per circle factor


class PowerSphere(Manifold):
    """Complex (m, k) matrices with squared Frobenius norm equal to power."""

    def __init__(self, m: int, k: int, power: float):
        if power <= 0:
            raise ValueError("power must be positive")
        self.m, self.k, self.power = m, k, power

    def check_point(self, x):
        if x.shape != (self.m, self.k):
            raise OffManifoldError(f"expected shape ({self.m}, {self.k}), got {x.shape}")
        used = float(np.sum(np.abs(x) ** 2))
        if abs(used - self.power) > _ON_MANIFOLD_TOL * self.power:
            raise OffManifoldError(
                f"squared norm {used:.6g} differs from power {self.power:.6g}")

    def project(self, x, g):
        self.check_point(x)
        return g - (np.sum(np.conj(x) * g).real / self.power) * x

    def retract(self, x, v):
        z = x + v
        norm = float(np.linalg.norm(z))
        if norm == 0.0:
            raise DegenerateRetractionError("x + v vanished")
        return z * (np.sqrt(self.power) / norm)

    def second_moment(self, v):
        return np.array(np.sum(np.abs(v) ** 2))  # single scalar for the whole sphere


class Euclidean(Manifold):
    """Unconstrained parameters of any shape (complex or real-valued)."""

    def check_point(self, x):
        pass

    def project(self, x, g):
        return g

    def retract(self, x, v):
        return x + v

    def second_moment(self, v):
        return np.abs(v) ** 2


def tangent_project(manifold: Manifold, x: np.ndarray, g: np.ndarray) -> np.ndarray:
    return manifold.project(x, g)


def retract(manifold: Manifold, x: np.ndarray, v: np.ndarray) -> np.ndarray:
    return manifold.retract(x, v)


@dataclass
class RadamState:
    """First/second-moment buffers for one parameter, shapes fixed at creation."""

    m: np.ndarray
    v: np.ndarray
    step: int = 0
    beta1: float = 0.9
    beta2: float = 0.999
    eps: float = 1e-8

    @classmethod
    def fresh(cls, manifold: Manifold, x: np.ndarray, **kw) -> "RadamState":
        return cls(m=np.zeros_like(x), v=np.zeros_like(manifold.second_moment(x)), **kw)


def radam_step(manifold: Manifold, x: np.ndarray, g: np.ndarray,
               state: RadamState, lr: float) -> tuple[np.ndarray, RadamState]:
    """One Riemannian ADAM update from ambient gradient g; returns (x', state').

    The gradient is projected to the tangent space; moments use
    bias-corrected ADAM statistics (second moment per the manifold's product
    structure); the move is retracted and the first moment re-projected onto
    the new tangent space (projection transport).
    """
    vt = manifold.project(x, g)
    t = state.step + 1
    m = state.beta1 * state.m + (1.0 - state.beta1) * vt
    v = state.beta2 * state.v + (1.0 - state.beta2) * manifold.second_moment(vt)
    m_hat = m / (1.0 - state.beta1 ** t)
    v_hat = v / (1.0 - state.beta2 ** t)
    direction = m_hat / (np.sqrt(v_hat) + state.eps)
    x_new = manifold.retract(x, -lr * direction)
    m_new = manifold.project(x_new, m)
    return x_new, RadamState(m=m_new, v=v, step=t,
                             beta1=state.beta1, beta2=state.beta2, eps=state.eps)
