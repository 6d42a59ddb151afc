"""Per-user SINR, weighted sum rate, and the training loss.

Two routes are provided on purpose: plain numpy evaluators (`sinr`, `wsr`,
`loss`) and a graph builder (`wsr_graph`) over :mod:`gamn.cdiff` nodes used
by the optimizer. The plain route never touches the autodiff engine so the
two can cross-check each other.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from . import cdiff
from .channel import ChannelSet


@dataclass
class SystemState:
    """Feasible operating point plus the fixed system-level scalars.

    theta: unit-modulus phase vector (N,), w: precoder (M, K) with
    trace(W^H W) <= power, weights: user rate weights summing to 1,
    sigma2/power in linear watts.
    """

    theta: np.ndarray
    w: np.ndarray
    weights: np.ndarray
    sigma2: float
    power: float

    def validate(self) -> None:
        if np.max(np.abs(np.abs(self.theta) - 1.0)) > 1e-9:
            raise ValueError("theta entries must have unit modulus (tol 1e-9)")
        used = float(np.sum(np.abs(self.w) ** 2))
        if used > self.power * (1.0 + 1e-9):
            raise ValueError(f"precoder power {used:.6g} exceeds budget {self.power:.6g}")
        if np.any(self.weights < 0) or abs(float(np.sum(self.weights)) - 1.0) > 1e-12:
            raise ValueError("weights must be non-negative and sum to 1")
        if self.sigma2 <= 0:
            raise ValueError("sigma2 must be positive")


def uniform_weights(n_users: int) -> np.ndarray:
    return np.full(n_users, 1.0 / n_users)


def effective_channel(theta: np.ndarray, channels: ChannelSet) -> np.ndarray:
    """K x M matrix whose row k is  h_RU_k^H diag(theta) H_BR."""
    if theta.shape != (channels.n_ris,):
        raise ValueError(f"theta shape {theta.shape} does not match N={channels.n_ris}")
    return (channels.h_ru.conj() * theta[None, :]) @ channels.h_br


def sinr(state: SystemState, channels: ChannelSet, k: int) -> float:
    """SINR of user k (0-based)."""
    if not 0 <= k < channels.n_users:
        raise IndexError(f"user index {k} out of range [0, {channels.n_users})")
    g = effective_channel(state.theta, channels)
    p = np.abs(g[k] @ state.w) ** 2
    return float(p[k] / (state.sigma2 + np.sum(p) - p[k]))


def wsr(state: SystemState, channels: ChannelSet) -> float:
    """Weighted sum rate sum_k c_k log2(1 + sinr_k), in bits/s/Hz."""
    g = effective_channel(state.theta, channels)
    p = np.abs(g @ state.w) ** 2
    gammas = np.diag(p) / (state.sigma2 + np.sum(p, axis=1) - np.diag(p))
    return float(np.sum(state.weights * np.log2(1.0 + gammas)))


def loss(state: SystemState, channels: ChannelSet) -> float:
    """Training loss: negated weighted sum rate."""
    return -wsr(state, channels)


def wsr_graph(theta: cdiff.Node, w: cdiff.Node, channels: ChannelSet,
              weights: np.ndarray, sigma2: float) -> cdiff.Node:
    """Differentiable weighted sum rate over theta (N,) and w (M, K) nodes."""
    n, m = channels.h_br.shape
    k_users = channels.n_users
    h_br = cdiff.constant(channels.h_br)
    terms = None
    for k in range(k_users):
        hk_conj = cdiff.constant(channels.h_ru[k].conj())
        row = cdiff.matmul(cdiff.reshape(cdiff.mul(hk_conj, theta), (1, n)), h_br)
        p = cdiff.reshape(cdiff.abs2(cdiff.matmul(row, w)), (k_users,))
        num = cdiff.summ(cdiff.slice1d(p, k, k + 1))
        interference = cdiff.sub(cdiff.summ(p), num)
        gamma = cdiff.div(num, cdiff.add(cdiff.constant(sigma2), interference))
        rate = cdiff.log2(cdiff.add(cdiff.constant(1.0), gamma))
        term = cdiff.scale(rate, float(weights[k]))
        terms = term if terms is None else cdiff.add(terms, term)
    return terms


def loss_graph(theta: cdiff.Node, w: cdiff.Node, channels: ChannelSet,
               weights: np.ndarray, sigma2: float) -> cdiff.Node:
    return cdiff.neg(wsr_graph(theta, w, channels, weights, sigma2))
