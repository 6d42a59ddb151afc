"""Seeded Rician-fading channel generation for the BS-RIS-user geometry.

Both hops follow a Rician mixture of a geometric line-of-sight component
(uniform-linear-array steering vectors) and an i.i.d. complex-Gaussian
scattered component, each scaled by its own 3GPP-style pathloss. Generation
is a pure function of (seed, config): the same inputs reproduce the same
matrices bit for bit.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np


@dataclass(frozen=True)
class Geometry:
    """2-D deployment geometry, distances in meters."""

    bs_pos: tuple[float, float] = (0.0, 10.0)
    ris_pos: tuple[float, float] = (100.0, 0.0)
    user_center: tuple[float, float] = (100.0, 15.0)
    user_radius: float = 5.0
    carrier_freq: float = 28e9
    antenna_spacing: float = 0.5  # in wavelengths

    def __post_init__(self):
        if self.user_radius <= 0:
            raise ValueError("user_radius must be positive")
        if self.carrier_freq <= 0:
            raise ValueError("carrier_freq must be positive")
        if self.antenna_spacing <= 0:
            raise ValueError("antenna_spacing must be positive")


@dataclass(frozen=True)
class RicianParams:
    """Rician K-factors (linear) and pathloss constants, all configurable.

    Pathloss in dB is  a + b*log10(d_m) + c*log10(f_GHz); the LoS/NLoS
    constants default to UMi-style values.
    """

    kappa_br: float = 10.0
    kappa_ru: float = 10.0
    los_const: tuple[float, float, float] = (28.0, 22.0, 20.0)
    nlos_const: tuple[float, float, float] = (32.4, 23.1, 20.0)

    def __post_init__(self):
        if self.kappa_br < 0 or self.kappa_ru < 0:
            raise ValueError("Rician factors must be non-negative")


@dataclass(frozen=True)
class ChannelSet:
    """One channel realization: H_BR is N x M, H_RU is K x N."""

    h_br: np.ndarray
    h_ru: np.ndarray
    user_positions: np.ndarray  # (K, 2) meters
    seed: int

    @property
    def n_ris(self) -> int:
        return self.h_br.shape[0]

    @property
    def n_tx(self) -> int:
        return self.h_br.shape[1]

    @property
    def n_users(self) -> int:
        return self.h_ru.shape[0]


def steering_vector(angle: float, count: int, spacing: float = 0.5) -> np.ndarray:
    """ULA response: entry n is exp(i*2*pi*spacing*n*sin(angle))."""
    if count < 1:
        raise ValueError("count must be >= 1")
    n = np.arange(count)
    return np.exp(1j * 2.0 * np.pi * spacing * n * math.sin(angle))


def pathloss_db(distance: float, los: bool, freq: float,
                rician: RicianParams | None = None) -> float:
    """Pathloss in dB at `distance` meters and carrier `freq` Hz."""
    if distance < 1.0:
        raise ValueError(f"pathloss model requires distance >= 1 m, got {distance}")
    params = rician if rician is not None else RicianParams()
    a, b, c = params.los_const if los else params.nlos_const
    return a + b * math.log10(distance) + c * math.log10(freq / 1e9)


def _angle(src, dst) -> float:
    return math.atan2(dst[1] - src[1], dst[0] - src[0])


def _amp(pl_db: float) -> float:
    return math.sqrt(10.0 ** (-pl_db / 10.0))


def _rician_mix(los: np.ndarray, nlos: np.ndarray, kappa: float,
                amp_los: float, amp_nlos: float) -> np.ndarray:
    return (amp_los * math.sqrt(kappa / (1.0 + kappa)) * los
            + amp_nlos * math.sqrt(1.0 / (1.0 + kappa)) * nlos)


def generate(seed: int, geometry: Geometry, rician: RicianParams,
             n_ris: int, n_tx: int, n_users: int) -> ChannelSet:
    """Draw one seeded channel realization with fresh user positions.

    H_BR mixes an outer product of steering vectors (RIS arrival x BS
    departure) with i.i.d. CN(0,1) scattering; each H_RU row does the same
    per user. Pathloss enters as linear amplitude sqrt(10^(-PL/10)).
    """
    if n_ris < 1 or n_tx < 1 or n_users < 1:
        raise ValueError("n_ris, n_tx, n_users must all be >= 1")
    rng = np.random.default_rng(seed)

    # User drop: uniform in the disc around user_center.
    radii = geometry.user_radius * np.sqrt(rng.random(n_users))
    angles = 2.0 * np.pi * rng.random(n_users)
    users = np.stack([geometry.user_center[0] + radii * np.cos(angles),
                      geometry.user_center[1] + radii * np.sin(angles)], axis=1)

    bs, ris = geometry.bs_pos, geometry.ris_pos
    freq, sp = geometry.carrier_freq, geometry.antenna_spacing

    # BS -> RIS hop.
    d_br = math.dist(bs, ris)
    a_ris = steering_vector(_angle(ris, bs), n_ris, sp)
    a_bs = steering_vector(_angle(bs, ris), n_tx, sp)
    los_br = np.outer(a_ris, a_bs.conj())
    nlos_br = (rng.standard_normal((n_ris, n_tx))
               + 1j * rng.standard_normal((n_ris, n_tx))) / math.sqrt(2.0)
    h_br = _rician_mix(los_br, nlos_br, rician.kappa_br,
                       _amp(pathloss_db(d_br, True, freq, rician)),
                       _amp(pathloss_db(d_br, False, freq, rician)))

    # RIS -> user hop, one row per user.
    nlos_ru = (rng.standard_normal((n_users, n_ris))
               + 1j * rng.standard_normal((n_users, n_ris))) / math.sqrt(2.0)
    h_ru = np.empty((n_users, n_ris), dtype=np.complex128)
    for k in range(n_users):
        d_k = math.dist(ris, users[k])
        los_k = steering_vector(_angle(ris, users[k]), n_ris, sp)
        h_ru[k] = _rician_mix(los_k, nlos_ru[k], rician.kappa_ru,
                              _amp(pathloss_db(d_k, True, freq, rician)),
                              _amp(pathloss_db(d_k, False, freq, rician)))

    return ChannelSet(h_br=h_br, h_ru=h_ru, user_positions=users, seed=int(seed))


def dump_channels(path, channels: ChannelSet) -> None:
    """Write one realization as text: header `N M K seed`, then `re im` rows."""
    n, m = channels.h_br.shape
    k = channels.h_ru.shape[0]
    with open(path, "w", encoding="ascii") as fh:
        fh.write(f"{n} {m} {k} {channels.seed}\n")
        for z in np.concatenate([channels.h_br.ravel(), channels.h_ru.ravel()]):
            fh.write(f"{z.real:.17g} {z.imag:.17g}\n")


def load_channels(path) -> ChannelSet:
    """Read a file written by dump_channels (user positions are not stored)."""
    with open(path, encoding="ascii") as fh:
        n, m, k, seed = (int(tok) for tok in fh.readline().split())
        flat = np.array([complex(float(a), float(b))
                         for a, b in (line.split() for line in fh)])
    if flat.size != n * m + k * n:
        raise ValueError(f"channel dump has {flat.size} entries, expected {n * m + k * n}")
    return ChannelSet(h_br=flat[:n * m].reshape(n, m),
                      h_ru=flat[n * m:].reshape(k, n),
                      user_positions=np.zeros((k, 2)), seed=seed)
