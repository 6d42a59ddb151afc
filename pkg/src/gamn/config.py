"""Experiment configuration: INI files with dotted section keys.

`system.N`, `system.M`, `system.K` are required; everything else falls back
to documented defaults. Powers are written in dBm and converted to linear
watts at load time so all internal math is linear-scale. `render` emits the
fully resolved configuration in the same format, and feeding that file back
reproduces identical outputs.
"""

from __future__ import annotations

import configparser
from dataclasses import dataclass, field

import numpy as np

from .algorithm import VARIANTS, HyperParams, Scenario, SystemParams
from .channel import Geometry, RicianParams
from .metrics import uniform_weights


class ConfigError(Exception):
    """Invalid or missing configuration; the message names the dotted key."""


def dbm_to_watts(x: float) -> float:
    return 10.0 ** ((x - 30.0) / 10.0)


@dataclass
class ExperimentConfig:
    n_ris: int
    n_tx: int
    n_users: int
    power_dbm: float = 10.0
    sigma2_dbm: float = -100.0
    weights: np.ndarray | None = None
    geometry: Geometry = field(default_factory=Geometry)
    rician: RicianParams = field(default_factory=RicianParams)
    hyper: HyperParams = field(default_factory=HyperParams)
    variants: tuple[str, ...] = ("gamn",)
    n_realizations: int = 100
    master_seed: int = 0
    out_dir: str | None = None
    prefix: str = "gamn"
    powers_dbm: tuple[float, ...] = (0.0, 5.0, 10.0, 15.0)
    n_list: tuple[int, ...] = (20, 40, 60)

    def system(self) -> SystemParams:
        weights = self.weights if self.weights is not None else uniform_weights(self.n_users)
        return SystemParams(power=dbm_to_watts(self.power_dbm),
                            sigma2=dbm_to_watts(self.sigma2_dbm),
                            weights=np.asarray(weights, dtype=float))

    def scenario(self, n_ris: int | None = None, power_dbm: float | None = None) -> Scenario:
        """Scenario for one run, optionally overriding the sweep variable."""
        system = self.system()
        if power_dbm is not None:
            system = SystemParams(power=dbm_to_watts(power_dbm),
                                  sigma2=system.sigma2, weights=system.weights)
        return Scenario(geometry=self.geometry, rician=self.rician,
                        n_ris=self.n_ris if n_ris is None else n_ris,
                        n_tx=self.n_tx, n_users=self.n_users,
                        system=system, hyper=self.hyper)


def _get(parser, section, key, cast, default=None, required=False):
    dotted = f"{section}.{key}"
    if not parser.has_option(section, key):
        if required:
            raise ConfigError(f"missing required key {dotted}")
        return default
    raw = parser.get(section, key)
    try:
        return cast(raw)
    except (ValueError, TypeError) as exc:
        raise ConfigError(f"invalid value for {dotted}: {raw!r} ({exc})") from None


def _floats(raw: str) -> tuple[float, ...]:
    return tuple(float(tok) for tok in raw.replace(",", " ").split())


def _ints(raw: str) -> tuple[int, ...]:
    return tuple(int(tok) for tok in raw.replace(",", " ").split())


def _pair(raw: str) -> tuple[float, float]:
    vals = _floats(raw)
    if len(vals) != 2:
        raise ValueError("expected two numbers")
    return vals


def _strs(raw: str) -> tuple[str, ...]:
    return tuple(tok.strip() for tok in raw.split(",") if tok.strip())


def load(path) -> ExperimentConfig:
    """Parse and validate a config file; raises ConfigError naming bad keys."""
    parser = configparser.ConfigParser(inline_comment_prefixes=("#", ";"))
    read = parser.read(path)
    if not read:
        raise ConfigError(f"config file not found: {path}")
    for section in parser.sections():
        if section not in ("system", "geometry", "rician", "hyper", "run",
                           "output", "sweep"):
            raise ConfigError(f"unknown section [{section}]")
    if not parser.has_section("system"):
        raise ConfigError("missing required key system.N")

    cfg = ExperimentConfig(
        n_ris=_get(parser, "system", "N", int, required=True),
        n_tx=_get(parser, "system", "M", int, required=True),
        n_users=_get(parser, "system", "K", int, required=True),
        power_dbm=_get(parser, "system", "power_dbm", float, 10.0),
        sigma2_dbm=_get(parser, "system", "sigma2_dbm", float, -100.0),
    )
    if cfg.n_ris < 1 or cfg.n_tx < 1 or cfg.n_users < 1:
        raise ConfigError("system.N, system.M, system.K must all be >= 1")
    weights = _get(parser, "system", "weights", _floats)
    if weights is not None:
        w = np.asarray(weights, dtype=float)
        if w.shape != (cfg.n_users,):
            raise ConfigError(f"system.weights needs {cfg.n_users} entries")
        if np.any(w < 0) or abs(w.sum() - 1.0) > 1e-12:
            raise ConfigError("system.weights must be non-negative and sum to 1")
        cfg.weights = w

    try:
        cfg.geometry = Geometry(
            bs_pos=_get(parser, "geometry", "bs", _pair, (0.0, 10.0)),
            ris_pos=_get(parser, "geometry", "ris", _pair, (100.0, 0.0)),
            user_center=_get(parser, "geometry", "user_center", _pair, (100.0, 15.0)),
            user_radius=_get(parser, "geometry", "user_radius", float, 5.0),
            carrier_freq=_get(parser, "geometry", "carrier_freq_hz", float, 28e9),
            antenna_spacing=_get(parser, "geometry", "antenna_spacing", float, 0.5))
    except ValueError as exc:
        raise ConfigError(f"geometry: {exc}") from None

    los = _get(parser, "rician", "pathloss_los", _floats, (28.0, 22.0, 20.0))
    nlos = _get(parser, "rician", "pathloss_nlos", _floats, (32.4, 23.1, 20.0))
    if len(los) != 3 or len(nlos) != 3:
        raise ConfigError("rician.pathloss_los / rician.pathloss_nlos need 3 constants")
    try:
        cfg.rician = RicianParams(
            kappa_br=_get(parser, "rician", "kappa_br", float, 10.0),
            kappa_ru=_get(parser, "rician", "kappa_ru", float, 10.0),
            los_const=los, nlos_const=nlos)
    except ValueError as exc:
        raise ConfigError(f"rician: {exc}") from None

    try:
        cfg.hyper = HyperParams(
            n_outer=_get(parser, "hyper", "n_outer", int, 500),
            n_phase=_get(parser, "hyper", "n_phase", int, 1),
            n_precoder=_get(parser, "hyper", "n_precoder", int, 1),
            pl_lr=_get(parser, "hyper", "pl_lr", float, 1e-2),
            prl_lr=_get(parser, "hyper", "prl_lr", float, 3.5e-2),
            euler_factor=_get(parser, "hyper", "euler_factor", float, 10.0),
            phase_period=_get(parser, "hyper", "phase_period", int, 10))
    except ValueError as exc:
        raise ConfigError(f"hyper: {exc}") from None

    cfg.variants = _get(parser, "run", "variants", _strs, ("gamn",))
    for v in cfg.variants:
        if v not in VARIANTS:
            raise ConfigError(f"run.variants: unknown variant {v!r}")
    cfg.n_realizations = _get(parser, "run", "n_realizations", int, 100)
    if cfg.n_realizations < 1:
        raise ConfigError("run.n_realizations must be >= 1")
    cfg.master_seed = _get(parser, "run", "master_seed", int, 0)

    cfg.out_dir = _get(parser, "output", "dir", str)
    cfg.prefix = _get(parser, "output", "prefix", str, "gamn")

    cfg.powers_dbm = _get(parser, "sweep", "powers_dbm", _floats, (0.0, 5.0, 10.0, 15.0))
    if len(set(cfg.powers_dbm)) != len(cfg.powers_dbm):
        raise ConfigError("sweep.powers_dbm contains duplicates")
    if not cfg.powers_dbm:
        raise ConfigError("sweep.powers_dbm must be non-empty")
    cfg.n_list = _get(parser, "sweep", "n_list", _ints, (20, 40, 60))
    if not cfg.n_list:
        raise ConfigError("sweep.n_list must be non-empty")
    if len(set(cfg.n_list)) != len(cfg.n_list):
        raise ConfigError("sweep.n_list contains duplicates")
    if any(n < 1 for n in cfg.n_list):
        raise ConfigError("sweep.n_list entries must be >= 1")
    return cfg


def render(cfg: ExperimentConfig, version: str) -> str:
    """Fully resolved config in loadable INI form (the run's sidecar)."""
    weights = cfg.weights if cfg.weights is not None else uniform_weights(cfg.n_users)
    g, r, h = cfg.geometry, cfg.rician, cfg.hyper

    def nums(vals):
        return ", ".join(format(float(v), ".17g") for v in vals)

    lines = [
        f"# resolved by gamn {version}",
        "[system]",
        f"N = {cfg.n_ris}",
        f"M = {cfg.n_tx}",
        f"K = {cfg.n_users}",
        f"power_dbm = {cfg.power_dbm:.17g}",
        f"sigma2_dbm = {cfg.sigma2_dbm:.17g}",
        f"weights = {nums(weights)}",
        "",
        "[geometry]",
        f"bs = {nums(g.bs_pos)}",
        f"ris = {nums(g.ris_pos)}",
        f"user_center = {nums(g.user_center)}",
        f"user_radius = {g.user_radius:.17g}",
        f"carrier_freq_hz = {g.carrier_freq:.17g}",
        f"antenna_spacing = {g.antenna_spacing:.17g}",
        "",
        "[rician]",
        f"kappa_br = {r.kappa_br:.17g}",
        f"kappa_ru = {r.kappa_ru:.17g}",
        f"pathloss_los = {nums(r.los_const)}",
        f"pathloss_nlos = {nums(r.nlos_const)}",
        "",
        "[hyper]",
        f"n_outer = {h.n_outer}",
        f"n_phase = {h.n_phase}",
        f"n_precoder = {h.n_precoder}",
        f"pl_lr = {h.pl_lr:.17g}",
        f"prl_lr = {h.prl_lr:.17g}",
        f"euler_factor = {h.euler_factor:.17g}",
        f"phase_period = {h.phase_period}",
        "",
        "[run]",
        f"variants = {', '.join(cfg.variants)}",
        f"n_realizations = {cfg.n_realizations}",
        f"master_seed = {cfg.master_seed}",
        "",
        "[output]",
        f"dir = {cfg.out_dir if cfg.out_dir is not None else '.'}",
        f"prefix = {cfg.prefix}",
        "",
        "[sweep]",
        f"powers_dbm = {nums(cfg.powers_dbm)}",
        f"n_list = {', '.join(str(n) for n in cfg.n_list)}",
        "",
    ]
    return "\n".join(lines)
