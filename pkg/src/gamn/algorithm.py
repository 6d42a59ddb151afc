"""Meta-learning loop jointly tuning RIS phases and the BS precoder.

Each epoch runs the phase-learner inner loop (additive updates from the
complex MLP fed the detached rate gradient, then circle retraction), the
precoder inner loop (Euler-scaled real-MLP updates, then sphere retraction),
evaluates the negated weighted sum rate at the retracted point, and applies
Riemannian-ADAM updates to the network weights: the precoder learner every
epoch, the phase learner once per `phase_period` epochs. Variants:

  gamn          complex-valued phase learner, Euler factor from hyperparams
  gamn_real     real-parameter phase learner on stacked [Re; Im] gradients
  gamn_no_euler gamn with the Euler factor forced to 1
  pga           projected/Riemannian gradient ascent, no networks
"""

from __future__ import annotations

from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass

import numpy as np

from . import cdiff, manifold, metrics, nets
from .channel import ChannelSet, Geometry, RicianParams, generate

VARIANTS = ("gamn", "gamn_real", "gamn_no_euler", "pga")

_EUCLIDEAN = manifold.Euclidean()


@dataclass(frozen=True)
class HyperParams:
    n_outer: int = 500
    n_phase: int = 1
    n_precoder: int = 1
    pl_lr: float = 1e-2
    prl_lr: float = 3.5e-2
    euler_factor: float = 10.0
    phase_period: int = 10

    def __post_init__(self):
        if min(self.n_outer, self.n_phase, self.n_precoder, self.phase_period) < 1:
            raise ValueError("iteration counts must be >= 1")
        if min(self.pl_lr, self.prl_lr, self.euler_factor) <= 0:
            raise ValueError("rates and the Euler factor must be positive")


@dataclass(frozen=True)
class SystemParams:
    """Linear-scale power budget, noise power, and rate weights."""

    power: float
    sigma2: float
    weights: np.ndarray

    def __post_init__(self):
        if self.power <= 0 or self.sigma2 <= 0:
            raise ValueError("power and sigma2 must be positive")


@dataclass(frozen=True)
class Scenario:
    """Everything needed to draw a channel and run one realization."""

    geometry: Geometry
    rician: RicianParams
    n_ris: int
    n_tx: int
    n_users: int
    system: SystemParams
    hyper: HyperParams

    def draw_channels(self, seed: int) -> ChannelSet:
        return generate(seed, self.geometry, self.rician,
                        self.n_ris, self.n_tx, self.n_users)


@dataclass
class RunTrace:
    """Per-epoch weighted sum rate plus the final feasible iterates."""

    wsr_per_epoch: np.ndarray
    final_theta: np.ndarray
    final_w: np.ndarray
    seed: int
    variant: str
    hyper: HyperParams
    theta_feasibility: np.ndarray  # max | |theta_n| - 1 | per epoch
    power_feasibility: np.ndarray  # | ||W||_F^2 - P | / P per epoch
    final_pl: object = None  # trained phase-learner network (None for pga)
    final_prl: object = None  # trained precoder-learner network (None for pga)


def grad_theta(theta: np.ndarray, w: np.ndarray, channels: ChannelSet,
               system: SystemParams) -> np.ndarray:
    """Rate gradient with respect to the phase vector (detached array)."""
    leaf = cdiff.variable(theta)
    node = metrics.wsr_graph(leaf, cdiff.constant(w), channels,
                             system.weights, system.sigma2)
    return cdiff.backward(node)[leaf]


def grad_w(theta: np.ndarray, w: np.ndarray, channels: ChannelSet,
           system: SystemParams) -> np.ndarray:
    """Rate gradient with respect to the precoder (detached array)."""
    leaf = cdiff.variable(w)
    node = metrics.wsr_graph(cdiff.constant(theta), leaf, channels,
                             system.weights, system.sigma2)
    return cdiff.backward(node)[leaf]


def _init_point(rng: np.random.Generator, n: int, m: int, k: int,
                power: float) -> tuple[np.ndarray, np.ndarray]:
    theta = np.exp(1j * rng.uniform(0.0, 2.0 * np.pi, n))
    w_raw = rng.standard_normal((m, k)) + 1j * rng.standard_normal((m, k))
    w = w_raw * (np.sqrt(power) / np.linalg.norm(w_raw))
    return theta, w


def _sphere_retract_graph(w_node: cdiff.Node, power: float) -> cdiff.Node:
    s = cdiff.summ(cdiff.abs2(w_node))
    r = cdiff.scale(cdiff.pow_real(s, -0.5), np.sqrt(power))
    return cdiff.smul(r, w_node)


def phase_branch(pl, pl_nodes, theta0: np.ndarray, n_phase: int, grad_fn,
                 real_pl: bool) -> cdiff.Node:
    """Graph for the phase inner loop ending in the circle retraction.

    grad_fn maps the current phase values to the detached rate gradient that
    feeds the network.
    """
    n = theta0.shape[0]
    node = cdiff.constant(theta0)
    for _ in range(n_phase):
        g = grad_fn(node.value)
        if real_pl:
            inp = cdiff.constant(np.concatenate([g.real, g.imag]))
            delta = cdiff.reshape(pl.forward(pl_nodes, inp), (n,))
        else:
            delta = pl.forward(pl_nodes, cdiff.constant(g))
        node = cdiff.add(node, delta)
    return cdiff.unit_normalize(node)


def precoder_branch(prl, prl_nodes, w0: np.ndarray, n_precoder: int, grad_fn,
                    euler: float, power: float) -> cdiff.Node:
    """Graph for the precoder inner loop ending in the sphere retraction."""
    node = cdiff.constant(w0)
    for _ in range(n_precoder):
        g = grad_fn(node.value)
        delta = prl.forward(prl_nodes, cdiff.constant(nets.flatten_complex(g)))
        node = cdiff.add(node, cdiff.scale(delta, euler))
    return _sphere_retract_graph(node, power)


def run(channels: ChannelSet, system: SystemParams, hyper: HyperParams,
        variant: str, seed: int, pl=None, prl=None) -> RunTrace:
    """One seeded realization of the configured variant.

    `pl`/`prl` override the seeded network initialization (e.g. restored
    checkpoints); the random draws are unchanged either way.
    """
    if variant not in VARIANTS:
        raise ValueError(f"unknown variant {variant!r}; expected one of {VARIANTS}")
    if variant == "pga":
        return pga_baseline(channels, system, hyper.n_outer, seed=seed)

    n, m = channels.h_br.shape
    k = channels.n_users
    euler = 1.0 if variant == "gamn_no_euler" else hyper.euler_factor
    rng = np.random.default_rng(seed)
    theta, w = _init_point(rng, n, m, k, system.power)

    real_pl = variant == "gamn_real"
    pl_seed = int(rng.integers(2 ** 63))
    prl_seed = int(rng.integers(2 ** 63))
    if pl is None:
        pl = (nets.RealMLP.init(pl_seed, n, 1) if real_pl
              else nets.ComplexMLP.init(pl_seed, n))
    if prl is None:
        prl = nets.RealMLP.init(prl_seed, m, k)
    pl_state = [manifold.RadamState.fresh(_EUCLIDEAN, p) for p in pl.params()]
    prl_state = [manifold.RadamState.fresh(_EUCLIDEAN, p) for p in prl.params()]

    trace = np.empty(hyper.n_outer)
    theta_feas = np.empty(hyper.n_outer)
    power_feas = np.empty(hyper.n_outer)

    for t in range(1, hyper.n_outer + 1):
        # Phase-learner inner loop; the network input is always detached.
        pl_nodes = [cdiff.variable(p) for p in pl.params()]
        theta_node = phase_branch(
            pl, pl_nodes, theta, hyper.n_phase,
            lambda th: grad_theta(th, w, channels, system), real_pl)
        theta = theta_node.value

        # Precoder-learner inner loop with the Euler-scaled update.
        prl_nodes = [cdiff.variable(p) for p in prl.params()]
        w_node = precoder_branch(
            prl, prl_nodes, w, hyper.n_precoder,
            lambda wv: grad_w(theta, wv, channels, system), euler, system.power)
        w = w_node.value

        # Meta loss at the retracted point drives the weight updates.
        loss_node = cdiff.neg(metrics.wsr_graph(theta_node, w_node, channels,
                                                system.weights, system.sigma2))
        rate = -float(loss_node.value.real)
        if not np.isfinite(rate):
            raise RuntimeError(f"non-finite loss at epoch {t} (variant {variant}, seed {seed})")
        grads = cdiff.backward(loss_node)

        new_params = []
        for i, node in enumerate(prl_nodes):
            p, prl_state[i] = manifold.radam_step(_EUCLIDEAN, node.value,
                                                  grads[node], prl_state[i], hyper.prl_lr)
            new_params.append(p)
        prl.set_params(new_params)

        if t % hyper.phase_period == 0:
            new_params = []
            for i, node in enumerate(pl_nodes):
                p, pl_state[i] = manifold.radam_step(_EUCLIDEAN, node.value,
                                                     grads[node], pl_state[i], hyper.pl_lr)
                new_params.append(p)
            pl.set_params(new_params)

        trace[t - 1] = rate
        theta_feas[t - 1] = float(np.max(np.abs(np.abs(theta) - 1.0)))
        power_feas[t - 1] = abs(float(np.sum(np.abs(w) ** 2)) - system.power) / system.power

    return RunTrace(wsr_per_epoch=trace, final_theta=theta, final_w=w, seed=int(seed),
                    variant=variant, hyper=hyper,
                    theta_feasibility=theta_feas, power_feasibility=power_feas,
                    final_pl=pl, final_prl=prl)


def _normalized(v: np.ndarray) -> np.ndarray:
    norm = np.linalg.norm(v)
    return v if norm == 0.0 else v / norm


def pga_baseline(channels: ChannelSet, system: SystemParams, iterations: int,
                 step_theta: float = 0.2, step_w: float = 0.2,
                 seed: int = 0) -> RunTrace:
    """Alternating Riemannian gradient ascent with retractions, no networks.

    Ascent directions are normalized tangent vectors and steps decay as
    1/sqrt(t), so the baseline is insensitive to the raw gradient scale.
    """
    if step_theta < 0 or step_w < 0:
        raise ValueError("step sizes must be non-negative")
    n, m = channels.h_br.shape
    k = channels.n_users
    rng = np.random.default_rng(seed)
    theta, w = _init_point(rng, n, m, k, system.power)
    circle = manifold.CircleProduct(n)
    sphere = manifold.PowerSphere(m, k, system.power)

    trace = np.empty(iterations)
    theta_feas = np.empty(iterations)
    power_feas = np.empty(iterations)
    for t in range(iterations):
        decay = 1.0 / np.sqrt(t + 1.0)
        theta = circle.retract(theta, step_theta * decay * _normalized(
            circle.project(theta, grad_theta(theta, w, channels, system))))
        w = sphere.retract(w, step_w * decay * np.sqrt(system.power) * _normalized(
            sphere.project(w, grad_w(theta, w, channels, system))))
        state = metrics.SystemState(theta=theta, w=w, weights=system.weights,
                                    sigma2=system.sigma2, power=system.power)
        trace[t] = metrics.wsr(state, channels)
        theta_feas[t] = float(np.max(np.abs(np.abs(theta) - 1.0)))
        power_feas[t] = abs(float(np.sum(np.abs(w) ** 2)) - system.power) / system.power

    return RunTrace(wsr_per_epoch=trace, final_theta=theta, final_w=w, seed=int(seed),
                    variant="pga", hyper=HyperParams(n_outer=iterations),
                    theta_feasibility=theta_feas, power_feasibility=power_feas)


@dataclass
class AveragedRuns:
    """Elementwise mean/stderr over realizations plus per-realization summaries."""

    mean: np.ndarray
    stderr: np.ndarray
    finals: np.ndarray
    bests: np.ndarray
    seeds: list[tuple[int, int]]

    @property
    def final_mean(self) -> float:
        return float(np.mean(self.finals))

    @property
    def final_stderr(self) -> float:
        return _stderr(self.finals)


def _stderr(values: np.ndarray) -> float:
    values = np.asarray(values)
    if values.shape[0] < 2:
        return 0.0
    return float(np.std(values, ddof=1) / np.sqrt(values.shape[0]))


def realization_seeds(master_seed: int, n: int) -> list[tuple[int, int]]:
    """Deterministic (channel_seed, algorithm_seed) pairs for each realization."""
    children = np.random.SeedSequence(master_seed).spawn(n)
    return [tuple(int(x) for x in c.generate_state(2, dtype=np.uint64)) for c in children]


def _one_realization(args) -> RunTrace:
    scenario, variant, chan_seed, algo_seed = args
    channels = scenario.draw_channels(chan_seed)
    return run(channels, scenario.system, scenario.hyper, variant, algo_seed)


def average_runs(scenario: Scenario, variant: str, n_realizations: int = 100,
                 master_seed: int = 0, jobs: int = 1,
                 seeds: list[tuple[int, int]] | None = None) -> AveragedRuns:
    """Mean and standard error of the per-epoch rate over seeded realizations.

    Realization seeds derive deterministically from the master seed (or are
    given explicitly); results do not depend on `jobs`. Any failed run aborts
    the whole average with its seed in the error message.
    """
    if n_realizations < 1:
        raise ValueError("n_realizations must be >= 1")
    if seeds is None:
        seeds = realization_seeds(master_seed, n_realizations)
    work = [(scenario, variant, cs, rs) for cs, rs in seeds]

    traces: list[RunTrace] = []
    if jobs > 1 and len(work) > 1:
        with ProcessPoolExecutor(max_workers=jobs) as pool:
            futures = [pool.submit(_one_realization, item) for item in work]
            for item, fut in zip(work, futures):
                try:
                    traces.append(fut.result())
                except Exception as exc:
                    raise RuntimeError(
                        f"realization with seeds {item[2:]} failed: {exc}") from exc
    else:
        for item in work:
            try:
                traces.append(_one_realization(item))
            except Exception as exc:
                raise RuntimeError(
                    f"realization with seeds {item[2:]} failed: {exc}") from exc

    stack = np.stack([t.wsr_per_epoch for t in traces])
    n = stack.shape[0]
    stderr = (np.std(stack, axis=0, ddof=1) / np.sqrt(n)) if n > 1 else np.zeros(stack.shape[1])
    return AveragedRuns(mean=stack.mean(axis=0), stderr=stderr,
                        finals=stack[:, -1].copy(), bests=stack.max(axis=1),
                        seeds=list(seeds))
