"""Meta-learning loop tests: zero-update path, determinism, variant wiring,
gating, averaging, the PGA baseline, and the tiny-instance grid oracle."""

import numpy as np
import pytest

from gamn import algorithm, channel, metrics, nets
from gamn.config import dbm_to_watts


def _scenario(n=8, m=2, k=2, power_dbm=10.0, sigma2_dbm=-160.0, **hyper_kw):
    hyper = algorithm.HyperParams(**hyper_kw) if hyper_kw else algorithm.HyperParams()
    return algorithm.Scenario(
        geometry=channel.Geometry(), rician=channel.RicianParams(),
        n_ris=n, n_tx=m, n_users=k,
        system=algorithm.SystemParams(power=dbm_to_watts(power_dbm),
                                      sigma2=dbm_to_watts(sigma2_dbm),
                                      weights=metrics.uniform_weights(k)),
        hyper=hyper)


def _tiny_grid_optimum(channels, power, sigma2, step_deg=0.5):
    """Exhaustive (theta1, theta2) grid with the matched-filter precoder."""
    c = channels.h_ru[0].conj() * channels.h_br[:, 0]
    phis = np.deg2rad(np.arange(0.0, 360.0, step_deg))
    t1 = np.exp(1j * phis)[:, None]
    t2 = np.exp(1j * phis)[None, :]
    gain2 = np.abs(c[0] * t1 + c[1] * t2) ** 2
    return float(np.log2(1.0 + power * gain2.max() / sigma2))


def _zero_last(net):
    ps = net.params()
    net.set_params([ps[0], ps[1], np.zeros_like(ps[2]), np.zeros_like(ps[3])])
    return net


def test_single_epoch_zero_last_layer_keeps_init():
    scen = _scenario(n=6, m=2, k=2, n_outer=1)
    cs = scen.draw_channels(3)
    seed = 11

    # reproduce the run's deterministic init draw
    rng = np.random.default_rng(seed)
    theta0, w0 = algorithm._init_point(rng, 6, 2, 2, scen.system.power)

    trace = algorithm.run(cs, scen.system, scen.hyper, "gamn", seed)
    # nonzero nets move the point
    assert not np.allclose(trace.final_theta, theta0)

    # zero output layers make the epoch a no-op up to retraction
    state = metrics.SystemState(theta=theta0, w=w0, weights=scen.system.weights,
                                sigma2=scen.system.sigma2, power=scen.system.power)
    state.validate()
    init_wsr = metrics.wsr(state, cs)
    zero_trace = algorithm.run(
        cs, scen.system, scen.hyper, "gamn", seed,
        pl=_zero_last(nets.ComplexMLP.init(0, 6)),
        prl=_zero_last(nets.RealMLP.init(1, 2, 2)))
    assert zero_trace.wsr_per_epoch[0] == pytest.approx(init_wsr, rel=1e-12)
    assert np.allclose(zero_trace.final_theta, theta0 / np.abs(theta0), atol=1e-15)
    assert abs(np.sum(np.abs(zero_trace.final_w) ** 2) - scen.system.power) \
        <= 1e-12 * scen.system.power


def test_run_is_deterministic():
    scen = _scenario(n=6, m=2, k=2, n_outer=25)
    cs = scen.draw_channels(5)
    a = algorithm.run(cs, scen.system, scen.hyper, "gamn", 17)
    b = algorithm.run(cs, scen.system, scen.hyper, "gamn", 17)
    assert np.array_equal(a.wsr_per_epoch, b.wsr_per_epoch)
    assert np.array_equal(a.final_theta, b.final_theta)
    assert np.array_equal(a.final_w, b.final_w)


def test_constraints_hold_every_epoch():
    scen = _scenario(n=10, m=3, k=2, n_outer=60)
    cs = scen.draw_channels(8)
    for variant in ("gamn", "gamn_real", "pga"):
        tr = algorithm.run(cs, scen.system, scen.hyper, variant, 2)
        assert np.max(tr.theta_feasibility) <= 1e-9
        assert np.max(tr.power_feasibility) <= 1e-9


def test_no_euler_variant_equals_h1_bitwise():
    scen = _scenario(n=6, m=2, k=2, n_outer=30, euler_factor=1.0)
    cs = scen.draw_channels(4)
    a = algorithm.run(cs, scen.system, scen.hyper, "gamn", 9)
    b = algorithm.run(cs, scen.system, scen.hyper, "gamn_no_euler", 9)
    assert np.array_equal(a.wsr_per_epoch, b.wsr_per_epoch)
    assert np.array_equal(a.final_w, b.final_w)


def test_phase_gating_never_updates_pl_when_period_exceeds_run():
    scen = _scenario(n=6, m=2, k=2, n_outer=12, phase_period=13)
    cs = scen.draw_channels(4)
    tr = algorithm.run(cs, scen.system, scen.hyper, "gamn", 21)
    short = algorithm.run(cs, scen.system,
                          algorithm.HyperParams(n_outer=1, phase_period=13),
                          "gamn", 21)
    # phase-learner weights never moved in either run: both still at init
    for pa, pb in zip(tr.final_pl.params(), short.final_pl.params()):
        assert np.array_equal(pa, pb)
    # with the default period the weights do move
    moved = algorithm.run(cs, scen.system,
                          algorithm.HyperParams(n_outer=12, phase_period=10),
                          "gamn", 21)
    assert not np.array_equal(moved.final_pl.params()[0], tr.final_pl.params()[0])
    # and the precoder learner moved in all cases
    assert not np.array_equal(tr.final_prl.params()[0], short.final_prl.params()[0])


def test_improvement_over_20_seeds():
    scen = _scenario(n=8, m=2, k=2, n_outer=80)
    gains = []
    for seed in range(20):
        cs = scen.draw_channels(100 + seed)
        tr = algorithm.run(cs, scen.system, scen.hyper, "gamn", seed)
        gains.append(tr.wsr_per_epoch[-1] - tr.wsr_per_epoch[0])
    assert np.mean(gains) > 0


def test_non_finite_loss_aborts_with_context():
    scen = _scenario(n=4, m=2, k=2, n_outer=5)
    cs = scen.draw_channels(1)
    corrupt = channel.ChannelSet(h_br=cs.h_br.copy(), h_ru=cs.h_ru,
                                 user_positions=cs.user_positions, seed=cs.seed)
    corrupt.h_br[0, 0] = np.nan
    with np.errstate(all="ignore"), pytest.raises(RuntimeError, match="epoch"):
        algorithm.run(corrupt, scen.system, scen.hyper, "gamn", 0)


def test_hyperparams_validated():
    with pytest.raises(ValueError):
        algorithm.HyperParams(n_outer=0)
    with pytest.raises(ValueError):
        algorithm.HyperParams(pl_lr=0.0)
    with pytest.raises(ValueError):
        algorithm.SystemParams(power=0.0, sigma2=1.0, weights=np.ones(1))


def test_unknown_variant_rejected():
    scen = _scenario(n=4, m=2, k=1, n_outer=2)
    cs = scen.draw_channels(0)
    with pytest.raises(ValueError, match="variant"):
        algorithm.run(cs, scen.system, scen.hyper, "sgd", 0)


# ------------------------------------------------------------------- averaging

def test_average_single_run_has_zero_stderr():
    scen = _scenario(n=4, m=2, k=1, n_outer=10)
    avg = algorithm.average_runs(scen, "gamn", n_realizations=1, master_seed=3)
    assert np.all(avg.stderr == 0.0)
    assert avg.final_stderr == 0.0


def test_average_duplicate_seeds_zero_stderr():
    scen = _scenario(n=4, m=2, k=1, n_outer=10)
    pair = algorithm.realization_seeds(7, 1) * 2
    avg = algorithm.average_runs(scen, "gamn", n_realizations=2, seeds=pair)
    assert np.allclose(avg.stderr, 0.0)
    assert np.array_equal(avg.finals[0], avg.finals[1])


def test_average_master_seed_reproducible():
    scen = _scenario(n=4, m=2, k=2, n_outer=15)
    a = algorithm.average_runs(scen, "gamn", n_realizations=3, master_seed=31)
    b = algorithm.average_runs(scen, "gamn", n_realizations=3, master_seed=31)
    assert np.array_equal(a.mean, b.mean)
    assert np.array_equal(a.stderr, b.stderr)


def test_average_parallel_matches_serial():
    scen = _scenario(n=4, m=2, k=2, n_outer=12)
    serial = algorithm.average_runs(scen, "gamn", n_realizations=3, master_seed=8, jobs=1)
    parallel = algorithm.average_runs(scen, "gamn", n_realizations=3, master_seed=8, jobs=2)
    assert np.array_equal(serial.mean, parallel.mean)
    assert np.array_equal(serial.finals, parallel.finals)


def test_failed_realization_reports_seed():
    # users dropped on top of the RIS violate the pathloss validity floor
    scen = _scenario(n=4, m=2, k=1, n_outer=5)
    bad = algorithm.Scenario(
        geometry=channel.Geometry(user_center=(100.0, 0.0), user_radius=0.5),
        rician=scen.rician, n_ris=4, n_tx=2, n_users=1,
        system=scen.system, hyper=scen.hyper)
    with pytest.raises(RuntimeError, match="seeds"):
        algorithm.average_runs(bad, "gamn", n_realizations=2, master_seed=5)


# ------------------------------------------------------------------------- pga

def test_pga_zero_steps_flat_trace():
    scen = _scenario(n=6, m=2, k=2)
    cs = scen.draw_channels(2)
    tr = algorithm.pga_baseline(cs, scen.system, 20, step_theta=0.0, step_w=0.0, seed=4)
    assert np.allclose(tr.wsr_per_epoch, tr.wsr_per_epoch[0], rtol=1e-12)


def test_pga_constraints_every_iteration():
    scen = _scenario(n=6, m=2, k=2)
    cs = scen.draw_channels(2)
    tr = algorithm.pga_baseline(cs, scen.system, 50, seed=4)
    assert np.max(tr.theta_feasibility) <= 1e-9
    assert np.max(tr.power_feasibility) <= 1e-9


def test_pga_reaches_grid_optimum_on_tiny_instance():
    scen = _scenario(n=2, m=1, k=1)
    cs = scen.draw_channels(5)
    best = _tiny_grid_optimum(cs, scen.system.power, scen.system.sigma2)
    tr = algorithm.pga_baseline(cs, scen.system, 500, seed=3)
    assert tr.wsr_per_epoch[-1] >= 0.95 * best


def test_pga_rejects_negative_steps():
    scen = _scenario(n=2, m=1, k=1)
    cs = scen.draw_channels(5)
    with pytest.raises(ValueError):
        algorithm.pga_baseline(cs, scen.system, 5, step_theta=-0.1)


def test_meta_learning_beats_pga_baseline(desk_gamn_20, desk_pga_20):
    # equal iteration budget (500 epochs each), common realization seeds
    assert desk_gamn_20.final_mean >= desk_pga_20.final_mean


# ------------------------------------------------------------- tiny instance

def test_gamn_reaches_grid_optimum_on_tiny_instance():
    scen = _scenario(n=2, m=1, k=1)
    cs = scen.draw_channels(5)
    best = _tiny_grid_optimum(cs, scen.system.power, scen.system.sigma2)
    tr = algorithm.run(cs, scen.system, scen.hyper, "gamn", 3)
    assert tr.wsr_per_epoch[-1] >= 0.98 * best
