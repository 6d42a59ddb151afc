"""Manifold geometry tests: tangency, retraction feasibility, and the ADAM
reduction oracle for the Riemannian optimizer."""

import numpy as np
import pytest

from gamn import manifold


def _rand(rng, shape):
    return rng.standard_normal(shape) + 1j * rng.standard_normal(shape)


def _circle_point(rng, n):
    return np.exp(1j * rng.uniform(0, 2 * np.pi, n))


def _sphere_point(rng, m, k, power):
    w = _rand(rng, (m, k))
    return w * (np.sqrt(power) / np.linalg.norm(w))


# ------------------------------------------------------------------ projection

def test_project_radial_gradient_vanishes():
    rng = np.random.default_rng(0)
    sphere = manifold.PowerSphere(3, 2, 2.0)
    x = _sphere_point(rng, 3, 2, 2.0)
    v = sphere.project(x, 1.7 * x)
    assert np.max(np.abs(v)) < 1e-12


def test_project_tangent_gradient_unchanged():
    rng = np.random.default_rng(1)
    sphere = manifold.PowerSphere(3, 2, 2.0)
    x = _sphere_point(rng, 3, 2, 2.0)
    g = sphere.project(x, _rand(rng, (3, 2)))
    assert np.allclose(sphere.project(x, g), g, atol=1e-12)


def test_circle_projection_tangent_and_idempotent():
    rng = np.random.default_rng(2)
    circle = manifold.CircleProduct(8)
    x = _circle_point(rng, 8)
    g = _rand(rng, (8,))
    v = circle.project(x, g)
    assert np.max(np.abs((np.conj(x) * v).real)) < 1e-10
    assert np.max(np.abs(circle.project(x, v) - v)) < 1e-12


def test_sphere_projection_tangency_test():
    rng = np.random.default_rng(3)
    sphere = manifold.PowerSphere(4, 2, 5.0)
    for _ in range(20):
        x = _sphere_point(rng, 4, 2, 5.0)
        v = sphere.project(x, _rand(rng, (4, 2)))
        assert abs(np.sum(np.conj(x) * v).real) < 1e-10


def test_projection_self_adjoint():
    rng = np.random.default_rng(4)
    circle = manifold.CircleProduct(6)
    x = _circle_point(rng, 6)
    g, h = _rand(rng, (6,)), _rand(rng, (6,))
    lhs = np.sum(np.conj(circle.project(x, g)) * h).real
    rhs = np.sum(np.conj(g) * circle.project(x, h)).real
    assert abs(lhs - rhs) < 1e-10


def test_project_rejects_off_manifold_point():
    rng = np.random.default_rng(5)
    circle = manifold.CircleProduct(4)
    with pytest.raises(manifold.OffManifoldError):
        circle.project(1.5 * _circle_point(rng, 4), _rand(rng, (4,)))
    sphere = manifold.PowerSphere(2, 2, 1.0)
    with pytest.raises(manifold.OffManifoldError):
        sphere.project(2.0 * _sphere_point(rng, 2, 2, 1.0), _rand(rng, (2, 2)))


# ------------------------------------------------------------------ retraction

def test_retract_zero_tangent_is_identity():
    rng = np.random.default_rng(6)
    circle = manifold.CircleProduct(5)
    x = _circle_point(rng, 5)
    assert np.allclose(circle.retract(x, np.zeros(5)), x, rtol=0, atol=1e-15)
    sphere = manifold.PowerSphere(3, 2, 4.0)
    w = _sphere_point(rng, 3, 2, 4.0)
    assert np.allclose(sphere.retract(w, np.zeros((3, 2))), w, rtol=0, atol=1e-15)


def test_circle_retract_small_imaginary_step():
    got = manifold.CircleProduct(1).retract(np.array([1.0 + 0j]), np.array([0.01j]))
    want = (1 + 0.01j) / abs(1 + 0.01j)
    assert np.allclose(got, [want])
    assert abs(abs(got[0]) - 1.0) < 1e-15


def test_sphere_retract_rescales_to_radius():
    sphere = manifold.PowerSphere(1, 2, 4.0)
    z = np.array([[3.0 + 0j, 4.0 + 0j]])  # norm 5 -> output norm 2
    out = sphere.retract(np.zeros((1, 2), complex), z)
    assert np.linalg.norm(out) == pytest.approx(2.0, abs=1e-12)
    assert np.allclose(out, z * 2.0 / 5.0)


def test_retract_outputs_satisfy_invariant_10k():
    rng = np.random.default_rng(7)
    circle = manifold.CircleProduct(10000)
    x = _circle_point(rng, 10000)
    v = circle.project(x, _rand(rng, (10000,)))
    out = circle.retract(x, v)
    assert np.max(np.abs(np.abs(out) - 1.0)) < 1e-12

    sphere = manifold.PowerSphere(4, 3, 7.5)
    for _ in range(10000):
        w = _sphere_point(rng, 4, 3, 7.5)
        out = sphere.retract(w, 0.3 * _rand(rng, (4, 3)))
        assert abs(np.sum(np.abs(out) ** 2) - 7.5) < 1e-12 * 7.5


def test_degenerate_retraction_raises():
    circle = manifold.CircleProduct(2)
    x = np.array([1.0 + 0j, 1.0 + 0j])
    with pytest.raises(manifold.DegenerateRetractionError):
        circle.retract(x, -x)
    sphere = manifold.PowerSphere(2, 1, 1.0)
    w = np.array([[1.0 + 0j], [0.0 + 0j]])
    with pytest.raises(manifold.DegenerateRetractionError):
        sphere.retract(w, -w)


# ----------------------------------------------------------------------- radam

def test_radam_zero_gradient_keeps_point():
    rng = np.random.default_rng(8)
    circle = manifold.CircleProduct(4)
    x = _circle_point(rng, 4)
    state = manifold.RadamState.fresh(circle, x)
    x2, state2 = manifold.radam_step(circle, x, np.zeros(4, complex), state, 0.1)
    assert np.allclose(x2, x, atol=1e-15)
    assert state2.step == 1


def test_radam_single_euclidean_step_matches_adam():
    # textbook one-step value: m_hat = g, v_hat = g^2, step = -lr*g/(|g|+eps)
    eu = manifold.Euclidean()
    state = manifold.RadamState.fresh(eu, np.zeros(1))
    x2, _ = manifold.radam_step(eu, np.zeros(1), np.ones(1), state, 0.1)
    want = -0.1 * 1.0 / (1.0 + 1e-8)
    assert x2[0] == pytest.approx(want, abs=1e-15)


def test_radam_euclidean_reduces_to_adam_100_steps():
    rng = np.random.default_rng(9)
    eu = manifold.Euclidean()
    x = rng.standard_normal(5)
    state = manifold.RadamState.fresh(eu, x)
    # independent reference ADAM recursion
    xr = x.copy()
    m = np.zeros(5)
    v = np.zeros(5)
    lr, b1, b2, eps = 0.05, 0.9, 0.999, 1e-8
    for t in range(1, 101):
        g = 2.0 * xr + np.sin(t)  # arbitrary deterministic gradient stream
        x, state = manifold.radam_step(eu, x, g.astype(complex), state, lr)
        m = b1 * m + (1 - b1) * g
        v = b2 * v + (1 - b2) * g ** 2
        xr = xr - lr * (m / (1 - b1 ** t)) / (np.sqrt(v / (1 - b2 ** t)) + eps)
    assert np.max(np.abs(x.real - xr)) < 1e-12
    assert np.max(np.abs(x.imag)) == 0.0


def test_radam_maximizes_real_part_on_circle():
    # minimizing f(x) = -Re(x) on the unit circle drives x to 1+0j
    circle = manifold.CircleProduct(1)
    x = np.array([1j])
    state = manifold.RadamState.fresh(circle, x)
    g = np.array([-1.0 + 0j])  # ambient gradient of f
    for _ in range(200):
        x, state = manifold.radam_step(circle, x, g, state, 0.1)
    assert abs(x[0] - 1.0) < 1e-3


def test_radam_descent_to_known_sphere_minimizer():
    rng = np.random.default_rng(10)
    power = 3.0
    sphere = manifold.PowerSphere(4, 2, power)
    a = _rand(rng, (4, 2))
    target = -a / np.linalg.norm(a) * np.sqrt(power)
    x = _sphere_point(rng, 4, 2, power)
    state = manifold.RadamState.fresh(sphere, x)
    for _ in range(500):
        # f(x) = Re<a, x>, ambient gradient a
        x, state = manifold.radam_step(sphere, x, a, state, 0.05)
    assert np.linalg.norm(x - target) < 1e-2


def test_radam_state_buffers_match_manifold_structure():
    rng = np.random.default_rng(11)
    sphere = manifold.PowerSphere(3, 2, 1.0)
    st = manifold.RadamState.fresh(sphere, _sphere_point(rng, 3, 2, 1.0))
    assert st.v.shape == ()  # one scalar for the whole sphere
    circle = manifold.CircleProduct(7)
    st = manifold.RadamState.fresh(circle, _circle_point(rng, 7))
    assert st.v.shape == (7,)  # one scalar per circle factor
