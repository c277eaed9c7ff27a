"""Ground contact: smoothstep gating, spring-damper normal, stick-slip."""

import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from morphonmpc import contact as ct
from morphonmpc import dynamics as dyn
from morphonmpc.errors import ValidationError
from morphonmpc.params import RobotParams


@pytest.fixture(scope="module")
def cpar():
    return ct.ContactParams()


def test_smoothing_endpoints_and_midpoint():
    assert ct.smoothing(-0.01, 1e-3) == 0.0
    assert ct.smoothing(0.0, 1e-3) == 0.0
    assert ct.smoothing(1e-3, 1e-3) == 1.0
    assert ct.smoothing(5e-3, 1e-3) == 1.0
    assert ct.smoothing(0.5e-3, 1e-3) == pytest.approx(0.5, abs=1e-15)


@given(st.floats(-1e-3, 3e-3), st.floats(-1e-3, 3e-3))
@settings(max_examples=60, deadline=None)
def test_smoothing_monotone(d1, d2):
    lo, hi = min(d1, d2), max(d1, d2)
    assert ct.smoothing(lo, 1e-3) <= ct.smoothing(hi, 1e-3)


def test_normal_force_examples(cpar):
    assert ct.normal_force(-0.01, 0.0, cpar) == 0.0
    assert ct.normal_force(0.0, 5.0, cpar) == 0.0
    w = cpar.transition_width
    assert ct.normal_force(w, 0.0, cpar) == pytest.approx(
        cpar.stiffness * w, rel=1e-15)
    # damping pulling harder than the spring pushes: clamp, never adhesion
    assert ct.normal_force(0.5 * w, -100.0, cpar) == 0.0


def test_slip_mu_shape(cpar):
    assert ct.slip_mu(0.0, cpar) == 0.0
    vc = cpar.critical_velocity
    m = ct.slip_mu(10 * vc, cpar)
    assert cpar.mu_dynamic <= m <= cpar.mu_static
    # decays toward the dynamic level at speed
    assert ct.slip_mu(1000 * vc, cpar) == pytest.approx(cpar.mu_dynamic,
                                                        rel=1e-6)


def test_friction_examples(cpar):
    assert not ct.friction_force(0.0, (1.0, 0.0), cpar).any()
    assert not ct.friction_force(10.0, (0.0, 0.0), cpar).any()
    v = np.array([3e-3, -4e-3])  # 5*v_c
    f = ct.friction_force(20.0, v, cpar)
    speed = np.linalg.norm(v)
    np.testing.assert_allclose(f / np.linalg.norm(f), -v / speed, atol=1e-12)
    assert cpar.mu_dynamic * 20 * 0.5 <= np.linalg.norm(f) <= cpar.mu_static * 20


@given(st.floats(0, 100), st.floats(-1, 1), st.floats(-1, 1))
@settings(max_examples=60, deadline=None)
def test_friction_dissipative(fn, vx, vy):
    f = ct.friction_force(fn, (vx, vy), ct.ContactParams())
    assert f @ np.array([vx, vy]) <= 0.0


def test_continuity_across_seams(cpar):
    w, vc = cpar.transition_width, cpar.critical_velocity
    for d0 in (0.0, w):
        for eps in (1e-9, 1e-10):
            lo = ct.normal_force(d0 - eps, 0.3, cpar)
            hi = ct.normal_force(d0 + eps, 0.3, cpar)
            assert abs(hi - lo) <= 1e-5 * max(1.0, abs(hi))
    for s0 in (vc, 3 * vc):
        lo = ct.slip_mu(s0 - 1e-12, cpar)
        hi = ct.slip_mu(s0 + 1e-12, cpar)
        assert abs(hi - lo) <= 1e-9


def test_wrench_zero_above_ground(params, cpar):
    x = dyn.hover_state((0, 0, 5.0))
    force, torque = ct.contact_wrench(x, None, params, cpar)
    assert not force.any() and not torque.any()


def equilibrium_depth(cpar, per_wheel_load):
    # bisection on s(d, w) * k * d = load
    lo, hi = 0.0, 0.1
    for _ in range(200):
        mid = 0.5 * (lo + hi)
        if ct.normal_force(mid, 0.0, cpar) < per_wheel_load:
            lo = mid
        else:
            hi = mid
    return 0.5 * (lo + hi)


def test_wrench_symmetric_rest(params, cpar):
    d_star = equilibrium_depth(cpar, params.weight / 4)
    x = dyn.hover_state((0.0, 0.0, params.leg_length - d_star))
    force, torque = ct.contact_wrench(x, None, params, cpar)
    assert abs(force[2] - params.weight) <= 1e-6
    np.testing.assert_allclose(force[:2], 0.0, atol=1e-12)
    np.testing.assert_allclose(torque, 0.0, atol=1e-12)


def test_wrench_fixed_contact_points(params, cpar):
    pts = np.array([[0.3, 0.3, -0.1], [0.3, -0.3, -0.1],
                    [-0.3, -0.3, -0.1], [-0.3, 0.3, -0.1]])
    over = ct.ContactParams(contact_points=pts)
    x = dyn.hover_state((0.0, 0.0, 0.1 - 2e-3))  # 2 mm penetration
    force, torque = ct.contact_wrench(x, None, params, over)
    per = ct.normal_force(2e-3, 0.0, over)
    assert force[2] == pytest.approx(4 * per, rel=1e-9)
    np.testing.assert_allclose(torque, 0.0, atol=1e-9)
    # at wheel-touch height the override points sit 0.4 m in the air
    x2 = dyn.hover_state((0.0, 0.0, params.leg_length - 2e-3))
    f2, _ = ct.contact_wrench(x2, None, params, over)
    assert not f2.any()
    f3, _ = ct.contact_wrench(x2, None, params, cpar)
    assert f3[2] > 0.0


def test_wrench_resists_descent(params, cpar):
    d_star = equilibrium_depth(cpar, params.weight / 4)
    x = dyn.hover_state((0.0, 0.0, params.leg_length - d_star))
    x[16] = -1.0  # descending: damping adds to the spring force
    force, _ = ct.contact_wrench(x, None, params, cpar)
    assert force[2] > params.weight


@pytest.mark.parametrize("kw", [
    dict(stiffness=0.0),
    dict(damping=-1.0),
    dict(transition_width=0.0),
    dict(critical_velocity=0.0),
    dict(mu_static=0.4, mu_dynamic=0.5),
    dict(mu_dynamic=-0.1),
])
def test_contact_params_rejects(kw):
    with pytest.raises(ValidationError):
        ct.ContactParams(**kw).validate()


def test_contact_points_shape_rejected():
    with pytest.raises(ValidationError):
        ct.ContactParams(contact_points=np.zeros((3, 3)))
