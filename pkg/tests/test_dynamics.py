"""Reduced-order model: kinematics, wrench mapping, state derivative.

Rotation-dependent results are checked against scipy.spatial.transform
rather than against the package's own matrices.
"""

import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from scipy.spatial.transform import Rotation
from scipy.linalg import expm

from morphonmpc import dynamics as dyn
from morphonmpc.errors import (DimensionMismatch, InvalidLegIndex,
                               SingularAttitude, ValidationError)
from morphonmpc.params import RobotParams


def scipy_rotation(attitude):
    roll, pitch, yaw = attitude
    return Rotation.from_euler("ZYX", [yaw, pitch, roll]).as_matrix()


def random_attitude(rng, pitch_max=1.2):
    return np.array([rng.uniform(-math.pi, math.pi),
                     rng.uniform(-pitch_max, pitch_max),
                     rng.uniform(-math.pi, math.pi)])


# ---- parameters ----

def test_mass_budget(params):
    assert params.total_mass == pytest.approx(6.0, abs=1e-12)
    assert params.weight == pytest.approx(58.86, abs=1e-12)
    assert params.hover_thrust == pytest.approx(14.715, abs=1e-12)


def test_params_validate_defaults(params):
    params.validate()


@pytest.mark.parametrize("bad", [
    dict(body_mass=-1.0),
    dict(leg_length=0.0),
    dict(inertia=((0.26, 0.01, 0), (0, 0.26, 0), (0, 0, 0.22))),
    dict(inertia=((-0.1, 0, 0), (0, 0.26, 0), (0, 0, 0.22))),
    dict(rotor_spin_signs=(1, 1, 1, -1)),
    dict(rotor_spin_signs=(1, -1, 1, -0.5)),
])
def test_params_validate_rejects(bad):
    with pytest.raises(ValidationError):
        RobotParams(**bad).validate()


def test_perturbed_scales_and_rejects(params):
    p2 = params.perturbed({"drag_gamma": 0.1, "inertia": -0.05})
    assert p2.drag_gamma == pytest.approx(1.1 * params.drag_gamma)
    assert np.allclose(p2.inertia, 0.95 * params.inertia)
    assert p2.rotor_moment_gain == params.rotor_moment_gain
    with pytest.raises(ValidationError):
        params.perturbed({"leg_mass": 0.1})


# ---- rotation and Euler-rate kinematics ----

def test_rotation_matrix_against_scipy(rng):
    for _ in range(50):
        att = random_attitude(rng, pitch_max=math.pi / 2 - 0.01)
        np.testing.assert_allclose(dyn.rotation_matrix(att),
                                   scipy_rotation(att), atol=1e-12)


def test_euler_rate_matrix_identity_at_zero():
    np.testing.assert_allclose(dyn.euler_rate_matrix((0.0, 0.0, 0.0)),
                               np.eye(3), atol=1e-15)


def test_euler_rate_matrix_pitch_sixty():
    J = dyn.euler_rate_matrix((0.0, math.pi / 3, 0.0))
    assert J[2][2] == pytest.approx(2.0, rel=1e-12)


@pytest.mark.parametrize("pitch", [math.pi / 2, -math.pi / 2,
                                   math.pi / 2 - 5e-4])
def test_euler_rate_matrix_singularity(pitch):
    with pytest.raises(SingularAttitude):
        dyn.euler_rate_matrix((0.1, pitch, 0.0))


def test_euler_rates_match_rotation_flow(rng):
    # theta_dot = J(theta) omega should agree with differencing the Euler
    # angles of R(theta) expm(h [omega]_x)
    h = 1e-7
    for _ in range(20):
        att = random_attitude(rng, pitch_max=1.0)
        omega = rng.uniform(-2, 2, 3)
        J = dyn.euler_rate_matrix(att)
        R0 = scipy_rotation(att)
        skew = np.array([[0, -omega[2], omega[1]],
                         [omega[2], 0, -omega[0]],
                         [-omega[1], omega[0], 0]])
        R1 = R0 @ expm(h * skew)
        yaw1, pitch1, roll1 = Rotation.from_matrix(R1).as_euler("ZYX")
        att1 = np.array([roll1, pitch1, yaw1])
        fd = (np.unwrap(np.vstack([att, att1]), axis=0)[1] - att) / h
        np.testing.assert_allclose(J @ omega, fd, rtol=1e-5, atol=1e-5)


# ---- leg forward kinematics ----

def test_fk_nominal_pose(params):
    for leg in range(1, 5):
        pos, axis = dyn.leg_forward_kinematics(
            leg, params.q_sag_nominal, params.q_front_nominal, params)
        np.testing.assert_allclose(axis, (0.0, 0.0, 1.0), atol=1e-15)
        np.testing.assert_allclose(
            pos, params.hip_offsets[leg - 1] - (0, 0, params.leg_length),
            atol=1e-15)


def test_fk_sagittal_tilt(params):
    delta = 0.2
    _, axis = dyn.leg_forward_kinematics(
        1, params.q_sag_nominal + delta, params.q_front_nominal, params)
    np.testing.assert_allclose(axis, (math.sin(delta), 0.0, math.cos(delta)),
                               atol=1e-15)


def test_fk_against_rotation_composition(params, rng):
    # axis = Rx(df) Ry(ds) e_z with the per-leg mirror signs applied
    for _ in range(30):
        leg = int(rng.integers(1, 5))
        qs = rng.uniform(0, math.pi / 2)
        qf = rng.uniform(0, math.pi / 2)
        ds = params.sagittal_signs[leg - 1] * (qs - params.q_sag_nominal)
        df = params.frontal_signs[leg - 1] * (qf - params.q_front_nominal)
        oracle = Rotation.from_euler("yx", [ds, df]).as_matrix() @ np.array([0, 0, 1.0])
        pos, axis = dyn.leg_forward_kinematics(leg, qs, qf, params)
        np.testing.assert_allclose(axis, oracle, atol=1e-12)
        np.testing.assert_allclose(
            pos, params.hip_offsets[leg - 1] - params.leg_length * oracle,
            atol=1e-12)


def test_fk_mirror_symmetry(params):
    # legs 1 and 2 share x and differ in hip-y sign; a symmetric pose must
    # mirror positions across the x-z plane
    qs, qf = 0.9, 0.3
    p1, a1 = dyn.leg_forward_kinematics(1, qs, qf, params)
    p2, a2 = dyn.leg_forward_kinematics(2, qs, qf, params)
    np.testing.assert_allclose(p1[[0, 2]], p2[[0, 2]], atol=1e-15)
    assert p1[1] == pytest.approx(-p2[1], abs=1e-15)
    assert a1[1] == pytest.approx(-a2[1], abs=1e-15)


@pytest.mark.parametrize("bad", [0, 5, -1, 2.0, True])
def test_fk_leg_index_rejects(params, bad):
    with pytest.raises(InvalidLegIndex):
        dyn.leg_forward_kinematics(bad, 0.5, 0.5, params)


# ---- thrust wrench ----

def test_wrench_hover_balance(params):
    q_a = np.full(8, math.pi / 4)
    force, torque = dyn.body_wrench(q_a, np.full(4, 14.715), params)
    np.testing.assert_allclose(force, (0.0, 0.0, 58.86), atol=1e-12)
    np.testing.assert_allclose(torque, np.zeros(3), atol=1e-12)


def test_wrench_zero_thrust(params):
    force, torque = dyn.body_wrench(np.full(8, 0.7), np.zeros(4), params)
    assert not force.any() and not torque.any()


def test_wrench_single_rotor_oracle(params):
    q_a = np.full(8, math.pi / 4)
    pos, axis = dyn.leg_forward_kinematics(1, q_a[0], q_a[4], params)
    force, torque = dyn.body_wrench(q_a, np.array([10.0, 0, 0, 0]), params)
    np.testing.assert_allclose(force, 10.0 * axis, atol=1e-12)
    expected = np.cross(pos, 10.0 * axis) + \
        params.rotor_spin_signs[0] * params.rotor_moment_gain * 10.0 * axis
    np.testing.assert_allclose(torque, expected, atol=1e-12)


@settings(max_examples=40, deadline=None)
@given(st.lists(st.floats(0, math.pi / 2), min_size=8, max_size=8),
       st.lists(st.floats(0, 30), min_size=4, max_size=4),
       st.lists(st.floats(0, 30), min_size=4, max_size=4),
       st.floats(0, 3), st.floats(0, 3))
def test_wrench_linear_in_thrust(q_a, ta, tb, a, b):
    p = RobotParams()
    q_a = np.asarray(q_a)
    ta, tb = np.asarray(ta), np.asarray(tb)
    fa, qa_t = dyn.body_wrench(q_a, ta, p)
    fb, qb_t = dyn.body_wrench(q_a, tb, p)
    fc, qc_t = dyn.body_wrench(q_a, a * ta + b * tb, p)
    scale = max(1.0, np.abs(fc).max(), np.abs(qc_t).max())
    np.testing.assert_allclose(fc, a * fa + b * fb, atol=1e-12 * scale)
    np.testing.assert_allclose(qc_t, a * qa_t + b * qb_t, atol=1e-12 * scale)


def test_wrench_shape_errors(params):
    with pytest.raises(DimensionMismatch):
        dyn.body_wrench(np.zeros(7), np.zeros(4), params)
    with pytest.raises(DimensionMismatch):
        dyn.body_wrench(np.zeros(8), np.zeros(5), params)


# ---- state derivative ----

def test_hover_equilibrium(params):
    dx = dyn.rom_derivative(dyn.hover_state((0, 0, 5)),
                            dyn.hover_input(params), params)
    assert np.abs(dx).max() <= 1e-9


def test_free_fall(params):
    x = dyn.hover_state((0, 0, 5))
    dx = dyn.rom_derivative(x, np.zeros(12), params)
    np.testing.assert_allclose(dx[14:17], (0, 0, -params.gravity), atol=1e-12)
    assert not dx[[0, 1, 2, 3, 4, 5]].any()
    assert not dx[17:].any()


def test_yaw_drag_rate(params):
    x = dyn.hover_state()
    x[19] = 1.0
    dx = dyn.rom_derivative(x, np.zeros(12), params)
    assert dx[19] == pytest.approx(-params.drag_gamma / params.inertia[2, 2],
                                   rel=1e-12)


def test_joint_accel_passthrough(params):
    u = np.zeros(12)
    u[4:] = np.arange(8) - 3.5
    dx = dyn.rom_derivative(dyn.hover_state(), u, params)
    np.testing.assert_allclose(dx[20:28], u[4:], atol=1e-15)


def test_world_force_frame_consistency(params, rng):
    for _ in range(20):
        x = dyn.hover_state()
        x[3:6] = random_attitude(rng)
        x[6:14] = rng.uniform(0, math.pi / 2, 8)
        x[14:] = rng.uniform(-1, 1, 14)
        u = np.zeros(12)
        u[0:4] = rng.uniform(0, 30, 4)
        force_b, _ = dyn.body_wrench(x[6:14], u[0:4], params)
        dx = dyn.rom_derivative(x, u, params)
        f_world = params.total_mass * (dx[14:17] + (0, 0, params.gravity))
        np.testing.assert_allclose(f_world, scipy_rotation(x[3:6]) @ force_b,
                                   rtol=1e-9, atol=1e-9)


def test_rotational_drag_dissipates(params, rng):
    inertia = params.inertia
    for _ in range(20):
        x = dyn.hover_state()
        x[17:20] = rng.uniform(-5, 5, 3)
        dx = dyn.rom_derivative(x, np.zeros(12), params)
        omega = x[17:20]
        power = omega @ inertia @ dx[17:20]
        assert power == pytest.approx(-params.drag_gamma * omega @ omega,
                                      rel=1e-9)
        assert power <= 0.0


def test_derivative_singularity_policy(params):
    x = dyn.hover_state()
    x[4] = math.pi / 2
    with pytest.raises(SingularAttitude):
        dyn.rom_derivative(x, np.zeros(12), params)
    clamped = dyn.rom_derivative(x, np.zeros(12), params,
                                 clamp_singularity=True)
    assert np.all(np.isfinite(clamped))


def test_derivative_shape_errors(params):
    with pytest.raises(DimensionMismatch):
        dyn.rom_derivative(np.zeros(27), np.zeros(12), params)
    with pytest.raises(DimensionMismatch):
        dyn.rom_derivative(np.zeros(28), np.zeros(11), params)
