"""Reduced-order rigid-body model of the morphing quadrotor.

State (28 entries): world position, ZYX Euler attitude, 8 joint angles
(sagittal legs 1..4 then frontal legs 1..4), world velocity, body rates,
8 joint rates. Input (12 entries): 4 rotor thrusts then 8 joint
accelerations in the same order.

Legs are massless in this model apart from their contribution to the
constant inertia; morphing enters through the thrust direction and
application point of each rotor. Joint accelerations are direct inputs
(double-integrator joints), which is what lets one prediction model serve
both the fault-tolerant and the agile controller.
"""

import math

import numpy as np

from ._core import layout
from .errors import DimensionMismatch, InvalidLegIndex, SingularAttitude
from .params import RobotParams

N_STATES = layout.NX
N_INPUTS = layout.NU

# state slices
POS = slice(0, 3)
ATT = slice(3, 6)
QSAG = slice(6, 10)
QFRONT = slice(10, 14)
VEL = slice(14, 17)
OMEGA = slice(17, 20)
QDSAG = slice(20, 24)
QDFRONT = slice(24, 28)

# input slices
THRUST = slice(0, 4)
ACC_SAG = slice(4, 8)
ACC_FRONT = slice(8, 12)

SING_EPS = layout.SING_EPS


def hover_state(position=(0.0, 0.0, 0.0), yaw=0.0,
                params: RobotParams | None = None) -> np.ndarray:
    """Level hover at `position` with nominal joint pose and zero rates."""
    p = params if params is not None else RobotParams()
    x = np.zeros(N_STATES)
    x[POS] = position
    x[5] = yaw
    x[QSAG] = p.q_sag_nominal
    x[QFRONT] = p.q_front_nominal
    return x


def hover_input(params: RobotParams | None = None) -> np.ndarray:
    """Input that holds `hover_state` exactly: equal thrusts, zero accels."""
    p = params if params is not None else RobotParams()
    u = np.zeros(N_INPUTS)
    u[THRUST] = p.hover_thrust
    return u


def rotation_matrix(attitude) -> np.ndarray:
    """World-from-body rotation for ZYX Euler angles (roll, pitch, yaw)."""
    phi, theta, psi = attitude
    cf, sf = math.cos(phi), math.sin(phi)
    ct, st = math.cos(theta), math.sin(theta)
    cp, sp = math.cos(psi), math.sin(psi)
    return np.array([
        [cp * ct, cp * st * sf - sp * cf, cp * st * cf + sp * sf],
        [sp * ct, sp * st * sf + cp * cf, sp * st * cf - cp * sf],
        [-st, ct * sf, ct * cf],
    ])


def _euler_rate_matrix_raw(phi: float, theta: float) -> np.ndarray:
    cf, sf = math.cos(phi), math.sin(phi)
    ct = math.cos(theta)
    tt = math.tan(theta)
    return np.array([
        [1.0, sf * tt, cf * tt],
        [0.0, cf, -sf],
        [0.0, sf / ct, cf / ct],
    ])


def euler_rate_matrix(attitude) -> np.ndarray:
    """Map body rates to Euler angle rates: theta_dot = J(theta) * omega.

    Raises SingularAttitude when |pitch| >= pi/2 - 1e-3; the representation
    degenerates there and integrating through it is meaningless.
    """
    phi, theta = attitude[0], attitude[1]
    if abs(theta) >= math.pi / 2 - SING_EPS:
        raise SingularAttitude(f"pitch {theta:.6f} rad within 1e-3 of +-pi/2")
    return _euler_rate_matrix_raw(phi, theta)


def leg_forward_kinematics(leg_index: int, q_sag: float, q_front: float,
                           params: RobotParams):
    """Rotor position (body frame) and unit thrust axis for one leg.

    leg_index is 1-based. At the nominal pose the axis is +z and the wheel
    sits leg_length below the hip; sagittal motion tilts the axis in the
    leg's x-z plane, frontal motion tilts it laterally with left/right
    mirror symmetry.
    """
    if not isinstance(leg_index, (int, np.integer)) or isinstance(leg_index, bool):
        raise InvalidLegIndex(f"leg_index must be an int, got {leg_index!r}")
    if not 1 <= leg_index <= 4:
        raise InvalidLegIndex(f"leg_index must be in 1..4, got {leg_index}")
    i = leg_index - 1
    ds = params.sagittal_signs[i] * (q_sag - params.q_sag_nominal)
    df = params.frontal_signs[i] * (q_front - params.q_front_nominal)
    ss, cs = math.sin(ds), math.cos(ds)
    sf, cf = math.sin(df), math.cos(df)
    # Rx(df) @ Ry(ds) @ ez
    axis = np.array([ss, -sf * cs, cf * cs])
    pos = params.hip_offsets[i] - params.leg_length * axis
    return pos, axis


def body_wrench(q_a, thrusts, params: RobotParams):
    """Total thrust force and torque in the body frame.

    q_a: 8 joint angles (sagittal 1..4 then frontal 1..4). Each rotor
    contributes T_i along its leg axis applied at the wheel, plus a
    reaction torque spin_i * k * T_i about that axis.
    """
    q_a = np.asarray(q_a, dtype=float)
    thrusts = np.asarray(thrusts, dtype=float)
    if q_a.shape != (8,):
        raise DimensionMismatch(f"q_a must have shape (8,), got {q_a.shape}")
    if thrusts.shape != (4,):
        raise DimensionMismatch(f"thrusts must have shape (4,), got {thrusts.shape}")
    force = np.zeros(3)
    torque = np.zeros(3)
    k = params.rotor_moment_gain
    for i in range(4):
        pos, axis = leg_forward_kinematics(i + 1, q_a[i], q_a[4 + i], params)
        f = thrusts[i] * axis
        force += f
        torque += np.cross(pos, f) + params.rotor_spin_signs[i] * k * thrusts[i] * axis
    return force, torque


def rom_derivative(x, u, params: RobotParams, clamp_singularity=False) -> np.ndarray:
    """Time derivative of the 28-entry state under a 12-entry input.

    With clamp_singularity=False (plant semantics) a pitch within 1e-3 of
    +-pi/2 raises SingularAttitude. With True (controller rollout
    semantics) pitch is clamped inside the Euler rate map only, so
    predictions stay finite; the cost side penalizes that region instead.
    """
    x = np.asarray(x, dtype=float)
    u = np.asarray(u, dtype=float)
    if x.shape != (N_STATES,):
        raise DimensionMismatch(f"state must have shape ({N_STATES},), got {x.shape}")
    if u.shape != (N_INPUTS,):
        raise DimensionMismatch(f"input must have shape ({N_INPUTS},), got {u.shape}")

    phi, theta = x[3], x[4]
    lim = math.pi / 2 - SING_EPS
    if clamp_singularity:
        theta = min(max(theta, -lim), lim)
    elif abs(theta) >= lim:
        raise SingularAttitude(f"pitch {theta:.6f} rad within 1e-3 of +-pi/2")

    force_b, torque_b = body_wrench(x[QSAG.start:QFRONT.stop], u[THRUST], params)
    rot = rotation_matrix(x[ATT])
    omega = x[OMEGA]
    inertia = params.inertia

    dx = np.empty(N_STATES)
    dx[POS] = x[VEL]
    dx[ATT] = _euler_rate_matrix_raw(phi, theta) @ omega
    dx[QSAG] = x[QDSAG]
    dx[QFRONT] = x[QDFRONT]
    dx[VEL] = rot @ force_b / params.total_mass
    dx[16] -= params.gravity
    gyro = np.cross(omega, inertia @ omega)
    dx[OMEGA] = params.inertia_inv @ (torque_b - params.drag_gamma * omega - gyro)
    dx[QDSAG] = u[ACC_SAG]
    dx[QDFRONT] = u[ACC_FRONT]
    return dx


class RomDynamics:
    """Callable wrapper binding rom_derivative to one parameter set.

    Instances are recognized by the rollout layer, which then dispatches to
    the packed-array kernels; calling the instance directly always goes
    through the readable reference implementation above.
    """

    def __init__(self, params: RobotParams):
        self.params = params
        self.packed = params.packed()

    def __call__(self, x, u):
        return rom_derivative(x, u, self.params)

    def derivative_clamped(self, x, u):
        return rom_derivative(x, u, self.params, clamp_singularity=True)
