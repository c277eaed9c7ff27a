"""Ground contact at the four wheel points (plant side only).

Normal force is a smoothstep-gated spring-damper on penetration depth,
clamped to be non-adhesive. Friction is a regularized stick-slip law:
magnitude mu(v) * f_n opposing the tangential velocity, where mu rises from
zero at rest (so the model is smooth through v = 0) toward the static level
and decays to the dynamic level at speed. The ground is the z = 0 plane.

The prediction model never sees any of this; contact acts only on the
simulated plant.
"""

import math
from dataclasses import dataclass, field

import numpy as np

from . import dynamics
from ._core import layout
from .errors import ValidationError
from .params import RobotParams


@dataclass
class ContactParams:
    """Spring-damper and friction constants.

    Default stiffness supports the vehicle weight at ~1.5 mm penetration.
    contact_points, when given, overrides the leg-kinematics wheel
    positions with fixed body-frame points (4x3); joint-rate terms are
    then ignored in the point velocities.
    """

    stiffness: float = 1e4
    damping: float = 1e3
    transition_width: float = 1e-3
    mu_static: float = 0.7
    mu_dynamic: float = 0.5
    critical_velocity: float = 1e-3
    contact_points: np.ndarray | None = None

    def __post_init__(self):
        if self.contact_points is not None:
            pts = np.array(self.contact_points, dtype=np.float64)
            if pts.shape != (4, 3):
                raise ValidationError(
                    f"contact_points must be 4x3, got {pts.shape}")
            self.contact_points = pts

    def validate(self):
        for name in ("stiffness", "damping", "transition_width",
                     "critical_velocity"):
            if getattr(self, name) <= 0:
                raise ValidationError(f"{name} must be positive")
        if not 0 <= self.mu_dynamic <= self.mu_static:
            raise ValidationError("need 0 <= mu_dynamic <= mu_static")
        return self

    def packed(self) -> np.ndarray:
        return layout.pack_contact(
            self.stiffness, self.damping, self.transition_width,
            self.mu_static, self.mu_dynamic, self.critical_velocity)


def smoothing(depth: float, width: float) -> float:
    """Cubic smoothstep from 0 at depth<=0 to 1 at depth>=width."""
    if depth <= 0.0:
        return 0.0
    if depth >= width:
        return 1.0
    t = depth / width
    return t * t * (3.0 - 2.0 * t)


def normal_force(depth: float, depth_rate: float, params: ContactParams) -> float:
    """Non-adhesive spring-damper normal force, smoothstep-gated near zero."""
    s = smoothing(depth, params.transition_width)
    f = s * (params.stiffness * depth + params.damping * depth_rate)
    return max(f, 0.0)


def slip_mu(speed: float, params: ContactParams) -> float:
    """Effective friction coefficient at tangential speed `speed`.

    Zero at rest, rises over the critical-velocity scale, decays toward
    mu_dynamic at speed. Continuous everywhere; the tanh activation is
    what regularizes the stick regime.
    """
    vc = params.critical_velocity
    blend = params.mu_dynamic + (params.mu_static - params.mu_dynamic) * \
        math.exp(-((speed / (3.0 * vc)) ** 2))
    return blend * math.tanh(speed / vc)


def friction_force(normal: float, v_tangential, params: ContactParams) -> np.ndarray:
    """Planar friction force opposing the tangential velocity."""
    v = np.asarray(v_tangential, dtype=float)
    speed = math.hypot(v[0], v[1])
    if speed < 1e-12 or normal <= 0.0:
        return np.zeros(2)
    return (-slip_mu(speed, params) * normal / speed) * v


def wheel_world_states(x, robot: RobotParams,
                       contact: ContactParams | None = None):
    """World positions and velocities of the four wheel contact points.

    Velocities include the body twist and, for kinematics-derived points,
    the joint-rate contribution of the morphing legs.
    """
    x = np.asarray(x, dtype=float)
    rot = dynamics.rotation_matrix(x[dynamics.ATT])
    p = x[dynamics.POS]
    v = x[dynamics.VEL]
    omega = x[dynamics.OMEGA]
    qs = x[dynamics.QSAG]
    qf = x[dynamics.QFRONT]
    qds = x[dynamics.QDSAG]
    qdf = x[dynamics.QDFRONT]

    fixed = contact.contact_points if (contact is not None and
                                       contact.contact_points is not None) else None
    pos_w = np.empty((4, 3))
    vel_w = np.empty((4, 3))
    length = robot.leg_length
    for i in range(4):
        if fixed is not None:
            b = fixed[i]
            b_dot = np.zeros(3)
        else:
            ssign = robot.sagittal_signs[i]
            fsign = robot.frontal_signs[i]
            ds = ssign * (qs[i] - robot.q_sag_nominal)
            df = fsign * (qf[i] - robot.q_front_nominal)
            ss, cs = math.sin(ds), math.cos(ds)
            sf, cf = math.sin(df), math.cos(df)
            axis = np.array([ss, -sf * cs, cf * cs])
            d_axis_ds = ssign * np.array([cs, sf * ss, -cf * ss])
            d_axis_df = fsign * np.array([0.0, -cf * cs, -sf * cs])
            b = robot.hip_offsets[i] - length * axis
            b_dot = -length * (d_axis_ds * qds[i] + d_axis_df * qdf[i])
        pos_w[i] = p + rot @ b
        vel_w[i] = v + rot @ (np.cross(omega, b) + b_dot)
    return pos_w, vel_w


def contact_wrench(x, q_a=None, robot: RobotParams | None = None,
                   contact: ContactParams | None = None):
    """Total ground reaction: world-frame force and body-frame torque.

    q_a defaults to the joint angles already inside x; passing different
    angles only moves the contact points, rates still come from x.
    """
    robot = robot if robot is not None else RobotParams()
    contact = contact if contact is not None else ContactParams()
    x = np.asarray(x, dtype=float)
    if q_a is not None:
        x = x.copy()
        x[dynamics.QSAG.start:dynamics.QFRONT.stop] = np.asarray(q_a, dtype=float)

    rot = dynamics.rotation_matrix(x[dynamics.ATT])
    p = x[dynamics.POS]
    pos_w, vel_w = wheel_world_states(x, robot, contact)

    force = np.zeros(3)
    torque_b = np.zeros(3)
    for i in range(4):
        depth = -pos_w[i, 2]
        if depth <= 0.0:
            continue
        fn = normal_force(depth, -vel_w[i, 2], contact)
        ft = friction_force(fn, vel_w[i, :2], contact)
        f_i = np.array([ft[0], ft[1], fn])
        force += f_i
        r_body = rot.T @ (pos_w[i] - p)
        torque_b += np.cross(r_body, rot.T @ f_i)
    return force, torque_b
