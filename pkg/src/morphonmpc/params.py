"""Physical parameters of the morphing quadrotor.

Defaults describe the reference vehicle: a 4.4 kg body with four 0.4 kg
single-joint-pair legs, each carrying a rotor at the wheel end, 6 kg total.
The thrust direction of each rotor follows the leg orientation, which is
what couples morphing to flight dynamics.
"""

import math
from dataclasses import dataclass, field, replace

import numpy as np

from ._core import layout
from .errors import ValidationError

GRAVITY = 9.81

# hips at the body corners; legs ordered FL, FR, BR, BL
_DEFAULT_HIPS = ((0.12, 0.12, 0.0), (0.12, -0.12, 0.0),
                 (-0.12, -0.12, 0.0), (-0.12, 0.12, 0.0))

# body box plus point-mass wheels at the nominal stance
_DEFAULT_INERTIA = ((0.26, 0.0, 0.0), (0.0, 0.26, 0.0), (0.0, 0.0, 0.22))

# perturbable plant parameters (parameter-uncertainty studies)
PERTURBABLE = ("inertia", "rotor_moment_gain", "drag_gamma")


def _as_matrix(m, rows, cols, name):
    arr = np.array(m, dtype=np.float64)
    if arr.shape != (rows, cols):
        raise ValidationError(f"{name} must be {rows}x{cols}, got {arr.shape}")
    return arr


@dataclass(eq=False)
class RobotParams:
    """Mass, geometry and aerodynamic constants of the vehicle.

    Treated as immutable by convention; use `perturbed` / dataclasses.replace
    to derive variants. `rotor_moment_gain` is the reaction torque per unit
    thrust (tau_i = k * T_i along the thrust axis), `drag_gamma` the linear
    body-rate drag that ultimately caps the post-failure spin rate.
    """

    body_mass: float = 4.4
    leg_mass: float = 0.4
    inertia: np.ndarray = field(default_factory=lambda: np.array(_DEFAULT_INERTIA))
    hip_offsets: np.ndarray = field(default_factory=lambda: np.array(_DEFAULT_HIPS))
    leg_length: float = 0.5
    rotor_moment_gain: float = 0.055
    rotor_spin_signs: tuple = (1.0, -1.0, 1.0, -1.0)
    drag_gamma: float = 0.275
    gravity: float = GRAVITY
    q_sag_nominal: float = math.pi / 4
    q_front_nominal: float = math.pi / 4

    def __post_init__(self):
        self.inertia = _as_matrix(self.inertia, 3, 3, "inertia")
        self.hip_offsets = _as_matrix(self.hip_offsets, 4, 3, "hip_offsets")
        self.rotor_spin_signs = tuple(float(s) for s in self.rotor_spin_signs)

    @property
    def total_mass(self) -> float:
        return self.body_mass + 4.0 * self.leg_mass

    @property
    def weight(self) -> float:
        return self.total_mass * self.gravity

    @property
    def hover_thrust(self) -> float:
        """Per-rotor thrust that exactly balances weight in the level pose."""
        return self.weight / 4.0

    @property
    def frontal_signs(self) -> np.ndarray:
        # frontal motion mirrors left/right so symmetric commands keep the
        # thrust axes in the x-z plane mirror-symmetric
        return np.sign(self.hip_offsets[:, 1])

    @property
    def sagittal_signs(self) -> np.ndarray:
        return np.ones(4)

    @property
    def inertia_inv(self) -> np.ndarray:
        return np.linalg.inv(self.inertia)

    def validate(self):
        if self.body_mass <= 0 or self.leg_mass <= 0:
            raise ValidationError("masses must be positive")
        if self.leg_length <= 0:
            raise ValidationError("leg_length must be positive")
        if self.gravity <= 0:
            raise ValidationError("gravity must be positive")
        if self.drag_gamma < 0:
            raise ValidationError("drag_gamma must be nonnegative")
        if self.rotor_moment_gain < 0:
            raise ValidationError("rotor_moment_gain must be nonnegative")
        if not np.allclose(self.inertia, self.inertia.T, atol=1e-12):
            raise ValidationError("inertia must be symmetric")
        if np.any(np.linalg.eigvalsh(self.inertia) <= 0):
            raise ValidationError("inertia must be positive definite")
        if len(self.rotor_spin_signs) != 4 or \
                any(abs(s) != 1.0 for s in self.rotor_spin_signs):
            raise ValidationError("rotor_spin_signs must be four entries of +-1")
        if sum(self.rotor_spin_signs) != 0.0:
            raise ValidationError("rotor_spin_signs must sum to zero")
        if np.any(self.hip_offsets[:, 1] == 0.0):
            raise ValidationError("hip y-offsets must be nonzero (mirror signs)")
        return self

    def perturbed(self, fractions: dict) -> "RobotParams":
        """Return a copy with selected parameters scaled by (1 + fraction).

        Models plant/controller parameter mismatch: the closed loop runs the
        perturbed plant while the controller keeps the nominal values. Only
        keys in PERTURBABLE are accepted.
        """
        changes = {}
        for name, frac in fractions.items():
            if name not in PERTURBABLE:
                raise ValidationError(f"cannot perturb {name!r} "
                                      f"(allowed: {PERTURBABLE})")
            base = getattr(self, name)
            changes[name] = base * (1.0 + float(frac))
        return replace(self, **changes)

    def packed(self) -> np.ndarray:
        """Flat parameter block for the rollout kernels."""
        return layout.pack_robot(
            self.total_mass, self.gravity, self.rotor_moment_gain,
            self.drag_gamma, self.inertia, self.inertia_inv,
            self.hip_offsets, self.leg_length,
            np.asarray(self.rotor_spin_signs), self.frontal_signs,
            self.sagittal_signs, self.q_sag_nominal, self.q_front_nominal)
