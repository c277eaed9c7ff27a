"""Fixed-step RK4 integration and zero-order-hold discretization.

Two rates live here: the plant integrates at `plant_step` (default 1e-4 s),
the controller's prediction model takes `prediction_substeps` RK4 steps per
control period. Both use the same classical RK4 tableau so order properties
are shared.
"""

from dataclasses import dataclass

import numpy as np

from .errors import ValidationError


@dataclass
class IntegratorConfig:
    plant_step: float = 1e-4
    prediction_substeps: int = 5
    control_period: float = 0.1

    def validate(self):
        if self.plant_step <= 0:
            raise ValidationError("plant_step must be positive")
        if self.control_period <= 0:
            raise ValidationError("control_period must be positive")
        if self.prediction_substeps < 1:
            raise ValidationError("prediction_substeps must be >= 1")
        n = self.control_period / self.plant_step
        if abs(n - round(n)) > 1e-9 * max(1.0, n):
            raise ValidationError(
                "control_period must be an integer multiple of plant_step")
        return self

    @property
    def plant_substeps(self) -> int:
        """Plant RK4 steps per control period."""
        return int(round(self.control_period / self.plant_step))

    @property
    def prediction_step(self) -> float:
        """RK4 step used inside controller rollouts."""
        return self.control_period / self.prediction_substeps


def rk4_step(f, x, u, h: float) -> np.ndarray:
    """One classical RK4 step of x' = f(x, u) with u held constant."""
    x = np.asarray(x, dtype=float)
    k1 = f(x, u)
    k2 = f(x + 0.5 * h * k1, u)
    k3 = f(x + 0.5 * h * k2, u)
    k4 = f(x + h * k3, u)
    return x + (h / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4)


def discretize(f, x, u, config: IntegratorConfig) -> np.ndarray:
    """Advance one control period under zero-order-hold input.

    Splits the period into `prediction_substeps` equal RK4 steps; u is
    applied unchanged to every substep.
    """
    h = config.prediction_step
    for _ in range(config.prediction_substeps):
        x = rk4_step(f, x, u, h)
    return x
