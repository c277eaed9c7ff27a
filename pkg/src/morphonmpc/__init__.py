"""morphonmpc: desk-scale flight simulator and NMPC stack for a
morphing quadrotor with articulated legs.

The package provides a reduced-order rigid-body model with thrust-vectoring
leg kinematics, a fault-tolerant / agile nonlinear MPC built on projected
L-BFGS with finite-difference gradients, rotor fault injection, smoothed
ground contact, and a scenario harness with CSV logging.
"""

from . import _core
from .contact import (ContactParams, contact_wrench, friction_force,
                      normal_force, slip_mu, wheel_world_states)
from .dynamics import (N_INPUTS, N_STATES, RomDynamics, body_wrench,
                       euler_rate_matrix, hover_input, hover_state,
                       leg_forward_kinematics, rom_derivative,
                       rotation_matrix)
from .errors import (DimensionMismatch, EmptyLog, InvalidLegIndex, IoError,
                     MorphonmpcError, NonFiniteCost, ParseError,
                     ScenarioInvalid, SingularAttitude, ValidationError)
from .faults import FaultSchedule, apply as apply_faults
from .harness import (Metrics, Scenario, SimLog, Waypoint, builtin_names,
                      compute_metrics, get_builtin, run_closed_loop)
from .integrator import IntegratorConfig, discretize, rk4_step
from .logio import emit_plot_script, read_csv, write_csv
from .nmpc import (NmpcSolver, OcpConfig, ReferencePlan, SolveResult,
                   collocate_reference, fd_gradient, rollout_cost, solve,
                   stage_cost, warm_start_shift)
from .params import RobotParams
from .scenario_io import parse_scenario, serialize_scenario

__version__ = "0.1.0"
backend = _core.backend

__all__ = [
    "ContactParams", "DimensionMismatch", "EmptyLog", "FaultSchedule",
    "IntegratorConfig", "InvalidLegIndex", "IoError", "Metrics",
    "MorphonmpcError", "N_INPUTS", "N_STATES", "NmpcSolver", "NonFiniteCost",
    "OcpConfig", "ParseError", "ReferencePlan", "RobotParams", "RomDynamics",
    "Scenario", "ScenarioInvalid", "SimLog", "SingularAttitude", "SolveResult",
    "ValidationError", "Waypoint", "apply_faults", "backend", "body_wrench",
    "builtin_names", "collocate_reference", "compute_metrics",
    "contact_wrench", "discretize", "emit_plot_script", "euler_rate_matrix",
    "fd_gradient", "friction_force", "get_builtin", "hover_input",
    "hover_state", "leg_forward_kinematics", "normal_force", "parse_scenario",
    "read_csv", "rk4_step", "rollout_cost", "rom_derivative",
    "rotation_matrix", "run_closed_loop", "serialize_scenario", "slip_mu",
    "solve", "stage_cost", "warm_start_shift", "wheel_world_states",
    "write_csv", "__version__",
]
