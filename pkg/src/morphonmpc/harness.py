"""Closed-loop scenario harness.

Each control tick: build references from the active waypoint (fixed hover
goal in fault mode, collocated march in agile mode), solve the NMPC from
the measured state, push the first input through the fault model, then
integrate the perturbed plant for one control period at the fine step.
The controller only ever sees states and references; effectiveness and the
plant's true parameters stay on the plant side.

Plant parameters are perturbed from the controller's nominal set by
seed-driven random fractions within the configured magnitudes, modeling
model mismatch.
"""

import math
from dataclasses import dataclass, field

import numpy as np

from . import dynamics as dyn
from . import faults as flt
from ._core import plant_advance
from .contact import ContactParams
from .errors import EmptyLog, MorphonmpcError, ScenarioInvalid, ValidationError
from .integrator import IntegratorConfig
from .nmpc import NmpcSolver, OcpConfig, ReferencePlan, collocate_reference
from .params import RobotParams

DEFAULT_PERTURBATION = {"inertia": 0.05, "rotor_moment_gain": 0.05,
                        "drag_gamma": 0.05}


@dataclass
class Waypoint:
    position: tuple
    yaw: float = 0.0
    hold: float = 0.0

    def __post_init__(self):
        self.position = np.asarray(self.position, dtype=np.float64)
        if self.position.shape != (3,):
            raise ScenarioInvalid("waypoint position must have 3 entries")
        if self.hold < 0:
            raise ScenarioInvalid("waypoint hold must be nonnegative")


@dataclass
class Scenario:
    """Complete description of one closed-loop run."""

    name: str = "hover"
    mode: str = "fault_tolerant"
    sagittal_only: bool = False
    waypoints: list = field(default_factory=lambda: [Waypoint((0.0, 0.0, 5.0))])
    initial_state: np.ndarray | None = None
    duration: float = 5.0
    robot: RobotParams = field(default_factory=RobotParams)
    integrator: IntegratorConfig = field(default_factory=IntegratorConfig)
    ocp: OcpConfig | None = None
    fault_schedule: flt.FaultSchedule = field(default_factory=flt.FaultSchedule)
    contact: ContactParams = field(default_factory=ContactParams)
    contact_enabled: bool = False
    perturbation: dict = field(default_factory=lambda: dict(DEFAULT_PERTURBATION))
    speed_limit: float = 14.5
    capture_radius: float = 0.3
    seed: int = 0
    solver_options: dict = field(default_factory=dict)

    def __post_init__(self):
        if self.ocp is None:
            if self.mode == "agile":
                self.ocp = OcpConfig.agile(self.robot)
            else:
                self.ocp = OcpConfig.fault_tolerant(
                    self.robot, sagittal_only=self.sagittal_only)
        if self.initial_state is None:
            self.initial_state = self.goal_state(self.waypoints[0])
        self.initial_state = np.asarray(self.initial_state, dtype=np.float64)

    def validate(self) -> "Scenario":
        try:
            self.robot.validate()
            self.integrator.validate()
            self.ocp.validate()
            self.fault_schedule.validate()
            self.contact.validate()
        except ValidationError as exc:
            raise ScenarioInvalid(str(exc)) from exc
        if self.mode != self.ocp.mode:
            raise ScenarioInvalid(
                f"scenario mode {self.mode!r} != ocp mode {self.ocp.mode!r}")
        if self.sagittal_only != self.ocp.sagittal_only:
            raise ScenarioInvalid("sagittal_only flag inconsistent with ocp")
        if not self.waypoints:
            raise ScenarioInvalid("at least one waypoint required")
        if self.duration < self.integrator.control_period:
            raise ScenarioInvalid("duration shorter than one control period")
        if self.initial_state.shape != (dyn.N_STATES,):
            raise ScenarioInvalid(
                f"initial_state must have {dyn.N_STATES} entries")
        if not np.all(np.isfinite(self.initial_state)):
            raise ScenarioInvalid("initial_state must be finite")
        if self.speed_limit <= 0:
            raise ScenarioInvalid("speed_limit must be positive")
        if self.capture_radius <= 0:
            raise ScenarioInvalid("capture_radius must be positive")
        for name in self.perturbation:
            if name not in ("inertia", "rotor_moment_gain", "drag_gamma"):
                raise ScenarioInvalid(f"unknown perturbation target {name!r}")
        return self

    def plant_params(self) -> RobotParams:
        """Perturbed copy of the robot parameters for the simulated plant.

        Fractions are drawn uniformly in +-magnitude per target, in sorted
        key order, from a generator seeded by the scenario seed; the same
        scenario and seed always produce the same plant.
        """
        if not self.perturbation:
            return self.robot
        rng = np.random.default_rng(self.seed)
        fractions = {}
        for name in sorted(self.perturbation):
            mag = float(self.perturbation[name])
            fractions[name] = rng.uniform(-mag, mag)
        return self.robot.perturbed(fractions)

    def goal_state(self, waypoint: Waypoint) -> np.ndarray:
        """Hover reference at a waypoint, in the scenario's flight posture.

        Sagittal-only scenarios fly supinated: frontal joints parked at
        zero so each rotor sits inboard over the body. With the frontal
        channels out of the decision vector that posture is what makes
        sagittal strokes steer roll as well as pitch (the tilted rotor
        axes pick up a lateral component), so the references keep the
        frontal joints there rather than at the nominal cross stance.
        """
        x = dyn.hover_state(waypoint.position, waypoint.yaw, self.robot)
        if self.sagittal_only:
            x[10:14] = 0.0
        return x


@dataclass
class SimLog:
    """Columnar closed-loop record, one row per control tick.

    The final row repeats the last tick's inputs/solver stats against the
    terminal state (no solve happens after the final state). solve_time is
    wall-clock and therefore excluded from the CSV serialization.

    tracking_error is the distance to the commanded set-point in hold mode.
    Collocated references advance a full stride ahead of the vehicle by
    construction, so agile runs log the cross-track distance to the active
    path leg (previous waypoint, or start position, to current waypoint)
    instead.
    """

    scenario_name: str
    control_period: float
    time: np.ndarray
    states: np.ndarray
    refs: np.ndarray
    commanded: np.ndarray
    actual: np.ndarray
    joint_accels: np.ndarray
    effectiveness: np.ndarray
    solver_cost: np.ndarray
    solver_iters: np.ndarray
    solve_time: np.ndarray
    tracking_error: np.ndarray
    failed: bool = False
    failure_reason: str = ""

    @property
    def n_rows(self) -> int:
        return len(self.time)

    def require_rows(self):
        if self.n_rows == 0:
            raise EmptyLog(f"log for {self.scenario_name!r} has no rows")
        return self


class _LogBuilder:
    def __init__(self, scenario_name: str, control_period: float):
        self.name = scenario_name
        self.period = control_period
        self.rows = {k: [] for k in ("time", "states", "refs", "commanded",
                                     "actual", "joint_accels", "effectiveness",
                                     "solver_cost", "solver_iters",
                                     "solve_time", "tracking_error")}

    def add(self, **kw):
        for k, v in kw.items():
            self.rows[k].append(v)

    def build(self, failed=False, reason="") -> SimLog:
        r = self.rows
        return SimLog(
            scenario_name=self.name, control_period=self.period,
            time=np.asarray(r["time"]),
            states=np.asarray(r["states"]).reshape(len(r["time"]), -1),
            refs=np.asarray(r["refs"]).reshape(len(r["time"]), -1),
            commanded=np.asarray(r["commanded"]).reshape(len(r["time"]), -1),
            actual=np.asarray(r["actual"]).reshape(len(r["time"]), -1),
            joint_accels=np.asarray(r["joint_accels"]).reshape(len(r["time"]), -1),
            effectiveness=np.asarray(r["effectiveness"]).reshape(len(r["time"]), -1),
            solver_cost=np.asarray(r["solver_cost"]),
            solver_iters=np.asarray(r["solver_iters"]),
            solve_time=np.asarray(r["solve_time"]),
            tracking_error=np.asarray(r["tracking_error"]),
            failed=failed, failure_reason=reason)


def _cross_track(p, a, b) -> float:
    # distance from p to the segment a->b (the active reference path leg)
    ab = b - a
    denom = float(ab @ ab)
    if denom <= 1e-12:
        return float(np.linalg.norm(p - b))
    s = min(max(float((p - a) @ ab) / denom, 0.0), 1.0)
    return float(np.linalg.norm(p - (a + s * ab)))


def run_closed_loop(scenario: Scenario) -> SimLog:
    """Simulate one scenario; returns the log (failed flag set on abort).

    Row count is floor(duration / control_period) + 1 on a clean run; a
    plant abort (attitude singularity, non-finite state) truncates the log
    and sets failed/failure_reason instead of raising.
    """
    sc = scenario.validate()
    period = sc.integrator.control_period
    n_ticks = int(math.floor(sc.duration / period + 1e-9))

    solver = NmpcSolver(sc.ocp, dyn.RomDynamics(sc.robot), sc.integrator,
                        **sc.solver_options)
    rp_plant = sc.plant_params().packed()
    cp = sc.contact.packed() if sc.contact_enabled else None
    cap_at = sc.robot.hover_thrust if sc.fault_schedule.cap_mode else None

    log = _LogBuilder(sc.name, period)
    x = sc.initial_state.copy()
    wp_idx = 0
    leg_origin = x[0:3].copy()
    hold_elapsed = -1.0  # negative: outside capture radius

    last = None
    for k in range(n_ticks):
        t = k * period

        # waypoint progression: advance after the hold time has been spent
        # continuously inside the capture radius
        wp = sc.waypoints[wp_idx]
        if np.linalg.norm(x[0:3] - wp.position) <= sc.capture_radius:
            hold_elapsed = max(hold_elapsed, 0.0)
            if hold_elapsed >= wp.hold and wp_idx + 1 < len(sc.waypoints):
                leg_origin = wp.position.copy()
                wp_idx += 1
                wp = sc.waypoints[wp_idx]
                hold_elapsed = -1.0
        else:
            hold_elapsed = -1.0

        goal = sc.goal_state(wp)
        if sc.mode == "agile":
            refs = collocate_reference(x, goal, sc.ocp.horizon,
                                       sc.speed_limit, period)
        else:
            refs = ReferencePlan.hold(goal, sc.ocp.horizon)

        res = solver.step(x, refs)
        u_full = sc.ocp.embed_input(res.inputs[0])
        commanded = u_full[0:4].copy()
        eff = sc.fault_schedule.effectiveness_at(t)
        actual = flt.apply(eff, commanded, cap_at=cap_at)

        ref0 = refs.stage_states[0]
        if sc.mode == "agile":
            err = _cross_track(x[0:3], leg_origin, wp.position)
        else:
            err = float(np.linalg.norm(x[0:3] - ref0[0:3]))
        last = dict(commanded=commanded, actual=actual,
                    joint_accels=u_full[4:12].copy(), effectiveness=eff,
                    solver_cost=res.cost, solver_iters=res.iterations,
                    solve_time=res.solve_time)
        log.add(time=t, states=x.copy(), refs=ref0.copy(),
                tracking_error=err, **last)

        u_plant = u_full.copy()
        u_plant[0:4] = actual
        try:
            x = plant_advance(x, u_plant, rp_plant, sc.integrator.plant_step,
                              sc.integrator.plant_substeps, cp)
        except MorphonmpcError as exc:
            return log.build(failed=True,
                             reason=f"plant abort at t={t:.3f}: {exc}")
        if hold_elapsed >= 0.0:
            hold_elapsed += period

    # terminal row: final state, last tick's inputs repeated
    if last is None:
        last = dict(commanded=np.zeros(4), actual=np.zeros(4),
                    joint_accels=np.zeros(8),
                    effectiveness=sc.fault_schedule.effectiveness_at(0.0),
                    solver_cost=0.0, solver_iters=0, solve_time=0.0)
    wp = sc.waypoints[wp_idx]
    goal = sc.goal_state(wp)
    if sc.mode == "agile":
        err = _cross_track(x[0:3], leg_origin, wp.position)
    else:
        err = float(np.linalg.norm(x[0:3] - goal[0:3]))
    log.add(time=n_ticks * period, states=x.copy(), refs=goal.copy(),
            tracking_error=err, **last)
    return log.build()


@dataclass
class Metrics:
    """Summary numbers extracted from one SimLog."""

    rms_tracking_error: float
    peak_tracking_error: float
    final_position_error: float
    recovery_time: float
    yaw_rate_settling_time: float
    min_speed: float
    peak_speed: float
    peak_yaw_rate: float
    failed: bool

    def as_dict(self) -> dict:
        return {k: getattr(self, k) for k in self.__dataclass_fields__}


def compute_metrics(log: SimLog, scenario: Scenario | None = None) -> Metrics:
    """Tracking/recovery metrics from a log.

    recovery_time: time from the last fault event (t=0 without faults)
    until |roll| and |pitch| stay inside 10 deg for at least 1 s; nan if
    never. yaw_rate_settling_time: earliest time from the same anchor
    where yaw rate stays within a +-1 deg/s band over a 2 s window; nan
    if never.
    """
    log.require_rows()
    t = log.time
    roll, pitch = log.states[:, 3], log.states[:, 4]
    wz = log.states[:, 19]
    speed = np.linalg.norm(log.states[:, 14:17], axis=1)

    anchor = 0.0
    if scenario is not None:
        for rotor in scenario.fault_schedule.events:
            for ev_t, _ in rotor:
                anchor = max(anchor, ev_t)

    band = np.radians(10.0)
    in_band = (np.abs(roll) <= band) & (np.abs(pitch) <= band) & (t >= anchor)
    recovery = math.nan
    for i in np.nonzero(in_band)[0]:
        j = np.searchsorted(t, t[i] + 1.0)
        if j > len(t) - 1 and t[-1] - t[i] < 1.0:
            break
        j = min(j, len(t) - 1)
        if in_band[i:j + 1].all():
            recovery = t[i] - anchor
            break

    settle = math.nan
    half_band = math.radians(1.0)
    start = int(np.searchsorted(t, anchor))
    for i in range(start, len(t)):
        j = int(np.searchsorted(t, t[i] + 2.0))
        if j > len(t) - 1 and t[-1] - t[i] < 2.0:
            break
        j = min(j, len(t) - 1)
        w = wz[i:j + 1]
        if (w.max() - w.min()) <= 2.0 * half_band:
            settle = t[i] - anchor
            break

    err = log.tracking_error
    return Metrics(
        rms_tracking_error=float(np.sqrt(np.mean(err ** 2))),
        peak_tracking_error=float(np.max(err)),
        final_position_error=float(err[-1]),
        recovery_time=recovery,
        yaw_rate_settling_time=settle,
        min_speed=float(np.min(speed)),
        peak_speed=float(np.max(speed)),
        peak_yaw_rate=float(np.max(np.abs(wz))),
        failed=log.failed)


# ---- builtin scenarios ----

def _supinated(x: np.ndarray) -> np.ndarray:
    # frontal joints parked at zero; see Scenario.goal_state
    x[10:14] = 0.0
    return x


def _stage1_forward() -> Scenario:
    return Scenario(
        name="stage1-forward", mode="fault_tolerant", sagittal_only=True,
        initial_state=_supinated(dyn.hover_state((0.0, 0.0, 5.0))),
        waypoints=[Waypoint((14.0, 0.0, 5.0))], duration=18.0,
        fault_schedule=flt.FaultSchedule.single_rotor(4, [(3.875, 0.0)]))


def _stage1_track() -> Scenario:
    # tracking tour wants a stiff position loop; the sagittal default
    # trades that away for spin-settling damping
    ocp = OcpConfig.fault_tolerant(sagittal_only=True)
    q = ocp.q.copy()
    q[0:2] = 5.0
    ocp.q = q
    return Scenario(
        name="stage1-track", mode="fault_tolerant", sagittal_only=True,
        ocp=ocp,
        initial_state=_supinated(dyn.hover_state((0.0, 0.0, 5.0))),
        waypoints=[Waypoint((3.0, 0.0, 5.0), hold=1.0),
                   Waypoint((3.0, 0.0, 2.8), hold=0.25),
                   Waypoint((3.0, 0.0, 1.2), hold=0.25),
                   Waypoint((3.0, 0.0, 0.3))],
        duration=30.0, contact_enabled=True,
        fault_schedule=flt.FaultSchedule.single_rotor(
            4, [(7.0, 0.67), (14.0, 0.34), (21.0, 0.0)]))


def _stage2_hover() -> Scenario:
    return Scenario(
        name="stage2-hover", mode="fault_tolerant",
        waypoints=[Waypoint((0.0, 0.0, 5.0))], duration=15.0,
        fault_schedule=flt.FaultSchedule.single_rotor(
            4, [(1.0, 0.67), (3.0, 0.34), (5.0, 0.0)]))


def _stage2_track() -> Scenario:
    # the tour ends airborne: with the full failure landing on the third
    # transit there is no pre-failure window left to descend in, and the
    # post-failure equilibrium tilts too far to put wheels down first
    return Scenario(
        name="stage2-track", mode="fault_tolerant",
        initial_state=dyn.hover_state((0.0, 0.0, 5.0)),
        waypoints=[Waypoint((5.0, 0.0, 5.0), hold=1.0),
                   Waypoint((5.0, 5.0, 5.0), hold=1.0),
                   Waypoint((0.0, 5.0, 5.0))],
        duration=26.0,
        fault_schedule=flt.FaultSchedule.single_rotor(
            4, [(12.0, 0.67), (16.0, 0.34), (18.0, 0.0)]))


def _agile_turn(angle_deg: float) -> Scenario:
    a = math.radians(angle_deg)
    corner = np.array([70.0, 0.0, 5.0])
    end = corner + 55.0 * np.array([math.cos(a), math.sin(a), 0.0])
    # flying start: the collocated reference moves at the full speed limit
    # from tick one, and asking a hovering platform to chase it turns the
    # first half second into a pitch lunge against the attitude box
    x0 = dyn.hover_state((0.0, 0.0, 5.0))
    x0[14] = 14.5
    return Scenario(
        name=f"agile-turn-{int(angle_deg)}", mode="agile",
        initial_state=x0,
        waypoints=[Waypoint(tuple(corner)), Waypoint(tuple(end))],
        duration=13.0, capture_radius=1.5, speed_limit=14.5)


_BUILTINS = {
    "stage1-forward": _stage1_forward,
    "stage1-track": _stage1_track,
    "stage2-hover": _stage2_hover,
    "stage2-track": _stage2_track,
    "agile-turn-30": lambda: _agile_turn(30.0),
    "agile-turn-60": lambda: _agile_turn(60.0),
    "agile-turn-90": lambda: _agile_turn(90.0),
    "agile-turn-120": lambda: _agile_turn(120.0),
}


def builtin_names() -> list:
    return list(_BUILTINS)


def get_builtin(name: str) -> Scenario:
    if name not in _BUILTINS:
        raise ScenarioInvalid(
            f"unknown builtin {name!r}; available: {', '.join(_BUILTINS)}")
    return _BUILTINS[name]()
