"""Scenario config parsing and serialization (YAML).

Angles cross this boundary in degrees and live as radians everywhere
inside the package. Unknown keys are rejected rather than ignored, so a
typo in a config fails loudly. An empty document parses to the default
scenario: fault-tolerant hover, no faults.
"""

import io
import math

import numpy as np
import yaml

from .contact import ContactParams
from .errors import ParseError, ValidationError
from .faults import FaultSchedule
from .harness import Scenario, Waypoint
from .integrator import IntegratorConfig
from .nmpc import OcpConfig
from .params import RobotParams

_SECTIONS = ("scenario", "robot", "integrator", "ocp", "faults", "contact")

_SCENARIO_KEYS = {"name", "mode", "sagittal_only", "duration", "speed_limit",
                  "capture_radius", "seed", "contact_enabled", "waypoints",
                  "initial_state", "perturbation"}
_WAYPOINT_KEYS = {"position", "yaw_deg", "hold"}
_ROBOT_KEYS = {"body_mass", "leg_mass", "inertia", "inertia_diag",
               "hip_offsets", "leg_length", "rotor_moment_gain",
               "rotor_spin_signs", "drag_gamma", "gravity",
               "nominal_sagittal_deg", "nominal_frontal_deg"}
_INTEGRATOR_KEYS = {"plant_step", "prediction_substeps", "control_period"}
_OCP_KEYS = {"horizon", "yaw_policy", "q", "r", "input_reference",
             "thrust_limits", "joint_accel_limit", "roll_pitch_limit_deg",
             "joint_limits_deg", "state_penalty_weight", "side_sum_limit_deg",
             "side_sum_weight", "singularity_weight"}
_FAULTS_KEYS = {"cap_mode", "rotors"}
_ROTOR_KEYS = {"rotor", "events"}
_EVENT_KEYS = {"time", "effectiveness"}
_CONTACT_KEYS = {"stiffness", "damping", "transition_width", "mu_static",
                 "mu_dynamic", "critical_velocity", "contact_points"}


def _check_keys(mapping: dict, allowed: set, where: str):
    unknown = set(mapping) - allowed
    if unknown:
        raise ValidationError(
            f"unknown key(s) in {where}: {', '.join(sorted(unknown))}")


def _require_mapping(value, where: str) -> dict:
    if value is None:
        return {}
    if not isinstance(value, dict):
        raise ParseError(f"{where} must be a mapping, got {type(value).__name__}")
    return value


def _robot_from(doc: dict) -> RobotParams:
    _check_keys(doc, _ROBOT_KEYS, "robot")
    kw = {}
    for key in ("body_mass", "leg_mass", "leg_length", "rotor_moment_gain",
                "drag_gamma", "gravity"):
        if key in doc:
            kw[key] = float(doc[key])
    if "inertia" in doc and "inertia_diag" in doc:
        raise ValidationError("give either inertia or inertia_diag, not both")
    if "inertia_diag" in doc:
        kw["inertia"] = np.diag([float(v) for v in doc["inertia_diag"]])
    if "inertia" in doc:
        kw["inertia"] = np.asarray(doc["inertia"], dtype=float)
    if "hip_offsets" in doc:
        kw["hip_offsets"] = np.asarray(doc["hip_offsets"], dtype=float)
    if "rotor_spin_signs" in doc:
        kw["rotor_spin_signs"] = tuple(float(v) for v in doc["rotor_spin_signs"])
    if "nominal_sagittal_deg" in doc:
        kw["q_sag_nominal"] = math.radians(float(doc["nominal_sagittal_deg"]))
    if "nominal_frontal_deg" in doc:
        kw["q_front_nominal"] = math.radians(float(doc["nominal_frontal_deg"]))
    return RobotParams(**kw)


def _integrator_from(doc: dict) -> IntegratorConfig:
    _check_keys(doc, _INTEGRATOR_KEYS, "integrator")
    kw = {k: (int(doc[k]) if k == "prediction_substeps" else float(doc[k]))
          for k in doc}
    return IntegratorConfig(**kw)


def _ocp_from(doc: dict, mode: str, sagittal_only: bool,
              robot: RobotParams) -> OcpConfig:
    _check_keys(doc, _OCP_KEYS, "ocp")
    if mode == "agile":
        cfg = OcpConfig.agile(robot)
    else:
        cfg = OcpConfig.fault_tolerant(robot, sagittal_only=sagittal_only)
    if "horizon" in doc:
        cfg.horizon = int(doc["horizon"])
    if "yaw_policy" in doc:
        cfg.yaw_policy = str(doc["yaw_policy"])
    if "q" in doc:
        cfg.q = np.asarray(doc["q"], dtype=float)
    if "r" in doc:
        cfg.r = np.asarray(doc["r"], dtype=float)
    if "input_reference" in doc:
        cfg.input_reference = np.asarray(doc["input_reference"], dtype=float)
    if "thrust_limits" in doc:
        lo, hi = doc["thrust_limits"]
        cfg.thrust_bounds = (float(lo), float(hi))
    if "joint_accel_limit" in doc:
        a = float(doc["joint_accel_limit"])
        cfg.joint_accel_bounds = (-a, a)
    if "roll_pitch_limit_deg" in doc:
        lim = math.radians(float(doc["roll_pitch_limit_deg"]))
        cfg.state_lower[3:5] = -lim
        cfg.state_upper[3:5] = lim
    if "joint_limits_deg" in doc:
        lo, hi = doc["joint_limits_deg"]
        cfg.state_lower[6:14] = math.radians(float(lo))
        cfg.state_upper[6:14] = math.radians(float(hi))
    if "state_penalty_weight" in doc:
        w = float(doc["state_penalty_weight"])
        cfg.state_penalty[3:5] = w
        cfg.state_penalty[6:14] = w
    if "side_sum_limit_deg" in doc:
        cfg.side_sum_limit = math.radians(float(doc["side_sum_limit_deg"]))
    if "side_sum_weight" in doc:
        cfg.side_sum_weight = float(doc["side_sum_weight"])
    if "singularity_weight" in doc:
        cfg.singularity_weight = float(doc["singularity_weight"])
    return cfg


def _faults_from(doc: dict) -> FaultSchedule:
    _check_keys(doc, _FAULTS_KEYS, "faults")
    events = [[], [], [], []]
    for entry in doc.get("rotors", []) or []:
        entry = _require_mapping(entry, "faults.rotors entry")
        _check_keys(entry, _ROTOR_KEYS, "faults.rotors entry")
        if "rotor" not in entry:
            raise ValidationError("faults.rotors entry needs a rotor index")
        rotor = int(entry["rotor"])
        if not 1 <= rotor <= 4:
            raise ValidationError(f"rotor must be in 1..4, got {rotor}")
        for ev in entry.get("events", []) or []:
            ev = _require_mapping(ev, "fault event")
            _check_keys(ev, _EVENT_KEYS, "fault event")
            if "time" not in ev or "effectiveness" not in ev:
                raise ValidationError("fault event needs time and effectiveness")
            events[rotor - 1].append((float(ev["time"]),
                                      float(ev["effectiveness"])))
    return FaultSchedule(
        events=tuple(tuple(sorted(rotor)) for rotor in events),
        cap_mode=bool(doc.get("cap_mode", False)))


def _contact_from(doc: dict) -> ContactParams:
    _check_keys(doc, _CONTACT_KEYS, "contact")
    kw = {k: float(doc[k]) for k in doc if k != "contact_points"}
    if "contact_points" in doc and doc["contact_points"] is not None:
        kw["contact_points"] = np.asarray(doc["contact_points"], dtype=float)
    return ContactParams(**kw)


def parse_scenario(text: str) -> Scenario:
    """Build a validated Scenario from YAML text (empty -> defaults)."""
    try:
        doc = yaml.safe_load(text)
    except yaml.YAMLError as exc:
        raise ParseError(f"invalid YAML: {exc}") from exc
    doc = _require_mapping(doc, "config document")
    _check_keys(doc, set(_SECTIONS), "config document")

    sc_doc = _require_mapping(doc.get("scenario"), "scenario")
    _check_keys(sc_doc, _SCENARIO_KEYS, "scenario")
    robot = _robot_from(_require_mapping(doc.get("robot"), "robot"))
    integ = _integrator_from(_require_mapping(doc.get("integrator"), "integrator"))

    mode = str(sc_doc.get("mode", "fault_tolerant"))
    sagittal_only = bool(sc_doc.get("sagittal_only", False))
    ocp = _ocp_from(_require_mapping(doc.get("ocp"), "ocp"), mode,
                    sagittal_only, robot)
    schedule = _faults_from(_require_mapping(doc.get("faults"), "faults"))
    contact = _contact_from(_require_mapping(doc.get("contact"), "contact"))

    waypoints = []
    for wp in sc_doc.get("waypoints", []) or []:
        wp = _require_mapping(wp, "waypoint")
        _check_keys(wp, _WAYPOINT_KEYS, "waypoint")
        if "position" not in wp:
            raise ValidationError("waypoint needs a position")
        waypoints.append(Waypoint(
            position=tuple(float(v) for v in wp["position"]),
            yaw=math.radians(float(wp.get("yaw_deg", 0.0))),
            hold=float(wp.get("hold", 0.0))))

    kw = dict(
        name=str(sc_doc.get("name", "custom")),
        mode=mode, sagittal_only=sagittal_only,
        duration=float(sc_doc.get("duration", 5.0)),
        speed_limit=float(sc_doc.get("speed_limit", 14.5)),
        capture_radius=float(sc_doc.get("capture_radius", 0.3)),
        seed=int(sc_doc.get("seed", 0)),
        contact_enabled=bool(sc_doc.get("contact_enabled", False)),
        robot=robot, integrator=integ, ocp=ocp,
        fault_schedule=schedule, contact=contact)
    if waypoints:
        kw["waypoints"] = waypoints
    if "perturbation" in sc_doc:
        pert = _require_mapping(sc_doc.get("perturbation"), "perturbation")
        kw["perturbation"] = {str(k): float(v) for k, v in pert.items()}
    if sc_doc.get("initial_state") is not None:
        kw["initial_state"] = np.asarray(sc_doc["initial_state"], dtype=float)

    return Scenario(**kw).validate()


def serialize_scenario(scenario: Scenario) -> str:
    """YAML text reconstructing the scenario via parse_scenario.

    Emits every field explicitly (including mode-preset weights), so the
    output is self-contained rather than minimal.
    """
    sc = scenario
    doc = {
        "scenario": {
            "name": sc.name,
            "mode": sc.mode,
            "sagittal_only": bool(sc.sagittal_only),
            "duration": float(sc.duration),
            "speed_limit": float(sc.speed_limit),
            "capture_radius": float(sc.capture_radius),
            "seed": int(sc.seed),
            "contact_enabled": bool(sc.contact_enabled),
            "waypoints": [
                {"position": [float(v) for v in wp.position],
                 "yaw_deg": math.degrees(wp.yaw),
                 "hold": float(wp.hold)} for wp in sc.waypoints],
            "perturbation": {k: float(v) for k, v in sorted(sc.perturbation.items())},
            "initial_state": [float(v) for v in sc.initial_state],
        },
        "robot": {
            "body_mass": float(sc.robot.body_mass),
            "leg_mass": float(sc.robot.leg_mass),
            "inertia": [[float(v) for v in row] for row in sc.robot.inertia],
            "hip_offsets": [[float(v) for v in row] for row in sc.robot.hip_offsets],
            "leg_length": float(sc.robot.leg_length),
            "rotor_moment_gain": float(sc.robot.rotor_moment_gain),
            "rotor_spin_signs": [float(v) for v in sc.robot.rotor_spin_signs],
            "drag_gamma": float(sc.robot.drag_gamma),
            "gravity": float(sc.robot.gravity),
            "nominal_sagittal_deg": math.degrees(sc.robot.q_sag_nominal),
            "nominal_frontal_deg": math.degrees(sc.robot.q_front_nominal),
        },
        "integrator": {
            "plant_step": float(sc.integrator.plant_step),
            "prediction_substeps": int(sc.integrator.prediction_substeps),
            "control_period": float(sc.integrator.control_period),
        },
        "ocp": {
            "horizon": int(sc.ocp.horizon),
            "yaw_policy": sc.ocp.yaw_policy,
            "q": [float(v) for v in sc.ocp.q],
            "r": [float(v) for v in sc.ocp.r],
            "input_reference": [float(v) for v in sc.ocp.input_reference],
            "thrust_limits": [float(sc.ocp.thrust_bounds[0]),
                              float(sc.ocp.thrust_bounds[1])],
            "joint_accel_limit": float(sc.ocp.joint_accel_bounds[1]),
            "roll_pitch_limit_deg": math.degrees(float(sc.ocp.state_upper[3])),
            "joint_limits_deg": [math.degrees(float(sc.ocp.state_lower[6])),
                                 math.degrees(float(sc.ocp.state_upper[6]))],
            "state_penalty_weight": float(sc.ocp.state_penalty[3]),
            "side_sum_limit_deg": math.degrees(sc.ocp.side_sum_limit),
            "side_sum_weight": float(sc.ocp.side_sum_weight),
            "singularity_weight": float(sc.ocp.singularity_weight),
        },
        "faults": {
            "cap_mode": bool(sc.fault_schedule.cap_mode),
            "rotors": [
                {"rotor": i + 1,
                 "events": [{"time": float(t), "effectiveness": float(e)}
                            for t, e in rotor]}
                for i, rotor in enumerate(sc.fault_schedule.events) if rotor],
        },
        "contact": {
            "stiffness": float(sc.contact.stiffness),
            "damping": float(sc.contact.damping),
            "transition_width": float(sc.contact.transition_width),
            "mu_static": float(sc.contact.mu_static),
            "mu_dynamic": float(sc.contact.mu_dynamic),
            "critical_velocity": float(sc.contact.critical_velocity),
        },
    }
    if sc.contact.contact_points is not None:
        doc["contact"]["contact_points"] = [
            [float(v) for v in row] for row in sc.contact.contact_points]
    out = io.StringIO()
    yaml.safe_dump(doc, out, sort_keys=False, default_flow_style=None)
    return out.getvalue()
