"""Shooting NMPC over the reduced-order model.

One solver serves both control modes; they differ only in configuration:
the fault-tolerant mode runs tight attitude/altitude weights with 30 N
rotors (optionally sagittal-only, yaw released), the agile mode runs
tracking weights with 50 N rotors. The decision vector stacks the inputs
over the horizon; gradients are central finite differences through the RK4
rollout, minimized by a projected L-BFGS with Armijo backtracking.

Cost convention: stage j pairs the state reached after step j+1 with
reference j, plus a quadratic input term about input_reference. Soft
quadratic hinges enforce attitude/joint boxes, the per-side joint-sum
limit, and a steep barrier just inside the pitch singularity.
"""

import math
import time
from dataclasses import dataclass

import numpy as np

from . import integrator as integ
from ._core import layout
from ._core import rollout as _k_rollout
from ._core import rollout_grad as _k_rollout_grad
from .dynamics import RomDynamics
from .errors import DimensionMismatch, NonFiniteCost, ValidationError
from .params import RobotParams

_BIG = 1e30
_WRAP_2PI = 2.0 * math.pi

MODES = ("fault_tolerant", "agile")
YAW_POLICIES = ("penalized", "free")


def _wrap_angle(e: float) -> float:
    w = math.fmod(e, _WRAP_2PI)
    if w <= -math.pi:
        w += _WRAP_2PI
    elif w > math.pi:
        w -= _WRAP_2PI
    return w


@dataclass
class OcpConfig:
    """Weights, bounds and mode switches of the optimal control problem.

    For the 28-state model the decision vector per stage is 12 inputs, or
    8 when sagittal_only (frontal joint accelerations dropped and held 0).
    Generic instances (rom_layout=False) carry explicit input bounds and
    drop the model-specific penalty terms; they exist so the solver can be
    exercised against independent oracles.
    """

    horizon: int = 5
    mode: str = "fault_tolerant"
    yaw_policy: str = "penalized"
    sagittal_only: bool = False
    q: np.ndarray | None = None
    r: np.ndarray | None = None
    input_reference: np.ndarray | None = None
    thrust_bounds: tuple = (0.0, 30.0)
    joint_accel_bounds: tuple = (-50.0, 50.0)
    state_lower: np.ndarray | None = None
    state_upper: np.ndarray | None = None
    state_penalty: np.ndarray | None = None
    side_sum_limit: float = math.radians(110.0)
    side_sum_weight: float = 1e3
    singularity_weight: float = 1e6
    wrap_indices: tuple = (3, 4, 5)
    yaw_index: int = 5
    u_lower: np.ndarray | None = None
    u_upper: np.ndarray | None = None
    rom_layout: bool = True

    def __post_init__(self):
        if self.rom_layout:
            nx = layout.NX
            nd = 8 if self.sagittal_only else 12
            if self.q is None:
                self.q = np.zeros(nx)
            if self.r is None:
                self.r = np.full(nd, 1e-4)
            if self.state_lower is None:
                self.state_lower = np.full(nx, -np.inf)
            if self.state_upper is None:
                self.state_upper = np.full(nx, np.inf)
            if self.state_penalty is None:
                self.state_penalty = np.zeros(nx)
        for name in ("q", "r", "input_reference", "state_lower",
                     "state_upper", "state_penalty", "u_lower", "u_upper"):
            v = getattr(self, name)
            if v is not None:
                setattr(self, name, np.asarray(v, dtype=np.float64))
        if self.input_reference is None and self.r is not None:
            self.input_reference = np.zeros(len(self.r))
        self.wrap_indices = tuple(int(i) for i in self.wrap_indices)

    # ---- mode presets ----

    @classmethod
    def fault_tolerant(cls, params: RobotParams | None = None,
                       sagittal_only: bool = False,
                       yaw_policy: str | None = None) -> "OcpConfig":
        """Attitude/altitude-first tuning with 30 N rotors.

        Yaw is released: after a severe rotor fault the vehicle settles
        into a drag-saturated spin while the legs redirect thrust to keep
        the average lift vertical, so fighting the spin wastes authority.
        Altitude, climb rate, and roll/pitch dominate the cost; joint
        deviations are near-free so the posture can live wherever the
        recovery equilibrium needs it.

        The sagittal-only variant flies supinated (frontal joints parked
        at zero, rotors tucked inboard) and leans on heavier tilt-rate,
        yaw-rate, and joint-velocity damping: with half the joints frozen
        the recovery spin is kept steady by braking the leg pump rather
        than by repositioning rotors, and the controller's unawareness of
        the failed rotor makes undamped corrections ring.
        """
        p = params if params is not None else RobotParams()
        if yaw_policy is None:
            yaw_policy = "free"
        nd = 8 if sagittal_only else 12
        q = np.zeros(28)
        if sagittal_only:
            q[0:3] = (2.2, 2.2, 400.0)
            q[3:6] = (200.0, 200.0, 0.0)
            q[6:14] = 0.5
            q[14:17] = (2.2, 2.2, 70.0)
            q[17:20] = (30.0, 30.0, 0.15)
            q[20:28] = 0.3
        else:
            q[0:3] = (5.0, 5.0, 400.0)
            q[3:6] = (300.0, 300.0, 0.0)
            q[6:14] = 0.05
            q[14:17] = (2.2, 2.2, 70.0)
            q[17:20] = (10.0, 10.0, 0.02)
            q[20:28] = 0.005
        r = np.empty(nd)
        r[0:4] = 5e-4
        r[4:] = 1e-4 if sagittal_only else 1e-5
        uref = np.zeros(nd)
        uref[0:4] = p.hover_thrust
        cfg = cls(mode="fault_tolerant", yaw_policy=yaw_policy,
                  sagittal_only=sagittal_only, q=q, r=r,
                  input_reference=uref, thrust_bounds=(0.0, 30.0))
        cfg._default_state_box()
        return cfg

    @classmethod
    def agile(cls, params: RobotParams | None = None) -> "OcpConfig":
        """Trajectory-tracking tuning with 50 N rotors, yaw held."""
        p = params if params is not None else RobotParams()
        q = np.zeros(28)
        # the collocated reference jumps a full stride ahead of the vehicle
        # whenever the path bends, so attitude must outweigh velocity: with a
        # stiff velocity loop the solver buys the missing speed with near-90
        # degree pitch lunges and runs into the attitude box
        q[0:3] = (6.0, 6.0, 20.0)
        q[3:6] = (40.0, 40.0, 15.0)
        q[6:14] = 0.5
        q[14:17] = (1.0, 1.0, 2.0)
        q[17:20] = (1.0, 1.0, 1.0)
        q[20:28] = 0.02
        r = np.empty(12)
        r[0:4] = 2e-4
        r[4:] = 1e-4
        uref = np.zeros(12)
        uref[0:4] = p.hover_thrust
        cfg = cls(mode="agile", yaw_policy="penalized", sagittal_only=False,
                  q=q, r=r, input_reference=uref, thrust_bounds=(0.0, 50.0))
        cfg._default_state_box()
        return cfg

    @classmethod
    def generic(cls, q, r, u_lower, u_upper, horizon: int = 5,
                input_reference=None, wrap_indices=()) -> "OcpConfig":
        """Bare box-constrained tracking problem (no model-specific terms)."""
        q = np.asarray(q, dtype=np.float64)
        r = np.asarray(r, dtype=np.float64)
        return cls(horizon=horizon, q=q, r=r,
                   input_reference=input_reference,
                   state_lower=np.full(q.size, -np.inf),
                   state_upper=np.full(q.size, np.inf),
                   state_penalty=np.zeros(q.size),
                   u_lower=np.asarray(u_lower, dtype=np.float64),
                   u_upper=np.asarray(u_upper, dtype=np.float64),
                   wrap_indices=wrap_indices, yaw_index=-1,
                   rom_layout=False)

    def _default_state_box(self):
        # roll/pitch box at +-90 deg, joints in [0, 90] deg, soft weight 1e3
        self.state_lower[3:5] = -math.pi / 2
        self.state_upper[3:5] = math.pi / 2
        self.state_lower[6:14] = 0.0
        self.state_upper[6:14] = math.pi / 2
        self.state_penalty[3:5] = 1e3
        self.state_penalty[6:14] = 1e3

    # ---- derived views ----

    @property
    def n_states(self) -> int:
        return len(self.q)

    @property
    def n_decision(self) -> int:
        return len(self.r)

    @property
    def decision_map(self) -> np.ndarray:
        """Indices of decision channels inside the full 12-entry input."""
        return np.arange(self.n_decision, dtype=np.int32)

    @property
    def input_lower(self) -> np.ndarray:
        if self.u_lower is not None:
            return self.u_lower
        lo = np.empty(self.n_decision)
        lo[0:4] = self.thrust_bounds[0]
        lo[4:] = self.joint_accel_bounds[0]
        return lo

    @property
    def input_upper(self) -> np.ndarray:
        if self.u_upper is not None:
            return self.u_upper
        hi = np.empty(self.n_decision)
        hi[0:4] = self.thrust_bounds[1]
        hi[4:] = self.joint_accel_bounds[1]
        return hi

    def embed_input(self, u_dec) -> np.ndarray:
        """Decision-channel input -> full 12-entry model input."""
        if not self.rom_layout:
            return np.asarray(u_dec, dtype=np.float64)
        u = np.zeros(layout.NU)
        u[self.decision_map] = u_dec
        return u

    def validate(self):
        if self.mode not in MODES:
            raise ValidationError(f"mode must be one of {MODES}")
        if self.yaw_policy not in YAW_POLICIES:
            raise ValidationError(f"yaw_policy must be one of {YAW_POLICIES}")
        if self.horizon < 1:
            raise ValidationError("horizon must be >= 1")
        if self.sagittal_only and self.yaw_policy != "free":
            raise ValidationError("sagittal_only requires yaw_policy='free'")
        if self.sagittal_only and self.mode != "fault_tolerant":
            raise ValidationError("sagittal_only applies to fault_tolerant mode")
        nx, nd = self.n_states, self.n_decision
        if self.rom_layout:
            if nx != layout.NX:
                raise ValidationError(f"q must have {layout.NX} entries")
            if nd != (8 if self.sagittal_only else 12):
                raise ValidationError("r length inconsistent with mode")
        if np.any(self.q < 0):
            raise ValidationError("q entries must be nonnegative")
        if np.any(self.r <= 0):
            raise ValidationError("r entries must be positive")
        if self.input_reference.shape != (nd,):
            raise ValidationError("input_reference length must match r")
        lo, hi = self.thrust_bounds
        if not (0 <= lo < hi):
            raise ValidationError("thrust bounds need 0 <= lower < upper")
        alo, ahi = self.joint_accel_bounds
        if not alo < ahi:
            raise ValidationError("joint accel bounds need lower < upper")
        if np.any(self.input_lower >= self.input_upper):
            raise ValidationError("input bounds need lower < upper")
        for arr, name in ((self.state_lower, "state_lower"),
                          (self.state_upper, "state_upper"),
                          (self.state_penalty, "state_penalty")):
            if arr.shape != (nx,):
                raise ValidationError(f"{name} must have {nx} entries")
        if np.any(self.state_penalty < 0):
            raise ValidationError("state_penalty entries must be nonnegative")
        if self.side_sum_limit <= 0 or self.side_sum_weight < 0:
            raise ValidationError("side-sum limit/weight out of range")
        if any(not 0 <= i < nx for i in self.wrap_indices):
            raise ValidationError("wrap_indices out of range")
        return self

    def packed(self) -> layout.PackedOcp:
        """Kernel view; only valid for rom_layout configs."""
        if not self.rom_layout:
            raise ValidationError("packed() requires the 28-state layout")
        nx, nd = self.n_states, self.n_decision
        wrap = np.zeros(nx, dtype=np.uint8)
        for i in self.wrap_indices:
            wrap[i] = 1
        slo = np.where(np.isfinite(self.state_lower), self.state_lower, -_BIG)
        shi = np.where(np.isfinite(self.state_upper), self.state_upper, _BIG)
        return layout.PackedOcp(
            nx=nx, nd=nd, nh=self.horizon, q=self.q, r=self.r,
            uref=self.input_reference, wrap=wrap, slo=slo, shi=shi,
            sw=self.state_penalty, zlo=self.input_lower,
            zhi=self.input_upper, dmap=self.decision_map,
            ufix=np.zeros(layout.NU), yaw_free=self.yaw_policy == "free",
            yaw_index=self.yaw_index, rom=1, ss_limit=self.side_sum_limit,
            ss_weight=self.side_sum_weight,
            sing_weight=self.singularity_weight)


@dataclass
class ReferencePlan:
    """Per-stage reference states plus the underlying goal."""

    stage_states: np.ndarray
    goal_state: np.ndarray
    waypoints: list | None = None

    def __post_init__(self):
        self.stage_states = np.atleast_2d(
            np.asarray(self.stage_states, dtype=np.float64))
        self.goal_state = np.asarray(self.goal_state, dtype=np.float64)

    @classmethod
    def hold(cls, goal, horizon: int) -> "ReferencePlan":
        goal = np.asarray(goal, dtype=np.float64)
        return cls(stage_states=np.tile(goal, (horizon, 1)), goal_state=goal)


def stage_cost(x, x_ref, u, cfg: OcpConfig) -> float:
    """Quadratic tracking cost of one (post-step state, reference, input).

    Attitude-entry errors wrap to (-pi, pi]; free yaw zeroes the yaw error;
    soft hinges add the state box, per-side joint-sum and near-singularity
    penalties.
    """
    x = np.asarray(x, dtype=np.float64)
    x_ref = np.asarray(x_ref, dtype=np.float64)
    u = np.asarray(u, dtype=np.float64)
    nx, nd = cfg.n_states, cfg.n_decision
    if x.shape != (nx,):
        raise DimensionMismatch(f"state must have shape ({nx},), got {x.shape}")
    if x_ref.shape != (nx,):
        raise DimensionMismatch(f"reference must have shape ({nx},), got {x_ref.shape}")
    if u.shape != (nd,):
        raise DimensionMismatch(f"input must have shape ({nd},), got {u.shape}")

    e = x - x_ref
    for i in cfg.wrap_indices:
        e[i] = _wrap_angle(e[i])
    if cfg.yaw_policy == "free" and 0 <= cfg.yaw_index < nx:
        e[cfg.yaw_index] = 0.0
    c = float(np.dot(cfg.q, e * e))
    eu = u - cfg.input_reference
    c += float(np.dot(cfg.r, eu * eu))

    sw = cfg.state_penalty
    active = sw > 0
    if np.any(active):
        dlo = np.maximum(cfg.state_lower[active] - x[active], 0.0)
        dhi = np.maximum(x[active] - cfg.state_upper[active], 0.0)
        c += float(np.dot(sw[active], dlo * dlo + dhi * dhi))

    if cfg.rom_layout:
        left = x[6] + x[9] - cfg.side_sum_limit
        if left > 0.0:
            c += cfg.side_sum_weight * left * left
        right = x[7] + x[8] - cfg.side_sum_limit
        if right > 0.0:
            c += cfg.side_sum_weight * right * right
        over = abs(x[4]) - (math.pi / 2 - layout.SING_EPS)
        if over > 0.0:
            c += cfg.singularity_weight * over * over
    return c


def _stage_refs(refs, cfg: OcpConfig) -> np.ndarray:
    stages = refs.stage_states if isinstance(refs, ReferencePlan) \
        else np.atleast_2d(np.asarray(refs, dtype=np.float64))
    if stages.shape != (cfg.horizon, cfg.n_states):
        raise DimensionMismatch(
            f"references must have shape ({cfg.horizon}, {cfg.n_states}), "
            f"got {stages.shape}")
    return np.ascontiguousarray(stages)


def _use_kernels(dynamics, cfg: OcpConfig) -> bool:
    return isinstance(dynamics, RomDynamics) and cfg.rom_layout


def rollout_cost(x0, u_seq, refs, cfg: OcpConfig, dynamics,
                 integ_cfg: integ.IntegratorConfig, return_traj: bool = False):
    """Total cost of an input sequence from x0 (optionally with trajectory).

    Controller semantics throughout: the prediction model clamps the pitch
    singularity instead of raising, and the cost penalizes that region.
    """
    x0 = np.asarray(x0, dtype=np.float64)
    u_seq = np.asarray(u_seq, dtype=np.float64)
    if u_seq.shape != (cfg.horizon, cfg.n_decision):
        raise DimensionMismatch(
            f"u_seq must have shape ({cfg.horizon}, {cfg.n_decision}), "
            f"got {u_seq.shape}")
    if x0.shape != (cfg.n_states,):
        raise DimensionMismatch(
            f"x0 must have shape ({cfg.n_states},), got {x0.shape}")
    stages = _stage_refs(refs, cfg)

    if _use_kernels(dynamics, cfg):
        out = _k_rollout(x0, u_seq.ravel(), stages, dynamics.packed,
                         cfg.packed(), integ_cfg.prediction_substeps,
                         integ_cfg.control_period, return_traj)
        return out

    f = getattr(dynamics, "derivative_clamped", dynamics)
    x = x0
    cost = 0.0
    traj = np.empty((cfg.horizon + 1, cfg.n_states)) if return_traj else None
    if return_traj:
        traj[0] = x0
    for j in range(cfg.horizon):
        u_full = cfg.embed_input(u_seq[j])
        x = integ.discretize(f, x, u_full, integ_cfg)
        cost += stage_cost(x, stages[j], u_seq[j], cfg)
        if return_traj:
            traj[j + 1] = x
    if return_traj:
        return cost, traj
    return cost


def fd_gradient(x0, u_seq, refs, cfg: OcpConfig, dynamics,
                integ_cfg: integ.IntegratorConfig):
    """Cost and central-difference gradient w.r.t. the stacked inputs.

    Per-entry step 1e-6 * max(1, |u_i|). Returns (cost, grad) with grad
    shaped like u_seq.
    """
    u_seq = np.asarray(u_seq, dtype=np.float64)
    if _use_kernels(dynamics, cfg):
        x0 = np.asarray(x0, dtype=np.float64)
        stages = _stage_refs(refs, cfg)
        cost, grad = _k_rollout_grad(x0, u_seq.ravel(), stages,
                                     dynamics.packed, cfg.packed(),
                                     integ_cfg.prediction_substeps,
                                     integ_cfg.control_period)
        return cost, grad.reshape(u_seq.shape)

    base = rollout_cost(x0, u_seq, refs, cfg, dynamics, integ_cfg)
    flat = u_seq.ravel().copy()
    grad = np.empty(flat.size)
    for i in range(flat.size):
        h = 1e-6 * max(1.0, abs(flat[i]))
        orig = flat[i]
        flat[i] = orig + h
        cp = rollout_cost(x0, flat.reshape(u_seq.shape), refs, cfg,
                          dynamics, integ_cfg)
        flat[i] = orig - h
        cm = rollout_cost(x0, flat.reshape(u_seq.shape), refs, cfg,
                          dynamics, integ_cfg)
        flat[i] = orig
        grad[i] = (cp - cm) / (2.0 * h)
    return base, grad.reshape(u_seq.shape)


def collocate_reference(x_now, goal, horizon: int, speed_limit: float,
                        control_period: float = 0.1) -> ReferencePlan:
    """Stage references marching from the current position toward a goal.

    Positions advance along the straight line by at most
    speed_limit * control_period per stage, stopping at the goal;
    velocities are the implied finite-difference rates; attitude
    interpolates with shortest-way angle differences by arc progress.
    Joint entries come from the goal directly.
    """
    x_now = np.asarray(x_now, dtype=np.float64)
    goal = np.asarray(goal, dtype=np.float64)
    if x_now.shape != (layout.NX,) or goal.shape != (layout.NX,):
        raise DimensionMismatch("states must have 28 entries")
    if speed_limit < 0:
        raise ValidationError("speed_limit must be nonnegative")
    if horizon < 1:
        raise ValidationError("horizon must be >= 1")

    stages = np.tile(goal, (horizon, 1))
    p0 = x_now[0:3]
    delta = goal[0:3] - p0
    dist = float(np.linalg.norm(delta))
    if dist < 1e-12:
        return ReferencePlan(stage_states=stages, goal_state=goal)

    direction = delta / dist
    att_now = x_now[3:6]
    datt = np.array([_wrap_angle(goal[3 + i] - att_now[i]) for i in range(3)])
    step = speed_limit * control_period
    prev_arc = 0.0
    for j in range(horizon):
        arc = min((j + 1) * step, dist)
        stages[j, 0:3] = p0 + arc * direction
        stages[j, 14:17] = ((arc - prev_arc) / control_period) * direction
        frac = arc / dist
        stages[j, 3:6] = att_now + frac * datt
        prev_arc = arc
    return ReferencePlan(stage_states=stages, goal_state=goal)


def warm_start_shift(u_seq) -> np.ndarray:
    """Receding-horizon shift: drop stage 0, repeat the last stage."""
    u_seq = np.asarray(u_seq, dtype=np.float64)
    if u_seq.ndim != 2 or u_seq.shape[0] < 1:
        raise DimensionMismatch("u_seq must be (horizon, n_inputs)")
    shifted = np.empty_like(u_seq)
    shifted[:-1] = u_seq[1:]
    shifted[-1] = u_seq[-1]
    return shifted


@dataclass
class SolveResult:
    inputs: np.ndarray
    trajectory: np.ndarray
    cost: float
    iterations: int
    converged: bool
    solve_time: float
    grad_norm: float


def _two_loop(g, s_mem, y_mem):
    """L-BFGS two-loop recursion; H0 scaled by the latest curvature pair."""
    q = g.copy()
    m = len(s_mem)
    rhos = [1.0 / np.dot(y_mem[i], s_mem[i]) for i in range(m)]
    alphas = np.empty(m)
    for i in range(m - 1, -1, -1):
        alphas[i] = rhos[i] * np.dot(s_mem[i], q)
        q -= alphas[i] * y_mem[i]
    q *= np.dot(s_mem[-1], y_mem[-1]) / np.dot(y_mem[-1], y_mem[-1])
    for i in range(m):
        b = rhos[i] * np.dot(y_mem[i], q)
        q += (alphas[i] - b) * s_mem[i]
    return q


def solve(x0, refs, cfg: OcpConfig, dynamics,
          integ_cfg: integ.IntegratorConfig, warm_start=None,
          max_iterations: int = 200, grad_tol: float = 1e-4,
          cost_tol: float = 1e-8, lbfgs_memory: int = 10) -> SolveResult:
    """Minimize the rollout cost over box-bounded stacked inputs.

    The warm start is projected into the box before anything else, and the
    returned cost never exceeds the projected warm start's cost. Raises
    NonFiniteCost when the initial cost or gradient is not finite.
    """
    t0 = time.perf_counter()
    nh, nd = cfg.horizon, cfg.n_decision
    zlo = np.tile(cfg.input_lower, nh)
    zhi = np.tile(cfg.input_upper, nh)
    if warm_start is None:
        z = np.tile(cfg.input_reference, nh)
    else:
        z = np.asarray(warm_start, dtype=np.float64).reshape(nh * nd).copy()
    np.clip(z, zlo, zhi, out=z)

    def cost_at(zz):
        return rollout_cost(x0, zz.reshape(nh, nd), refs, cfg, dynamics,
                            integ_cfg)

    def grad_at(zz):
        c, g = fd_gradient(x0, zz.reshape(nh, nd), refs, cfg, dynamics,
                           integ_cfg)
        return c, g.ravel()

    f, g = grad_at(z)
    if not math.isfinite(f):
        raise NonFiniteCost(f"initial rollout cost is {f}")
    if not np.all(np.isfinite(g)):
        raise NonFiniteCost("initial gradient is not finite")

    best_f, best_z = f, z.copy()
    s_mem: list = []
    y_mem: list = []
    iterations = 0
    converged = False
    c1 = 1e-4

    for _ in range(max_iterations):
        pg = z - np.clip(z - g, zlo, zhi)
        gnorm = float(np.linalg.norm(pg))
        if gnorm < grad_tol:
            converged = True
            break
        iterations += 1

        d = -_two_loop(g, s_mem, y_mem) if s_mem else -g
        if np.dot(g, d) > -1e-12 * np.linalg.norm(g) * np.linalg.norm(d):
            d = -g

        accepted = False
        alpha = 1.0
        for _ls in range(30):
            z_new = np.clip(z + alpha * d, zlo, zhi)
            step = z_new - z
            sn = float(np.linalg.norm(step))
            if sn == 0.0:
                break
            f_new = cost_at(z_new)
            if math.isfinite(f_new) and f_new <= f + c1 * np.dot(g, step):
                accepted = True
                break
            alpha *= 0.5

        if not accepted:
            if s_mem:
                # stale curvature; drop memory and retry with steepest descent
                s_mem.clear()
                y_mem.clear()
                continue
            break

        f_prev = f
        _, g_new = grad_at(z_new)
        if not np.all(np.isfinite(g_new)):
            z, f = z_new, f_new
            if f < best_f:
                best_f, best_z = f, z.copy()
            break
        s = z_new - z
        y = g_new - g
        sy = float(np.dot(s, y))
        if sy > 1e-12 * np.linalg.norm(s) * np.linalg.norm(y):
            s_mem.append(s)
            y_mem.append(y)
            if len(s_mem) > lbfgs_memory:
                s_mem.pop(0)
                y_mem.pop(0)
        z, f, g = z_new, f_new, g_new
        if f < best_f:
            best_f, best_z = f, z.copy()
        if f_prev - f <= cost_tol * max(1.0, abs(f_prev)):
            converged = True
            break

    z = best_z
    cost, traj = rollout_cost(x0, z.reshape(nh, nd), refs, cfg, dynamics,
                              integ_cfg, return_traj=True)
    pg = z - np.clip(z - g, zlo, zhi)
    return SolveResult(inputs=z.reshape(nh, nd).copy(), trajectory=traj,
                       cost=float(cost), iterations=iterations,
                       converged=converged,
                       solve_time=time.perf_counter() - t0,
                       grad_norm=float(np.linalg.norm(pg)))


class NmpcSolver:
    """Receding-horizon wrapper owning the warm-start state.

    step() solves from the given state, then stores the solution; the next
    call warm-starts from the shifted previous solution. The solver sees
    states and references only; fault effectiveness and plant parameters
    never enter through this interface.
    """

    def __init__(self, cfg: OcpConfig, dynamics, integ_cfg: integ.IntegratorConfig,
                 **solver_options):
        cfg.validate()
        integ_cfg.validate()
        self.cfg = cfg
        self.dynamics = dynamics
        self.integ_cfg = integ_cfg
        self.options = solver_options
        self._warm: np.ndarray | None = None

    def reset(self):
        self._warm = None

    def step(self, x0, refs) -> SolveResult:
        warm = None if self._warm is None else warm_start_shift(self._warm)
        result = solve(x0, refs, self.cfg, self.dynamics, self.integ_cfg,
                       warm_start=warm, **self.options)
        self._warm = result.inputs
        return result
