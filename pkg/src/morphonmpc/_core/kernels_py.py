"""Numpy fallback for the rollout kernels.

Mirrors kernels_c semantics exactly (same formulas, same finite-difference
rule). Single trajectories run lane-by-lane; the gradient batches all
perturbed lanes through vectorized RK4 so the fallback stays usable, if an
order of magnitude slower than the extension.
"""

import math

import numpy as np

from ..errors import NonFiniteCost, SingularAttitude
from . import layout as L

_LIM = math.pi / 2 - L.SING_EPS
_TWO_PI = 2.0 * math.pi


class _Robot:
    __slots__ = ("mass", "grav", "km", "gamma", "inertia", "iinv", "hip",
                 "length", "spin", "fsign", "ssign", "qsnom", "qfnom")

    def __init__(self, rp):
        self.mass = rp[L.RP_MASS]
        self.grav = rp[L.RP_GRAV]
        self.km = rp[L.RP_KM]
        self.gamma = rp[L.RP_GAMMA]
        self.inertia = rp[L.RP_I:L.RP_I + 9].reshape(3, 3)
        self.iinv = rp[L.RP_IINV:L.RP_IINV + 9].reshape(3, 3)
        self.hip = rp[L.RP_HIP:L.RP_HIP + 12].reshape(4, 3)
        self.length = rp[L.RP_LEN]
        self.spin = rp[L.RP_SPIN:L.RP_SPIN + 4]
        self.fsign = rp[L.RP_FSIGN:L.RP_FSIGN + 4]
        self.ssign = rp[L.RP_SSIGN:L.RP_SSIGN + 4]
        self.qsnom = rp[L.RP_QSNOM]
        self.qfnom = rp[L.RP_QFNOM]


def _deriv_batch(X, U, r: _Robot, out):
    """Clamped-pitch state derivative for a batch of lanes (controller mode)."""
    phi = X[:, 3]
    theta_r = X[:, 4]
    psi = X[:, 5]
    theta_c = np.clip(theta_r, -_LIM, _LIM)
    cf, sf = np.cos(phi), np.sin(phi)
    ctr, str_ = np.cos(theta_r), np.sin(theta_r)
    ctc = np.cos(theta_c)
    ttc = np.sin(theta_c) / ctc
    cp, sp = np.cos(psi), np.sin(psi)
    om = X[:, 17:20]

    out[:, 0:3] = X[:, 14:17]
    out[:, 3] = om[:, 0] + (sf * om[:, 1] + cf * om[:, 2]) * ttc
    out[:, 4] = cf * om[:, 1] - sf * om[:, 2]
    out[:, 5] = (sf * om[:, 1] + cf * om[:, 2]) / ctc
    out[:, 6:14] = X[:, 20:28]

    ds = r.ssign[None, :] * (X[:, 6:10] - r.qsnom)
    df = r.fsign[None, :] * (X[:, 10:14] - r.qfnom)
    ss, cs = np.sin(ds), np.cos(ds)
    sfr, cfr = np.sin(df), np.cos(df)
    ax = ss
    ay = -sfr * cs
    az = cfr * cs
    T = U[:, 0:4]
    fx = (T * ax).sum(axis=1)
    fy = (T * ay).sum(axis=1)
    fz = (T * az).sum(axis=1)
    px = r.hip[None, :, 0] - r.length * ax
    py = r.hip[None, :, 1] - r.length * ay
    pz = r.hip[None, :, 2] - r.length * az
    kspin = r.spin * r.km
    tx = (T * (py * az - pz * ay + kspin[None, :] * ax)).sum(axis=1)
    ty = (T * (pz * ax - px * az + kspin[None, :] * ay)).sum(axis=1)
    tz = (T * (px * ay - py * ax + kspin[None, :] * az)).sum(axis=1)

    inv_m = 1.0 / r.mass
    out[:, 14] = ((cp * ctr) * fx + (cp * str_ * sf - sp * cf) * fy +
                  (cp * str_ * cf + sp * sf) * fz) * inv_m
    out[:, 15] = ((sp * ctr) * fx + (sp * str_ * sf + cp * cf) * fy +
                  (sp * str_ * cf - cp * sf) * fz) * inv_m
    out[:, 16] = (-str_ * fx + (ctr * sf) * fy + (ctr * cf) * fz) * inv_m - r.grav

    Iom = om @ r.inertia.T
    gx = om[:, 1] * Iom[:, 2] - om[:, 2] * Iom[:, 1]
    gy = om[:, 2] * Iom[:, 0] - om[:, 0] * Iom[:, 2]
    gz = om[:, 0] * Iom[:, 1] - om[:, 1] * Iom[:, 0]
    ttx = tx - r.gamma * om[:, 0] - gx
    tty = ty - r.gamma * om[:, 1] - gy
    ttz = tz - r.gamma * om[:, 2] - gz
    out[:, 17] = r.iinv[0, 0] * ttx + r.iinv[0, 1] * tty + r.iinv[0, 2] * ttz
    out[:, 18] = r.iinv[1, 0] * ttx + r.iinv[1, 1] * tty + r.iinv[1, 2] * ttz
    out[:, 19] = r.iinv[2, 0] * ttx + r.iinv[2, 1] * tty + r.iinv[2, 2] * ttz
    out[:, 20:28] = U[:, 4:12]
    return out


def _rk4_batch(X, U, r, h):
    k1 = _deriv_batch(X, U, r, np.empty_like(X))
    k2 = _deriv_batch(X + (0.5 * h) * k1, U, r, np.empty_like(X))
    k3 = _deriv_batch(X + (0.5 * h) * k2, U, r, np.empty_like(X))
    k4 = _deriv_batch(X + h * k3, U, r, np.empty_like(X))
    return X + (h / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4)


def _wrap_batch(e):
    w = np.fmod(e, _TWO_PI)
    w = np.where(w <= -math.pi, w + _TWO_PI, w)
    return np.where(w > math.pi, w - _TWO_PI, w)


def _stage_cost_batch(X, ref, Udec, oc: L.PackedOcp):
    E = X - ref[None, :]
    for i in np.nonzero(oc.wrap)[0]:
        E[:, i] = _wrap_batch(E[:, i])
    if oc.yaw_free:
        E[:, oc.yaw_index] = 0.0
    c = (E * E) @ oc.q
    eu = Udec - oc.uref[None, :]
    c += (eu * eu) @ oc.r
    dlo = np.maximum(oc.slo[None, :] - X, 0.0)
    dhi = np.maximum(X - oc.shi[None, :], 0.0)
    c += (dlo * dlo + dhi * dhi) @ oc.sw
    if oc.rom:
        left = np.maximum(X[:, 6] + X[:, 9] - oc.ss_limit, 0.0)
        right = np.maximum(X[:, 7] + X[:, 8] - oc.ss_limit, 0.0)
        c += oc.ss_weight * (left * left + right * right)
        over = np.maximum(np.abs(X[:, 4]) - _LIM, 0.0)
        c += oc.sing_weight * over * over
    return c


def _rollout_batch(x0, Z, refs, r, oc, substeps, dt):
    """Costs for a batch of decision vectors from a shared initial state."""
    B = Z.shape[0]
    X = np.tile(np.asarray(x0, dtype=np.float64), (B, 1))
    U = np.tile(oc.ufix, (B, 1))
    h = dt / substeps
    cost = np.zeros(B)
    for j in range(oc.nh):
        Zj = Z[:, j * oc.nd:(j + 1) * oc.nd]
        U[:, oc.dmap] = Zj
        for _ in range(substeps):
            X = _rk4_batch(X, U, r, h)
        cost += _stage_cost_batch(X, refs[j], Zj, oc)
    return cost


def rollout(x0, z, refs, rp, oc: L.PackedOcp, substeps: int, dt: float,
            return_traj: bool = False):
    """Cost (and optionally the state trajectory) of one decision vector."""
    r = _Robot(np.asarray(rp, dtype=np.float64))
    z = np.asarray(z, dtype=np.float64)
    X = np.asarray(x0, dtype=np.float64)[None, :].copy()
    U = oc.ufix[None, :].copy()
    h = dt / substeps
    cost = 0.0
    traj = np.empty((oc.nh + 1, oc.nx)) if return_traj else None
    if return_traj:
        traj[0] = x0
    for j in range(oc.nh):
        zj = z[j * oc.nd:(j + 1) * oc.nd]
        U[0, oc.dmap] = zj
        for _ in range(substeps):
            X = _rk4_batch(X, U, r, h)
        cost += float(_stage_cost_batch(X, refs[j], zj[None, :], oc)[0])
        if return_traj:
            traj[j + 1] = X[0]
    if return_traj:
        return cost, traj
    return cost


def rollout_grad(x0, z, refs, rp, oc: L.PackedOcp, substeps: int, dt: float):
    """Rollout cost and central-difference gradient over decision entries.

    Step for entry i is 1e-6 * max(1, |z_i|). All perturbed lanes integrate
    as one batch.
    """
    r = _Robot(np.asarray(rp, dtype=np.float64))
    z = np.asarray(z, dtype=np.float64)
    m = z.size
    steps = 1e-6 * np.maximum(1.0, np.abs(z))
    Z = np.tile(z, (1 + 2 * m, 1))
    idx = np.arange(m)
    Z[1 + 2 * idx, idx] += steps
    Z[2 + 2 * idx, idx] -= steps
    costs = _rollout_batch(x0, Z, refs, r, oc, substeps, dt)
    grad = (costs[1 + 2 * idx] - costs[2 + 2 * idx]) / (2.0 * steps)
    return float(costs[0]), grad


def rom_derivative(x, u, rp, clamp: bool = False):
    """Reference-equivalent derivative through the kernel formulas."""
    x = np.asarray(x, dtype=np.float64)
    if not clamp and abs(x[4]) >= _LIM:
        raise SingularAttitude(f"pitch {x[4]:.6f} rad within 1e-3 of +-pi/2")
    r = _Robot(np.asarray(rp, dtype=np.float64))
    out = np.empty((1, L.NX))
    _deriv_batch(x[None, :], np.asarray(u, dtype=np.float64)[None, :], r, out)
    return out[0]


def contact_accel(x, rp, cp):
    """Ground-reaction contribution to (v_dot, omega_dot), world/body."""
    r = _Robot(np.asarray(rp, dtype=np.float64))
    return _contact_accel(np.asarray(x, dtype=np.float64), r,
                          np.asarray(cp, dtype=np.float64))


def _contact_accel(x, r: _Robot, cp):
    k, b, w = cp[L.CP_K], cp[L.CP_B], cp[L.CP_W]
    mus, mud, vc = cp[L.CP_MUS], cp[L.CP_MUD], cp[L.CP_VC]
    phi, theta, psi = x[3], x[4], x[5]
    cf, sf = math.cos(phi), math.sin(phi)
    ct, st = math.cos(theta), math.sin(theta)
    cpsi, spsi = math.cos(psi), math.sin(psi)
    rot = np.array([
        [cpsi * ct, cpsi * st * sf - spsi * cf, cpsi * st * cf + spsi * sf],
        [spsi * ct, spsi * st * sf + cpsi * cf, spsi * st * cf - cpsi * sf],
        [-st, ct * sf, ct * cf],
    ])
    p, v, om = x[0:3], x[14:17], x[17:20]
    force = np.zeros(3)
    torque_b = np.zeros(3)
    for i in range(4):
        ds = r.ssign[i] * (x[6 + i] - r.qsnom)
        df = r.fsign[i] * (x[10 + i] - r.qfnom)
        ss, cs = math.sin(ds), math.cos(ds)
        sfr, cfr = math.sin(df), math.cos(df)
        axis = np.array([ss, -sfr * cs, cfr * cs])
        d_ds = r.ssign[i] * np.array([cs, sfr * ss, -cfr * ss])
        d_df = r.fsign[i] * np.array([0.0, -cfr * cs, -sfr * cs])
        bvec = r.hip[i] - r.length * axis
        bdot = -r.length * (d_ds * x[20 + i] + d_df * x[24 + i])
        pw = p + rot @ bvec
        depth = -pw[2]
        if depth <= 0.0:
            continue
        vw = v + rot @ (np.cross(om, bvec) + bdot)
        if depth >= w:
            s = 1.0
        else:
            t = depth / w
            s = t * t * (3.0 - 2.0 * t)
        fn = s * (k * depth + b * (-vw[2]))
        if fn < 0.0:
            fn = 0.0
        speed = math.hypot(vw[0], vw[1])
        if speed >= 1e-12 and fn > 0.0:
            mu = (mud + (mus - mud) * math.exp(-((speed / (3.0 * vc)) ** 2))) \
                * math.tanh(speed / vc)
            scale = -mu * fn / speed
            fi = np.array([scale * vw[0], scale * vw[1], fn])
        else:
            fi = np.array([0.0, 0.0, fn])
        force += fi
        torque_b += np.cross(bvec, rot.T @ fi)
    dv = force / r.mass
    dom = r.iinv @ torque_b
    return dv, dom


def plant_advance(x, u, rp, h: float, n_sub: int, cp=None):
    """Integrate the plant n_sub RK4 steps under zero-order-hold input.

    Plant semantics: raises SingularAttitude if pitch enters the singular
    band at any substep boundary. cp enables ground contact.
    """
    r = _Robot(np.asarray(rp, dtype=np.float64))
    cpa = np.asarray(cp, dtype=np.float64) if cp is not None else None
    X = np.asarray(x, dtype=np.float64)[None, :].copy()
    U = np.asarray(u, dtype=np.float64)[None, :]

    def f(Xb):
        out = _deriv_batch(Xb, U, r, np.empty_like(Xb))
        if cpa is not None:
            dv, dom = _contact_accel(Xb[0], r, cpa)
            out[0, 14:17] += dv
            out[0, 17:20] += dom
        return out

    for _ in range(n_sub):
        if abs(X[0, 4]) >= _LIM:
            raise SingularAttitude(
                f"pitch {X[0, 4]:.6f} rad within 1e-3 of +-pi/2")
        k1 = f(X)
        k2 = f(X + (0.5 * h) * k1)
        k3 = f(X + (0.5 * h) * k2)
        k4 = f(X + h * k3)
        X = X + (h / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4)
    if not np.all(np.isfinite(X)):
        raise NonFiniteCost("plant state became non-finite")
    return X[0]
