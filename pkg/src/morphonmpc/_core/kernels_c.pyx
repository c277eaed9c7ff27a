# cython: boundscheck=False, wraparound=False, cdivision=True, initializedcheck=False
"""Compiled rollout kernels.

Semantics match kernels_py exactly: same formulas, same finite-difference
rule, same clamp/raise split between controller and plant modes. Keep the
two files in sync; the cross-backend tests enforce agreement to tight
tolerances.
"""

from libc.math cimport sin, cos, fabs, exp, tanh, fmod, hypot, isfinite

import numpy as np

from ..errors import NonFiniteCost, SingularAttitude
from . import layout as L

cdef double PI = 3.141592653589793
cdef double TWO_PI = 6.283185307179586
cdef double LIM = PI / 2 - 1e-3

cdef int NX = 28
cdef int NU = 12

assert L.SING_EPS == 1e-3
assert L.NX == 28 and L.NU == 12
assert (L.RP_MASS, L.RP_GRAV, L.RP_KM, L.RP_GAMMA) == (0, 1, 2, 3)
assert (L.RP_I, L.RP_IINV, L.RP_HIP, L.RP_LEN) == (4, 13, 22, 34)
assert (L.RP_SPIN, L.RP_FSIGN, L.RP_SSIGN) == (35, 39, 43)
assert (L.RP_QSNOM, L.RP_QFNOM) == (47, 48)
assert (L.CP_K, L.CP_B, L.CP_W, L.CP_MUS, L.CP_MUD, L.CP_VC) == (0, 1, 2, 3, 4, 5)


cdef struct Robot:
    double mass, grav, km, gamma
    double inertia[9]
    double iinv[9]
    double hip[12]
    double length
    double spin[4]
    double fsign[4]
    double ssign[4]
    double qsnom, qfnom


cdef struct Contact:
    double k, b, w, mus, mud, vc


cdef struct Ocp:
    int nx, nd, nh
    double* q
    double* r
    double* uref
    unsigned char* wrap
    double* slo
    double* shi
    double* sw
    int* dmap
    double* ufix
    int yaw_free, yaw_index, rom
    double ss_limit, ss_weight, sing_weight


cdef void load_robot(double[::1] rp, Robot* r) nogil:
    cdef int i
    r.mass = rp[0]
    r.grav = rp[1]
    r.km = rp[2]
    r.gamma = rp[3]
    for i in range(9):
        r.inertia[i] = rp[4 + i]
        r.iinv[i] = rp[13 + i]
    for i in range(12):
        r.hip[i] = rp[22 + i]
    r.length = rp[34]
    for i in range(4):
        r.spin[i] = rp[35 + i]
        r.fsign[i] = rp[39 + i]
        r.ssign[i] = rp[43 + i]
    r.qsnom = rp[47]
    r.qfnom = rp[48]


cdef void deriv(Robot* r, double* x, double* u, double* dx) nogil:
    # controller-mode derivative: pitch clamped inside the Euler rate map only
    cdef double phi = x[3], theta = x[4], psi = x[5]
    cdef double theta_c = theta
    if theta_c > LIM:
        theta_c = LIM
    elif theta_c < -LIM:
        theta_c = -LIM
    cdef double cf = cos(phi), sf = sin(phi)
    cdef double ctr = cos(theta), st = sin(theta)
    cdef double ctc = cos(theta_c)
    cdef double ttc = sin(theta_c) / ctc
    cdef double cp = cos(psi), sp = sin(psi)
    cdef double w0 = x[17], w1 = x[18], w2 = x[19]
    cdef int i

    dx[0] = x[14]
    dx[1] = x[15]
    dx[2] = x[16]
    dx[3] = w0 + (sf * w1 + cf * w2) * ttc
    dx[4] = cf * w1 - sf * w2
    dx[5] = (sf * w1 + cf * w2) / ctc
    for i in range(8):
        dx[6 + i] = x[20 + i]

    cdef double fx = 0, fy = 0, fz = 0, tx = 0, ty = 0, tz = 0
    cdef double ds, df, ss, cs, sfr, cfr, ax, ay, az, px, py, pz, T, ks
    for i in range(4):
        ds = r.ssign[i] * (x[6 + i] - r.qsnom)
        df = r.fsign[i] * (x[10 + i] - r.qfnom)
        ss = sin(ds); cs = cos(ds)
        sfr = sin(df); cfr = cos(df)
        ax = ss
        ay = -sfr * cs
        az = cfr * cs
        T = u[i]
        fx += T * ax
        fy += T * ay
        fz += T * az
        px = r.hip[3 * i] - r.length * ax
        py = r.hip[3 * i + 1] - r.length * ay
        pz = r.hip[3 * i + 2] - r.length * az
        ks = r.spin[i] * r.km
        tx += T * (py * az - pz * ay + ks * ax)
        ty += T * (pz * ax - px * az + ks * ay)
        tz += T * (px * ay - py * ax + ks * az)

    cdef double inv_m = 1.0 / r.mass
    dx[14] = ((cp * ctr) * fx + (cp * st * sf - sp * cf) * fy +
              (cp * st * cf + sp * sf) * fz) * inv_m
    dx[15] = ((sp * ctr) * fx + (sp * st * sf + cp * cf) * fy +
              (sp * st * cf - cp * sf) * fz) * inv_m
    dx[16] = (-st * fx + (ctr * sf) * fy + (ctr * cf) * fz) * inv_m - r.grav

    cdef double i0 = r.inertia[0] * w0 + r.inertia[1] * w1 + r.inertia[2] * w2
    cdef double i1 = r.inertia[3] * w0 + r.inertia[4] * w1 + r.inertia[5] * w2
    cdef double i2 = r.inertia[6] * w0 + r.inertia[7] * w1 + r.inertia[8] * w2
    cdef double gx = w1 * i2 - w2 * i1
    cdef double gy = w2 * i0 - w0 * i2
    cdef double gz = w0 * i1 - w1 * i0
    cdef double ttx = tx - r.gamma * w0 - gx
    cdef double tty = ty - r.gamma * w1 - gy
    cdef double ttz = tz - r.gamma * w2 - gz
    dx[17] = r.iinv[0] * ttx + r.iinv[1] * tty + r.iinv[2] * ttz
    dx[18] = r.iinv[3] * ttx + r.iinv[4] * tty + r.iinv[5] * ttz
    dx[19] = r.iinv[6] * ttx + r.iinv[7] * tty + r.iinv[8] * ttz
    for i in range(8):
        dx[20 + i] = u[4 + i]


cdef void contact_forces(Robot* r, Contact* cn, double* x,
                         double* dv, double* dom) nogil:
    cdef double phi = x[3], theta = x[4], psi = x[5]
    cdef double cf = cos(phi), sf = sin(phi)
    cdef double ct = cos(theta), st = sin(theta)
    cdef double cp = cos(psi), sp = sin(psi)
    cdef double r00 = cp * ct, r01 = cp * st * sf - sp * cf, r02 = cp * st * cf + sp * sf
    cdef double r10 = sp * ct, r11 = sp * st * sf + cp * cf, r12 = sp * st * cf - cp * sf
    cdef double r20 = -st, r21 = ct * sf, r22 = ct * cf
    cdef double w0 = x[17], w1 = x[18], w2 = x[19]
    cdef double fx = 0, fy = 0, fz = 0, tbx = 0, tby = 0, tbz = 0
    cdef int i
    cdef double ds, df, ss, cs, sfr, cfr
    cdef double axx, axy, axz, dsx, dsy, dsz, dfx, dfy, dfz
    cdef double bx, by, bz, bdx, bdy, bdz
    cdef double pwz, depth, vbx, vby, vbz, vwx, vwy, vwz
    cdef double s, t, fn, speed, mu, scale, fix_, fiy, fiz, fbx, fby, fbz
    for i in range(4):
        ds = r.ssign[i] * (x[6 + i] - r.qsnom)
        df = r.fsign[i] * (x[10 + i] - r.qfnom)
        ss = sin(ds); cs = cos(ds)
        sfr = sin(df); cfr = cos(df)
        axx = ss
        axy = -sfr * cs
        axz = cfr * cs
        bx = r.hip[3 * i] - r.length * axx
        by = r.hip[3 * i + 1] - r.length * axy
        bz = r.hip[3 * i + 2] - r.length * axz
        pwz = x[2] + r20 * bx + r21 * by + r22 * bz
        depth = -pwz
        if depth <= 0.0:
            continue
        dsx = r.ssign[i] * cs
        dsy = r.ssign[i] * (sfr * ss)
        dsz = r.ssign[i] * (-cfr * ss)
        dfx = 0.0
        dfy = r.fsign[i] * (-cfr * cs)
        dfz = r.fsign[i] * (-sfr * cs)
        bdx = -r.length * (dsx * x[20 + i] + dfx * x[24 + i])
        bdy = -r.length * (dsy * x[20 + i] + dfy * x[24 + i])
        bdz = -r.length * (dsz * x[20 + i] + dfz * x[24 + i])
        vbx = (w1 * bz - w2 * by) + bdx
        vby = (w2 * bx - w0 * bz) + bdy
        vbz = (w0 * by - w1 * bx) + bdz
        vwx = x[14] + r00 * vbx + r01 * vby + r02 * vbz
        vwy = x[15] + r10 * vbx + r11 * vby + r12 * vbz
        vwz = x[16] + r20 * vbx + r21 * vby + r22 * vbz
        if depth >= cn.w:
            s = 1.0
        else:
            t = depth / cn.w
            s = t * t * (3.0 - 2.0 * t)
        fn = s * (cn.k * depth + cn.b * (-vwz))
        if fn < 0.0:
            fn = 0.0
        speed = hypot(vwx, vwy)
        if speed >= 1e-12 and fn > 0.0:
            mu = (cn.mud + (cn.mus - cn.mud) *
                  exp(-((speed / (3.0 * cn.vc)) ** 2))) * tanh(speed / cn.vc)
            scale = -mu * fn / speed
            fix_ = scale * vwx
            fiy = scale * vwy
        else:
            fix_ = 0.0
            fiy = 0.0
        fiz = fn
        fx += fix_
        fy += fiy
        fz += fiz
        fbx = r00 * fix_ + r10 * fiy + r20 * fiz
        fby = r01 * fix_ + r11 * fiy + r21 * fiz
        fbz = r02 * fix_ + r12 * fiy + r22 * fiz
        tbx += by * fbz - bz * fby
        tby += bz * fbx - bx * fbz
        tbz += bx * fby - by * fbx
    dv[0] = fx / r.mass
    dv[1] = fy / r.mass
    dv[2] = fz / r.mass
    dom[0] = r.iinv[0] * tbx + r.iinv[1] * tby + r.iinv[2] * tbz
    dom[1] = r.iinv[3] * tbx + r.iinv[4] * tby + r.iinv[5] * tbz
    dom[2] = r.iinv[6] * tbx + r.iinv[7] * tby + r.iinv[8] * tbz


cdef void deriv_plant(Robot* r, Contact* cn, bint has_contact,
                      double* x, double* u, double* dx) nogil:
    cdef double dv[3]
    cdef double dom[3]
    deriv(r, x, u, dx)
    if has_contact:
        contact_forces(r, cn, x, dv, dom)
        dx[14] += dv[0]
        dx[15] += dv[1]
        dx[16] += dv[2]
        dx[17] += dom[0]
        dx[18] += dom[1]
        dx[19] += dom[2]


cdef void rk4(Robot* r, double* x, double* u, double h) nogil:
    cdef double k1[28]
    cdef double k2[28]
    cdef double k3[28]
    cdef double k4[28]
    cdef double xt[28]
    cdef int i
    deriv(r, x, u, k1)
    for i in range(NX):
        xt[i] = x[i] + (0.5 * h) * k1[i]
    deriv(r, xt, u, k2)
    for i in range(NX):
        xt[i] = x[i] + (0.5 * h) * k2[i]
    deriv(r, xt, u, k3)
    for i in range(NX):
        xt[i] = x[i] + h * k3[i]
    deriv(r, xt, u, k4)
    for i in range(NX):
        x[i] = x[i] + (h / 6.0) * (k1[i] + 2.0 * k2[i] + 2.0 * k3[i] + k4[i])


cdef void rk4_plant(Robot* r, Contact* cn, bint has_contact,
                    double* x, double* u, double h) nogil:
    cdef double k1[28]
    cdef double k2[28]
    cdef double k3[28]
    cdef double k4[28]
    cdef double xt[28]
    cdef int i
    deriv_plant(r, cn, has_contact, x, u, k1)
    for i in range(NX):
        xt[i] = x[i] + (0.5 * h) * k1[i]
    deriv_plant(r, cn, has_contact, xt, u, k2)
    for i in range(NX):
        xt[i] = x[i] + (0.5 * h) * k2[i]
    deriv_plant(r, cn, has_contact, xt, u, k3)
    for i in range(NX):
        xt[i] = x[i] + h * k3[i]
    deriv_plant(r, cn, has_contact, xt, u, k4)
    for i in range(NX):
        x[i] = x[i] + (h / 6.0) * (k1[i] + 2.0 * k2[i] + 2.0 * k3[i] + k4[i])


cdef double wrap_pi(double e) nogil:
    cdef double w = fmod(e, TWO_PI)
    if w <= -PI:
        w += TWO_PI
    elif w > PI:
        w -= TWO_PI
    return w


cdef double stage_cost(Ocp* oc, double* x, double* ref, double* zj) nogil:
    cdef double c = 0.0, e, d
    cdef int i
    for i in range(oc.nx):
        e = x[i] - ref[i]
        if oc.wrap[i]:
            e = wrap_pi(e)
        if oc.yaw_free and i == oc.yaw_index:
            e = 0.0
        c += oc.q[i] * e * e
    for i in range(oc.nd):
        e = zj[i] - oc.uref[i]
        c += oc.r[i] * e * e
    for i in range(oc.nx):
        if oc.sw[i] != 0.0:
            d = oc.slo[i] - x[i]
            if d > 0.0:
                c += oc.sw[i] * d * d
            d = x[i] - oc.shi[i]
            if d > 0.0:
                c += oc.sw[i] * d * d
    if oc.rom:
        d = x[6] + x[9] - oc.ss_limit
        if d > 0.0:
            c += oc.ss_weight * d * d
        d = x[7] + x[8] - oc.ss_limit
        if d > 0.0:
            c += oc.ss_weight * d * d
        d = fabs(x[4]) - LIM
        if d > 0.0:
            c += oc.sing_weight * d * d
    return c


cdef double rollout_core(Robot* r, Ocp* oc, double* x0, double* z,
                         double* refs, int substeps, double h,
                         double* traj) nogil:
    cdef double x[28]
    cdef double u[12]
    cdef double cost = 0.0
    cdef int i, j, s
    for i in range(oc.nx):
        x[i] = x0[i]
    for i in range(NU):
        u[i] = oc.ufix[i]
    if traj != NULL:
        for i in range(oc.nx):
            traj[i] = x[i]
    for j in range(oc.nh):
        for i in range(oc.nd):
            u[oc.dmap[i]] = z[j * oc.nd + i]
        for s in range(substeps):
            rk4(r, x, u, h)
        cost += stage_cost(oc, x, refs + j * oc.nx, z + j * oc.nd)
        if traj != NULL:
            for i in range(oc.nx):
                traj[(j + 1) * oc.nx + i] = x[i]
    return cost


cdef class _OcpView:
    """Holds memoryviews of a PackedOcp so the Ocp struct pointers stay valid."""
    cdef double[::1] q, r, uref, slo, shi, sw, ufix
    cdef unsigned char[::1] wrap
    cdef int[::1] dmap
    cdef Ocp o

    def __init__(self, oc):
        self.q = oc.q
        self.r = oc.r
        self.uref = oc.uref
        self.slo = oc.slo
        self.shi = oc.shi
        self.sw = oc.sw
        self.ufix = oc.ufix
        self.wrap = oc.wrap
        self.dmap = oc.dmap
        self.o.nx = oc.nx
        self.o.nd = oc.nd
        self.o.nh = oc.nh
        self.o.q = &self.q[0]
        self.o.r = &self.r[0]
        self.o.uref = &self.uref[0]
        self.o.wrap = &self.wrap[0]
        self.o.slo = &self.slo[0]
        self.o.shi = &self.shi[0]
        self.o.sw = &self.sw[0]
        self.o.dmap = &self.dmap[0]
        self.o.ufix = &self.ufix[0]
        self.o.yaw_free = oc.yaw_free
        self.o.yaw_index = oc.yaw_index
        self.o.rom = oc.rom
        self.o.ss_limit = oc.ss_limit
        self.o.ss_weight = oc.ss_weight
        self.o.sing_weight = oc.sing_weight


def rollout(x0, z, refs, rp, oc, int substeps, double dt, bint return_traj=False):
    """Cost (and optionally the state trajectory) of one decision vector."""
    cdef double[::1] x0v = np.ascontiguousarray(x0, dtype=np.float64)
    cdef double[::1] zv = np.ascontiguousarray(z, dtype=np.float64)
    cdef double[:, ::1] refsv = np.ascontiguousarray(refs, dtype=np.float64)
    cdef double[::1] rpv = np.ascontiguousarray(rp, dtype=np.float64)
    cdef Robot rob
    load_robot(rpv, &rob)
    cdef _OcpView ov = _OcpView(oc)
    cdef double h = dt / substeps
    cdef double cost
    cdef double[:, ::1] tv
    if return_traj:
        traj = np.empty((ov.o.nh + 1, ov.o.nx))
        tv = traj
        cost = rollout_core(&rob, &ov.o, &x0v[0], &zv[0], &refsv[0, 0],
                            substeps, h, &tv[0, 0])
        return cost, traj
    cost = rollout_core(&rob, &ov.o, &x0v[0], &zv[0], &refsv[0, 0],
                        substeps, h, NULL)
    return cost


def rollout_grad(x0, z, refs, rp, oc, int substeps, double dt):
    """Rollout cost and central-difference gradient over decision entries.

    Step for entry i is 1e-6 * max(1, |z_i|), identical to the fallback.
    """
    cdef double[::1] x0v = np.ascontiguousarray(x0, dtype=np.float64)
    zbuf = np.array(z, dtype=np.float64, copy=True)
    cdef double[::1] zv = zbuf
    cdef double[:, ::1] refsv = np.ascontiguousarray(refs, dtype=np.float64)
    cdef double[::1] rpv = np.ascontiguousarray(rp, dtype=np.float64)
    cdef Robot rob
    load_robot(rpv, &rob)
    cdef _OcpView ov = _OcpView(oc)
    cdef double h = dt / substeps
    cdef int m = zv.shape[0]
    grad = np.empty(m)
    cdef double[::1] gv = grad
    cdef double base = rollout_core(&rob, &ov.o, &x0v[0], &zv[0],
                                    &refsv[0, 0], substeps, h, NULL)
    cdef int c
    cdef double z0, hstep, cplus, cminus
    for c in range(m):
        z0 = zv[c]
        hstep = 1e-6 * (1.0 if fabs(z0) < 1.0 else fabs(z0))
        zv[c] = z0 + hstep
        cplus = rollout_core(&rob, &ov.o, &x0v[0], &zv[0], &refsv[0, 0],
                             substeps, h, NULL)
        zv[c] = z0 - hstep
        cminus = rollout_core(&rob, &ov.o, &x0v[0], &zv[0], &refsv[0, 0],
                              substeps, h, NULL)
        zv[c] = z0
        gv[c] = (cplus - cminus) / (2.0 * hstep)
    return base, grad


def rom_derivative(x, u, rp, bint clamp=False):
    """Reference-equivalent derivative through the kernel formulas."""
    cdef double[::1] xv = np.ascontiguousarray(x, dtype=np.float64)
    cdef double[::1] uv = np.ascontiguousarray(u, dtype=np.float64)
    cdef double[::1] rpv = np.ascontiguousarray(rp, dtype=np.float64)
    if not clamp and fabs(xv[4]) >= LIM:
        raise SingularAttitude(f"pitch {xv[4]:.6f} rad within 1e-3 of +-pi/2")
    cdef Robot rob
    load_robot(rpv, &rob)
    out = np.empty(NX)
    cdef double[::1] ov = out
    deriv(&rob, &xv[0], &uv[0], &ov[0])
    return out


def contact_accel(x, rp, cp):
    """Ground-reaction contribution to (v_dot, omega_dot), world/body."""
    cdef double[::1] xv = np.ascontiguousarray(x, dtype=np.float64)
    cdef double[::1] rpv = np.ascontiguousarray(rp, dtype=np.float64)
    cdef double[::1] cpv = np.ascontiguousarray(cp, dtype=np.float64)
    cdef Robot rob
    load_robot(rpv, &rob)
    cdef Contact cn
    cn.k = cpv[0]; cn.b = cpv[1]; cn.w = cpv[2]
    cn.mus = cpv[3]; cn.mud = cpv[4]; cn.vc = cpv[5]
    dv = np.zeros(3)
    dom = np.zeros(3)
    cdef double[::1] dvv = dv
    cdef double[::1] domv = dom
    contact_forces(&rob, &cn, &xv[0], &dvv[0], &domv[0])
    return dv, dom


def plant_advance(x, u, rp, double h, int n_sub, cp=None):
    """Integrate the plant n_sub RK4 steps under zero-order-hold input.

    Plant semantics: raises SingularAttitude if pitch enters the singular
    band at any substep boundary. cp enables ground contact.
    """
    xbuf = np.array(x, dtype=np.float64, copy=True)
    cdef double[::1] xv = xbuf
    cdef double[::1] uv = np.ascontiguousarray(u, dtype=np.float64)
    cdef double[::1] rpv = np.ascontiguousarray(rp, dtype=np.float64)
    cdef Robot rob
    load_robot(rpv, &rob)
    cdef Contact cn
    cdef bint has_contact = cp is not None
    cdef double[::1] cpv
    if has_contact:
        cpv = np.ascontiguousarray(cp, dtype=np.float64)
        cn.k = cpv[0]; cn.b = cpv[1]; cn.w = cpv[2]
        cn.mus = cpv[3]; cn.mud = cpv[4]; cn.vc = cpv[5]
    cdef int s
    for s in range(n_sub):
        if fabs(xv[4]) >= LIM:
            raise SingularAttitude(
                f"pitch {xv[4]:.6f} rad within 1e-3 of +-pi/2")
        rk4_plant(&rob, &cn, has_contact, &xv[0], &uv[0], h)
    if not np.all(np.isfinite(xbuf)):
        raise NonFiniteCost("plant state became non-finite")
    return xbuf
