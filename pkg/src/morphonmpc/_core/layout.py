"""Packed array layouts shared by the compiled and numpy kernel backends.

The kernels take flat float64 arrays rather than dataclasses so that the
same call signature works for the Cython extension and the numpy fallback.
Index constants here are the single source of truth for those layouts.
"""

import numpy as np

# ---- state vector layout (28 entries) ----
NX = 28
X_POS = 0       # 3: world position
X_ATT = 3       # 3: roll, pitch, yaw (ZYX convention)
X_QSAG = 6      # 4: sagittal joint angles, legs 1..4
X_QFRONT = 10   # 4: frontal joint angles, legs 1..4
X_VEL = 14      # 3: world velocity
X_OMEGA = 17    # 3: body rates
X_QDSAG = 20    # 4: sagittal joint rates
X_QDFRONT = 24  # 4: frontal joint rates

# ---- full input vector layout (12 entries) ----
NU = 12
U_THRUST = 0    # 4: rotor thrusts
U_ASAG = 4      # 4: sagittal joint accelerations
U_AFRONT = 8    # 4: frontal joint accelerations

# ---- packed robot parameter block ----
RP_SIZE = 49
RP_MASS = 0
RP_GRAV = 1
RP_KM = 2       # rotor moment per unit thrust
RP_GAMMA = 3    # yaw drag coefficient
RP_I = 4        # 9: inertia, row major
RP_IINV = 13    # 9: inverse inertia, row major
RP_HIP = 22     # 12: hip offsets, 4 x 3 row major
RP_LEN = 34     # leg length
RP_SPIN = 35    # 4: rotor spin signs
RP_FSIGN = 39   # 4: frontal mirror signs (sign of hip y)
RP_SSIGN = 43   # 4: sagittal signs
RP_QSNOM = 47   # nominal sagittal angle
RP_QFNOM = 48   # nominal frontal angle

# ---- packed contact parameter block ----
CP_SIZE = 6
CP_K = 0
CP_B = 1
CP_W = 2
CP_MUS = 3
CP_MUD = 4
CP_VC = 5

SING_EPS = 1e-3  # pitch singularity margin (rad)


def pack_robot(mass, gravity, moment_gain, drag_gamma, inertia, inertia_inv,
               hip_offsets, leg_length, spin_signs, frontal_signs,
               sagittal_signs, q_sag_nominal, q_front_nominal):
    rp = np.empty(RP_SIZE, dtype=np.float64)
    rp[RP_MASS] = mass
    rp[RP_GRAV] = gravity
    rp[RP_KM] = moment_gain
    rp[RP_GAMMA] = drag_gamma
    rp[RP_I:RP_I + 9] = np.asarray(inertia, dtype=np.float64).ravel()
    rp[RP_IINV:RP_IINV + 9] = np.asarray(inertia_inv, dtype=np.float64).ravel()
    rp[RP_HIP:RP_HIP + 12] = np.asarray(hip_offsets, dtype=np.float64).ravel()
    rp[RP_LEN] = leg_length
    rp[RP_SPIN:RP_SPIN + 4] = spin_signs
    rp[RP_FSIGN:RP_FSIGN + 4] = frontal_signs
    rp[RP_SSIGN:RP_SSIGN + 4] = sagittal_signs
    rp[RP_QSNOM] = q_sag_nominal
    rp[RP_QFNOM] = q_front_nominal
    return rp


def pack_contact(stiffness, damping, transition_width, mu_static, mu_dynamic,
                 critical_velocity):
    cp = np.empty(CP_SIZE, dtype=np.float64)
    cp[CP_K] = stiffness
    cp[CP_B] = damping
    cp[CP_W] = transition_width
    cp[CP_MUS] = mu_static
    cp[CP_MUD] = mu_dynamic
    cp[CP_VC] = critical_velocity
    return cp


class PackedOcp:
    """Flat-array view of an OcpConfig consumed by the rollout kernels.

    Attributes are plain float64/int arrays; both backends unpack them at
    call entry. `dmap` maps decision channels into the full 12-entry input,
    `ufix` supplies the frozen entries (zeros for frontal accelerations in
    sagittal-only mode).
    """

    __slots__ = ("nx", "nd", "nh", "q", "r", "uref", "wrap", "slo", "shi",
                 "sw", "zlo", "zhi", "dmap", "ufix", "yaw_free", "yaw_index",
                 "rom", "ss_limit", "ss_weight", "sing_weight")

    def __init__(self, nx, nd, nh, q, r, uref, wrap, slo, shi, sw, zlo, zhi,
                 dmap, ufix, yaw_free, yaw_index, rom, ss_limit, ss_weight,
                 sing_weight):
        self.nx = int(nx)
        self.nd = int(nd)
        self.nh = int(nh)
        self.q = np.ascontiguousarray(q, dtype=np.float64)
        self.r = np.ascontiguousarray(r, dtype=np.float64)
        self.uref = np.ascontiguousarray(uref, dtype=np.float64)
        self.wrap = np.ascontiguousarray(wrap, dtype=np.uint8)
        self.slo = np.ascontiguousarray(slo, dtype=np.float64)
        self.shi = np.ascontiguousarray(shi, dtype=np.float64)
        self.sw = np.ascontiguousarray(sw, dtype=np.float64)
        self.zlo = np.ascontiguousarray(zlo, dtype=np.float64)
        self.zhi = np.ascontiguousarray(zhi, dtype=np.float64)
        self.dmap = np.ascontiguousarray(dmap, dtype=np.int32)
        self.ufix = np.ascontiguousarray(ufix, dtype=np.float64)
        self.yaw_free = int(yaw_free)
        self.yaw_index = int(yaw_index)
        self.rom = int(rom)
        self.ss_limit = float(ss_limit)
        self.ss_weight = float(ss_weight)
        self.sing_weight = float(sing_weight)
