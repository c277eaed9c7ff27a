"""Kernel backend selection.

The compiled extension is preferred when importable; the numpy fallback
keeps the package functional without a C toolchain. MORPHONMPC_BACKEND
overrides: "compiled" (error if unavailable), "python", or "auto".
Determinism guarantees are per backend; the two agree to tight tolerances
but not bitwise.
"""

import os

from . import layout

_requested = os.environ.get("MORPHONMPC_BACKEND", "auto").strip().lower()

if _requested in ("auto", ""):
    try:
        from . import kernels_c as _kernels
        backend = "compiled"
    except ImportError:
        from . import kernels_py as _kernels
        backend = "python"
elif _requested in ("compiled", "c"):
    from . import kernels_c as _kernels
    backend = "compiled"
elif _requested in ("python", "numpy", "py"):
    from . import kernels_py as _kernels
    backend = "python"
else:
    raise ImportError(
        f"MORPHONMPC_BACKEND={_requested!r} not recognized "
        "(use 'auto', 'compiled' or 'python')")

rollout = _kernels.rollout
rollout_grad = _kernels.rollout_grad
rom_derivative = _kernels.rom_derivative
contact_accel = _kernels.contact_accel
plant_advance = _kernels.plant_advance
