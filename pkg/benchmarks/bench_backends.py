"""Benchmark the compiled kernels against the numpy fallback.

Times the three hot paths (horizon rollout, finite-difference gradient,
plant integration) plus one full solver call per backend, and prints a
small table with speedups. Run from a built checkout:

    python3 benchmarks/bench_backends.py [--repeats N]
"""

import argparse
import os
import subprocess
import sys
import time

import numpy as np

from morphonmpc import dynamics, nmpc
from morphonmpc._core import kernels_py
from morphonmpc.integrator import IntegratorConfig
from morphonmpc.params import RobotParams

try:
    from morphonmpc._core import kernels_c
except ImportError:
    kernels_c = None


def _setup():
    params = RobotParams()
    cfg = nmpc.OcpConfig.fault_tolerant(params)
    integ = IntegratorConfig()
    rng = np.random.default_rng(3)
    x0 = dynamics.hover_state((0.0, 0.0, 5.0))
    x0[3:6] += rng.uniform(-0.3, 0.3, 3)
    x0[14:17] += rng.uniform(-1.0, 1.0, 3)
    refs = nmpc.ReferencePlan.hold(dynamics.hover_state((0.0, 0.0, 5.0)),
                                   cfg.horizon)
    u = np.tile(cfg.input_reference, (cfg.horizon, 1))
    u += rng.uniform(-0.5, 0.5, u.shape)
    z = u.ravel().copy()
    stage_refs = np.asarray(refs.stage_states, dtype=np.float64)
    return params, cfg, integ, x0, stage_refs, z


def _time(fn, repeats: int) -> float:
    fn()  # warm up caches / JIT-free but fair
    best = float("inf")
    for _ in range(repeats):
        t0 = time.perf_counter()
        fn()
        best = min(best, time.perf_counter() - t0)
    return best


def bench_kernels(mod, name: str, repeats: int):
    params, cfg, integ, x0, refs, z = _setup()
    rp = params.packed()
    oc = cfg.packed()
    dt = integ.prediction_step
    nsub = integ.prediction_substeps
    u_plant = cfg.embed_input(z[:cfg.n_decision])
    rows = {}
    rows["rollout"] = _time(
        lambda: mod.rollout(x0, z, refs, rp, oc, nsub, dt), repeats)
    rows["gradient"] = _time(
        lambda: mod.rollout_grad(x0, z, refs, rp, oc, nsub, dt), repeats)
    rows["plant step"] = _time(
        lambda: mod.plant_advance(x0, u_plant, rp, 1e-4, 1000), repeats)
    return name, rows


_SOLVER_SNIPPET = """
import time
import numpy as np
from morphonmpc import dynamics, nmpc
from morphonmpc.integrator import IntegratorConfig
from morphonmpc.params import RobotParams

params = RobotParams()
cfg = nmpc.OcpConfig.fault_tolerant(params)
integ = IntegratorConfig()
rng = np.random.default_rng(3)
x0 = dynamics.hover_state((0.0, 0.0, 5.0))
x0[3:6] += rng.uniform(-0.3, 0.3, 3)
x0[14:17] += rng.uniform(-1.0, 1.0, 3)
refs = nmpc.ReferencePlan.hold(dynamics.hover_state((0.0, 0.0, 5.0)),
                               cfg.horizon)
dyn = dynamics.RomDynamics(params)
nmpc.solve(x0, refs, cfg, dyn, integ)
best = float("inf")
for _ in range({repeats}):
    t0 = time.perf_counter()
    nmpc.solve(x0, refs, cfg, dyn, integ)
    best = min(best, time.perf_counter() - t0)
print(best)
"""


def bench_solver(backend: str, repeats: int) -> float:
    # nmpc binds its kernels at import time, so each backend needs a
    # fresh interpreter
    env = dict(os.environ, MORPHONMPC_BACKEND=backend)
    out = subprocess.run(
        [sys.executable, "-c", _SOLVER_SNIPPET.format(repeats=repeats)],
        env=env, capture_output=True, text=True, check=True)
    return float(out.stdout.strip())


def main():
    ap = argparse.ArgumentParser()
    ap.add_argument("--repeats", type=int, default=20)
    args = ap.parse_args()

    results = [bench_kernels(kernels_py, "python", args.repeats)]
    if kernels_c is not None:
        results.append(bench_kernels(kernels_c, "compiled", args.repeats))
    else:
        print("compiled kernels unavailable; timing numpy fallback only\n")

    keys = list(results[0][1])
    width = max(len(k) for k in keys) + 2
    header = f"{'kernel':<{width}}" + "".join(
        f"{name:>12}" for name, _ in results)
    if len(results) == 2:
        header += f"{'speedup':>10}"
    print(header)
    for k in keys:
        line = f"{k:<{width}}"
        for _, rows in results:
            line += f"{rows[k] * 1e6:>10.1f}us"
        if len(results) == 2:
            line += f"{results[0][1][k] / results[1][1][k]:>9.1f}x"
        print(line)

    solver_rows = []
    for backend in ("python", "compiled") if kernels_c else ("python",):
        solver_rows.append(
            (backend, bench_solver(backend, max(3, args.repeats // 4))))
    print()
    for backend, t in solver_rows:
        print(f"full NMPC solve, {backend:>8}: {t * 1e3:8.2f} ms")
    if len(solver_rows) == 2:
        print(f"solver speedup: {solver_rows[0][1] / solver_rows[1][1]:.1f}x")


if __name__ == "__main__":
    main()
