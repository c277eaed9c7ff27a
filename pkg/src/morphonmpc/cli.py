"""Command-line interface.

Subcommands: run (config file), builtin (named scenario), list, check
(quick self-tests), metrics (summarize CSV logs). Exit codes: 0 success,
1 validation/parse problems, 2 runtime failures.
"""

import argparse
import math
import os
import sys

import numpy as np

from . import _core, dynamics, harness, logio, scenario_io
from . import contact as contact_mod
from . import nmpc
from .errors import MorphonmpcError, ParseError, ScenarioInvalid, ValidationError
from .integrator import IntegratorConfig, rk4_step
from .params import RobotParams

EXIT_OK = 0
EXIT_INVALID = 1
EXIT_RUNTIME = 2


def _build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="morphonmpc",
        description="Morphing-quadrotor flight simulator and NMPC library")
    sub = parser.add_subparsers(dest="command", required=True)

    run_p = sub.add_parser("run", help="simulate a scenario config file")
    run_p.add_argument("config", help="YAML scenario file")
    _add_run_options(run_p)

    blt_p = sub.add_parser("builtin", help="simulate a named builtin scenario")
    blt_p.add_argument("name", help="builtin scenario name (see 'list')")
    _add_run_options(blt_p)

    sub.add_parser("list", help="list builtin scenario names")
    sub.add_parser("check", help="run quick numerical self-tests")

    met_p = sub.add_parser("metrics", help="summarize one or more CSV logs")
    met_p.add_argument("logs", nargs="+", help="CSV log files")
    return parser


def _add_run_options(p: argparse.ArgumentParser):
    p.add_argument("--out", default=".", help="output directory (default: .)")
    p.add_argument("--duration", type=float, default=None,
                   help="override scenario duration [s]")
    p.add_argument("--fast", action="store_true",
                   help="coarse plant step (1e-3 s) for quick iteration")
    p.add_argument("--seed", type=int, default=None,
                   help="override scenario seed")


def _apply_overrides(scenario: harness.Scenario, args) -> harness.Scenario:
    if args.duration is not None:
        scenario.duration = float(args.duration)
    if args.fast:
        scenario.integrator.plant_step = 1e-3
    if args.seed is not None:
        scenario.seed = int(args.seed)
    return scenario


def _run_and_emit(scenario: harness.Scenario, out_dir: str) -> int:
    os.makedirs(out_dir, exist_ok=True)
    log = harness.run_closed_loop(scenario)
    csv_path = os.path.join(out_dir, f"{scenario.name}.csv")
    logio.write_csv(log, csv_path)
    script_path = os.path.join(out_dir, f"{scenario.name}_plot.py")
    logio.emit_plot_script([csv_path], script_path)

    m = harness.compute_metrics(log, scenario)
    print(f"scenario:        {scenario.name}")
    print(f"rows:            {log.n_rows}")
    print(f"rms error:       {m.rms_tracking_error:.4g} m")
    print(f"peak error:      {m.peak_tracking_error:.4g} m")
    print(f"peak |yaw rate|: {math.degrees(m.peak_yaw_rate):.4g} deg/s")
    print(f"wrote:           {csv_path}")
    print(f"wrote:           {script_path}")
    if log.failed:
        print(f"RUN FAILED: {log.failure_reason}")
        return EXIT_RUNTIME
    return EXIT_OK


def _cmd_run(args) -> int:
    try:
        with open(args.config) as fh:
            text = fh.read()
    except OSError as exc:
        print(f"error: cannot read config: {exc}", file=sys.stderr)
        return EXIT_INVALID
    scenario = scenario_io.parse_scenario(text)
    return _run_and_emit(_apply_overrides(scenario, args), args.out)


def _cmd_builtin(args) -> int:
    scenario = harness.get_builtin(args.name)
    return _run_and_emit(_apply_overrides(scenario, args), args.out)


def _cmd_list(_args) -> int:
    for name in harness.builtin_names():
        print(name)
    return EXIT_OK


def _cmd_metrics(args) -> int:
    fields = ("rms_tracking_error", "peak_tracking_error",
              "final_position_error", "recovery_time",
              "yaw_rate_settling_time", "min_speed", "peak_speed",
              "peak_yaw_rate", "failed")
    for path in args.logs:
        log = logio.read_csv(path)
        m = harness.compute_metrics(log)
        print(f"{path}:")
        for f in fields:
            print(f"  {f}: {getattr(m, f)}")
    return EXIT_OK


def _cmd_check(_args) -> int:
    """Fast numerical self-tests; failures exit 2."""
    failures = 0

    def report(name: str, ok: bool, detail: str = ""):
        nonlocal failures
        print(f"{'PASS' if ok else 'FAIL'}  {name}" +
              (f"  ({detail})" if detail else ""))
        failures += 0 if ok else 1

    params = RobotParams()
    report("backend", True, f"using {_core.backend} kernels")

    # hover force balance and equilibrium
    report("hover thrust arithmetic",
           abs(4 * params.hover_thrust - params.weight) < 1e-12,
           f"4 x {params.hover_thrust:.6g} N vs {params.weight:.6g} N")
    dx = dynamics.rom_derivative(dynamics.hover_state((0, 0, 5)),
                                 dynamics.hover_input(params), params)
    report("hover equilibrium", float(np.linalg.norm(dx)) <= 1e-9,
           f"|dx| = {np.linalg.norm(dx):.2e}")

    # RK4 order on an oscillator with known solution
    def osc(x, _u):
        return np.array([x[1], -x[0]])

    errs = []
    for h in (0.1, 0.05):
        x = np.array([1.0, 0.0])
        for _ in range(int(round(1.0 / h))):
            x = rk4_step(osc, x, None, h)
        errs.append(abs(x[0] - math.cos(1.0)))
    ratio = errs[0] / errs[1]
    report("integrator order", 12.0 < ratio < 20.0, f"halving ratio {ratio:.1f}")

    # kernel gradient vs an independent difference loop over the cost
    rng = np.random.default_rng(7)
    cfg = nmpc.OcpConfig.fault_tolerant(params)
    integ = IntegratorConfig()
    dyn = dynamics.RomDynamics(params)
    x0 = dynamics.hover_state((0, 0, 5))
    x0[3:6] += rng.uniform(-0.2, 0.2, 3)
    x0[14:17] += rng.uniform(-1, 1, 3)
    refs = nmpc.ReferencePlan.hold(dynamics.hover_state((0, 0, 5)), cfg.horizon)
    u = np.tile(cfg.input_reference, (cfg.horizon, 1))
    u += rng.uniform(-1, 1, u.shape)
    _, grad = nmpc.fd_gradient(x0, u, refs, cfg, dyn, integ)
    flat = u.ravel().copy()
    ind = np.empty_like(flat)
    for i in range(flat.size):
        h = 1e-6 * max(1.0, abs(flat[i]))
        orig = flat[i]
        flat[i] = orig + h
        cp = nmpc.rollout_cost(x0, flat.reshape(u.shape), refs, cfg, dyn, integ)
        flat[i] = orig - h
        cm = nmpc.rollout_cost(x0, flat.reshape(u.shape), refs, cfg, dyn, integ)
        flat[i] = orig
        ind[i] = (cp - cm) / (2 * h)
    rel = np.max(np.abs(grad.ravel() - ind)) / max(1e-8, np.max(np.abs(ind)))
    report("gradient self-consistency", rel < 1e-4, f"rel err {rel:.2e}")

    # solver descent from a perturbed warm start
    warm = u + rng.uniform(-2, 2, u.shape)
    warm_cost = nmpc.rollout_cost(
        x0, np.clip(warm, cfg.input_lower, cfg.input_upper), refs, cfg, dyn,
        integ)
    res = nmpc.solve(x0, refs, cfg, dyn, integ, warm_start=warm)
    report("solver descent", res.cost <= warm_cost + 1e-12,
           f"{warm_cost:.6g} -> {res.cost:.6g}")

    # contact statics: per-wheel support at the bisection equilibrium depth
    cpar = contact_mod.ContactParams()
    target = params.weight / 4
    lo, hi = 0.0, 0.1
    for _ in range(200):
        mid = 0.5 * (lo + hi)
        if contact_mod.normal_force(mid, 0.0, cpar) < target:
            lo = mid
        else:
            hi = mid
    x_rest = dynamics.hover_state((0, 0, params.leg_length - 0.5 * (lo + hi)))
    force, _ = contact_mod.contact_wrench(x_rest, None, params, cpar)
    report("contact statics", abs(force[2] - params.weight) < 1e-3,
           f"support {force[2]:.6f} N vs weight {params.weight:.6f} N")

    return EXIT_OK if failures == 0 else EXIT_RUNTIME


def main(argv=None) -> int:
    parser = _build_parser()
    args = parser.parse_args(argv)
    handler = {
        "run": _cmd_run,
        "builtin": _cmd_builtin,
        "list": _cmd_list,
        "check": _cmd_check,
        "metrics": _cmd_metrics,
    }[args.command]
    try:
        return handler(args)
    except (ParseError, ValidationError, ScenarioInvalid) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INVALID
    except MorphonmpcError as exc:
        print(f"runtime error: {exc}", file=sys.stderr)
        return EXIT_RUNTIME


if __name__ == "__main__":
    sys.exit(main())
