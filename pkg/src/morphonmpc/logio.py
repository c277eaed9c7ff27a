"""SimLog CSV serialization and plot-script generation.

The CSV layout is stable: a version header, scenario metadata as comment
lines, one name row, then one %.9g-formatted row per control tick. Writing
the same log twice produces byte-identical files; solver wall time is
deliberately not serialized (it is the one nondeterministic column).
"""

import os

import numpy as np

from .errors import EmptyLog, IoError, ParseError
from .harness import SimLog

FORMAT_HEADER = "# morphonmpc-log v1"

_STATE_NAMES = (
    "px", "py", "pz", "roll", "pitch", "yaw",
    "qs1", "qs2", "qs3", "qs4", "qf1", "qf2", "qf3", "qf4",
    "vx", "vy", "vz", "wx", "wy", "wz",
    "qds1", "qds2", "qds3", "qds4", "qdf1", "qdf2", "qdf3", "qdf4")

COLUMN_NAMES = (
    ("t",) + _STATE_NAMES + tuple(f"ref_{n}" for n in _STATE_NAMES)
    + tuple(f"cmd_t{i}" for i in range(1, 5))
    + tuple(f"act_t{i}" for i in range(1, 5))
    + tuple(f"acc_s{i}" for i in range(1, 5))
    + tuple(f"acc_f{i}" for i in range(1, 5))
    + tuple(f"eff_{i}" for i in range(1, 5))
    + ("cost", "iters", "track_err"))


def _table(log: SimLog) -> np.ndarray:
    return np.column_stack([
        log.time, log.states, log.refs, log.commanded, log.actual,
        log.joint_accels, log.effectiveness, log.solver_cost,
        log.solver_iters.astype(float), log.tracking_error])


def write_csv(log: SimLog, path: str) -> None:
    """Serialize a log; bytes depend only on the log contents."""
    log.require_rows()
    table = _table(log)
    lines = [
        FORMAT_HEADER,
        f"# scenario: {log.scenario_name}",
        f"# control_period: {log.control_period:.9g}",
        f"# failed: {int(log.failed)}",
        f"# failure_reason: {log.failure_reason}",
        ",".join(COLUMN_NAMES),
    ]
    lines.extend(",".join(f"{v:.9g}" for v in row) for row in table)
    try:
        with open(path, "w", newline="\n") as fh:
            fh.write("\n".join(lines) + "\n")
    except OSError as exc:
        raise IoError(f"cannot write {path}: {exc}") from exc


def read_csv(path: str) -> SimLog:
    """Rebuild a SimLog from its CSV form (solve_time comes back as zeros)."""
    try:
        with open(path) as fh:
            lines = fh.read().splitlines()
    except OSError as exc:
        raise IoError(f"cannot read {path}: {exc}") from exc
    if not lines or lines[0] != FORMAT_HEADER:
        raise ParseError(f"{path} is not a morphonmpc v1 log")

    meta = {"scenario": "", "control_period": "0.1", "failed": "0",
            "failure_reason": ""}
    body_start = 1
    for i, line in enumerate(lines[1:], start=1):
        if not line.startswith("#"):
            body_start = i
            break
        key, _, value = line[1:].partition(":")
        meta[key.strip()] = value.strip() if key.strip() != "failure_reason" \
            else value.lstrip(" ")
    else:
        raise ParseError(f"{path} has no data rows")

    if lines[body_start].split(",")[0] != "t":
        raise ParseError(f"{path} is missing the column-name row")
    n_cols = len(COLUMN_NAMES)
    rows = []
    for line in lines[body_start + 1:]:
        if not line:
            continue
        parts = line.split(",")
        if len(parts) != n_cols:
            raise ParseError(
                f"{path}: expected {n_cols} columns, got {len(parts)}")
        try:
            rows.append([float(v) for v in parts])
        except ValueError as exc:
            raise ParseError(f"{path}: bad number: {exc}") from exc
    if not rows:
        raise EmptyLog(f"{path} contains no data rows")
    table = np.asarray(rows)

    return SimLog(
        scenario_name=meta["scenario"],
        control_period=float(meta["control_period"]),
        time=table[:, 0],
        states=table[:, 1:29],
        refs=table[:, 29:57],
        commanded=table[:, 57:61],
        actual=table[:, 61:65],
        joint_accels=table[:, 65:73],
        effectiveness=table[:, 73:77],
        solver_cost=table[:, 77],
        solver_iters=table[:, 78],
        solve_time=np.zeros(len(rows)),
        tracking_error=table[:, 79],
        failed=bool(int(meta["failed"])),
        failure_reason=meta["failure_reason"])


_PLOT_TEMPLATE = '''"""Overview plots for morphonmpc logs. Auto-generated; edit freely."""

import numpy as np
import matplotlib.pyplot as plt

PATHS = {paths!r}
NAMES = {names!r}
COL = {{name: i for i, name in enumerate({columns!r})}}


def load(path):
    return np.genfromtxt(path, delimiter=",", comments="#", names=True)


logs = [(name, load(path)) for name, path in zip(NAMES, PATHS)]

fig, axes = plt.subplots(3, 2, figsize=(13, 10), sharex=True)
for name, d in logs:
    t = d["t"]
    axes[0, 0].plot(t, d["track_err"], label=name)
    axes[0, 1].plot(t, np.degrees(d["roll"]), label=f"{{name}} roll")
    axes[0, 1].plot(t, np.degrees(d["pitch"]), "--", label=f"{{name}} pitch")
    axes[1, 0].plot(t, np.hypot(d["vx"], np.hypot(d["vy"], d["vz"])), label=name)
    axes[1, 1].plot(t, np.degrees(d["wz"]), label=name)
    for i in range(1, 5):
        axes[2, 0].plot(t, d[f"act_t{{i}}"], alpha=0.7)
        axes[2, 1].plot(t, d[f"eff_{{i}}"], alpha=0.7)

axes[0, 0].set_ylabel("tracking error [m]")
axes[0, 1].set_ylabel("roll/pitch [deg]")
axes[1, 0].set_ylabel("speed [m/s]")
axes[1, 1].set_ylabel("yaw rate [deg/s]")
axes[2, 0].set_ylabel("actual thrust [N]")
axes[2, 1].set_ylabel("rotor effectiveness")
for ax in axes.flat:
    ax.grid(alpha=0.3)
    ax.legend(fontsize=7)
for ax in axes[-1]:
    ax.set_xlabel("time [s]")
fig.tight_layout()

fig2, ax3 = plt.subplots(figsize=(7, 6))
for name, d in logs:
    ax3.plot(d["px"], d["py"], label=name)
    ax3.plot(d["ref_px"], d["ref_py"], ":", alpha=0.6)
ax3.set_xlabel("x [m]")
ax3.set_ylabel("y [m]")
ax3.axis("equal")
ax3.grid(alpha=0.3)
ax3.legend(fontsize=8)
fig2.tight_layout()

plt.show()
'''


def emit_plot_script(csv_paths, script_path: str) -> None:
    """Write a standalone matplotlib script that overlays the given logs.

    Every referenced CSV must already exist; the script itself only needs
    numpy and matplotlib.
    """
    if isinstance(csv_paths, (str, os.PathLike)):
        csv_paths = [csv_paths]
    csv_paths = [str(p) for p in csv_paths]
    if not csv_paths:
        raise IoError("emit_plot_script needs at least one CSV path")
    for p in csv_paths:
        if not os.path.isfile(p):
            raise IoError(f"log file not found: {p}")
    names = [os.path.splitext(os.path.basename(p))[0] for p in csv_paths]
    text = _PLOT_TEMPLATE.format(paths=csv_paths, names=names,
                                 columns=list(COLUMN_NAMES))
    try:
        with open(script_path, "w", newline="\n") as fh:
            fh.write(text)
    except OSError as exc:
        raise IoError(f"cannot write {script_path}: {exc}") from exc
