"""Rotor loss-of-effectiveness injection.

A fault schedule is, per rotor, a piecewise-constant effectiveness profile:
a sorted list of (time, effectiveness) events, effectiveness 1 before the
first event. The plant applies it multiplicatively to commanded thrust; the
controller is never shown the schedule or the realized thrusts, which is
the whole point of the fault-tolerant mode.
"""

from dataclasses import dataclass

import numpy as np

from .errors import DimensionMismatch, ValidationError


@dataclass
class FaultSchedule:
    """Per-rotor effectiveness events.

    events[i] lists (time_s, effectiveness) pairs for rotor i+1, times
    strictly increasing, effectiveness in [0, 1]. cap_mode switches the
    plant from scaling commanded thrust to capping it at
    effectiveness * reference (some platforms saturate rather than scale);
    default is scaling.
    """

    events: tuple = ((), (), (), ())
    cap_mode: bool = False

    def __post_init__(self):
        self.events = tuple(
            tuple((float(t), float(e)) for t, e in rotor) for rotor in self.events)

    @classmethod
    def single_rotor(cls, rotor: int, events, cap_mode: bool = False):
        """Schedule faulting one rotor (1-based), others stay healthy."""
        if not 1 <= rotor <= 4:
            raise ValidationError(f"rotor must be in 1..4, got {rotor}")
        evs = [(), (), (), ()]
        evs[rotor - 1] = tuple(events)
        return cls(events=tuple(evs), cap_mode=cap_mode)

    def validate(self):
        if len(self.events) != 4:
            raise ValidationError("events must list exactly 4 rotors")
        for rotor in self.events:
            times = [t for t, _ in rotor]
            if any(t2 <= t1 for t1, t2 in zip(times, times[1:])):
                raise ValidationError("event times must be strictly increasing")
            if any(t < 0 for t in times):
                raise ValidationError("event times must be nonnegative")
            if any(not 0.0 <= e <= 1.0 for _, e in rotor):
                raise ValidationError("effectiveness must lie in [0, 1]")
        return self

    def effectiveness_at(self, t: float) -> np.ndarray:
        """Effectiveness of each rotor at time t (1.0 before any event)."""
        eff = np.ones(4)
        for i, rotor in enumerate(self.events):
            for time, value in rotor:
                if t >= time:
                    eff[i] = value
                else:
                    break
        return eff

    @property
    def has_faults(self) -> bool:
        return any(len(rotor) > 0 for rotor in self.events)


def apply(effectiveness, commanded_thrusts, cap_at: float | None = None) -> np.ndarray:
    """Realized thrusts under a loss-of-effectiveness vector.

    Default is multiplicative scaling. With cap_at, each rotor is instead
    limited to effectiveness * cap_at (cap semantics; cap_at is typically
    the hover thrust).
    """
    eff = np.asarray(effectiveness, dtype=float)
    cmd = np.asarray(commanded_thrusts, dtype=float)
    if eff.shape != (4,) or cmd.shape != (4,):
        raise DimensionMismatch("effectiveness and thrusts must have shape (4,)")
    if np.any(eff < 0) or np.any(eff > 1):
        raise ValidationError("effectiveness must lie in [0, 1]")
    if cap_at is None:
        return eff * cmd
    return np.minimum(cmd, eff * cap_at)
