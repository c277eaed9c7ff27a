"""Rotor effectiveness schedules and their application to commands."""

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from morphonmpc.errors import ValidationError
from morphonmpc import apply_faults
from morphonmpc.faults import FaultSchedule


@pytest.fixture
def staged():
    return FaultSchedule.single_rotor(
        3, [(7.0, 0.67), (14.0, 0.34), (21.0, 0.0)])


def test_schedule_lookup(staged):
    np.testing.assert_array_equal(staged.effectiveness_at(0.0), np.ones(4))
    np.testing.assert_array_equal(staged.effectiveness_at(6.999), np.ones(4))
    e = staged.effectiveness_at(7.0)  # boundary belongs to the event
    assert e[2] == 0.67 and e[[0, 1, 3]].tolist() == [1.0, 1.0, 1.0]
    assert staged.effectiveness_at(15.0)[2] == 0.34
    assert staged.effectiveness_at(30.0)[2] == 0.0


def test_no_fault_schedule_is_identity():
    sched = FaultSchedule()
    assert not sched.has_faults
    np.testing.assert_array_equal(sched.effectiveness_at(123.4), np.ones(4))


def test_apply_identity_and_annihilation():
    cmd = np.array([14.715, 14.715, 14.715, 14.715])
    np.testing.assert_array_equal(apply_faults(np.ones(4), cmd), cmd)
    np.testing.assert_array_equal(apply_faults(np.zeros(4), cmd), np.zeros(4))


def test_apply_scaling_arithmetic():
    eff = np.array([1.0, 1.0, 0.67, 1.0])
    out = apply_faults(eff, np.full(4, 14.715))
    assert out[2] == pytest.approx(9.85905, abs=1e-12)
    assert out[0] == 14.715


def test_apply_cap_mode():
    eff = np.array([1.0, 0.5, 1.0, 1.0])
    cmd = np.array([20.0, 10.0, 20.0, 10.0])
    out = apply_faults(eff, cmd, cap_at=30.0)
    # rotor 2 saturates at 0.5*30=15 only when the command exceeds it
    np.testing.assert_allclose(out, [20.0, 10.0, 20.0, 10.0])
    out2 = apply_faults(eff, np.array([20.0, 18.0, 20.0, 10.0]), cap_at=30.0)
    assert out2[1] == 15.0


@given(st.floats(0.0, 1.0), st.floats(0.0, 30.0))
@settings(max_examples=60, deadline=None)
def test_apply_homogeneous(e, c):
    eff = np.array([e, 1.0, 1.0, 1.0])
    cmd = np.array([c, 0.0, 0.0, 0.0])
    out = apply_faults(eff, cmd)
    assert out[0] == e * c
    assert (out >= 0).all() and (out <= cmd).all()


def test_single_rotor_bounds():
    with pytest.raises(ValidationError):
        FaultSchedule.single_rotor(0, [(1.0, 0.5)])
    with pytest.raises(ValidationError):
        FaultSchedule.single_rotor(5, [(1.0, 0.5)])


@pytest.mark.parametrize("events", [
    [(5.0, 0.5), (3.0, 0.2)],       # not increasing
    [(5.0, 0.5), (5.0, 0.2)],       # duplicate time
    [(-1.0, 0.5)],                  # negative time
    [(2.0, 1.5)],                   # effectiveness above 1
    [(2.0, -0.1)],                  # below 0
])
def test_schedule_rejects(events):
    with pytest.raises(ValidationError):
        FaultSchedule.single_rotor(1, events).validate()


def test_has_faults_flag(staged):
    assert staged.has_faults
