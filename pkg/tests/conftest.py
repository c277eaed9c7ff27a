"""Shared fixtures: default parameters, seeded RNG, cached scenario runs."""

import numpy as np
import pytest

from morphonmpc import harness
from morphonmpc.params import RobotParams

_ACCEPTANCE_LINES = []


def record_acceptance(line: str):
    _ACCEPTANCE_LINES.append(line)


def pytest_terminal_summary(terminalreporter):
    if _ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in _ACCEPTANCE_LINES:
            terminalreporter.write_line(line)


@pytest.fixture(scope="session")
def params():
    return RobotParams()


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


@pytest.fixture(scope="session")
def builtin_logs():
    """Run builtin scenarios at most once per session, by name."""
    cache = {}

    def get(name):
        if name not in cache:
            cache[name] = harness.run_closed_loop(harness.get_builtin(name))
        return cache[name]

    return get
