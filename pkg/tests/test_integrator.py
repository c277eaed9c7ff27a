"""Fixed-step RK4 and the one-control-period discretization."""

import math

import numpy as np
import pytest
from scipy.linalg import expm

from morphonmpc.errors import ValidationError
from morphonmpc.integrator import IntegratorConfig, discretize, rk4_step


def test_zero_field_is_identity():
    x = np.array([1.0, -2.0, 3.0])
    out = rk4_step(lambda x, u: np.zeros_like(x), x, None, 0.1)
    np.testing.assert_array_equal(out, x)


def test_scalar_decay_step():
    out = rk4_step(lambda x, u: -x, np.array([1.0]), None, 0.1)
    assert abs(out[0] - math.exp(-0.1)) <= 1e-7


def test_constant_field_exact():
    out = rk4_step(lambda x, u: np.ones_like(x), np.array([2.0]), None, 0.25)
    assert out[0] == 2.25


def test_order_four_convergence():
    # x' = -x over [0, 1]; halving h should cut the error ~16x
    def err(h):
        x = np.array([1.0])
        for _ in range(int(round(1.0 / h))):
            x = rk4_step(lambda x, u: -x, x, None, h)
        return abs(x[0] - math.exp(-1.0))

    slope = math.log2(err(0.1) / err(0.05))
    assert 3.7 <= slope <= 4.3


def test_discretize_single_substep_matches_rk4():
    cfg = IntegratorConfig(prediction_substeps=1)

    def f(x, u):
        return np.array([x[1], -math.sin(x[0])])

    x = np.array([0.4, -0.2])
    np.testing.assert_array_equal(discretize(f, x, None, cfg),
                                  rk4_step(f, x, None, cfg.control_period))


def test_discretize_matches_matrix_exponential(rng):
    cfg = IntegratorConfig()
    for _ in range(10):
        a = rng.uniform(-1, 1, (4, 4))
        a *= min(1.0, 2.0 / np.linalg.norm(a, 2))
        x = rng.uniform(-1, 1, 4)
        out = discretize(lambda s, u: a @ s, x, None, cfg)
        np.testing.assert_allclose(out, expm(a * cfg.control_period) @ x,
                                   atol=1e-6)


def test_richardson_ratio():
    # smooth nonlinear field: doubling the substeps divides the error ~16x
    def f(x, u):
        return np.array([x[1], -math.sin(x[0]) - 0.1 * x[1]])

    x0 = np.array([1.0, 0.0])
    ref = discretize(f, x0, None, IntegratorConfig(prediction_substeps=160))
    e1 = np.linalg.norm(
        discretize(f, x0, None, IntegratorConfig(prediction_substeps=5)) - ref)
    e2 = np.linalg.norm(
        discretize(f, x0, None, IntegratorConfig(prediction_substeps=10)) - ref)
    assert 12.0 <= e1 / e2 <= 20.0


def test_zero_order_hold():
    seen = []

    def f(x, u):
        seen.append(u)
        return -x

    u0 = np.array([3.0])
    discretize(f, np.array([1.0]), u0, IntegratorConfig(prediction_substeps=7))
    assert len(seen) == 4 * 7
    assert all(u is u0 for u in seen)


def test_determinism():
    def f(x, u):
        return np.array([x[1], -x[0] ** 3])

    x = np.array([0.3, 0.7])
    a = discretize(f, x, None, IntegratorConfig())
    b = discretize(f, x, None, IntegratorConfig())
    np.testing.assert_array_equal(a, b)


def test_config_properties():
    cfg = IntegratorConfig().validate()
    assert cfg.plant_substeps == 1000
    assert cfg.prediction_step == pytest.approx(0.02)
    fast = IntegratorConfig(plant_step=1e-3).validate()
    assert fast.plant_substeps == 100


@pytest.mark.parametrize("kw", [
    dict(plant_step=0.0),
    dict(plant_step=-1e-4),
    dict(control_period=0.0),
    dict(prediction_substeps=0),
    dict(plant_step=3e-4),  # 0.1 not an integer multiple
])
def test_config_rejects(kw):
    with pytest.raises(ValidationError):
        IntegratorConfig(**kw).validate()
