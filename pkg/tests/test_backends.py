"""Compiled and pure-Python kernels must agree and be individually stable."""

import os
import subprocess
import sys

import numpy as np
import pytest

from morphonmpc import _core
from morphonmpc import dynamics as dyn
from morphonmpc import integrator as integ
from morphonmpc.contact import ContactParams
from morphonmpc.nmpc import OcpConfig, ReferencePlan
from morphonmpc._core import kernels_py

kernels_c = pytest.importorskip(
    "morphonmpc._core.kernels_c",
    reason="compiled backend not built; agreement tests need both")


def _random_problem(rng, params):
    cfg = OcpConfig.fault_tolerant(params)
    x0 = dyn.hover_state((0.0, 0.0, 5.0))
    x0[0:3] += rng.normal(0, 0.5, 3)
    x0[3:5] += rng.normal(0, 0.2, 2)
    x0[14:20] += rng.normal(0, 0.5, 6)
    z = np.tile(cfg.input_reference, cfg.horizon)
    z += rng.normal(0, 1.0, z.size)
    z = np.clip(z, np.tile(cfg.input_lower, cfg.horizon),
                np.tile(cfg.input_upper, cfg.horizon))
    goal = dyn.hover_state((0.0, 0.0, 5.0))
    refs = ReferencePlan.hold(goal, cfg.horizon).stage_states
    return cfg, x0, z, refs


def test_rollout_agreement(params, rng):
    rp = params.packed()
    icfg = integ.IntegratorConfig()
    for _ in range(10):
        cfg, x0, z, refs = _random_problem(rng, params)
        oc = cfg.packed()
        c_c = kernels_c.rollout(x0, z, refs, rp, oc,
                                icfg.prediction_substeps, icfg.control_period)
        c_p = kernels_py.rollout(x0, z, refs, rp, oc,
                                 icfg.prediction_substeps, icfg.control_period)
        assert c_c == pytest.approx(c_p, rel=1e-9, abs=1e-9)


def test_rollout_traj_agreement(params, rng):
    rp = params.packed()
    icfg = integ.IntegratorConfig()
    cfg, x0, z, refs = _random_problem(rng, params)
    oc = cfg.packed()
    c_c, t_c = kernels_c.rollout(x0, z, refs, rp, oc,
                                 icfg.prediction_substeps,
                                 icfg.control_period, True)
    c_p, t_p = kernels_py.rollout(x0, z, refs, rp, oc,
                                  icfg.prediction_substeps,
                                  icfg.control_period, True)
    np.testing.assert_allclose(t_c, t_p, rtol=1e-9, atol=1e-11)


def test_gradient_agreement(params, rng):
    rp = params.packed()
    icfg = integ.IntegratorConfig()
    for _ in range(5):
        cfg, x0, z, refs = _random_problem(rng, params)
        oc = cfg.packed()
        c_c, g_c = kernels_c.rollout_grad(x0, z, refs, rp, oc,
                                          icfg.prediction_substeps,
                                          icfg.control_period)
        c_p, g_p = kernels_py.rollout_grad(x0, z, refs, rp, oc,
                                           icfg.prediction_substeps,
                                           icfg.control_period)
        assert c_c == pytest.approx(c_p, rel=1e-9)
        scale = max(1.0, float(np.abs(g_p).max()))
        np.testing.assert_allclose(g_c, g_p, atol=1e-6 * scale)


def test_rom_derivative_agreement(params, rng):
    rp = params.packed()
    for _ in range(20):
        x = dyn.hover_state((0, 0, 5))
        x += rng.normal(0, 0.3, 28)
        x[4] = np.clip(x[4], -1.2, 1.2)
        u = rng.uniform(0, 20, 12)
        d_c = kernels_c.rom_derivative(x, u, rp)
        d_p = kernels_py.rom_derivative(x, u, rp)
        np.testing.assert_allclose(d_c, d_p, rtol=1e-12, atol=1e-12)
        # and both match the reference implementation
        d_ref = dyn.rom_derivative(x, u, params, clamp_singularity=True)
        np.testing.assert_allclose(d_p, d_ref, rtol=1e-10, atol=1e-10)


def test_plant_advance_agreement(params):
    rp = params.packed()
    cp = ContactParams().packed()
    x = dyn.hover_state((0.0, 0.0, 0.7))
    u = np.zeros(12)
    x_c = kernels_c.plant_advance(x.copy(), u, rp, 1e-4, 2000, cp)
    x_p = kernels_py.plant_advance(x.copy(), u, rp, 1e-4, 2000, cp)
    np.testing.assert_allclose(x_c, x_p, rtol=1e-9, atol=1e-11)


def test_contact_accel_agreement(params):
    rp = params.packed()
    cp = ContactParams().packed()
    x = dyn.hover_state((0.0, 0.0, 0.498))
    x[14] = 0.2
    x[16] = -0.4
    x[3] = 0.05
    dv_c, dom_c = kernels_c.contact_accel(x, rp, cp)
    dv_p, dom_p = kernels_py.contact_accel(x, rp, cp)
    np.testing.assert_allclose(dv_c, dv_p, rtol=1e-10, atol=1e-12)
    np.testing.assert_allclose(dom_c, dom_p, rtol=1e-10, atol=1e-12)
    assert dv_p[2] > 0.0


def test_python_kernels_deterministic(params, rng):
    rp = params.packed()
    icfg = integ.IntegratorConfig()
    cfg, x0, z, refs = _random_problem(rng, params)
    oc = cfg.packed()
    a = kernels_py.rollout_grad(x0, z, refs, rp, oc,
                                icfg.prediction_substeps, icfg.control_period)
    b = kernels_py.rollout_grad(x0, z, refs, rp, oc,
                                icfg.prediction_substeps, icfg.control_period)
    assert a[0] == b[0]
    np.testing.assert_array_equal(a[1], b[1])


def test_compiled_kernels_deterministic(params, rng):
    rp = params.packed()
    icfg = integ.IntegratorConfig()
    cfg, x0, z, refs = _random_problem(rng, params)
    oc = cfg.packed()
    a = kernels_c.rollout_grad(x0, z, refs, rp, oc,
                               icfg.prediction_substeps, icfg.control_period)
    b = kernels_c.rollout_grad(x0, z, refs, rp, oc,
                               icfg.prediction_substeps, icfg.control_period)
    assert a[0] == b[0]
    np.testing.assert_array_equal(a[1], b[1])


@pytest.mark.parametrize("choice,expect", [
    ("python", "python"),
    ("compiled", "compiled"),
    ("auto", "compiled"),
])
def test_backend_env_selection(choice, expect):
    code = ("import morphonmpc; import sys; "
            "sys.stdout.write(morphonmpc.backend)")
    env = dict(os.environ, MORPHONMPC_BACKEND=choice)
    out = subprocess.run([sys.executable, "-c", code], capture_output=True,
                         text=True, env=env, check=True)
    assert out.stdout == expect


def test_backend_env_rejects_unknown():
    env = dict(os.environ, MORPHONMPC_BACKEND="fortran")
    out = subprocess.run([sys.executable, "-c", "import morphonmpc"],
                         capture_output=True, text=True, env=env)
    assert out.returncode != 0


def test_active_backend_reports():
    assert _core.backend in ("compiled", "python")
