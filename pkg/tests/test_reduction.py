import math

import numpy as np
import pytest

from conftest import KEPLER_J, KEPLER_L
from lrl_lab.core.base import PhaseState
from lrl_lab.core.integrator import IntegrationConfig, integrate
from lrl_lab.core.invariants import evaluate
from lrl_lab.core.models import Kepler, build_model
from lrl_lab.core.reduction import eb_constants, eb_series, harmonic_residual, reduce, reduce_many
from lrl_lab.core.thirdlaw import power_law_orbit
from lrl_lab.utils.exceptions import BadParameter, InsufficientSamples, NonMonotoneAngle, UnsupportedFamily


@pytest.fixture(scope="module")
def kepler_reduced(kepler_model, kepler_trajectory):
    return reduce(kepler_model, kepler_trajectory)


def test_kepler_reduction_is_harmonic(kepler_reduced):
    rt = kepler_reduced
    assert rt.variable == "theta"
    assert rt.dy == pytest.approx(0.02)
    assert np.allclose(rt.extra["u2"], KEPLER_L, rtol=1e-8)
    assert rt.drift()["u2"] < 1e-8
    assert harmonic_residual(rt) < 1e-6


def test_kepler_u1_is_projected_lrl_vector(kepler_reduced):
    rt = kepler_reduced
    assert np.allclose(rt.u1, -KEPLER_J * np.cos(rt.y), atol=1e-8)
    assert np.allclose(rt.u1prime, KEPLER_J * np.sin(rt.y), atol=1e-8)


def test_eb_constants(kepler_reduced):
    eb = eb_constants(kepler_reduced)
    assert eb.modulus == pytest.approx(KEPLER_J, rel=1e-8)
    assert eb.J_plus == pytest.approx(eb.J_minus.conjugate(), abs=1e-10)
    assert eb.scatter < 1e-8
    assert eb.to_dict()["modulus"] == eb.modulus
    assert eb_series(kepler_reduced).shape == (len(kepler_reduced),)


def test_table_layout(kepler_reduced):
    header, rows = kepler_reduced.table()
    assert header == ["y", "u1", "u1prime", "u2"]
    assert rows.shape == (len(kepler_reduced), 4)
    assert rows[0, 0] == pytest.approx(0.0)


def test_power_law_reduction():
    m, s0 = power_law_orbit(-1.0, 0.4)
    traj = integrate(m, s0, IntegrationConfig((0.0, 10.0), rel_tol=1e-11, abs_tol=1e-13))
    rt = reduce(m, traj, dy=0.01)
    assert harmonic_residual(rt) < 1e-6
    assert eb_constants(rt).modulus == pytest.approx(0.4, rel=1e-7)
    assert rt.drift()["u2"] < 1e-8


def test_magnitude_conserved_reduces_in_azimuth():
    m = build_model("magnitude_conserved", {"k": 1.0}, {"h": "0.3/r"})
    s0 = PhaseState(0.0, [1.0, 0.0, 0.0], [0.0, 0.9, 0.3])
    traj = integrate(m, s0, IntegrationConfig((0.0, 15.0), rel_tol=1e-11, abs_tol=1e-13))
    rt = reduce(m, traj)
    assert rt.variable == "phi"
    assert set(rt.extra) == {"u2", "u3"}
    J = evaluate(m, s0)["J"]
    assert np.allclose(rt.extra["u3"], J[2], atol=1e-7)
    assert harmonic_residual(rt) < 1e-6
    assert eb_constants(rt).modulus == pytest.approx(math.hypot(J[0], J[1]), rel=1e-6)


def test_reduce_many_keeps_order(kepler_model, kepler_trajectory):
    short = integrate(kepler_model, kepler_trajectory.state(0), IntegrationConfig((0.0, 2.0)))
    first, second = reduce_many(kepler_model, [kepler_trajectory, short], dy=0.05, workers=2)
    assert len(first) > len(second)


def test_reduction_errors(kepler_model, kepler_trajectory, micz_model, micz_trajectory):
    with pytest.raises(UnsupportedFamily):
        reduce(micz_model, micz_trajectory)
    with pytest.raises(BadParameter):
        reduce(kepler_model, kepler_trajectory, dy=0.0)
    with pytest.raises(InsufficientSamples):
        harmonic_residual(reduce(kepler_model, kepler_trajectory, dy=3.0))


def test_radial_motion_has_no_reduction():
    m = Kepler(mu=1.0)
    traj = integrate(m, PhaseState(0.0, [1.0, 0.0, 0.0], [0.5, 0.0, 0.0]), IntegrationConfig((0.0, 0.5)))
    with pytest.raises(NonMonotoneAngle):
        reduce(m, traj)


def test_danby_drag_reduction():
    m = build_model("drag", {"f_kind": "danby", "alpha": 0.01, "mu": 1.0})
    s0 = PhaseState(0.0, [1.0, 0.0, 0.0], [0.0, 1.1, 0.0])
    traj = integrate(m, s0, IntegrationConfig((0.0, 15.0), rel_tol=1e-11, abs_tol=1e-13))
    rt = reduce(m, traj)
    assert rt.variable == "theta"
    assert harmonic_residual(rt) < 1e-6
    assert eb_constants(rt).scatter < 1e-6


def test_direction_only_reduction():
    m = build_model("direction_only", {}, {"U": "1", "V": "0.05"})
    s0 = PhaseState(0.0, [1.0, 0.0, 0.0], [0.0, 1.1, 0.0])
    traj = integrate(m, s0, IntegrationConfig((0.0, 8.0), rel_tol=1e-11, abs_tol=1e-13))
    rt = reduce(m, traj)
    assert harmonic_residual(rt) < 1e-6
    # 1/L with the quadrature growth removed stays at 1/L0
    assert np.allclose(rt.extra["u2"], 1.0 / 1.1, rtol=1e-7)
