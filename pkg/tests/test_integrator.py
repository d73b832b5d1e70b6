import math

import numpy as np
import pytest

from conftest import KEPLER_E, KEPLER_PERIOD
from lrl_lab.core.base import PhaseState
from lrl_lab.core.integrator import (IntegrationConfig, characteristic_time, drift_report, find_apsides,
                                     find_period, integrate, integrate_ode, trajectory_table)
from lrl_lab.core.models import Kepler, build_model
from lrl_lab.core.orbits import orbit_constants, orbit_residual
from lrl_lab.utils.exceptions import BadParameter, MaxSteps, NotPeriodic, StepUnderflow


def test_config_validation():
    with pytest.raises(BadParameter):
        IntegrationConfig((1.0, 1.0))
    with pytest.raises(BadParameter):
        IntegrationConfig((0.0, 1.0), rel_tol=0.0)
    with pytest.raises(BadParameter):
        IntegrationConfig((0.0, 1.0), max_steps=0)
    assert IntegrationConfig((0, 2)).span == 2.0


def test_integrate_ode_harmonic_oscillator():
    t, y, sol = integrate_ode(lambda t, y: np.array([y[1], -y[0]]), 0.0, [0.0, 1.0], math.pi / 2,
                              rel_tol=1e-12, abs_tol=1e-14)
    assert t[-1] == pytest.approx(math.pi / 2)
    assert y[-1, 0] == pytest.approx(1.0, rel=1e-10)
    assert sol(0.5)[0] == pytest.approx(math.sin(0.5), rel=1e-9)


def test_kepler_period_and_apsides(kepler_trajectory):
    assert find_period(kepler_trajectory) == pytest.approx(KEPLER_PERIOD, rel=1e-8)
    aps = find_apsides(kepler_trajectory)
    a = 1.0 / (-2.0 * KEPLER_E)
    assert aps.r_min == pytest.approx(1.0, rel=1e-9)
    assert aps.r_max == pytest.approx(2.0 * a - 1.0, rel=1e-9)
    assert aps.t_max == pytest.approx(KEPLER_PERIOD / 2, rel=1e-7)


def test_unwrapped_angle_passes_a_full_turn(kepler_trajectory):
    theta = kepler_trajectory.theta
    assert np.all(np.diff(theta) > 0)
    assert theta[-1] - theta[0] > 2 * math.pi


def test_kepler_invariants_are_conserved(kepler_model, kepler_trajectory):
    report = drift_report(kepler_model, kepler_trajectory)
    assert set(report.max_rel_drift) == {"E", "L", "J", "K"}
    for name, drift in report.max_rel_drift.items():
        assert drift < 1e-8, name
    assert report.to_dict()["initial"]["E"] == pytest.approx(KEPLER_E)


def test_trajectory_table(kepler_trajectory):
    header, rows = trajectory_table(kepler_trajectory)
    assert header[:9] == ["t", "x", "y", "z", "vx", "vy", "vz", "theta_unwrapped", "phi_unwrapped"]
    assert "E" in header and "J_x" in header
    assert rows.shape == (len(kepler_trajectory), len(header))


def test_dense_output_matches_samples(kepler_trajectory):
    i = len(kepler_trajectory) // 2
    row = kepler_trajectory.dense(kepler_trajectory.t[i])
    assert np.allclose(row, kepler_trajectory.y[i], rtol=1e-12, atol=1e-12)


def test_max_steps(kepler_model, kepler_state):
    with pytest.raises(MaxSteps) as exc:
        integrate(kepler_model, kepler_state, IntegrationConfig((0.0, 100.0), max_steps=3))
    assert exc.value.details["max_steps"] == 3


def test_radial_infall_underflows():
    s0 = PhaseState(0.0, [1.0, 0.0, 0.0], [0.0, 0.0, 0.0])
    with pytest.raises(StepUnderflow):
        integrate(Kepler(mu=1.0), s0, IntegrationConfig((0.0, 5.0)))


def test_inward_spiral_underflows():
    s0 = PhaseState(0.0, [1.0, 0.0, 0.0], [0.0, 1.0, 0.0])
    m = build_model("central_angle", {"a": 0.3, "b": 1.0}, {"v": "(a*th+b)/L"}, s0)
    # 1/r = 1 + 0.3 th - 0.3 sin th grows without bound and t = integral of r^2 d th converges
    with pytest.raises(StepUnderflow) as exc:
        integrate(m, s0, IntegrationConfig((0.0, 200.0)))
    assert exc.value.details["r"] < 1e-2
    assert exc.value.details["t"] < 4.0
    assert exc.value.details["turns"] >= 8

    early = integrate(m, s0, IntegrationConfig((0.0, 2.0), rel_tol=1e-11, abs_tol=1e-13))
    assert orbit_residual(m, orbit_constants(m, s0), early, samples=40) < 1e-7


def test_short_span_is_not_periodic(kepler_model, kepler_state):
    traj = integrate(kepler_model, kepler_state, IntegrationConfig((0.0, 1.0)))
    with pytest.raises(NotPeriodic):
        find_period(traj)


def test_characteristic_time(kepler_model, kepler_state):
    assert characteristic_time(kepler_model, kepler_state) == pytest.approx(2 * math.pi / 1.2)
