import math

import numpy as np
import pytest

from conftest import KEPLER_E, KEPLER_J, KEPLER_L
from lrl_lab.core.base import PhaseState
from lrl_lab.core.integrator import IntegrationConfig, drift_report, integrate
from lrl_lab.core.invariants import (danby_z, evaluate, hamiltonian_from_integrals, relations_check,
                                     l_of_theta, rescaled_integrals, z_convolution, z_pair)
from lrl_lab.core.models import HamiltonianAngle, MagnitudeConserved, build_model
from lrl_lab.core.orbits import orbit_constants
from lrl_lab.utils.exceptions import BadParameter, SingularOrbit, UnsupportedFamily


def test_kepler_values(kepler_model, kepler_state):
    inv = evaluate(kepler_model, kepler_state)
    assert inv["E"] == pytest.approx(KEPLER_E)
    assert np.allclose(inv["L"], [0.0, 0.0, KEPLER_L])
    assert np.allclose(inv["J"], [KEPLER_J, 0.0, 0.0])
    assert np.allclose(inv["K"], [0.0, KEPLER_J / KEPLER_L, 0.0])
    assert sorted(inv.names()) == ["E", "J", "K", "L"]


def test_kepler_relations(kepler_model):
    s = PhaseState(0.0, [0.7, -0.4, 0.3], [0.2, 0.9, -0.5])
    for name, residual in relations_check(kepler_model, evaluate(kepler_model, s)).items():
        assert residual < 1e-12, name


def test_micz_relations(micz_model, micz_state):
    inv = evaluate(micz_model, micz_state)
    residuals = relations_check(micz_model, inv, micz_state)
    assert set(residuals) == {"P2_vs_L2", "J2_vs_energy", "J_dot_P", "plane_offset"}
    for name, residual in residuals.items():
        assert residual < 1e-12, name


def test_micz_integrals_are_conserved(micz_model, micz_trajectory):
    report = drift_report(micz_model, micz_trajectory)
    for name in ("P", "J", "H", "L_mag"):
        assert report.max_rel_drift[name] < 1e-7, name


def test_magnitude_conserved_identity():
    m = build_model("magnitude_conserved", {"k": 1.0}, {"h": "0.3/r"})
    assert isinstance(m, MagnitudeConserved)
    s = PhaseState(0.0, [1.0, 0.2, 0.1], [-0.1, 0.9, 0.3])
    residuals = relations_check(m, evaluate(m, s))
    assert residuals["J2_vs_energy"] < 1e-12


def test_magnitude_conserved_vector_is_conserved():
    m = build_model("magnitude_conserved", {"k": 1.0}, {"h": "0.3/r"})
    s0 = PhaseState(0.0, [1.0, 0.0, 0.0], [0.0, 0.9, 0.3])
    traj = integrate(m, s0, IntegrationConfig((0.0, 15.0), rel_tol=1e-11, abs_tol=1e-13))
    report = drift_report(m, traj)
    assert report.max_rel_drift["J"] < 1e-7
    assert report.max_rel_drift["I"] < 1e-7


def test_central_angle_vectors_are_conserved():
    s0 = PhaseState(0.0, [1.0, 0.0, 0.0], [0.0, 1.1, 0.0])
    m = build_model("central_angle", functions={"v": "1 + 0.2*cos(th)"}, s0=s0)
    traj = integrate(m, s0, IntegrationConfig((0.0, 10.0), rel_tol=1e-11, abs_tol=1e-13))
    report = drift_report(m, traj)
    assert report.max_abs_drift["J"] < 1e-7
    assert report.max_abs_drift["K"] < 1e-7


def test_hamiltonian_angle_integrals():
    m = HamiltonianAngle(mu=1.0, alpha=0.5, beta=0.3)
    s0 = PhaseState(0.0, [1.0, 0.2, 0.0], [-0.1, 1.0, 0.0])
    inv = evaluate(m, s0)
    H = float(inv["H"])
    assert hamiltonian_from_integrals(m, inv["J1"], inv["J2"], inv["I"]) == pytest.approx(H, rel=1e-10)
    residuals = relations_check(m, inv)
    assert residuals["integrals_quadric"] < 1e-10
    assert residuals["H_from_integrals"] < 1e-10

    traj = integrate(m, s0, IntegrationConfig((0.0, 10.0), rel_tol=1e-11, abs_tol=1e-13))
    report = drift_report(m, traj)
    for name in ("J1", "J2", "I", "H"):
        assert report.max_abs_drift[name] < 1e-7, name

    scaled = rescaled_integrals(m, inv["J1"], inv["J2"], inv["I"], H)
    quadric = scaled["A"] ** 2 + scaled["B"] ** 2 - math.copysign(1.0, H) * scaled["C"] ** 2
    assert quadric == pytest.approx(scaled["mu_pm"] ** 2, rel=1e-9)


def test_z_pair_constant_source():
    zp = z_pair(lambda th: 1.0, 0.0, 2.0, check=True)
    assert zp.z == pytest.approx(1.0 - math.cos(2.0), rel=1e-10)
    assert zp.zprime == pytest.approx(math.sin(2.0), rel=1e-10)
    assert zp.convolution_residual < 1e-10
    assert z_pair(lambda th: 1.0, 0.5, 0.5).z == 0.0


def test_z_convolution_backwards():
    z, zprime = z_convolution(lambda th: 1.0, 0.0, -1.0)
    assert z == pytest.approx(1.0 - math.cos(1.0), rel=1e-10)
    assert zprime == pytest.approx(-math.sin(1.0), rel=1e-10)


def test_danby_closed_form_matches_quadrature():
    k, alpha, mu = 2.0, 0.1, 1.0
    closed = danby_z(k, alpha, mu, 0.0, 1.5)
    assert closed.method == "closed_form"
    zc, zpc = z_convolution(lambda eta: mu / (k - alpha * eta) ** 2, 0.0, 1.5)
    assert closed.z == pytest.approx(zc, rel=1e-9, abs=1e-12)
    assert closed.zprime == pytest.approx(zpc, rel=1e-9, abs=1e-12)


def test_danby_large_u_switches_to_quadrature():
    result = danby_z(2.0, 1e-4, 1.0, 0.0, 1.0)
    assert result.method == "quadrature"
    reference = z_pair(lambda eta: 1.0 / (2.0 - 1e-4 * eta) ** 2, 0.0, 1.0)
    assert result.z == pytest.approx(reference.z, rel=1e-9)


def test_danby_rejects_bad_ranges():
    with pytest.raises(BadParameter):
        danby_z(1.0, 0.0, 1.0, 0.0, 1.0)
    with pytest.raises(BadParameter):
        danby_z(1.0, 1.0, 1.0, 0.0, 2.0)


def test_unknown_model_type():
    class Bare:
        family = "bare"

    with pytest.raises(UnsupportedFamily):
        evaluate(Bare(), PhaseState(0.0, [1, 0, 0], [0, 1, 0]))


def test_l_of_theta_follows_integration():
    m = build_model("direction_only", {}, {"U": "1", "V": "0.05"})
    s0 = PhaseState(0.0, [1.0, 0.0, 0.0], [0.0, 1.1, 0.0])
    consts = orbit_constants(m, s0)
    J = consts.j_components()
    assert J == pytest.approx((0.21, -0.1))

    traj = integrate(m, s0, IntegrationConfig((0.0, 4.0), rel_tol=1e-12, abs_tol=1e-14))
    for i in (len(traj) // 2, len(traj) - 1):
        Lz = float(np.cross(traj.r[i], traj.v[i])[2])
        assert l_of_theta(m, consts.L0, J, consts.theta0, float(traj.theta[i])) == pytest.approx(Lz, rel=1e-7)
    assert abs(Lz) < 1.1


def test_l_of_theta_edge_cases():
    free = build_model("direction_only", {}, {"U": "1", "V": "0"})
    assert l_of_theta(free, 1.3, (0.0, 0.0), 0.0, 2.0) == 1.3

    m = build_model("direction_only", {}, {"U": "0.1", "V": "0.05"})
    with pytest.raises(SingularOrbit):
        l_of_theta(m, 1.0, (1.0, 0.0), 0.0, math.pi)


@pytest.fixture(scope="module")
def danby():
    m = build_model("drag", {"f_kind": "danby", "alpha": 0.01, "mu": 1.0})
    s0 = PhaseState(0.0, [1.0, 0.0, 0.0], [0.0, 1.1, 0.0])
    traj = integrate(m, s0, IntegrationConfig((0.0, 15.0), rel_tol=1e-11, abs_tol=1e-13))
    return m, s0, traj


def test_danby_angular_momentum_falls_linearly_in_angle(danby):
    m, s0, traj = danby
    L = np.cross(traj.r, traj.v)[:, 2]
    assert traj.theta[-1] > 2.0 * math.pi
    assert np.polyfit(traj.theta, L, 1)[0] == pytest.approx(-0.01, rel=1e-7)
    assert np.allclose(L + 0.01 * traj.theta, 1.1, atol=1e-9)


def test_danby_integrals_are_conserved(danby):
    m, s0, traj = danby
    report = drift_report(m, traj)
    for name in ("J", "K", "I", "angular_law"):
        assert report.max_rel_drift[name] < 1e-7, name


def test_time_dependent_integrals_are_conserved():
    m = build_model("time_dependent", functions={"g": "1 + 0.1*t", "v": "1"})
    s0 = PhaseState(0.0, [1.0, 0.0, 0.0], [0.0, 1.0, 0.0])
    inv = evaluate(m, s0)
    # w = g v - g' r = (-0.1, 1, 0) and I = |w|^2 / 2 - v L g / r
    assert inv["I"] == pytest.approx(-0.495)
    traj = integrate(m, s0, IntegrationConfig((0.0, 10.0), rel_tol=1e-11, abs_tol=1e-13))
    report = drift_report(m, traj)
    for name in ("L", "K", "J", "I"):
        assert report.max_rel_drift[name] < 1e-7, name


def test_monopole_integrals():
    m = build_model("monopole", {"mu": 0.5})
    s0 = PhaseState(0.0, [1.0, 0.0, 0.3], [0.0, 1.0, 0.2])
    inv = evaluate(m, s0)
    rhat = np.asarray(s0.r) / np.linalg.norm(s0.r)
    assert float(np.asarray(inv["P"]) @ rhat) == pytest.approx(-0.5)
    assert inv["E"] == pytest.approx(0.5 * 1.04)
    traj = integrate(m, s0, IntegrationConfig((0.0, 10.0), rel_tol=1e-11, abs_tol=1e-13))
    report = drift_report(m, traj)
    for name in ("L_mag", "P", "E"):
        assert report.max_rel_drift[name] < 1e-8, name
