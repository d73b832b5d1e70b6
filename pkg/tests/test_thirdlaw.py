import math

import numpy as np
import pytest

from conftest import KEPLER_E, KEPLER_J, KEPLER_PERIOD
from lrl_lab.core.base import PhaseState
from lrl_lab.core.integrator import IntegrationConfig, integrate
from lrl_lab.core.models import MICZ, PowerLaw, build_model
from lrl_lab.core.thirdlaw import (FOUR_PI_SQ, ExplicitConstants, explicit_constants, explicit_solution,
                                   generalized_period, kepler_period, law_rhs, lawscan, micz_third_law, period_report,
                                   power_law_elements, power_law_orbit, third_law_residual)
from lrl_lab.utils.exceptions import BadParameter, NotPeriodic, UnsupportedFamily


def test_kepler_period():
    assert kepler_period(1.0, KEPLER_E) == pytest.approx(KEPLER_PERIOD)
    with pytest.raises(BadParameter):
        kepler_period(1.0, 0.1)
    with pytest.raises(BadParameter):
        kepler_period(-1.0, -0.1)


def test_kepler_period_report(kepler_model, kepler_state):
    rep = period_report(kepler_model, kepler_state)
    assert rep.T == pytest.approx(KEPLER_PERIOD)
    assert rep.e == pytest.approx(KEPLER_J)
    assert rep.law_residual < 1e-12
    assert rep.to_dict()["T_quadrature"] is None


@pytest.mark.parametrize("e", [0.0, 0.3, 0.8])
def test_law_rhs_reduces_to_kepler(e):
    assert law_rhs(-3.0, 2.0, e) == pytest.approx(FOUR_PI_SQ / 2.0, rel=1e-10)


def test_power_law_with_kepler_exponent_has_kepler_period(kepler_state):
    rep = period_report(PowerLaw(mu=1.0, alpha=-3.0), kepler_state)
    assert rep.T == pytest.approx(KEPLER_PERIOD, rel=1e-10)
    assert rep.T_quadrature == pytest.approx(rep.T, rel=1e-10)
    assert rep.cross_check < 1e-8
    assert rep.e == pytest.approx(KEPLER_J, rel=1e-12)


def test_power_law_elements_regime():
    with pytest.raises(BadParameter):
        power_law_elements(1.0, 1.0, 0.2, 0.1)
    with pytest.raises(BadParameter):
        power_law_elements(1.0, 0.0, -0.2, 0.1)


@pytest.mark.parametrize("e", [0.1, 0.4, 0.7])
@pytest.mark.parametrize("alpha", [-3.0, -1.0, 0.0, 1.0, 3.0])
def test_measured_third_law(alpha, e):
    m, s0 = power_law_orbit(alpha, e)
    predicted = period_report(m, s0).T
    traj = integrate(m, s0, IntegrationConfig((0.0, 1.1 * predicted), rel_tol=1e-11, abs_tol=1e-13))
    check = third_law_residual(alpha, 1.0, e, traj)
    assert check.T == pytest.approx(predicted, rel=1e-6)
    assert check.relative <= 1e-5
    fitted = third_law_residual(alpha, 1.0, None, traj)
    assert fitted.e == pytest.approx(e, rel=1e-6)


@pytest.mark.parametrize("alpha", [-3.0, -1.0])
def test_law_rhs_is_eccentricity_free(alpha):
    for e in (0.0, 0.1, 0.4, 0.7, 0.95):
        assert law_rhs(alpha, 1.0, e) == pytest.approx(FOUR_PI_SQ, rel=1e-8)


@pytest.mark.parametrize("alpha, power", [(1.0, 1), (3.0, 3)])
def test_period_against_semilatus_rectum(alpha, power):
    # T^2 l = 4 pi^2 for alpha = 1 and T^2 l^3 = 4 pi^2 for alpha = 3, whatever e
    for l in (0.5, 1.0, 2.0):
        for e in (0.1, 0.4, 0.7):
            m, s0 = power_law_orbit(alpha, e, l=l)
            rep = period_report(m, s0)
            assert rep.l == pytest.approx(l, rel=1e-12)
            assert rep.T ** 2 * rep.l ** power == pytest.approx(FOUR_PI_SQ, rel=1e-10)
    measured = []
    for e in (0.1, 0.4, 0.7):
        m, s0 = power_law_orbit(alpha, e)
        traj = integrate(m, s0, IntegrationConfig((0.0, 1.1 * period_report(m, s0).T), rel_tol=1e-11,
                                                  abs_tol=1e-13))
        measured.append(third_law_residual(alpha, 1.0, e, traj).T ** 2)
    assert np.allclose(measured, FOUR_PI_SQ, rtol=1e-6)


def test_harmonic_exponent_period_is_angular():
    m, s0 = power_law_orbit(1.0, 0.5)
    assert period_report(m, s0).T == pytest.approx(2 * math.pi, rel=1e-10)


def test_power_law_orbit_validation():
    with pytest.raises(BadParameter):
        power_law_orbit(-1.0, 1.0)
    with pytest.raises(BadParameter):
        power_law_orbit(-1.0, 0.2, l=0.0)


@pytest.mark.parametrize("alpha", [-1.0, 1.0])
def test_explicit_solutions_follow_the_integration(alpha):
    m, s0 = power_law_orbit(alpha, 0.4)
    consts = explicit_constants(m, s0)
    assert explicit_solution(alpha, consts, consts.t0).state.r == pytest.approx(s0.radius, rel=1e-10)
    traj = integrate(m, s0, IntegrationConfig((0.0, 12.0), rel_tol=1e-12, abs_tol=1e-14))
    for t in (0.7, 2.3, 6.1, 11.5):
        point = explicit_solution(alpha, consts, t)
        row = traj.dense(t)
        assert point.state.r == pytest.approx(float(np.linalg.norm(row[0:3])), rel=1e-8)
        assert point.state.theta == pytest.approx(float(row[6]), rel=1e-8, abs=1e-8)


@pytest.mark.parametrize("alpha", [-1.0, 1.0])
def test_explicit_area_rate(alpha):
    m, s0 = power_law_orbit(alpha, 0.4)
    consts = explicit_constants(m, s0)
    h = 1e-4
    for t in (0.4, 3.3):
        point = explicit_solution(alpha, consts, t)
        rate = (explicit_solution(alpha, consts, t + h).S - explicit_solution(alpha, consts, t - h).S) / (2 * h)
        assert rate == pytest.approx(0.5 * point.state.r ** 2 * point.state.thetadot, rel=1e-7)


def test_explicit_solution_rejects_other_exponents():
    consts = ExplicitConstants(1.0, 1.0, -0.4, 0.2)
    with pytest.raises(BadParameter):
        explicit_solution(-2.0, consts, 1.0)
    with pytest.raises(BadParameter):
        explicit_solution(-1.0, ExplicitConstants(1.0, 1.0, 0.1, 0.2), 1.0)


def test_micz_third_law(micz_trajectory):
    rep = micz_third_law(micz_trajectory)
    assert rep.residual / FOUR_PI_SQ < 1e-7
    assert rep.T > 0 and rep.R > 0 and rep.plane_semi_major > 0


def test_micz_third_law_needs_bound_micz(kepler_trajectory):
    with pytest.raises(UnsupportedFamily):
        micz_third_law(kepler_trajectory)
    m = MICZ(lam=0.3, mu=1.0)
    s0 = PhaseState(0.0, [1.0, 0.0, 0.0], [0.0, 1.6, 0.0])
    traj = integrate(m, s0, IntegrationConfig((0.0, 1.0)))
    with pytest.raises(NotPeriodic):
        micz_third_law(traj)


def test_period_report_unsupported_family():
    m = build_model("monopole")
    with pytest.raises(UnsupportedFamily):
        period_report(m, PhaseState(0.0, [1.0, 0.0, 0.0], [0.0, 1.0, 0.0]))


def test_lawscan_keeps_grid_order():
    rows = lawscan([-1.0, 1.0], [0.3, 0.6], workers=2)
    assert [(row.alpha, row.e) for row in rows] == [(-1.0, 0.3), (-1.0, 0.6), (1.0, 0.3), (1.0, 0.6)]
    for row in rows:
        assert row.residual < 1e-7


@pytest.mark.parametrize("alpha", [-3.0, 0.0, 1.0, 2.5])
def test_generalized_period_closed_form_matches_quadrature(alpha):
    # mu = k = 1, E = -0.32, J = 0.6: z = 1.25 and e = 0.6
    rep = generalized_period(alpha, 1.0, 1.0, -0.32, 0.6)
    assert rep.e == pytest.approx(0.6)
    assert rep.R == pytest.approx(1.0 / 0.64)
    assert rep.cross_check < 1e-8
    assert rep.T_quadrature == pytest.approx(rep.T, rel=1e-8)
    assert rep.law_residual < 1e-8 * law_rhs(alpha, 1.0, 0.6)
    if alpha == -3.0:
        assert rep.T == pytest.approx(2.0 * math.pi / 0.64 ** 1.5)
    if alpha == 1.0:
        assert rep.T == pytest.approx(2.0 * math.pi)


def test_generalized_period_rejects_open_orbits():
    with pytest.raises(BadParameter):
        generalized_period(-1.0, 1.0, 1.0, -0.32, 1.2)
    with pytest.raises(BadParameter):
        generalized_period(-1.0, 1.0, 1.0, 0.1, 0.6)
