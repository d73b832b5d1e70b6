import numpy as np
import pytest

from lrl_lab.core.base import PhaseState
from lrl_lab.core.integrator import IntegrationConfig, integrate
from lrl_lab.core.models import (Drag, Kepler, MICZ, PowerLaw, acceleration, build_model, poincare_project,
                                 rescale_similarity, signed_l)
from lrl_lab.utils.exceptions import BadParameter, UnsupportedFamily, ZeroAngularMomentum


def test_kepler_acceleration():
    m = build_model("kepler", {"mu": 2.0})
    assert isinstance(m, Kepler)
    a = acceleration(m, PhaseState(0.0, [2.0, 0.0, 0.0], [0.0, 1.0, 0.0]))
    assert np.allclose(a, [-0.5, 0.0, 0.0])


def test_power_law_with_alpha_minus_three_is_kepler():
    s = PhaseState(0.0, [1.0, 0.5, 0.0], [0.2, 1.1, 0.0])
    kepler = acceleration(Kepler(mu=1.5), s)
    power = acceleration(PowerLaw(mu=1.5, alpha=-3.0), s)
    assert np.allclose(power, kepler, rtol=1e-13, atol=1e-15)


def test_micz_without_charge_is_kepler():
    s = PhaseState(0.0, [1.0, 0.3, 0.2], [0.1, 0.9, -0.2])
    assert np.allclose(acceleration(MICZ(lam=0.0, mu=1.0), s), acceleration(Kepler(mu=1.0), s))


def test_central_angle_with_constant_law():
    # v(theta) = mu/L reduces r'' = -v L r/r^3 to Kepler
    s0 = PhaseState(0.0, [1.0, 0.0, 0.0], [0.0, 1.2, 0.0])
    m = build_model("central_angle", functions={"v": "1/L"}, s0=s0)
    assert m.v(0.3) == pytest.approx(1.0 / 1.2)
    assert np.allclose(acceleration(m, s0), acceleration(Kepler(mu=1.0), s0))


def test_angular_momentum_is_bound_for_function_strings():
    s0 = PhaseState(0.0, [1.0, 0.0, 0.0], [0.0, -0.7, 0.0])
    m = build_model("central_angle", functions={"v": "L*cos(th)"}, s0=s0)
    assert m.v(0.0) == pytest.approx(-0.7)


def test_build_model_errors():
    with pytest.raises(UnsupportedFamily):
        build_model("yukawa")
    with pytest.raises(BadParameter):
        build_model("central_angle")
    with pytest.raises(BadParameter):
        build_model("kepler", functions={"v": "1"})
    with pytest.raises(BadParameter):
        build_model("hamiltonian_angle", {"mu": 1.0})
    with pytest.raises(BadParameter):
        build_model("drag", {"f_kind": "stokes"})
    with pytest.raises(BadParameter):
        build_model("kepler", {"mu": "heavy"})


def test_drag_kinds():
    m = build_model("drag", {"f_kind": "danby", "alpha": 0.01, "mu": 1.0})
    assert isinstance(m, Drag)
    with pytest.raises(BadParameter):
        build_model("drag", {"g_kind": "angular"})


def test_planar_family_rejects_out_of_plane_state():
    m = build_model("central_angle", functions={"v": "1"})
    with pytest.raises(BadParameter):
        m.validate_state(PhaseState(0.0, [1.0, 0.0, 0.1], [0.0, 1.0, 0.0]))


def test_signed_l():
    assert signed_l(PhaseState(0.0, [1.0, 0.0, 0.0], [0.0, -2.0, 0.0])) == pytest.approx(-2.0)
    with pytest.raises(ZeroAngularMomentum):
        signed_l(PhaseState(0.0, [1.0, 0.0, 0.0], [3.0, 0.0, 0.0]))


def test_kepler_orbit_family_requires_angular_momentum():
    m = build_model("kepler_orbit_family", functions={"g": "1/r^3"})
    with pytest.raises(ZeroAngularMomentum):
        m.validate_state(PhaseState(0.0, [1.0, 0.0, 0.0], [0.5, 0.0, 0.0]))


def test_describe_reports_family_and_parameters():
    out = build_model("micz", {"lambda": 0.3}).describe()
    assert out == {"family": "micz", "lambda": 0.3, "mu": 1.0}
    assert build_model("power_law", {"alpha": -1.0}).describe()["alpha"] == -1.0


def test_rescale_similarity_maps_solutions_to_solutions():
    m = PowerLaw(mu=1.0, alpha=-1.0)
    s0 = PhaseState(0.0, [1.0, 0.0, 0.0], [0.0, 0.8, 0.0])
    cfg = IntegrationConfig((0.0, 3.0), rel_tol=1e-12, abs_tol=1e-14)
    traj = integrate(m, s0, cfg)
    gamma = 1.7
    image = rescale_similarity(m, traj, gamma)
    c = gamma ** 2.0
    assert np.allclose(image.r[0], c * s0.r)

    s_image = image.state(0)
    direct = integrate(m, s_image, IntegrationConfig((0.0, 3.0 * gamma), rel_tol=1e-12, abs_tol=1e-14))
    assert np.allclose(direct.r[-1], image.r[-1], rtol=1e-7, atol=1e-8)

    with pytest.raises(BadParameter):
        rescale_similarity(m, traj, -1.0)


def test_poincare_project_on_flgr_orbit(kepler_trajectory):
    m = build_model("flgr", {}, {"f": "0.3/r^3", "g": "1/r^4"})
    # E = 0.02 > 0 and r-dot = 0 at t = 0, so r^2 = 1 + 0.04 t^2 never vanishes
    s0 = PhaseState(0.0, [1.0, 0.0, 0.0], [0.0, 1.0, 0.2])
    traj = integrate(m, s0, IntegrationConfig((0.0, 5.0), rel_tol=1e-12, abs_tol=1e-14))
    assert poincare_project(traj, 0.3, samples=501) < 1e-5
    # dropping the monopole term misses lambda^2 / r^4 |w|
    assert poincare_project(traj, 0.0, samples=501) > 1e-2

    with pytest.raises(UnsupportedFamily):
        poincare_project(kepler_trajectory, 0.3)
