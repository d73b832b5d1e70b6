import numpy as np
import pytest

from lrl_lab.core.poisson import (BracketStructure, Observable, algebra_check, bracket, bracket_observable,
                                  build_suite, gradient, levi_civita)
from lrl_lab.utils.constants import DEFAULT_VALUES, VALIDATION_RULES
from lrl_lab.utils.exceptions import BadParameter, NumericalBreakdown, RegimeViolation

SUITES = VALIDATION_RULES["pbcheck"]["suite"]["values"]


def _coordinate(name, index, momentum=False, dim=3):
    return Observable(name, lambda q, p: (p if momentum else q)[index], dim)


def test_levi_civita():
    assert levi_civita(0, 1, 2) == 1
    assert levi_civita(2, 0, 1) == 1
    assert levi_civita(1, 0, 2) == -1
    assert levi_civita(0, 0, 2) == 0


def test_canonical_pairs():
    point = (np.array([0.3, -1.2, 0.8]), np.array([0.5, 0.1, -0.4]))
    for i in range(3):
        for j in range(3):
            value = bracket(_coordinate("q", i), _coordinate("p", j, momentum=True), point)
            assert value == pytest.approx(1.0 if i == j else 0.0, abs=1e-9)


def test_bracket_is_antisymmetric():
    F = Observable("F", lambda q, p: q[0] * p[1] ** 2 + np.sin(q[2]), 3)
    G = Observable("G", lambda q, p: q @ p + q[1] ** 3, 3)
    point = np.array([0.4, 1.1, -0.7, 0.2, -0.5, 0.9])
    for structure in (BracketStructure(), BracketStructure.micz(0.3)):
        assert bracket(F, G, point, structure) == -bracket(G, F, point, structure)


def test_micz_bracket_of_momenta():
    lam = 0.4
    q = np.array([0.6, -0.8, 1.2])
    point = (q, np.array([0.1, 0.2, 0.3]))
    p1 = _coordinate("p1", 0, momentum=True)
    p2 = _coordinate("p2", 1, momentum=True)
    expected = lam * q[2] / np.linalg.norm(q) ** 3
    assert bracket(p1, p2, point, BracketStructure.micz(lam)) == pytest.approx(expected, rel=1e-9)


def test_nested_bracket_observable():
    L3 = Observable("L3", lambda q, p: q[0] * p[1] - q[1] * p[0], 3)
    x = _coordinate("x", 0)
    inner = bracket_observable(L3, x)
    assert inner.name == "{L3,x}"
    assert inner(np.array([0.5, 0.7, 0.1]), np.zeros(3)) == pytest.approx(0.7, rel=1e-8)


def test_gradient_detects_kinks():
    step = DEFAULT_VALUES["poisson"]["step"]
    kink = Observable("kink", lambda q, p: abs(q[0] - 0.5 * step), 1)
    with pytest.raises(NumericalBreakdown):
        gradient(kink, (np.array([0.0]), np.array([1.0])))


def test_point_shape_is_checked():
    F = _coordinate("x", 0)
    with pytest.raises(BadParameter):
        gradient(F, np.zeros(5))
    with pytest.raises(BadParameter):
        bracket(F, _coordinate("y", 0, dim=2), np.zeros(6))
    with pytest.raises(BadParameter):
        BracketStructure("symplectic")


@pytest.mark.parametrize("suite", SUITES)
def test_suites_close(suite):
    report = algebra_check(suite, points=3, seed=7)
    assert report.points == 3
    assert report.residuals
    assert report.max_residual < 1e-6, max(report.residuals, key=report.residuals.get)


def test_kepler_negative_report_keys():
    report = algebra_check("kepler_negative", {"mu": 2.0}, points=2)
    assert "{L1,L2}" in report.residuals
    assert "{Js1,Js2}" in report.residuals
    assert "{J3,H}" in report.residuals
    assert "J2_vs_energy" in report.residuals
    assert report.to_dict()["params"] == {"mu": 2.0}


def test_explicit_samples_must_respect_the_regime():
    unbound = (np.array([1.0, 0.0, 0.0]), np.array([0.0, 2.0, 0.0]))
    with pytest.raises(RegimeViolation) as exc:
        algebra_check("kepler_negative", samples=[unbound])
    assert exc.value.details["point"] == 0
    report = algebra_check("kepler_positive", samples=[np.array([1.0, 0.0, 0.0, 0.0, 2.0, 0.0])])
    assert report.points == 1


def test_same_seed_same_report():
    first = algebra_check("micz", {"lambda": 0.5}, points=2, seed=3)
    second = algebra_check("micz", {"lambda": 0.5}, points=2, seed=3, workers=1)
    assert first.residuals == second.residuals


def test_bad_suite_arguments():
    with pytest.raises(BadParameter):
        build_suite("so5")
    with pytest.raises(BadParameter):
        algebra_check("micz", points=0)
    with pytest.raises(BadParameter):
        algebra_check("kepler_zero", {"mu": -1.0})
    with pytest.raises(BadParameter):
        algebra_check("hamiltonian_angle_weyl", {"alpha": 0.0})
