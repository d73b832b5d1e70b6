import math

import numpy as np
import pytest
from scipy import special

from lrl_lab.core.specialfn import EULER_GAMMA, ci, legendre_p, legendre_p_forms, quad_adaptive, si
from lrl_lab.utils.exceptions import BadParameter, DomainError, NonConvergent


def test_quad_adaptive_polynomial_and_reversed_limits():
    res = quad_adaptive(lambda x: x ** 2, 0.0, 3.0)
    assert res.value == pytest.approx(9.0, rel=1e-13)
    assert res.evaluations > 0
    assert quad_adaptive(lambda x: x ** 2, 3.0, 0.0).value == pytest.approx(-9.0, rel=1e-13)
    assert quad_adaptive(math.sin, 1.0, 1.0).value == 0.0


def test_quad_adaptive_break_points():
    res = quad_adaptive(abs, -1.0, 2.0, points=[0.0, 5.0])
    assert res.value == pytest.approx(2.5, rel=1e-13)


def test_quad_adaptive_errors():
    with pytest.raises(BadParameter):
        quad_adaptive(math.sin, 0.0, 1.0, tol=0.0)
    with pytest.raises(NonConvergent):
        quad_adaptive(lambda x: math.sin(1.0 / x) / x, 1e-8, 1.0, tol=1e-14, limit=3)


def test_quad_adaptive_propagates_domain_errors():
    def bad(x):
        raise DomainError("outside")

    with pytest.raises(DomainError):
        quad_adaptive(bad, 0.0, 1.0)


def test_sine_integral_shifted_form():
    assert si(0.0) == pytest.approx(-math.pi / 2)
    assert si(1.0) == pytest.approx(0.946083070367183 - math.pi / 2, rel=1e-13)
    assert si(1e6) == pytest.approx(0.0, abs=1e-5)


def test_cosine_integral():
    assert ci(1.0) == pytest.approx(0.337403922900968, rel=1e-13)
    small = 1e-6
    assert ci(small) == pytest.approx(EULER_GAMMA + math.log(small), rel=1e-10)
    with pytest.raises(DomainError):
        ci(0.0)


@pytest.mark.parametrize("nu", [0.0, 1.0, 2.0, -2.0, 0.5, -1.5, 1.7])
def test_legendre_integer_and_real_degrees(nu):
    z = 1.7
    expected = float(special.hyp2f1(-nu, nu + 1.0, 1.0, 0.5 * (1.0 - z)))
    assert legendre_p(nu, z) == pytest.approx(expected, rel=1e-9)


def test_legendre_closed_forms():
    z = 2.5
    assert legendre_p(1.0, z) == pytest.approx(z, rel=1e-12)
    assert legendre_p(2.0, z) == pytest.approx(0.5 * (3 * z * z - 1), rel=1e-12)
    first, second = legendre_p_forms(0.3, z)
    assert first == pytest.approx(second, rel=1e-10)
    assert legendre_p(-0.7, 1.0) == 1.0
    with pytest.raises(DomainError):
        legendre_p(1.0, 0.5)


@pytest.mark.parametrize("x", [0.5, 1.0, 3.0, 10.0])
def test_sine_and_cosine_integral_derivatives(x):
    h = 1e-5
    dsi = (si(x + h) - si(x - h)) / (2 * h)
    dci = (ci(x + h) - ci(x - h)) / (2 * h)
    assert dsi == pytest.approx(math.sin(x) / x, abs=1e-6)
    assert dci == pytest.approx(math.cos(x) / x, abs=1e-6)


@pytest.mark.parametrize("nu", [-2.0, -0.5, 0.5, 1.5])
def test_legendre_degree_reflection(nu):
    for z in np.linspace(1.0, 5.0, 9):
        assert abs(legendre_p(nu, z) - legendre_p(-nu - 1.0, z)) <= 1e-10
    assert legendre_p(nu, 1.0) == 1.0
