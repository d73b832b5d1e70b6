import math

import numpy as np
import pytest

from lrl_lab.core.exprlang import describe, evaluate, parse
from lrl_lab.utils.exceptions import BadParameter, DomainError, ExprSyntaxError, UnknownIdentifier


def test_evaluate_basic():
    assert parse("sin(3*(th-0.5))", "th")(0.5) == pytest.approx(0.0, abs=1e-15)
    assert evaluate(parse("1 + 2*th", "th"), 3.0) == pytest.approx(7.0)
    assert parse("pi/2", "th")(0.0) == pytest.approx(math.pi / 2)
    assert parse(".5e1", "r")(0.0) == pytest.approx(5.0)


def test_power_precedence_and_associativity():
    assert parse("-2^2", "th")(0.0) == pytest.approx(-4.0)
    assert parse("2^3^2", "th")(0.0) == pytest.approx(512.0)
    assert parse("2^-1", "th")(0.0) == pytest.approx(0.5)
    assert parse("-th^2", "th")(3.0) == pytest.approx(-9.0)


def test_parameters_are_substituted():
    e = parse("a*th + b", "th", {"a": 2.0, "b": 1.0})
    assert e(3.0) == pytest.approx(7.0)
    assert e.diff()(3.0) == pytest.approx(2.0)


def test_derivatives():
    cube = parse("th^3", "th")
    assert cube.diff()(2.0) == pytest.approx(12.0)
    assert cube.diff().diff()(2.0) == pytest.approx(12.0)
    assert parse("sin(2*th)", "th").diff()(0.0) == pytest.approx(2.0)
    assert parse("exp(th)*log(th)", "th").diff()(1.0) == pytest.approx(math.e)
    assert parse("sqrt(r)", "r").diff()(4.0) == pytest.approx(0.25)
    assert parse("1/r^2", "r").diff()(2.0) == pytest.approx(-0.25)
    assert parse("tan(th)", "th").diff()(0.3) == pytest.approx(1.0 / math.cos(0.3) ** 2)


def test_printed_form_reparses_to_same_function():
    for text in ["th^2 - 3*th + 1", "sin(th)/(1 + cos(th))", "-(th - 2)^3", "exp(-th^2)"]:
        e = parse(text, "th")
        again = parse(str(e), "th")
        for x in (0.3, 1.1, 2.7):
            assert again(x) == pytest.approx(e(x), rel=1e-14)
        d = e.diff()
        assert parse(str(d), "th")(1.1) == pytest.approx(d(1.1), rel=1e-14)


def test_constant_expressions():
    assert parse("2*pi", "th").is_constant
    assert not parse("2*th", "th").is_constant
    assert parse("5", "th").diff()(1.0) == 0.0


def test_unknown_identifier():
    with pytest.raises(UnknownIdentifier) as exc:
        parse("x + 1", "th")
    assert exc.value.details["name"] == "x"
    assert exc.value.code == "EXPR_UNKNOWN_IDENTIFIER"


def test_syntax_errors_carry_offsets():
    with pytest.raises(ExprSyntaxError) as exc:
        parse("1 + $", "th")
    assert exc.value.offset == 4
    with pytest.raises(ExprSyntaxError) as exc:
        parse("(1+th", "th")
    assert exc.value.offset == 5
    with pytest.raises(ExprSyntaxError):
        parse("   ", "th")
    with pytest.raises(ExprSyntaxError):
        parse("sin th", "th")


def test_reserved_variable_name():
    with pytest.raises(BadParameter):
        parse("1", "sin")


@pytest.mark.parametrize("text,value", [
    ("log(th)", -1.0),
    ("1/th", 0.0),
    ("sqrt(th)", -4.0),
    ("exp(th)", 1000.0),
])
def test_domain_errors(text, value):
    with pytest.raises(DomainError):
        parse(text, "th")(value)


def test_describe():
    out = describe("th^2", "th", at=3.0)
    assert out["variable"] == "th"
    assert out["value"] == pytest.approx(9.0)
    assert out["derivative_value"] == pytest.approx(6.0)
    assert out["second_derivative_value"] == pytest.approx(2.0)
    assert "at" not in describe("th^2", "th")


def _random_expr(rng, depth):
    if depth == 0 or rng.random() < 0.2:
        return "th" if rng.random() < 0.7 else f"{rng.uniform(0.5, 2.0):.3f}"
    kind = int(rng.integers(7))
    a = _random_expr(rng, depth - 1)
    if kind == 0:
        return f"sin({a})"
    if kind == 1:
        return f"cos({a})"
    if kind == 2:
        return f"exp(sin({a}))"
    if kind == 3:
        return f"sqrt(1 + ({a})^2)"
    if kind == 4:
        return f"({a})^2"
    b = _random_expr(rng, depth - 1)
    if kind == 5:
        return f"({a}) {rng.choice(['+', '-', '*'])} ({b})"
    return f"({a}) / (2 + sin({b}))"


def test_random_derivatives_match_central_difference():
    rng = np.random.default_rng(20240611)
    h = 1e-6
    for _ in range(100):
        text = _random_expr(rng, 3)
        e = parse(text, "th")
        d = e.diff()
        x = float(rng.uniform(-1.0, 1.0))
        fd = (e(x + h) - e(x - h)) / (2 * h)
        scale = max(1.0, abs(e(x)), abs(fd))
        assert abs(d(x) - fd) <= 1e-6 * scale, text
