from fractions import Fraction

import pytest
import sympy

from hyperaccel_engine.errors import ParseError
from hyperaccel_engine.exact import rf_equal
from hyperaccel_engine.grammar import exact_value, parse_expression, parse_rational, rf_to_sympy, term_ratio


def test_caret_is_power():
    assert parse_expression("x^2") == sympy.Symbol("x") ** 2


@pytest.mark.parametrize("text", ["", "   ", "__import__('os')", "x; y", "x**", "1/0", "n.real"])
def test_rejects_bad_input(text):
    with pytest.raises(ParseError):
        parse_expression(text)


def test_functions_only_in_summands():
    with pytest.raises(ParseError):
        parse_rational("binomial(n, 2)")
    assert parse_expression("binomial(n, 2)", functions=True).has(sympy.binomial)


def test_parse_rational_round_trip():
    f = parse_rational("(x+1)/(2*y-3) + x^2")
    g = parse_rational(str(rf_to_sympy(f)).replace("**", "^"))
    assert rf_equal(f, g)


@pytest.mark.parametrize(
    "summand, expected",
    [
        ("binomial(2*n, n)", "2*(2*n+1)/(n+1)"),
        ("2^(4*n)", "16"),
        ("(-1)^n/n^2", "-n^2/(n+1)^2"),
        ("poch(1/2, n)^2/factorial(n)^2", "(n+1/2)^2/(n+1)^2"),
        ("(-2^8)^n*(3*n-1)/binomial(2*n, n)^3", "-256*(3*n+2)*(n+1)^3/((3*n-1)*(2*(2*n+1))^3)"),
    ],
)
def test_term_ratio(summand, expected):
    ratio = term_ratio(parse_expression(summand, functions=True), "n")
    assert rf_equal(ratio, parse_rational(expected))


def test_exact_value():
    expr = parse_expression("poch(1/2, n)*binomial(2*n, n)/2^n", functions=True)
    assert exact_value(expr, {"n": 3}) == Fraction(15, 8) * 20 / 8
