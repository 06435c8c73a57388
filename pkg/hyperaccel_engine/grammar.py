"""Text grammar for rational functions and hypergeometric summands.

Rational functions: identifiers, integers, ``+ - * / ^`` (``**`` accepted too) and
parentheses. Summands additionally allow ``binomial(a, b)``, ``poch(a, n)`` (rising
factorial, alias ``rf``) and ``factorial(n)``, and powers with the index in the
exponent such as ``(-2^8)^n``. Parsing goes through sympy; everything downstream is
converted to the exact MultiPoly/RationalFunction types.
"""

from __future__ import annotations

import logging
import re
from fractions import Fraction
from functools import lru_cache
from typing import Dict, Iterable, Mapping, Optional, Sequence, Tuple

import sympy
from sympy.parsing.sympy_parser import convert_xor, parse_expr, standard_transformations
from sympy.simplify.simplify import hypersimp

from .errors import AssignmentError, ParseError, PoleError
from .exact import MultiPoly, RationalFunction, Scalar, as_rational

logger = logging.getLogger(__name__)

TRANSFORMATIONS = standard_transformations + (convert_xor,)

SUMMAND_FUNCTIONS = {
    "binomial": sympy.binomial,
    "poch": sympy.rf,
    "rf": sympy.rf,
    "factorial": sympy.factorial,
}

_ALLOWED = re.compile(r"^[0-9A-Za-z_+\-*/^(),\s]*$")
_IDENT = re.compile(r"[A-Za-z_][A-Za-z_0-9]*")


def parse_expression(text: str, functions: bool = False) -> sympy.Expr:
    """Parse grammar text into a sympy expression. Every bare identifier is a symbol."""
    if not isinstance(text, str) or not text.strip():
        raise ParseError("empty expression")
    if not _ALLOWED.match(text) or "__" in text:
        raise ParseError(f"unexpected characters in expression {text!r}")
    local: Dict[str, object] = {}
    for name in set(_IDENT.findall(text)):
        if functions and name in SUMMAND_FUNCTIONS:
            local[name] = SUMMAND_FUNCTIONS[name]
        elif name in SUMMAND_FUNCTIONS:
            raise ParseError(f"function {name!r} is not allowed in a rational function")
        else:
            local[name] = sympy.Symbol(name)
    try:
        expr = parse_expr(text, local_dict=local, transformations=TRANSFORMATIONS, evaluate=True)
    except Exception as e:  # sympy raises SyntaxError, TokenError, TypeError, ...
        raise ParseError(f"cannot parse {text!r}: {e}") from e
    if not isinstance(expr, sympy.Expr):
        raise ParseError(f"{text!r} is not an expression")
    if expr.has(sympy.zoo, sympy.nan, sympy.oo):
        raise ParseError(f"{text!r} divides by zero")
    return expr


def _symbols(names: Iterable[str]) -> Tuple[sympy.Symbol, ...]:
    return tuple(sympy.Symbol(n) for n in names)


def to_fraction(value: sympy.Expr) -> Fraction:
    if value.has(sympy.zoo, sympy.nan) or value.is_infinite:
        raise PoleError(f"expression evaluates to {value}")
    if not value.is_Rational:
        raise ParseError(f"expression did not reduce to a rational: {value}")
    return Fraction(int(value.p), int(value.q))


def to_rational_function(expr: sympy.Expr, variables: Optional[Sequence[str]] = None) -> RationalFunction:
    """Convert a sympy rational expression to a RationalFunction."""
    names = sorted({str(s) for s in expr.free_symbols} | set(variables or ()))
    gens = _symbols(names)
    if gens and not expr.is_rational_function(*gens):
        raise ParseError(f"{expr} is not a rational function of {', '.join(names)}")
    num, den = sympy.fraction(sympy.together(expr))
    if not gens:
        return RationalFunction.constant(to_fraction(num / den))
    return RationalFunction(_to_poly(num, gens, names), _to_poly(den, gens, names))


def _to_poly(expr: sympy.Expr, gens, names) -> MultiPoly:
    poly = sympy.Poly(sympy.expand(expr), *gens, domain="QQ")
    terms = {}
    for exps, coeff in poly.terms():
        terms[tuple(int(e) for e in exps)] = Fraction(int(coeff.p), int(coeff.q))
    return MultiPoly(tuple(names), terms)


def rf_to_sympy(f: RationalFunction) -> sympy.Expr:
    def poly_expr(p: MultiPoly) -> sympy.Expr:
        syms = _symbols(p.variables)
        total = sympy.Integer(0)
        for exps, c in p.terms.items():
            term = sympy.Rational(c.numerator, c.denominator)
            for s, e in zip(syms, exps):
                term *= s ** e
            total += term
        return total

    return poly_expr(f.num) / poly_expr(f.den)


@lru_cache(maxsize=512)
def parse_rational(text: str, variables: Tuple[str, ...] = ()) -> RationalFunction:
    """Grammar text -> RationalFunction (optionally widened to ``variables``)."""
    expr = parse_expression(text, functions=False)
    return to_rational_function(expr, variables)


def _gamma_form(factor: sympy.Expr) -> sympy.Expr:
    # (a)_n = Gamma(a+n)/Gamma(a) as a meromorphic identity; keeps hypersimp free of Piecewise
    return factor.replace(sympy.rf, lambda a, n: sympy.gamma(a + n) / sympy.gamma(a))


def term_ratio(expr: sympy.Expr, var: str, variables: Optional[Sequence[str]] = None) -> RationalFunction:
    """T(var+1)/T(var) for a hypergeometric term, as a RationalFunction.

    Rational factors are shifted exactly; each remaining factor is sent through
    sympy's ``hypersimp`` and must come back rational.
    """
    v = sympy.Symbol(var)
    names = sorted({str(s) for s in expr.free_symbols} | set(variables or ()) | {var})
    gens = _symbols(names)
    rational_part = sympy.Integer(1)
    quotients = []
    for factor in sympy.Mul.make_args(expr):
        if not factor.has(v):
            continue
        if factor.is_rational_function(*gens):
            rational_part *= factor
            continue
        q = hypersimp(_gamma_form(factor), v)
        if q is None:
            raise ParseError(f"factor {factor} is not a hypergeometric term in {var}")
        quotients.append(q)
    base = to_rational_function(rational_part, names)
    ratio = base.shift({var: 1}) / base
    for q in quotients:
        ratio = ratio * to_rational_function(sympy.together(q), names)
    return ratio


def exact_value(expr: sympy.Expr, assignment: Mapping[str, Scalar]) -> Fraction:
    """Exact value of a summand-grammar expression at rational/integer values."""
    subs = {}
    for name, value in assignment.items():
        q = as_rational(value)
        subs[sympy.Symbol(name)] = sympy.Rational(q.numerator, q.denominator)
    try:
        value = expr.subs(subs)
    except ZeroDivisionError as e:
        raise PoleError(str(e)) from e
    if value.free_symbols:
        missing = ", ".join(sorted(str(s) for s in value.free_symbols))
        raise AssignmentError(f"unassigned variables: {missing}")
    return to_fraction(value)
