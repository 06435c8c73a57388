"""Exact scalar and rational-function arithmetic.

Scalars are ``fractions.Fraction`` (always canonical: reduced, positive
denominator). Polynomials are sparse maps from exponent vectors to Fraction
coefficients; rational functions are kept as unreduced num/den pairs and
compared by exact evaluation on a degree-bounded grid instead of gcd
normalisation.
"""

from __future__ import annotations

import math
from fractions import Fraction
from typing import Dict, FrozenSet, Iterable, List, Mapping, Optional, Sequence, Tuple, Union

from .errors import AssignmentError, DomainError, PoleError

BigRational = Fraction
Exponents = Tuple[int, ...]
Scalar = Union[int, Fraction]


def as_rational(value) -> Fraction:
    """Coerce ints, Fractions and strings like "-7/2" to Fraction. Floats are refused."""
    if isinstance(value, Fraction):
        return value
    if isinstance(value, bool):
        raise DomainError(f"not an exact rational: {value!r}")
    if isinstance(value, int):
        return Fraction(value)
    if isinstance(value, str):
        try:
            return Fraction(value.strip())
        except (ValueError, ZeroDivisionError) as e:
            raise DomainError(f"not an exact rational: {value!r}") from e
    # numpy integers and sympy Rationals expose numerator/denominator
    num = getattr(value, "numerator", None)
    den = getattr(value, "denominator", None)
    if num is not None and den is not None and not isinstance(value, float):
        num = num() if callable(num) else num
        den = den() if callable(den) else den
        return Fraction(int(num), int(den))
    raise DomainError(f"not an exact rational: {value!r}")


def pochhammer(a: Scalar, n: int) -> Fraction:
    """Rising factorial a(a+1)...(a+n-1); 1 for n = 0."""
    if isinstance(n, bool) or not isinstance(n, int) or n < 0:
        raise DomainError(f"pochhammer length must be a nonnegative integer, got {n!r}")
    a = as_rational(a)
    out = Fraction(1)
    for i in range(n):
        out *= a + i
        if out == 0:
            break
    return out


def binomial(n: int, k: int) -> int:
    if any(isinstance(v, bool) or not isinstance(v, int) or v < 0 for v in (n, k)):
        raise DomainError(f"binomial needs nonnegative integers, got ({n!r}, {k!r})")
    if k > n:
        raise DomainError(f"binomial({n}, {k}): k exceeds n")
    return math.comb(n, k)


# ---------------------------------------------------------------------------
# Polynomials
# ---------------------------------------------------------------------------

def _rekey(variables: Tuple[str, ...], terms: Mapping[Exponents, Fraction], target: Tuple[str, ...]) -> Dict[Exponents, Fraction]:
    if variables == target:
        return dict(terms)
    where = {v: i for i, v in enumerate(variables)}
    missing = [v for v in variables if v not in target]
    out: Dict[Exponents, Fraction] = {}
    for exps, c in terms.items():
        for v in missing:
            if exps[where[v]]:
                raise DomainError(f"variable {v!r} lost while re-keying polynomial")
        key = tuple(exps[where[v]] if v in where else 0 for v in target)
        out[key] = out.get(key, Fraction(0)) + c
    return {k: c for k, c in out.items() if c}


class MultiPoly:
    """Sparse multivariate polynomial with Fraction coefficients.

    Instances are treated as immutable; ``terms`` never stores a zero coefficient.
    Binary operations align operands on the sorted union of their variables.
    """

    __slots__ = ("variables", "terms")

    def __init__(self, variables: Sequence[str] = (), terms: Optional[Mapping[Exponents, Scalar]] = None):
        variables = tuple(variables)
        if len(set(variables)) != len(variables):
            raise DomainError(f"duplicate variables in {variables}")
        clean: Dict[Exponents, Fraction] = {}
        for exps, coeff in (terms or {}).items():
            exps = tuple(int(e) for e in exps)
            if len(exps) != len(variables):
                raise DomainError(f"exponent vector {exps} does not match variables {variables}")
            if any(e < 0 for e in exps):
                raise DomainError(f"negative exponent in {exps}")
            c = as_rational(coeff)
            if c:
                clean[exps] = clean.get(exps, Fraction(0)) + c
        self.variables = variables
        self.terms = {k: c for k, c in clean.items() if c}

    @classmethod
    def _raw(cls, variables: Tuple[str, ...], terms: Dict[Exponents, Fraction]) -> "MultiPoly":
        obj = cls.__new__(cls)
        obj.variables = variables
        obj.terms = terms
        return obj

    @classmethod
    def constant(cls, value: Scalar, variables: Sequence[str] = ()) -> "MultiPoly":
        variables = tuple(variables)
        c = as_rational(value)
        return cls._raw(variables, {(0,) * len(variables): c} if c else {})

    @classmethod
    def variable(cls, name: str) -> "MultiPoly":
        return cls._raw((name,), {(1,): Fraction(1)})

    @classmethod
    def from_coefficients(cls, name: str, coefficients: Sequence[Scalar]) -> "MultiPoly":
        """Univariate polynomial from coefficients listed lowest degree first."""
        return cls((name,), {(i,): c for i, c in enumerate(coefficients)})

    # -- queries ----------------------------------------------------------

    def is_zero(self) -> bool:
        return not self.terms

    def is_constant(self) -> bool:
        return all(not any(e) for e in self.terms)

    def constant_value(self) -> Fraction:
        if not self.is_constant():
            raise DomainError("polynomial is not constant")
        return next(iter(self.terms.values()), Fraction(0))

    def degree(self, var: str) -> int:
        if var not in self.variables or not self.terms:
            return 0
        i = self.variables.index(var)
        return max(e[i] for e in self.terms)

    def degrees(self) -> Dict[str, int]:
        return {v: self.degree(v) for v in self.variables}

    def total_degree(self) -> int:
        return max((sum(e) for e in self.terms), default=0)

    def free_variables(self) -> FrozenSet[str]:
        return frozenset(v for v in self.variables if self.degree(v) > 0)

    def coefficient(self, exponents: Mapping[str, int]) -> Fraction:
        key = tuple(int(exponents.get(v, 0)) for v in self.variables)
        return self.terms.get(key, Fraction(0))

    def univariate_coefficients(self, var: str) -> List[Fraction]:
        extra = self.free_variables() - {var}
        if extra:
            raise DomainError(f"polynomial is not univariate in {var!r} (also has {sorted(extra)})")
        d = self.degree(var)
        out = [Fraction(0)] * (d + 1)
        i = self.variables.index(var) if var in self.variables else None
        for e, c in self.terms.items():
            out[e[i] if i is not None else 0] += c
        return out

    def denominator_lcm(self) -> int:
        out = 1
        for c in self.terms.values():
            out = math.lcm(out, c.denominator)
        return out

    # -- alignment --------------------------------------------------------

    def aligned(self, variables: Sequence[str]) -> "MultiPoly":
        variables = tuple(variables)
        return MultiPoly._raw(variables, _rekey(self.variables, self.terms, variables))

    def trimmed(self) -> "MultiPoly":
        """Drop variables that do not occur."""
        keep = tuple(v for v in self.variables if self.degree(v) > 0)
        return self.aligned(keep)

    @staticmethod
    def _coerce(other) -> "MultiPoly":
        if isinstance(other, MultiPoly):
            return other
        return MultiPoly.constant(as_rational(other))

    def _pair(self, other) -> Tuple[Tuple[str, ...], Dict[Exponents, Fraction], Dict[Exponents, Fraction]]:
        other = MultiPoly._coerce(other)
        if self.variables == other.variables:
            return self.variables, self.terms, other.terms
        union = tuple(sorted(set(self.variables) | set(other.variables)))
        return union, _rekey(self.variables, self.terms, union), _rekey(other.variables, other.terms, union)

    # -- arithmetic -------------------------------------------------------

    def __add__(self, other) -> "MultiPoly":
        variables, a, b = self._pair(other)
        out = dict(a)
        for e, c in b.items():
            s = out.get(e, Fraction(0)) + c
            if s:
                out[e] = s
            else:
                out.pop(e, None)
        return MultiPoly._raw(variables, out)

    __radd__ = __add__

    def __neg__(self) -> "MultiPoly":
        return MultiPoly._raw(self.variables, {e: -c for e, c in self.terms.items()})

    def __sub__(self, other) -> "MultiPoly":
        return self + (-MultiPoly._coerce(other))

    def __rsub__(self, other) -> "MultiPoly":
        return MultiPoly._coerce(other) - self

    def __mul__(self, other) -> "MultiPoly":
        if not isinstance(other, MultiPoly):
            c = as_rational(other)
            if not c:
                return MultiPoly._raw(self.variables, {})
            return MultiPoly._raw(self.variables, {e: v * c for e, v in self.terms.items()})
        variables, a, b = self._pair(other)
        out: Dict[Exponents, Fraction] = {}
        for e1, c1 in a.items():
            for e2, c2 in b.items():
                key = tuple(x + y for x, y in zip(e1, e2))
                out[key] = out.get(key, Fraction(0)) + c1 * c2
        return MultiPoly._raw(variables, {k: c for k, c in out.items() if c})

    __rmul__ = __mul__

    def __pow__(self, exponent: int) -> "MultiPoly":
        if isinstance(exponent, bool) or not isinstance(exponent, int) or exponent < 0:
            raise DomainError(f"polynomial power must be a nonnegative integer, got {exponent!r}")
        result = MultiPoly.constant(1, self.variables)
        base = self
        while exponent:
            if exponent & 1:
                result = result * base
            exponent >>= 1
            if exponent:
                base = base * base
        return result

    def __eq__(self, other) -> bool:
        if not isinstance(other, MultiPoly):
            try:
                other = MultiPoly._coerce(other)
            except DomainError:
                return NotImplemented
        return (self - other).is_zero()

    __hash__ = None  # type: ignore[assignment]

    # -- evaluation and substitution --------------------------------------

    def evaluate(self, assignment: Mapping[str, Scalar]) -> Fraction:
        missing = sorted(v for v in self.free_variables() if v not in assignment)
        if missing:
            raise AssignmentError(f"unassigned variables: {', '.join(missing)}")
        values = [as_rational(assignment[v]) if v in assignment else Fraction(0) for v in self.variables]
        total = Fraction(0)
        for exps, c in self.terms.items():
            term = c
            for val, e in zip(values, exps):
                if e:
                    term *= val ** e
            total += term
        return total

    def specialize(self, var: str, value: Scalar) -> "MultiPoly":
        """Fix one variable to a value; the result no longer carries it."""
        if var not in self.variables:
            return self
        i = self.variables.index(var)
        value = as_rational(value)
        rest = self.variables[:i] + self.variables[i + 1:]
        powers: Dict[int, Fraction] = {}
        out: Dict[Exponents, Fraction] = {}
        for exps, c in self.terms.items():
            e = exps[i]
            p = powers.get(e)
            if p is None:
                p = powers[e] = value ** e
            key = exps[:i] + exps[i + 1:]
            out[key] = out.get(key, Fraction(0)) + c * p
        return MultiPoly._raw(rest, {k: c for k, c in out.items() if c})

    def substitute(self, mapping: Mapping[str, Union["MultiPoly", Scalar]]) -> "MultiPoly":
        """Replace variables by polynomials (or scalars) simultaneously."""
        images: Dict[str, MultiPoly] = {}
        for v in self.variables:
            if v in mapping:
                images[v] = MultiPoly._coerce(mapping[v])
            else:
                images[v] = MultiPoly.variable(v)
        universe = sorted(set().union(*(img.variables for img in images.values())) if images else set())
        universe_t = tuple(universe)
        images = {v: img.aligned(universe_t) for v, img in images.items()}
        power_cache: Dict[Tuple[str, int], MultiPoly] = {}

        def power(v: str, e: int) -> MultiPoly:
            key = (v, e)
            hit = power_cache.get(key)
            if hit is None:
                hit = images[v] if e == 1 else power(v, e - 1) * images[v]
                power_cache[key] = hit
            return hit

        out: Dict[Exponents, Fraction] = {}
        for exps, c in self.terms.items():
            acc: Dict[Exponents, Fraction] = {(0,) * len(universe_t): c}
            for v, e in zip(self.variables, exps):
                if not e:
                    continue
                factor = power(v, e).terms
                nxt: Dict[Exponents, Fraction] = {}
                for e1, c1 in acc.items():
                    for e2, c2 in factor.items():
                        key = tuple(x + y for x, y in zip(e1, e2))
                        nxt[key] = nxt.get(key, Fraction(0)) + c1 * c2
                acc = nxt
            for k, v in acc.items():
                out[k] = out.get(k, Fraction(0)) + v
        return MultiPoly._raw(universe_t, {k: c for k, c in out.items() if c})

    def shift(self, offsets: Mapping[str, Scalar]) -> "MultiPoly":
        mapping = {v: MultiPoly.variable(v) + as_rational(d) for v, d in offsets.items() if as_rational(d) != 0}
        if not mapping:
            return self
        return self.substitute(mapping)

    # -- display ----------------------------------------------------------

    def to_text(self) -> str:
        if not self.terms:
            return "0"
        ordered = sorted(self.terms.items(), key=lambda kv: (-sum(kv[0]), [-e for e in kv[0]]))
        parts: List[str] = []
        for exps, c in ordered:
            factors = []
            for v, e in zip(self.variables, exps):
                if e == 1:
                    factors.append(v)
                elif e > 1:
                    factors.append(f"{v}^{e}")
            mag = abs(c)
            if factors:
                body = "*".join(factors)
                if mag != 1:
                    body = f"{_fraction_text(mag)}*{body}"
            else:
                body = _fraction_text(mag)
            sign = "-" if c < 0 else "+"
            if not parts:
                parts.append(body if sign == "+" else f"-{body}")
            else:
                parts.append(f" {sign} {body}")
        return "".join(parts)

    def __str__(self) -> str:
        return self.to_text()

    def __repr__(self) -> str:
        return f"MultiPoly({self.to_text()!r})"

    def __reduce__(self):
        return (MultiPoly, (self.variables, self.terms))


def _fraction_text(c: Fraction) -> str:
    return str(c.numerator) if c.denominator == 1 else f"{c.numerator}/{c.denominator}"


# ---------------------------------------------------------------------------
# Rational functions
# ---------------------------------------------------------------------------

class RationalFunction:
    """num/den, not gcd-reduced. Only den != 0 (as a polynomial) is enforced."""

    __slots__ = ("num", "den")

    def __init__(self, num: Union[MultiPoly, Scalar], den: Union[MultiPoly, Scalar, None] = None):
        num = MultiPoly._coerce(num)
        den = MultiPoly._coerce(1 if den is None else den)
        if den.is_zero():
            raise DomainError("rational function with zero denominator polynomial")
        if den.is_constant():
            num = num * (1 / den.constant_value())
            den = MultiPoly.constant(1)
        self.num = num
        self.den = den

    @classmethod
    def constant(cls, value: Scalar) -> "RationalFunction":
        return cls(MultiPoly.constant(value))

    @classmethod
    def variable(cls, name: str) -> "RationalFunction":
        return cls(MultiPoly.variable(name))

    @staticmethod
    def _coerce(other) -> "RationalFunction":
        if isinstance(other, RationalFunction):
            return other
        if isinstance(other, MultiPoly):
            return RationalFunction(other)
        return RationalFunction.constant(as_rational(other))

    # -- queries ----------------------------------------------------------

    @property
    def variables(self) -> Tuple[str, ...]:
        return tuple(sorted(set(self.num.variables) | set(self.den.variables)))

    def free_variables(self) -> FrozenSet[str]:
        return self.num.free_variables() | self.den.free_variables()

    def degree(self, var: str) -> Tuple[int, int]:
        return self.num.degree(var), self.den.degree(var)

    def is_zero(self) -> bool:
        return self.num.is_zero()

    def is_polynomial(self) -> bool:
        return self.den.is_constant()

    def as_polynomial(self) -> MultiPoly:
        if not self.is_polynomial():
            raise DomainError("rational function has a non-constant denominator")
        return self.num * (1 / self.den.constant_value())

    def is_constant(self) -> bool:
        return not self.free_variables()

    def constant_value(self) -> Fraction:
        if not self.is_constant():
            raise DomainError("rational function is not constant")
        return rf_eval(self, {})

    # -- arithmetic -------------------------------------------------------

    def __add__(self, other) -> "RationalFunction":
        other = RationalFunction._coerce(other)
        if self.den == other.den:
            return RationalFunction(self.num + other.num, self.den)
        return RationalFunction(self.num * other.den + other.num * self.den, self.den * other.den)

    __radd__ = __add__

    def __neg__(self) -> "RationalFunction":
        return RationalFunction(-self.num, self.den)

    def __sub__(self, other) -> "RationalFunction":
        return self + (-RationalFunction._coerce(other))

    def __rsub__(self, other) -> "RationalFunction":
        return RationalFunction._coerce(other) - self

    def __mul__(self, other) -> "RationalFunction":
        other = RationalFunction._coerce(other)
        return RationalFunction(self.num * other.num, self.den * other.den)

    __rmul__ = __mul__

    def __truediv__(self, other) -> "RationalFunction":
        other = RationalFunction._coerce(other)
        if other.num.is_zero():
            raise DomainError("division by the zero rational function")
        return RationalFunction(self.num * other.den, self.den * other.num)

    def __rtruediv__(self, other) -> "RationalFunction":
        return RationalFunction._coerce(other) / self

    def __pow__(self, exponent: int) -> "RationalFunction":
        if isinstance(exponent, bool) or not isinstance(exponent, int):
            raise DomainError(f"rational function power must be an integer, got {exponent!r}")
        if exponent < 0:
            return RationalFunction.constant(1) / (self ** (-exponent))
        return RationalFunction(self.num ** exponent, self.den ** exponent)

    def reciprocal(self) -> "RationalFunction":
        return RationalFunction.constant(1) / self

    __hash__ = None  # type: ignore[assignment]

    def __eq__(self, other) -> bool:
        # structural check only; semantic equality is rf_equal
        if not isinstance(other, RationalFunction):
            return NotImplemented
        return self.num == other.num and self.den == other.den

    # -- substitution -----------------------------------------------------

    def substitute(self, mapping: Mapping[str, Union[MultiPoly, "RationalFunction", Scalar]]) -> "RationalFunction":
        """Substitute polynomials/scalars for variables. Rational images are supported
        by substituting into the homogenised numerator and denominator."""
        if any(isinstance(v, RationalFunction) and not v.is_polynomial() for v in mapping.values()):
            return _substitute_rational(self, mapping)
        poly_map = {k: (v.as_polynomial() if isinstance(v, RationalFunction) else v) for k, v in mapping.items()}
        num = self.num.substitute(poly_map)
        den = self.den.substitute(poly_map)
        if den.is_zero():
            raise PoleError("substitution makes the denominator vanish identically")
        return RationalFunction(num, den)

    def shift(self, offsets: Mapping[str, Scalar]) -> "RationalFunction":
        num = self.num.shift(offsets)
        den = self.den.shift(offsets)
        return RationalFunction(num, den)

    def specialize(self, var: str, value: Scalar) -> "RationalFunction":
        den = self.den.specialize(var, value)
        if den.is_zero():
            raise PoleError(f"denominator vanishes identically at {var} = {value}")
        return RationalFunction(self.num.specialize(var, value), den)

    # -- display ----------------------------------------------------------

    def to_text(self) -> str:
        num = self.num.to_text()
        if self.is_polynomial():
            return num
        return f"({num})/({self.den.to_text()})"

    def __str__(self) -> str:
        return self.to_text()

    def __repr__(self) -> str:
        return f"RationalFunction({self.to_text()!r})"

    def __reduce__(self):
        return (RationalFunction, (self.num, self.den))


def _substitute_rational(f: RationalFunction, mapping: Mapping[str, Union[MultiPoly, RationalFunction, Scalar]]) -> RationalFunction:
    images = {k: RationalFunction._coerce(v) for k, v in mapping.items()}

    def poly_image(p: MultiPoly) -> RationalFunction:
        total = RationalFunction.constant(0)
        for exps, c in p.terms.items():
            term = RationalFunction.constant(c)
            for var, e in zip(p.variables, exps):
                if e:
                    base = images.get(var, RationalFunction.variable(var))
                    term = term * base ** e
            total = total + term
        return total

    num = poly_image(f.num)
    den = poly_image(f.den)
    if den.num.is_zero():
        raise PoleError("substitution makes the denominator vanish identically")
    return num / den


def rf_eval(f: Union[RationalFunction, MultiPoly, Scalar], assignment: Mapping[str, Scalar]) -> Fraction:
    f = RationalFunction._coerce(f)
    missing = sorted(v for v in f.free_variables() if v not in assignment)
    if missing:
        raise AssignmentError(f"unassigned variables: {', '.join(missing)}")
    den = f.den.evaluate(assignment)
    if den == 0:
        shown = ", ".join(f"{k}={assignment[k]}" for k in sorted(f.free_variables()))
        raise PoleError(f"pole of {f.to_text()} at {shown}")
    return f.num.evaluate(assignment) / den


def leading_ratio(f: RationalFunction, var: str) -> Optional[Fraction]:
    """Limit of a univariate rational function as var -> +infinity (None when unbounded)."""
    num = f.num.univariate_coefficients(var)
    den = f.den.univariate_coefficients(var)
    while len(num) > 1 and num[-1] == 0:
        num.pop()
    if len(num) == 1 and num[0] == 0:
        return Fraction(0)
    dn, dd = len(num) - 1, len(den) - 1
    if dn < dd:
        return Fraction(0)
    if dn > dd:
        return None
    return num[-1] / den[-1]


# ---------------------------------------------------------------------------
# Equality by grid evaluation
# ---------------------------------------------------------------------------

IntTerms = Dict[Exponents, int]


def _integer_pair(num: MultiPoly, den: MultiPoly, universe: Tuple[str, ...]) -> Tuple[IntTerms, IntTerms]:
    scale = math.lcm(num.denominator_lcm(), den.denominator_lcm())
    out = []
    for p in (num, den):
        terms = _rekey(p.variables, p.terms, universe)
        out.append({e: int(c * scale) for e, c in terms.items()})
    return out[0], out[1]


def _first_degree(terms: IntTerms) -> int:
    return max((e[0] for e in terms), default=0)


def _fix_first(terms: IntTerms, value: int) -> IntTerms:
    powers: Dict[int, int] = {}
    out: IntTerms = {}
    for exps, c in terms.items():
        e = exps[0]
        p = powers.get(e)
        if p is None:
            p = powers[e] = value ** e
        key = exps[1:]
        out[key] = out.get(key, 0) + c * p
    return {k: c for k, c in out.items() if c}


def _grid_equal(nf: IntTerms, df: IntTerms, ng: IntTerms, dg: IntTerms, depth: int, start: int) -> bool:
    if depth == 0:
        return nf.get((), 0) * dg.get((), 0) == ng.get((), 0) * df.get((), 0)
    bound = max(_first_degree(nf) + _first_degree(dg), _first_degree(ng) + _first_degree(df))
    accepted = 0
    value = start
    while accepted <= bound:
        sdf = _fix_first(df, value)
        sdg = _fix_first(dg, value)
        # skip points on a pole hypersurface of either side
        if sdf and sdg:
            if not _grid_equal(_fix_first(nf, value), sdf, _fix_first(ng, value), sdg, depth - 1, start):
                return False
            accepted += 1
        value += 1
    return True


def grid_start(seed: int) -> int:
    return 2 + abs(int(seed)) % 97


def rf_equal(f, g, seed: int = 0) -> bool:
    """Decide num(f)*den(g) == num(g)*den(f) as a polynomial identity.

    Each variable gets (d+1) distinct integer points, d being a bound on its degree in
    both cross products after the earlier variables were fixed; points that make either
    denominator vanish are skipped and replaced.
    """
    f = RationalFunction._coerce(f)
    g = RationalFunction._coerce(g)
    universe = tuple(sorted(f.free_variables() | g.free_variables()))
    nf, df = _integer_pair(f.num, f.den, universe)
    ng, dg = _integer_pair(g.num, g.den, universe)
    return _grid_equal(nf, df, ng, dg, len(universe), grid_start(seed))


def rf_is_zero(f, seed: int = 0) -> bool:
    return rf_equal(f, RationalFunction.constant(0), seed)


def linear_form(coefficients: Mapping[str, Scalar], constant: Scalar = 0) -> RationalFunction:
    """c0 + sum c_v * v as a RationalFunction."""
    poly = MultiPoly.constant(constant)
    for v, c in coefficients.items():
        poly = poly + MultiPoly.variable(v) * as_rational(c)
    return RationalFunction(poly)


def product(factors: Iterable[RationalFunction]) -> RationalFunction:
    out = RationalFunction.constant(1)
    for f in factors:
        out = out * f
    return out
