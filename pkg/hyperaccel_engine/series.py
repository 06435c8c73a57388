"""Hypergeometric-type term sequences: exact partial sums, certified evaluation,
empirical convergence rates, pFq templates."""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass, field
from fractions import Fraction
from functools import lru_cache
from typing import Dict, Iterator, List, Mapping, Optional, Tuple

from mpmath import mp

from .errors import (
    AssignmentError,
    DegenerateIndexError,
    DomainError,
    InadmissibleParametersError,
    MalformedSeriesError,
    PoleError,
    TooSlowError,
)
from .exact import MultiPoly, RationalFunction, Scalar, as_rational, leading_ratio, pochhammer, rf_eval
from .grammar import exact_value, parse_expression, parse_rational, term_ratio
from .settings import DEFAULT_SETTINGS, Settings

logger = logging.getLogger(__name__)

# how far past the lower limit compile_summand looks for a usable first term
LOWER_LIMIT_SEARCH = 8

# summation index in family weights
WEIGHT_INDEX = "k"


def to_mpf(q: Fraction):
    return mp.mpf(q.numerator) / q.denominator


@dataclass(frozen=True, eq=False)
class HyperTerm:
    """t(first_index) = first_term, t(k+1) = t(k) * ratio(k)."""

    index_var: str
    first_index: int
    first_term: Fraction
    ratio: RationalFunction
    label: str = ""

    def __post_init__(self):
        object.__setattr__(self, "first_term", as_rational(self.first_term))
        extra = self.ratio.free_variables() - {self.index_var}
        if extra:
            raise MalformedSeriesError(f"{self.describe()}: ratio depends on {sorted(extra)} besides {self.index_var}")
        self.check_poles(DEFAULT_SETTINGS.pole_window)

    def describe(self) -> str:
        return self.label or f"series in {self.index_var} from {self.first_index}"

    def vanishes_after(self, k: int) -> bool:
        """True when t(k+1) = 0 because the ratio numerator vanishes at k."""
        return self.ratio.num.evaluate({self.index_var: k}) == 0

    def ratio_at(self, k: int) -> Fraction:
        try:
            return rf_eval(self.ratio, {self.index_var: k})
        except PoleError as e:
            raise MalformedSeriesError(f"{self.describe()}: ratio pole at {self.index_var} = {k}") from e

    def check_poles(self, window: int) -> None:
        if self.first_term == 0:
            return
        for k in range(self.first_index, self.first_index + window):
            if self.vanishes_after(k):
                return
            self.ratio_at(k)

    def iter_terms(self) -> Iterator[Tuple[int, Fraction]]:
        k, t = self.first_index, self.first_term
        while True:
            yield k, t
            if t != 0:
                t = Fraction(0) if self.vanishes_after(k) else t * self.ratio_at(k)
            k += 1

    def terms(self, count: int) -> List[Fraction]:
        if count < 0:
            raise DomainError(f"count must be nonnegative, got {count}")
        out = []
        if count == 0:
            return out
        for _, t in self.iter_terms():
            out.append(t)
            if len(out) == count:
                break
        return out

    def term(self, k: int) -> Fraction:
        if k < self.first_index:
            raise DomainError(f"index {k} is below the lower limit {self.first_index}")
        return self.terms(k - self.first_index + 1)[-1]

    def terminating_length(self, limit: int) -> Optional[int]:
        """Number of nonzero terms if the series stops within ``limit`` indices."""
        if self.first_term == 0:
            return 0
        for k in range(self.first_index, self.first_index + limit):
            if self.vanishes_after(k):
                return k - self.first_index + 1
        return None

    def limit_ratio(self) -> Optional[Fraction]:
        return leading_ratio(self.ratio, self.index_var)


def partial_sum_exact(t: HyperTerm, count: int) -> Fraction:
    return sum(t.terms(count), Fraction(0))


def terminating_sum(t: HyperTerm, limit: int = 100000) -> Fraction:
    n = t.terminating_length(limit)
    if n is None:
        raise MalformedSeriesError(f"{t.describe()} does not terminate within {limit} terms")
    return partial_sum_exact(t, n)


# ---------------------------------------------------------------------------
# pFq
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class PFQSpec:
    upper: Tuple[Fraction, ...]
    lower: Tuple[Fraction, ...]
    argument: Fraction
    prefactor: Fraction = Fraction(1)

    def __post_init__(self):
        object.__setattr__(self, "upper", tuple(as_rational(a) for a in self.upper))
        object.__setattr__(self, "lower", tuple(as_rational(b) for b in self.lower))
        object.__setattr__(self, "argument", as_rational(self.argument))
        object.__setattr__(self, "prefactor", as_rational(self.prefactor))

    def to_dict(self) -> Dict:
        return {
            "upper": [str(a) for a in self.upper],
            "lower": [str(b) for b in self.lower],
            "argument": str(self.argument),
            "prefactor": str(self.prefactor),
        }


def _nonpositive_integer(q: Fraction) -> bool:
    return q.denominator == 1 and q <= 0


def compile_pfq(spec: PFQSpec, index_var: str = "k", label: str = "") -> HyperTerm:
    """ratio(k) = argument * prod(a+k) / ((1+k) * prod(b+k))."""
    k = MultiPoly.variable(index_var)
    num = MultiPoly.constant(spec.argument)
    for a in spec.upper:
        num = num * (k + a)
    den = k + 1
    for b in spec.lower:
        den = den * (k + b)
    for b in spec.lower:
        if _nonpositive_integer(b):
            stops = [a for a in spec.upper if _nonpositive_integer(a) and -a < -b]
            if not stops:
                raise MalformedSeriesError(f"lower parameter {b} is a pole before the series terminates")
    return HyperTerm(index_var, 0, spec.prefactor, RationalFunction(num, den), label)


def direct_pfq_term(spec: PFQSpec, k: int) -> Fraction:
    """prefactor * prod (a)_k / (k! * prod (b)_k) * z^k, computed without the ratio."""
    num = spec.prefactor * spec.argument ** k
    for a in spec.upper:
        num *= pochhammer(a, k)
    den = Fraction(math.factorial(k))
    for b in spec.lower:
        den *= pochhammer(b, k)
    if den == 0:
        raise PoleError(f"lower Pochhammer vanishes at k = {k}")
    return num / den


@dataclass(frozen=True, eq=False)
class FamilyTemplate:
    """prefactor * sum_k weight(k) * pFq term(k), all rational in named variables.

    ``weight`` is a polynomial in the variables and the summation index ``k``. A
    linear factor such as x+k+(y-1)/2 belongs there and not in the Pochhammer
    lists, where it would become (x+(y+1)/2)_k / (x+(y-1)/2)_k and pass through
    0/0 when x+(y-1)/2 is a nonpositive integer.
    """

    name: str
    variables: Tuple[str, ...]
    upper: Tuple[str, ...]
    lower: Tuple[str, ...]
    argument: Fraction
    prefactor: str = "1"
    weight: str = "1"
    description: str = ""

    def __post_init__(self):
        object.__setattr__(self, "variables", tuple(self.variables))
        object.__setattr__(self, "upper", tuple(self.upper))
        object.__setattr__(self, "lower", tuple(self.lower))
        object.__setattr__(self, "argument", as_rational(self.argument))
        if WEIGHT_INDEX in self.variables:
            raise MalformedSeriesError(f"family {self.name}: {WEIGHT_INDEX!r} is the summation index")
        for text in self.upper + self.lower + (self.prefactor,):
            extra = parse_rational(text, self.variables).free_variables() - set(self.variables)
            if extra:
                raise MalformedSeriesError(f"family {self.name}: {text!r} uses unknown variables {sorted(extra)}")
        w = self.weight_rf()
        extra = w.free_variables() - set(self.variables) - {WEIGHT_INDEX}
        if extra:
            raise MalformedSeriesError(f"family {self.name}: weight uses unknown variables {sorted(extra)}")
        if not w.is_polynomial():
            raise MalformedSeriesError(f"family {self.name}: weight {self.weight!r} must be a polynomial")

    def _rf(self, text: str) -> RationalFunction:
        return parse_rational(text, self.variables)

    def upper_rf(self) -> Tuple[RationalFunction, ...]:
        return tuple(self._rf(a) for a in self.upper)

    def lower_rf(self) -> Tuple[RationalFunction, ...]:
        return tuple(self._rf(b) for b in self.lower)

    def prefactor_rf(self) -> RationalFunction:
        return self._rf(self.prefactor)

    def weight_rf(self) -> RationalFunction:
        return parse_rational(self.weight, self.variables + (WEIGHT_INDEX,))

    @property
    def weighted(self) -> bool:
        w = self.weight_rf()
        return not (w.is_constant() and w.constant_value() == 1)

    def values(self, values: Mapping[str, Scalar]) -> Dict[str, Fraction]:
        missing = [v for v in self.variables if v not in values]
        if missing:
            raise AssignmentError(f"family {self.name}: missing values for {missing}")
        return {v: as_rational(values[v]) for v in self.variables}

    def instantiate(self, values: Mapping[str, Scalar]) -> PFQSpec:
        vals = self.values(values)
        try:
            return PFQSpec(
                upper=tuple(rf_eval(a, vals) for a in self.upper_rf()),
                lower=tuple(rf_eval(b, vals) for b in self.lower_rf()),
                argument=self.argument,
                prefactor=rf_eval(self.prefactor_rf(), vals),
            )
        except PoleError as e:
            raise InadmissibleParametersError(f"family {self.name} at {vals}: {e}") from e

    def hyperterm(self, values: Mapping[str, Scalar]) -> HyperTerm:
        """prefactor * pFq at the given parameters, without the weight."""
        vals = self.values(values)
        label = f"{self.name}({', '.join(f'{v}={vals[v]}' for v in self.variables)})"
        try:
            return compile_pfq(self.instantiate(vals), label=label)
        except MalformedSeriesError as e:
            raise InadmissibleParametersError(str(e)) from e

    def weight_poly(self, values: Mapping[str, Scalar]) -> MultiPoly:
        """The weight at the given parameters, a polynomial in k."""
        return self.weight_rf().substitute(self.values(values)).as_polynomial()

    def terms(self, values: Mapping[str, Scalar], count: int) -> List[Fraction]:
        """The first ``count`` summands, weight included."""
        w = self.weight_poly(values)
        return [c * w.evaluate({WEIGHT_INDEX: k}) for k, c in enumerate(self.hyperterm(values).terms(count))]

    def terminating_value(self, values: Mapping[str, Scalar], limit: int = 100000) -> Fraction:
        """Exact sum when the pFq part terminates within ``limit`` terms."""
        n = self.hyperterm(values).terminating_length(limit)
        if n is None:
            raise MalformedSeriesError(f"family {self.name} at {dict(values)} does not terminate within {limit} terms")
        return sum(self.terms(values, n), Fraction(0))

    def symbolic_ratio(self, index_var: str = "k") -> RationalFunction:
        k = RationalFunction.variable(index_var)
        num = RationalFunction.constant(self.argument)
        for a in self.upper_rf():
            num = num * (k + a)
        den = k + 1
        for b in self.lower_rf():
            den = den * (k + b)
        return num / den

    def parameter_excess(self, values: Mapping[str, Scalar]) -> Fraction:
        """sum(lower) - sum(upper) + 1 - deg_k(weight): the decay exponent of the terms at |z| = 1."""
        spec = self.instantiate(values)
        return sum(spec.lower, Fraction(0)) - sum(spec.upper, Fraction(0)) + 1 - self.weight_poly(values).degree(WEIGHT_INDEX)

    def to_dict(self) -> Dict:
        out = {
            "variables": list(self.variables),
            "upper": list(self.upper),
            "lower": list(self.lower),
            "argument": str(self.argument),
            "prefactor": self.prefactor,
            "description": self.description,
        }
        if self.weighted:
            out["weight"] = self.weight
        return out

    @classmethod
    def from_dict(cls, name: str, payload: Mapping) -> "FamilyTemplate":
        return cls(
            name=name,
            variables=tuple(payload["variables"]),
            upper=tuple(payload["upper"]),
            lower=tuple(payload["lower"]),
            argument=as_rational(payload["argument"]),
            prefactor=payload.get("prefactor", "1"),
            weight=payload.get("weight", "1"),
            description=payload.get("description", ""),
        )


# ---------------------------------------------------------------------------
# Summand formulas
# ---------------------------------------------------------------------------

@lru_cache(maxsize=256)
def compile_summand(text: str, index_var: str = "n", lower_limit: Optional[int] = None, label: str = "") -> HyperTerm:
    """Compile a summand formula into a HyperTerm.

    Without an explicit lower limit the sum starts at 0, moving to 1 when the summand's
    denominator vanishes at 0. Leading zero terms are skipped in either case.
    """
    expr = parse_expression(text, functions=True)
    extra = {str(s) for s in expr.free_symbols} - {index_var}
    if extra:
        raise MalformedSeriesError(f"summand {text!r} has free symbols {sorted(extra)} besides {index_var}")
    ratio = term_ratio(expr, index_var)
    start = 0 if lower_limit is None else int(lower_limit)
    for k in range(start, start + LOWER_LIMIT_SEARCH):
        try:
            value = exact_value(expr, {index_var: k})
        except PoleError:
            if lower_limit is None:
                logger.debug("summand %s has a pole at %s=%d; raising the lower limit", label or text, index_var, k)
                continue
            raise MalformedSeriesError(f"summand {label or text!r} has a pole at its lower limit {index_var} = {k}")
        if value == 0:
            continue
        return HyperTerm(index_var, k, value, ratio, label)
    raise MalformedSeriesError(f"summand {label or text!r} has no usable first term near {start}")


# ---------------------------------------------------------------------------
# Evaluation
# ---------------------------------------------------------------------------

@dataclass
class EvalResult:
    value: object  # mpf
    error_radius: object  # mpf
    terms_used: int
    tail_bound: object  # mpf
    digits_correct: int
    target_digits: int
    exact_sum: Optional[Fraction] = None
    rate_bound: Optional[Fraction] = None
    exact_mode: bool = True

    def to_dict(self) -> Dict:
        return {
            "value": mp.nstr(self.value, self.target_digits + 5),
            "error_radius": mp.nstr(self.error_radius, 5),
            "terms_used": self.terms_used,
            "tail_bound": mp.nstr(self.tail_bound, 5),
            "digits_correct": self.digits_correct,
            "target_digits": self.target_digits,
            "rate_bound": None if self.rate_bound is None else str(self.rate_bound),
            "exact_mode": self.exact_mode,
        }


def rho_hat(t: HyperTerm, k: int, window: int, limit: Optional[Fraction]) -> Optional[Fraction]:
    """Bound on |ratio(j)| for j >= k, or None when the window is not yet monotone.

    |ratio| must move monotonically toward its limit over [k, k+window]; the bound is
    the window maximum or the limit, whichever is larger.
    """
    if limit is None:
        return None
    lim = abs(limit)
    mags = [abs(t.ratio_at(j)) for j in range(k, k + window + 1)]
    rising = all(a <= b for a, b in zip(mags, mags[1:]))
    falling = all(a >= b for a, b in zip(mags, mags[1:]))
    if rising and mags[-1] <= lim:
        rho = lim
    elif falling and mags[-1] >= lim:
        rho = mags[0]
    else:
        return None
    if rho >= 1:
        return None
    return rho


def tail_bound(t: HyperTerm, count: int, window: Optional[int] = None) -> Optional[Fraction]:
    """Certified bound on |sum of terms after the first ``count``|, or None if unavailable."""
    if count < 1:
        raise DomainError("tail_bound needs at least one summed term")
    window = window or DEFAULT_SETTINGS.window
    last = t.first_index + count - 1
    t_last = t.term(last)
    if t_last == 0:
        return Fraction(0)
    rho = rho_hat(t, last, window, t.limit_ratio())
    if rho is None:
        return None
    return abs(t_last) * rho / (1 - rho)


def _digits(error) -> int:
    if error <= 0:
        return mp.dps
    return max(0, int(mp.floor(-mp.log10(error))))


def _estimated_terms(t: HyperTerm, target_digits: int, limit: Fraction) -> float:
    if limit == 0:
        return float(target_digits)
    scale = max(1.0, abs(float(t.first_term)) if t.first_term else 1.0)
    return (target_digits + 1 + math.log10(scale)) / -math.log10(float(abs(limit)))


def evaluate(
    t: HyperTerm,
    target_digits: int,
    *,
    term_cap: Optional[int] = None,
    window: Optional[int] = None,
    exact: bool = True,
    settings: Optional[Settings] = None,
) -> EvalResult:
    """Sum until the certified tail bound drops below 10^-(target+1).

    Exact mode accumulates Fractions and rounds once; the fixed-precision mode
    accumulates mpf terms and widens the error radius instead.
    """
    settings = settings or DEFAULT_SETTINGS
    if target_digits < 1:
        raise DomainError(f"target_digits must be positive, got {target_digits}")
    cap = term_cap or settings.term_cap
    window = window or settings.window
    dps = target_digits + settings.guard_digits
    limit = t.limit_ratio()

    with mp.workdps(dps):
        threshold = Fraction(1, 10 ** (target_digits + 1))
        eps = mp.mpf(10) ** (-dps)

        def result(total, count, tail, rho, radius_terms) -> EvalResult:
            if exact:
                value = to_mpf(total)
                radius = eps
                exact_sum = total
            else:
                value = total
                radius = eps * (radius_terms + 1) * max(mp.one, abs(total))
                exact_sum = None
            tail_m = to_mpf(tail) if isinstance(tail, Fraction) else tail
            return EvalResult(
                value=value,
                error_radius=radius,
                terms_used=count,
                tail_bound=tail_m,
                digits_correct=_digits(tail_m + radius) if tail_m != mp.inf else 0,
                target_digits=target_digits,
                exact_sum=exact_sum,
                rate_bound=rho,
                exact_mode=exact,
            )

        terminating = t.terminating_length(cap)
        if terminating is None:
            if limit is None or abs(limit) >= 1:
                partial_n = min(cap, window)
                head = partial_sum_exact(t, partial_n)
                partial = result(head if exact else to_mpf(head), partial_n, mp.inf, None, partial_n)
                logger.warning("%s: limit ratio %s, not geometrically convergent", t.describe(), limit)
                raise TooSlowError(f"{t.describe()}: |ratio| tends to {limit}; rate-1 or divergent series", partial)
            if _estimated_terms(t, target_digits, limit) > cap:
                head = partial_sum_exact(t, min(cap, window))
                partial = result(head if exact else to_mpf(head), min(cap, window), mp.inf, None, window)
                logger.warning("%s: rate %s needs more than %d terms", t.describe(), limit, cap)
                raise TooSlowError(f"{t.describe()}: {target_digits} digits need more than {cap} terms", partial)

        total = Fraction(0) if exact else mp.zero
        count = 0
        last_bound = None
        last_rho = None
        guess = abs(limit) if limit is not None else Fraction(1, 2)
        for k, term in t.iter_terms():
            if exact:
                total += term
            else:
                total += to_mpf(term)
            count += 1
            if term == 0:
                return result(total, count, Fraction(0), Fraction(0), count)
            if terminating is not None:
                if count >= terminating:
                    return result(total, count, Fraction(0), Fraction(0), count)
                continue
            rough = max(guess, abs(t.ratio_at(k)))
            if rough < 1 and abs(term) * rough / (1 - rough) <= threshold:
                rho = rho_hat(t, k, window, limit)
                if rho is not None:
                    bound = abs(term) * rho / (1 - rho)
                    last_bound, last_rho = bound, rho
                    if bound <= threshold:
                        return result(total, count, bound, rho, count)
            if count >= cap:
                tail = last_bound if last_bound is not None else mp.inf
                partial = result(total, count, tail, last_rho, count)
                raise TooSlowError(f"{t.describe()}: term cap {cap} reached before {target_digits} digits", partial)
    raise AssertionError("unreachable")


def estimate_rate(t: HyperTerm, n_max: int):
    """|t(n_max+1)/t(n_max)| as an mpf."""
    if n_max < 10:
        raise DomainError(f"n_max must be at least 10, got {n_max}")
    if n_max < t.first_index:
        raise DomainError(f"n_max {n_max} is below the lower limit {t.first_index}")
    if t.first_term == 0:
        raise DegenerateIndexError(f"{t.describe()}: zero term at {n_max}")
    for k in range(t.first_index, n_max):
        if t.vanishes_after(k):
            raise DegenerateIndexError(f"{t.describe()}: zero term at {n_max}")
    return abs(to_mpf(t.ratio_at(n_max)))


# ---------------------------------------------------------------------------
# Unit-argument family values (numeric diagnostics, not certified)
# ---------------------------------------------------------------------------

def series_value(t: HyperTerm, dps: int, settings: Optional[Settings] = None, weight: Optional[MultiPoly] = None):
    """Numeric value of a convergent series, each term times ``weight(k)`` when given.

    Terminating series are summed exactly and unweighted geometric ones go through
    ``evaluate``; everything else is summed with mpmath's nsum (Richardson/Shanks).
    """
    settings = settings or DEFAULT_SETTINGS

    def w(k: int) -> Fraction:
        return Fraction(1) if weight is None else weight.evaluate({WEIGHT_INDEX: k})

    n = t.terminating_length(settings.term_cap)
    with mp.workdps(dps):
        if n is not None:
            return to_mpf(sum((c * w(t.first_index + j) for j, c in enumerate(t.terms(n))), Fraction(0)))
        limit = t.limit_ratio()
        if weight is None and limit is not None and abs(limit) < 1:
            return +evaluate(t, dps, settings=settings).value
    if limit is None or abs(limit) > 1:
        raise MalformedSeriesError(f"{t.describe()} diverges (limit ratio {limit})")
    with mp.workdps(dps + 15):
        cache = [to_mpf(t.first_term)]

        def summand(j):
            j = int(j)
            while len(cache) <= j:
                k = t.first_index + len(cache) - 1
                prev = cache[-1]
                if prev == 0 or t.vanishes_after(k):
                    cache.append(mp.zero)
                else:
                    cache.append(prev * to_mpf(t.ratio_at(k)))
            return cache[j] * to_mpf(w(t.first_index + j))

        total = mp.nsum(summand, [0, mp.inf])
    with mp.workdps(dps):
        return +total


def unit_argument_value(family: FamilyTemplate, values: Mapping[str, Scalar], dps: int = 40, head: int = 20):
    """Non-terminating family sum at z = 1.

    The first ``head`` terms (more when a parameter is very negative) are summed
    exactly; the tail goes to Euler-Maclaurin on the Gamma-function continuation
    prefactor * prod Gamma(a+k)/Gamma(a) / (Gamma(k+1) prod Gamma(b+k)/Gamma(b)) * w(k),
    which is analytic past every parameter pole.
    """
    if family.argument != 1:
        raise DomainError(f"family {family.name} has argument {family.argument}, not 1")
    spec = family.instantiate(values)
    coeffs = family.weight_poly(values).univariate_coefficients(WEIGHT_INDEX)
    start = max([head] + [math.ceil(-p) + head for p in spec.upper + spec.lower])
    exact_head = sum(family.terms(values, start), Fraction(0))
    with mp.workdps(dps + 15):
        upper = [to_mpf(a) for a in spec.upper]
        lower = [to_mpf(b) for b in spec.lower]
        pref = to_mpf(spec.prefactor)
        poly = [to_mpf(c) for c in reversed(coeffs)]

        def term(k):
            g = mp.gammaprod([a + k for a in upper] + lower, [k + 1] + [b + k for b in lower] + upper)
            return pref * g * mp.polyval(poly, k)

        total = to_mpf(exact_head) + mp.nsum(term, [start, mp.inf], method="euler-maclaurin")
    with mp.workdps(dps):
        return +total


def family_value(family: FamilyTemplate, values: Mapping[str, Scalar], dps: int = 40, settings: Optional[Settings] = None):
    """Numeric value of prefactor * sum weight * pFq at the given parameters."""
    settings = settings or DEFAULT_SETTINGS
    t = family.hyperterm(values)
    weight = family.weight_poly(values) if family.weighted else None
    if t.terminating_length(settings.term_cap) is None and abs(family.argument) == 1:
        excess = family.parameter_excess(values)
        # terms decay like k^-excess; alternating sums only need them to vanish
        needed = 1 if family.argument == 1 else 0
        if excess <= needed:
            raise MalformedSeriesError(f"family {family.name} diverges at {dict(values)} (parameter excess {excess})")
        if family.argument == 1:
            return unit_argument_value(family, values, dps)
    return series_value(t, dps, settings, weight)
