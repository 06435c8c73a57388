"""Wilf-Zeilberger certificate checks.

For a bivariate hypergeometric term F(n, k) and a rational certificate R(n, k),
G = R*F and the pair must satisfy F(n+1, k) - F(n, k) = G(n, k+1) - G(n, k).
Dividing by F(n, k) turns that into an identity between rational functions:

    ratio_n(n, k) - 1 = R(n, k+1) * ratio_k(n, k) - R(n, k)

with ratio_n = F(n+1, k)/F(n, k) and ratio_k = F(n, k+1)/F(n, k). Every other
variable (y in the shipped certificates) stays symbolic.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass, field
from fractions import Fraction
from pathlib import Path
from typing import Callable, Dict, List, Mapping, Optional, Sequence, Tuple, Union

import numpy as np
import sympy

from .errors import (
    InadmissibleParametersError,
    MalformedPairError,
    ParseError,
    PoleError,
    UnsupportedCaseError,
)
from .exact import MultiPoly, RationalFunction, Scalar, as_rational, rf_equal, rf_eval
from .grammar import exact_value, parse_expression, parse_rational, rf_to_sympy, term_ratio, to_rational_function

logger = logging.getLogger(__name__)

# a finite support must end within this many k
SUPPORT_LIMIT = 10000


@dataclass(frozen=True, eq=False)
class WZPair:
    ratio_n: RationalFunction
    ratio_k: RationalFunction
    certificate: RationalFunction
    n: str = "n"
    k: str = "k"
    support: str = "finite: F(n, k) = 0 for k > n"
    term_text: Optional[str] = None
    label: str = ""

    @property
    def parameters(self) -> Tuple[str, ...]:
        names = self.ratio_n.free_variables() | self.ratio_k.free_variables() | self.certificate.free_variables()
        return tuple(sorted(names - {self.n, self.k}))

    @classmethod
    def from_term(
        cls,
        term_text: str,
        certificate_text: str,
        n: str = "n",
        k: str = "k",
        support: str = "finite: F(n, k) = 0 for k > n",
        label: str = "",
        seed: int = 0,
    ) -> "WZPair":
        """Build the pair from F in the summand grammar and R in the rational grammar."""
        expr = parse_expression(term_text, functions=True)
        names = tuple(sorted({str(s) for s in expr.free_symbols} | {n, k}))
        try:
            ratio_n = term_ratio(expr, n, names)
            ratio_k = term_ratio(expr, k, names)
        except ParseError as e:
            raise MalformedPairError(f"{label or 'pair'}: F is not hypergeometric in both {n} and {k}: {e}") from e
        certificate = parse_rational(certificate_text, names)
        pair = cls(ratio_n, ratio_k, certificate, n, k, support, term_text, label)
        if not check_shift_compatibility(pair, seed):
            raise MalformedPairError(f"{label or 'pair'}: ratio_n and ratio_k are not shift-compatible")
        return pair

    def with_certificate(self, certificate: RationalFunction) -> "WZPair":
        return WZPair(self.ratio_n, self.ratio_k, certificate, self.n, self.k, self.support, self.term_text, self.label)

    def term_expr(self) -> sympy.Expr:
        if self.term_text is None:
            raise UnsupportedCaseError(f"{self.label or 'pair'} was built without an explicit F")
        return parse_expression(self.term_text, functions=True)


def check_shift_compatibility(p: WZPair, seed: int = 0) -> bool:
    """ratio_n(n,k) * ratio_k(n+1,k) == ratio_k(n,k) * ratio_n(n,k+1)."""
    lhs = p.ratio_n * p.ratio_k.shift({p.n: 1})
    rhs = p.ratio_k * p.ratio_n.shift({p.k: 1})
    return rf_equal(lhs, rhs, seed)


def check_certificate(p: WZPair, seed: int = 0) -> bool:
    if not check_shift_compatibility(p, seed):
        raise MalformedPairError(f"{p.label or 'pair'}: ratio_n and ratio_k are not shift-compatible")
    lhs = p.ratio_n - 1
    rhs = p.certificate.shift({p.k: 1}) * p.ratio_k - p.certificate
    ok = rf_equal(lhs, rhs, seed)
    logger.info("certificate %s: %s", p.label or p.certificate.to_text()[:60], "valid" if ok else "rejected")
    return ok


# ---------------------------------------------------------------------------
# Finite sums over k
# ---------------------------------------------------------------------------

def _point(p: WZPair, n: int, k: int, params: Mapping[str, Fraction]) -> Dict[str, Fraction]:
    pt = {p.n: Fraction(n), p.k: Fraction(k)}
    pt.update(params)
    return pt


def row_terms(p: WZPair, f0: Callable[[int], Fraction], n: int, params: Optional[Mapping[str, Scalar]] = None, stop: Optional[int] = None) -> List[Fraction]:
    """F(n, 0), F(n, 1), ... built from F(n, 0) and ratio_k.

    Without ``stop`` the row runs to the end of its finite support; an infinite support
    raises UnsupportedCaseError.
    """
    params = {name: as_rational(v) for name, v in (params or {}).items()}
    first = as_rational(f0(n))
    if first == 0:
        raise UnsupportedCaseError(f"F({n}, 0) = 0; the row cannot be built from its first term")
    out = [first]
    limit = SUPPORT_LIMIT if stop is None else stop
    k = 0
    while len(out) < limit:
        pt = _point(p, n, k, params)
        if p.ratio_k.num.evaluate(pt) == 0:
            if stop is None:
                return out
            out.extend([Fraction(0)] * (limit - len(out)))
            return out
        try:
            out.append(out[-1] * rf_eval(p.ratio_k, pt))
        except PoleError as e:
            raise InadmissibleParametersError(f"ratio_k pole at n={n}, k={k}: {e}") from e
        k += 1
    if stop is None:
        raise UnsupportedCaseError(f"support of F({n}, k) does not end within {SUPPORT_LIMIT} terms")
    return out


def check_sum_constant(
    p: WZPair,
    f0: Callable[[int], Fraction],
    n_range: Sequence[int],
    params: Optional[Mapping[str, Scalar]] = None,
) -> bool:
    """True iff sum_k F(n, k) is the same rational for every n in n_range."""
    sums = []
    for n in n_range:
        sums.append(sum(row_terms(p, f0, n, params), Fraction(0)))
    if sums:
        logger.debug("row sums over n=%s: %s", list(n_range), [str(s) for s in sums])
    return len(set(sums)) <= 1


def row_sum(p: WZPair, f0: Callable[[int], Fraction], n: int, params: Optional[Mapping[str, Scalar]] = None) -> Fraction:
    return sum(row_terms(p, f0, n, params), Fraction(0))


def term_f0(p: WZPair, params: Optional[Mapping[str, Scalar]] = None) -> Callable[[int], Fraction]:
    """n -> F(n, 0) by direct evaluation of the pair's explicit F."""
    expr = p.term_expr()
    params = dict(params or {})

    def f0(n: int) -> Fraction:
        try:
            return exact_value(expr, {p.n: n, p.k: 0, **params})
        except PoleError as e:
            raise InadmissibleParametersError(f"F({n}, 0) is a pole: {e}") from e

    return f0


def term_function(p: WZPair, params: Optional[Mapping[str, Scalar]] = None) -> Callable[[int, int], Fraction]:
    """(n, k) -> F(n, k) from the explicit formula; poles raise InadmissibleParametersError."""
    expr = p.term_expr()
    params = {name: as_rational(v) for name, v in (params or {}).items()}
    cache: Dict[Tuple[int, int], Fraction] = {}

    def F(n: int, k: int) -> Fraction:
        if (n, k) not in cache:
            try:
                cache[(n, k)] = exact_value(expr, {p.n: n, p.k: k, **params})
            except PoleError as e:
                raise InadmissibleParametersError(f"F({n}, {k}) is a pole: {e}") from e
        return cache[(n, k)]

    return F


def _cancelled_value(f: RationalFunction, pt: Mapping[str, Fraction]) -> Fraction:
    """Value of f at pt after cancelling common factors; a pole that survives raises PoleError."""
    reduced = to_rational_function(sympy.cancel(rf_to_sympy(f)), f.num.variables)
    return rf_eval(reduced, pt)


def g_value(p: WZPair, F: Callable[[int, int], Fraction], n: int, k: int, params: Mapping[str, Fraction]) -> Fraction:
    """G(n, k) = R(n, k) * F(n, k), taken as a limit where F vanishes on a pole of R."""
    pt = _point(p, n, k, params)
    f = F(n, k)
    if f != 0:
        try:
            return rf_eval(p.certificate, pt) * f
        except PoleError as e:
            raise InadmissibleParametersError(f"certificate pole at n={n}, k={k}: {e}") from e
    if p.certificate.den.evaluate(pt) != 0:
        return Fraction(0)
    # F(n, k) = ratio_k(n, k-1) * F(n, k-1) = F(n, k+1) / ratio_k(n, k)
    if k > 0 and F(n, k - 1) != 0:
        scale = p.certificate * p.ratio_k.shift({p.k: -1})
        neighbour = F(n, k - 1)
    elif F(n, k + 1) != 0:
        scale = p.certificate * RationalFunction(p.ratio_k.den, p.ratio_k.num)
        neighbour = F(n, k + 1)
    else:
        # zero of F on both sides outlasts a simple pole of R
        return Fraction(0)
    try:
        return _cancelled_value(scale, pt) * neighbour
    except PoleError as e:
        raise InadmissibleParametersError(f"G({n}, {k}) has no finite limit: {e}") from e


def boundary_check(p: WZPair, n: int, k_range: range, params: Optional[Mapping[str, Scalar]] = None) -> Fraction:
    """G(n, k_range.stop) - G(n, k_range.start); for a valid certificate this equals
    summed_difference over the same range."""
    if k_range.step != 1:
        raise UnsupportedCaseError("k_range must have step 1")
    if len(k_range) == 0:
        return Fraction(0)
    params = {name: as_rational(v) for name, v in (params or {}).items()}
    F = term_function(p, params)
    return g_value(p, F, n, k_range.stop, params) - g_value(p, F, n, k_range.start, params)


def summed_difference(p: WZPair, n: int, k_range: range, params: Optional[Mapping[str, Scalar]] = None) -> Fraction:
    """sum over k in k_range of F(n+1, k) - F(n, k)."""
    F = term_function(p, params)
    return sum((F(n + 1, k) - F(n, k) for k in k_range), Fraction(0))


def pointwise_oracle(
    p: WZPair,
    params: Optional[Mapping[str, Scalar]] = None,
    n_max: int = 10,
    k_max: int = 10,
) -> Tuple[int, List[Tuple[int, int]]]:
    """Check F(n+1,k) - F(n,k) = G(n,k+1) - G(n,k) at every integer point of [0,n_max] x [0,k_max].

    F is evaluated directly from its explicit formula; points touching a pole of F or R
    are skipped. Returns (points checked, failing points).
    """
    expr = p.term_expr()
    params = {name: as_rational(v) for name, v in (params or {}).items()}
    cache: Dict[Tuple[int, int], Optional[Fraction]] = {}

    def F(n: int, k: int) -> Optional[Fraction]:
        if (n, k) not in cache:
            try:
                cache[(n, k)] = exact_value(expr, {p.n: n, p.k: k, **params})
            except PoleError:
                cache[(n, k)] = None
        return cache[(n, k)]

    def G(n: int, k: int) -> Optional[Fraction]:
        f = F(n, k)
        if f is None:
            return None
        if f == 0:
            return Fraction(0) if p.certificate.den.evaluate(_point(p, n, k, params)) != 0 else None
        try:
            return rf_eval(p.certificate, _point(p, n, k, params)) * f
        except PoleError:
            return None

    checked = 0
    failures: List[Tuple[int, int]] = []
    for n in range(n_max + 1):
        for k in range(k_max + 1):
            values = (F(n + 1, k), F(n, k), G(n, k + 1), G(n, k))
            if any(v is None for v in values):
                continue
            checked += 1
            if values[0] - values[1] != values[2] - values[3]:
                failures.append((n, k))
    return checked, failures


# ---------------------------------------------------------------------------
# Mutation
# ---------------------------------------------------------------------------

def mutate_certificate(certificate: RationalFunction, rng: np.random.Generator) -> RationalFunction:
    """Perturb one numerator coefficient by a random nonzero integer."""
    terms = dict(certificate.num.terms)
    keys = sorted(terms)
    key = keys[int(rng.integers(0, len(keys)))]
    delta = int(rng.integers(1, 6)) * (1 if rng.integers(0, 2) else -1)
    terms[key] = terms[key] + delta
    if terms[key] == 0:
        terms[key] = Fraction(delta)
    return RationalFunction(MultiPoly(certificate.num.variables, terms), certificate.den)


def mutation_sweep(p: WZPair, count: int, seed: int = 0) -> List[bool]:
    """check_certificate on ``count`` random single-coefficient mutations of p."""
    rng = np.random.default_rng(seed)
    return [check_certificate(p.with_certificate(mutate_certificate(p.certificate, rng)), seed) for _ in range(count)]


# ---------------------------------------------------------------------------
# Certificate files
# ---------------------------------------------------------------------------

@dataclass
class CertificateFile:
    certificate: str
    recurrence: Optional[str] = None
    variables: Tuple[str, ...] = ("n", "k")
    term: Optional[str] = None
    headers: Dict[str, str] = field(default_factory=dict)


def parse_certificate_text(text: str) -> CertificateFile:
    """Header lines ``key: value`` then ``certificate:`` followed by the rational function.

    Lines starting with '#' are comments. The certificate may span several lines.
    """
    headers: Dict[str, str] = {}
    cert_lines: List[str] = []
    in_cert = False
    for raw in text.splitlines():
        line = raw.strip()
        if not line or line.startswith("#"):
            continue
        if in_cert:
            cert_lines.append(line)
            continue
        key, sep, value = line.partition(":")
        if not sep:
            raise ParseError(f"certificate file: expected 'key: value', got {line!r}")
        key = key.strip().lower()
        if key == "certificate":
            in_cert = True
            if value.strip():
                cert_lines.append(value.strip())
        else:
            headers[key] = value.strip()
    if not cert_lines:
        raise ParseError("certificate file has no 'certificate:' section")
    variables = tuple(v.strip() for v in headers.get("variables", "n, k").split(",") if v.strip())
    if len(variables) < 2:
        raise ParseError("certificate file: 'variables' must name n and k first")
    return CertificateFile(
        certificate=" ".join(cert_lines),
        recurrence=headers.get("recurrence"),
        variables=variables,
        term=headers.get("term"),
        headers=headers,
    )


def load_certificate_file(path: Union[str, Path]) -> CertificateFile:
    return parse_certificate_text(Path(path).read_text(encoding="utf-8"))
