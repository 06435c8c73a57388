"""Recurrence catalog: h(v) = r1(v) + r2(v) * h'(v + shift).

h is a FamilyTemplate (the recurrence's ``family``) and h' its ``target_family``;
for every catalog entry except FROM_DML the two coincide, so the relation can be
iterated. Terminating instances (terminating variable = -n) are checked exactly;
real-parameter instances only numerically.
"""

from __future__ import annotations

import logging
from collections.abc import Mapping
from dataclasses import dataclass, field
from fractions import Fraction
from functools import lru_cache
from pathlib import Path
from typing import Dict, Iterable, List, Optional, Sequence, Tuple

import numpy as np
from mpmath import mp

from .errors import (
    AccelerationFailure,
    AssignmentError,
    CatalogValidationError,
    CompositionError,
    DomainError,
    InadmissibleParametersError,
    MalformedSeriesError,
    NonVanishingRemainderError,
    PoleError,
    UnknownEntryError,
)
from .exact import MultiPoly, RationalFunction, Scalar, as_rational, pochhammer, rf_equal, rf_eval
from .grammar import parse_rational
from .library import load_catalog, validate_recurrence_payload
from .series import WEIGHT_INDEX, FamilyTemplate, HyperTerm, family_value, to_mpf
from .settings import DEFAULT_SETTINGS

logger = logging.getLogger(__name__)

IDENTITY_ID = "ID"

# terminating sums are never longer than this in verification
TERMINATING_LIMIT = 10000


@dataclass(frozen=True)
class Gauge:
    """g(v) = rational(v) * prod (base(v))_{length(v)} ** exponent."""

    rational: str = "1"
    pochhammers: Tuple[Tuple[str, str, int], ...] = ()

    def is_rational(self) -> bool:
        return not self.pochhammers

    def rational_rf(self, variables: Tuple[str, ...]) -> RationalFunction:
        return parse_rational(self.rational, variables)

    def value(self, values: Mapping[str, Fraction], variables: Tuple[str, ...]) -> Fraction:
        try:
            g = rf_eval(self.rational_rf(variables), values)
        except PoleError as e:
            raise InadmissibleParametersError(f"gauge pole: {e}") from e
        for base, length, exponent in self.pochhammers:
            b = rf_eval(parse_rational(base, variables), values)
            n = rf_eval(parse_rational(length, variables), values)
            if n.denominator != 1 or n < 0:
                raise InadmissibleParametersError(f"gauge Pochhammer length {length} = {n} is not a nonnegative integer")
            p = pochhammer(b, int(n))
            if p == 0 and exponent < 0:
                raise InadmissibleParametersError(f"gauge Pochhammer ({base})_{length} vanishes")
            g *= p ** exponent
        return g


@dataclass(frozen=True)
class PresentationView:
    """h_view = g * h, with coefficients r1' = g(v) r1(v), r2' = r2(v) g(v) / g(v + shift)."""

    name: str
    gauge: Gauge
    r1_display: Optional[str] = None
    r2_display: Optional[str] = None
    description: str = ""


@dataclass(frozen=True, eq=False)
class Recurrence:
    id: str
    variables: Tuple[str, ...]
    family: FamilyTemplate
    target_family: FamilyTemplate
    shift: Tuple[Fraction, ...]
    r1: RationalFunction
    r2: RationalFunction
    anchor: str = ""
    terminating_var: str = "x"
    r1_text: str = ""
    r2_text: str = ""
    views: Tuple[PresentationView, ...] = ()
    proof_term: Optional[str] = None
    components: Tuple[str, ...] = ()

    def __post_init__(self):
        if len(self.shift) != len(self.variables):
            raise DomainError(f"{self.id}: shift {self.shift} does not match variables {self.variables}")
        object.__setattr__(self, "shift", tuple(as_rational(s) for s in self.shift))
        if not self.components:
            object.__setattr__(self, "components", (self.id,))

    @property
    def iterable(self) -> bool:
        return self.family.name == self.target_family.name

    def shift_map(self) -> Dict[str, Fraction]:
        return dict(zip(self.variables, self.shift))

    def point(self, values: Mapping[str, Scalar]) -> Dict[str, Fraction]:
        missing = [v for v in self.variables if v not in values]
        if missing:
            raise AssignmentError(f"{self.id}: missing values for {missing}")
        return {v: as_rational(values[v]) for v in self.variables}

    def shifted(self, values: Mapping[str, Scalar], times: int = 1) -> Dict[str, Fraction]:
        pt = self.point(values)
        return {v: pt[v] + times * d for v, d in zip(self.variables, self.shift)}

    def view(self, name: str) -> PresentationView:
        for v in self.views:
            if v.name == name:
                return v
        raise UnknownEntryError(f"{self.id} has no view {name!r} (views: {[v.name for v in self.views]})")

    def summary(self) -> Dict:
        return {
            "id": self.id,
            "family": self.family.name,
            "target_family": self.target_family.name,
            "shift": {v: str(s) for v, s in self.shift_map().items()},
            "r1": self.r1_text or self.r1.to_text(),
            "r2": self.r2_text or self.r2.to_text(),
            "anchor": self.anchor,
            "views": [v.name for v in self.views],
        }


# ---------------------------------------------------------------------------
# Catalog
# ---------------------------------------------------------------------------

def _parse_view(payload: Mapping) -> PresentationView:
    gauge = payload.get("gauge") or {}
    return PresentationView(
        name=payload["name"],
        gauge=Gauge(
            rational=gauge.get("rational", "1"),
            pochhammers=tuple((str(b), str(n), int(e)) for b, n, e in gauge.get("pochhammer") or ()),
        ),
        r1_display=payload.get("r1"),
        r2_display=payload.get("r2"),
        description=payload.get("description", ""),
    )


@dataclass
class RecurrenceCatalog:
    families: Dict[str, FamilyTemplate]
    entries: Dict[str, Recurrence]
    library_hash: str = ""
    payload: Dict = field(default_factory=dict, repr=False)
    # alternative name -> recurrence id
    aliases: Dict[str, str] = field(default_factory=dict)

    @classmethod
    def from_payload(cls, payload: Mapping, library_hash: str = "") -> "RecurrenceCatalog":
        errors = validate_recurrence_payload(payload)
        if errors:
            raise CatalogValidationError("Recurrence catalog validation failed:\n" + "\n".join(errors))
        families = {name: FamilyTemplate.from_dict(name, fam) for name, fam in payload["families"].items()}
        entries: Dict[str, Recurrence] = {}
        aliases: Dict[str, str] = {}
        for rec in payload["recurrences"]:
            variables = tuple(rec["variables"])
            shift = rec.get("shift") or {}
            entries[rec["id"]] = Recurrence(
                id=rec["id"],
                variables=variables,
                family=families[rec["family"]],
                target_family=families[rec.get("target_family", rec["family"])],
                shift=tuple(parse_rational(str(shift.get(v, "0"))).constant_value() for v in variables),
                r1=parse_rational(rec["r1"], variables),
                r2=parse_rational(rec["r2"], variables),
                anchor=rec.get("anchor", ""),
                terminating_var=rec["terminating_var"],
                r1_text=rec["r1"],
                r2_text=rec["r2"],
                views=tuple(_parse_view(v) for v in rec.get("views") or ()),
                proof_term=rec.get("proof_term"),
            )
            aliases.update({alias: rec["id"] for alias in rec.get("aliases") or ()})
        return cls(families=families, entries=entries, library_hash=library_hash, payload=dict(payload), aliases=aliases)

    def ids(self) -> List[str]:
        return list(self.entries)

    def names(self) -> List[str]:
        """Ids and aliases, everything ``get`` accepts."""
        return self.ids() + list(self.aliases)

    def canonical_chain(self, chain: str) -> str:
        """'A+B' with every alias replaced by its recurrence id."""
        return "+".join(self.aliases.get(c.strip(), c.strip()) for c in chain.split("+") if c.strip())

    def get(self, rec_id: str) -> Recurrence:
        try:
            return self.entries[self.aliases.get(rec_id, rec_id)]
        except KeyError:
            raise UnknownEntryError(f"unknown recurrence {rec_id!r}; known: {', '.join(self.entries)}") from None

    def resolve(self, chain: str, repeat: int = 1) -> Recurrence:
        """'A+B' composes A then B; ``repeat`` applies the whole chain that many times."""
        if repeat < 1:
            raise DomainError(f"repeat must be at least 1, got {repeat}")
        names = [c.strip() for c in chain.split("+") if c.strip()]
        if not names:
            raise UnknownEntryError(f"empty recurrence chain {chain!r}")
        recs = [self.get(n) for n in names] * repeat
        out = compose_chain(recs)
        if repeat > 1:
            label = f"({'+'.join(names)})x{repeat}" if len(names) > 1 else f"{names[0]}x{repeat}"
            out = _relabel(out, label)
        return out


def _relabel(rec: Recurrence, new_id: str) -> Recurrence:
    return Recurrence(
        id=new_id,
        variables=rec.variables,
        family=rec.family,
        target_family=rec.target_family,
        shift=rec.shift,
        r1=rec.r1,
        r2=rec.r2,
        anchor=rec.anchor,
        terminating_var=rec.terminating_var,
        components=rec.components,
    )


def load_recurrence_catalog(base_dir: Optional[Path] = None) -> RecurrenceCatalog:
    payload, lib_hash = load_catalog("recurrences", base_dir)
    return RecurrenceCatalog.from_payload(payload, lib_hash)


@lru_cache(maxsize=1)
def default_catalog() -> RecurrenceCatalog:
    return load_recurrence_catalog(DEFAULT_SETTINGS.data_dir)


# ---------------------------------------------------------------------------
# Apply / compose
# ---------------------------------------------------------------------------

def _as_point(rec: Recurrence, values: Tuple) -> Dict[str, Fraction]:
    if len(values) == 1 and isinstance(values[0], Mapping):
        return rec.point(values[0])
    if len(values) == 1 and isinstance(values[0], (tuple, list)):
        values = tuple(values[0])
    if len(values) != len(rec.variables):
        raise AssignmentError(f"{rec.id} takes {len(rec.variables)} values ({', '.join(rec.variables)}), got {len(values)}")
    return {v: as_rational(x) for v, x in zip(rec.variables, values)}


def coefficients_at(rec: Recurrence, values: Mapping[str, Fraction]) -> Tuple[Fraction, Fraction]:
    try:
        return rf_eval(rec.r1, values), rf_eval(rec.r2, values)
    except PoleError as e:
        raise InadmissibleParametersError(f"{rec.id}: {e}") from e


def apply(rec: Recurrence, *values) -> Tuple[Fraction, Fraction, Tuple[Fraction, ...]]:
    """(r1(v), r2(v), v + shift). ``values`` is positional in rec.variables order or one mapping."""
    pt = _as_point(rec, values)
    r1, r2 = coefficients_at(rec, pt)
    shifted = rec.shifted(pt)
    return r1, r2, tuple(shifted[v] for v in rec.variables)


def identity_recurrence(family: FamilyTemplate) -> Recurrence:
    zero = tuple(Fraction(0) for _ in family.variables)
    return Recurrence(
        id=IDENTITY_ID,
        variables=family.variables,
        family=family,
        target_family=family,
        shift=zero,
        r1=RationalFunction.constant(0),
        r2=RationalFunction.constant(1),
        anchor="identity",
        terminating_var=family.variables[0],
        components=(),
    )


def compose(a: Recurrence, b: Recurrence) -> Recurrence:
    """Apply a, then b to the shifted series a produced."""
    if a.target_family.name != b.family.name:
        raise CompositionError(f"{a.id} produces {a.target_family.name} but {b.id} acts on {b.family.name}")
    if a.variables != b.variables:
        raise CompositionError(f"{a.id} and {b.id} use different variables {a.variables} / {b.variables}")
    offsets = a.shift_map()
    r1 = a.r1 + a.r2 * b.r1.shift(offsets)
    r2 = a.r2 * b.r2.shift(offsets)
    if a.id == IDENTITY_ID:
        rid = b.id
    elif b.id == IDENTITY_ID:
        rid = a.id
    else:
        rid = f"{a.id}+{b.id}"
    return Recurrence(
        id=rid,
        variables=a.variables,
        family=a.family,
        target_family=b.target_family,
        shift=tuple(x + y for x, y in zip(a.shift, b.shift)),
        r1=r1,
        r2=r2,
        anchor=" ; ".join(s for s in (a.anchor, b.anchor) if s and s != "identity"),
        terminating_var=a.terminating_var,
        components=a.components + b.components,
    )


def compose_chain(recs: Sequence[Recurrence]) -> Recurrence:
    if not recs:
        raise CompositionError("empty chain")
    out = recs[0]
    for r in recs[1:]:
        out = compose(out, r)
    return out


# ---------------------------------------------------------------------------
# Terminating verification
# ---------------------------------------------------------------------------

def _terminating_value(family: FamilyTemplate, values: Mapping[str, Fraction]) -> Fraction:
    try:
        return family.terminating_value(values, TERMINATING_LIMIT)
    except (MalformedSeriesError, PoleError) as e:
        raise InadmissibleParametersError(f"{family.name} at {dict(values)}: {e}") from e


def _symbolic_terminating_value(family: FamilyTemplate, sub: Mapping[str, Fraction]) -> RationalFunction:
    """Finite sum of the family with ``sub`` applied; unassigned variables stay symbolic."""
    try:
        ratio = family.symbolic_ratio(WEIGHT_INDEX).substitute(sub)
        pref = family.prefactor_rf().substitute(sub)
        weight = family.weight_rf().substitute(sub)
        length = None
        for k in range(TERMINATING_LIMIT):
            if ratio.num.specialize(WEIGHT_INDEX, k).is_zero():
                length = k
                break
        if length is None:
            raise InadmissibleParametersError(f"{family.name} at {dict(sub)} does not terminate")
        # Horner: w(0) + R(0)(w(1) + R(1)(w(2) + ...))
        acc = weight.specialize(WEIGHT_INDEX, length)
        for k in reversed(range(length)):
            acc = weight.specialize(WEIGHT_INDEX, k) + ratio.specialize(WEIGHT_INDEX, k) * acc
    except PoleError as e:
        raise InadmissibleParametersError(f"{family.name} at {dict(sub)}: {e}") from e
    return pref * acc


def _assignment(rec: Recurrence, n: int, y) -> Dict[str, Fraction]:
    if isinstance(n, bool) or int(n) != n or n < 0:
        raise DomainError(f"n must be a nonnegative integer, got {n!r}")
    sub = {rec.terminating_var: Fraction(-int(n))}
    others = [v for v in rec.variables if v != rec.terminating_var]
    if y is None:
        return sub
    if isinstance(y, Mapping):
        extra = set(y) - set(others)
        if extra:
            raise AssignmentError(f"{rec.id}: cannot assign {sorted(extra)}")
        sub.update({v: as_rational(val) for v, val in y.items()})
        return sub
    if len(others) != 1:
        raise AssignmentError(f"{rec.id} has free parameters {others}; pass a mapping")
    sub[others[0]] = as_rational(y)
    return sub


def verify_terminating(rec: Recurrence, n: int, y=None, seed: int = 0) -> bool:
    """Check the recurrence at terminating-variable = -n as an exact finite-sum identity.

    With every other parameter assigned the check is pointwise over Fractions. Any
    parameter left out (``y=None`` or a partial mapping) stays symbolic and the identity
    is decided with rf_equal, which covers every value of it at once.
    """
    sub = _assignment(rec, n, y)
    if len(sub) == len(rec.variables):
        lhs = _terminating_value(rec.family, sub)
        r1, r2 = coefficients_at(rec, sub)
        # the shifted family must be admissible even where r2 vanishes
        rhs_family = _terminating_value(rec.target_family, rec.shifted(sub))
        return lhs == r1 + r2 * rhs_family

    lhs = _symbolic_terminating_value(rec.family, sub)
    try:
        r1 = rec.r1.substitute(sub)
        r2 = rec.r2.substitute(sub)
    except PoleError as e:
        raise InadmissibleParametersError(f"{rec.id}: {e}") from e
    shifted: Dict[str, object] = {}
    for v, d in rec.shift_map().items():
        if v in sub:
            shifted[v] = sub[v] + d
        elif d:
            shifted[v] = MultiPoly.variable(v) + d
    rhs = r1 + r2 * _symbolic_terminating_value(rec.target_family, shifted)
    return rf_equal(lhs, rhs, seed)


@dataclass
class SweepReport:
    rec_id: str
    checked: int = 0
    redraws: int = 0
    failures: List[Tuple[int, Dict[str, str]]] = field(default_factory=list)

    @property
    def ok(self) -> bool:
        return self.checked > 0 and not self.failures


def random_parameter(rng: np.random.Generator, max_num: int = 40, max_den: int = 7) -> Fraction:
    """Small random rational p/q with 1 <= p <= max_num, 1 <= q <= max_den."""
    return Fraction(int(rng.integers(1, max_num + 1)), int(rng.integers(1, max_den + 1)))


def sweep_terminating(
    rec: Recurrence,
    n_values: Iterable[int],
    samples: int,
    seed: int = 0,
    max_redraws: int = 200,
) -> SweepReport:
    """verify_terminating over n_values x ``samples`` random parameter draws per n.

    A draw that lands on a pole is redrawn (and logged); the identity must hold at every
    accepted draw.
    """
    rng = np.random.default_rng(seed)
    others = [v for v in rec.variables if v != rec.terminating_var]
    report = SweepReport(rec.id)
    for n in n_values:
        accepted = 0
        attempts = 0
        while accepted < samples:
            draw = {v: random_parameter(rng) for v in others}
            attempts += 1
            try:
                ok = verify_terminating(rec, n, draw)
            except InadmissibleParametersError as e:
                report.redraws += 1
                logger.info("%s: n=%d draw %s hits a pole (%s); redrawing", rec.id, n, draw, e)
                if attempts > samples + max_redraws:
                    raise InadmissibleParametersError(f"{rec.id}: too many poles at n={n}") from e
                continue
            accepted += 1
            report.checked += 1
            if not ok:
                report.failures.append((n, {k: str(v) for k, v in draw.items()}))
                logger.error("%s fails at n=%d, %s", rec.id, n, draw)
    return report


# ---------------------------------------------------------------------------
# Lemma: h(v) = sum_{j<m} prod_{i<j} r2(v+i*shift) * r1(v+j*shift) + residual(m)
# ---------------------------------------------------------------------------

def lemma_terms(rec: Recurrence, values: Mapping[str, Scalar], m: int) -> Tuple[List[Fraction], Fraction]:
    """First m accelerated terms and the product prod_{i<m} r2(v + i*shift)."""
    if m < 0:
        raise DomainError(f"m must be nonnegative, got {m}")
    if m > 1 and not rec.iterable:
        raise CompositionError(f"{rec.id} maps {rec.family.name} to {rec.target_family.name}; it cannot be iterated")
    terms: List[Fraction] = []
    prod = Fraction(1)
    for j in range(m):
        r1, r2 = coefficients_at(rec, rec.shifted(values, j))
        terms.append(prod * r1)
        prod *= r2
    return terms, prod


def residual(rec: Recurrence, *values, m: int, dps: int = 40):
    """prod_{i<m} r2(v + i*shift) * h(v + m*shift), numerically (mpf)."""
    pt = _as_point(rec, values)
    _, prod = lemma_terms(rec, pt, m)
    if prod == 0:
        return mp.zero
    family = rec.family if m == 0 else rec.target_family
    try:
        h = family_value(family, rec.shifted(pt, m), dps)
    except MalformedSeriesError as e:
        raise NonVanishingRemainderError(f"{rec.id} at {pt}, m={m}: {e}") from e
    with mp.workdps(dps):
        return to_mpf(prod) * h


def lemma_hyperterm(rec: Recurrence, values: Mapping[str, Scalar], index_var: str = "j") -> HyperTerm:
    """The accelerated series sum_j T_j as a HyperTerm in ``index_var``.

    T_0 = r1(v), T_{j+1}/T_j = r2(v+j*shift) * r1(v+(j+1)*shift) / r1(v+j*shift).
    """
    pt = rec.point(values)
    if not rec.iterable:
        raise CompositionError(f"{rec.id} cannot be iterated")
    j = MultiPoly.variable(index_var)

    def at(offset: int) -> Dict[str, MultiPoly]:
        return {v: (j + offset) * d + pt[v] for v, d in rec.shift_map().items()}

    try:
        r1_j = rec.r1.substitute(at(0))
        r1_next = rec.r1.substitute(at(1))
        r2_j = rec.r2.substitute(at(0))
        ratio = r2_j * r1_next / r1_j
        first = rf_eval(rec.r1, pt)
        label = f"{rec.id} accelerated at ({', '.join(f'{v}={pt[v]}' for v in rec.variables)})"
        return HyperTerm(index_var, 0, first, ratio, label)
    except (DomainError, PoleError, MalformedSeriesError) as e:
        raise AccelerationFailure(f"{rec.id} at {pt}: {e}") from e


def numeric_gap(rec: Recurrence, values: Mapping[str, Scalar], dps: int = 50):
    """|h(v) - r1(v) - r2(v) h'(v+shift)| with both series summed numerically."""
    pt = rec.point(values)
    r1, r2 = coefficients_at(rec, pt)
    with mp.workdps(dps):
        lhs = family_value(rec.family, pt, dps)
        rhs = to_mpf(r1) + to_mpf(r2) * family_value(rec.target_family, rec.shifted(pt), dps)
        return abs(lhs - rhs)


# ---------------------------------------------------------------------------
# Views
# ---------------------------------------------------------------------------

def view_coefficients(rec: Recurrence, view_name: str, *values) -> Tuple[Fraction, Fraction]:
    view = rec.view(view_name)
    pt = _as_point(rec, values)
    r1, r2 = coefficients_at(rec, pt)
    g = view.gauge.value(pt, rec.variables)
    g_next = view.gauge.value(rec.shifted(pt), rec.variables)
    if g_next == 0:
        raise InadmissibleParametersError(f"{rec.id} view {view_name}: gauge vanishes at the shifted point")
    return g * r1, r2 * g / g_next


def view_rf(rec: Recurrence, view_name: str) -> Tuple[RationalFunction, RationalFunction]:
    """Symbolic view coefficients; only rational gauges have them."""
    view = rec.view(view_name)
    if not view.gauge.is_rational():
        raise DomainError(f"{rec.id} view {view_name} has a Pochhammer gauge; use view_coefficients")
    g = view.gauge.rational_rf(rec.variables)
    return g * rec.r1, rec.r2 * g / g.shift(rec.shift_map())


# ---------------------------------------------------------------------------
# Telescoping rational identities behind the recurrences
# ---------------------------------------------------------------------------

def telescoping_identities() -> Dict[str, Tuple[RationalFunction, RationalFunction]]:
    """name -> (lhs, rhs) in (x, y, n); each pair is a rational-function identity."""
    v = ("n", "x", "y")

    def rf(text: str) -> RationalFunction:
        return parse_rational(text, v)

    ratio_31 = rf("(x+n)*(x+n+1)/((x+y+n)*(x+y+n+1))")
    summand = "(2*n^2+2*(2*x+y)*n+2*x^2+2*x*y-y^2-y)/4"
    f_2018 = "(2*n+2*x-y)/(2*(2*y-1))"
    return {
        "first_3f2_one": (
            ratio_31,
            rf("(2*n+2*x-y+1)/(2*(2*y-1))")
            - rf("(2*n+2+2*x-y+1)/(2*(2*y-1))") * ratio_31
            + rf("(y-1)*y*(y+1)/(2*(2*y-1)*(x+y+n)*(x+y+n+1))"),
        ),
        "squared_3f2_minus_one": (
            rf("(x+n)^2"),
            rf(summand)
            + rf(summand).shift({"n": 1}) * rf("(x+n)^2/(x+y+n+1)^2")
            + rf("y*(1+y)^3/(4*(x+y+n+1)^2)"),
        ),
        "recurrence_2018": (
            rf("(x+n)^2/(x+y+n)^2"),
            rf(f_2018)
            - rf(f_2018).shift({"n": 1}) * rf("(x+n)^2/(x+y+n)^2")
            + rf("y^3/(2*(2*y-1)*(x+y+n)^2)"),
        ),
    }
