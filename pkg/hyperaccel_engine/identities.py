"""Identity catalog: series = constant, each with provenance and a claimed rate.

A record either carries a summand formula or only a route (a recurrence chain and a
start point); route records use the accelerated series itself. Records that carry
both are checked for term-by-term agreement between the two.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass, field
from fractions import Fraction
from functools import lru_cache
from pathlib import Path
from typing import Dict, List, Mapping, Optional, Tuple

from .constants import REFERENCE_NAMES
from .errors import AccelerationFailure, CatalogValidationError, DomainError, UnknownEntryError
from .exact import MultiPoly, rf_equal
from .library import list_records, load_catalog, validate_identity_records
from .recurrences import Recurrence, RecurrenceCatalog, default_catalog, lemma_hyperterm
from .schemas import IdentityRecord, Route
from .series import HyperTerm, compile_summand
from .settings import DEFAULT_SETTINGS

logger = logging.getLogger(__name__)

# offsets tried when lining an accelerated series up with a summand
ALIGN_OFFSETS = range(-3, 4)


@dataclass
class Alignment:
    """route term j == scale * summand term (j + offset)."""

    offset: int
    scale: Fraction


@dataclass
class IdentityCatalog:
    records: Dict[str, IdentityRecord]
    library_hash: str = ""
    payload: Dict = field(default_factory=dict, repr=False)

    @classmethod
    def from_payload(
        cls,
        payload: Mapping,
        library_hash: str = "",
        recurrence_ids: Tuple[str, ...] = (),
    ) -> "IdentityCatalog":
        raw = list_records(payload)
        errors = validate_identity_records(raw, REFERENCE_NAMES, recurrence_ids)
        if errors:
            raise CatalogValidationError("Identity catalog validation failed:\n" + "\n".join(errors))
        records = {r["id"]: IdentityRecord.from_dict(r) for r in raw}
        return cls(records=records, library_hash=library_hash, payload=dict(payload))

    def ids(self, status: Optional[str] = None) -> List[str]:
        return [rid for rid, r in self.records.items() if status is None or r.status == status]

    def get(self, record_id: str) -> IdentityRecord:
        try:
            return self.records[record_id]
        except KeyError:
            raise UnknownEntryError(f"unknown identity {record_id!r}") from None

    def with_tag(self, tag: str) -> List[IdentityRecord]:
        return [r for r in self.records.values() if tag in r.tags]

    def routed(self) -> List[IdentityRecord]:
        return [r for r in self.records.values() if r.route is not None]


def load_identity_catalog(base_dir: Optional[Path] = None, recurrences: Optional[RecurrenceCatalog] = None) -> IdentityCatalog:
    payload, lib_hash = load_catalog("identities", base_dir)
    rec_ids = tuple(recurrences.names()) if recurrences is not None else ()
    return IdentityCatalog.from_payload(payload, lib_hash, rec_ids)


@lru_cache(maxsize=1)
def default_identities() -> IdentityCatalog:
    return load_identity_catalog(DEFAULT_SETTINGS.data_dir, default_catalog())


# ---------------------------------------------------------------------------
# Series of a record
# ---------------------------------------------------------------------------

def summand_series(record: IdentityRecord) -> HyperTerm:
    if record.summand is None:
        raise DomainError(f"{record.id} has no summand formula")
    return compile_summand(record.summand, "n", record.lower_limit, record.id)


def route_recurrence(route: Route, recurrences: Optional[RecurrenceCatalog] = None) -> Recurrence:
    recurrences = recurrences or default_catalog()
    return recurrences.resolve(route.recurrence, route.repeat)


def route_series(record: IdentityRecord, recurrences: Optional[RecurrenceCatalog] = None) -> HyperTerm:
    if record.route is None:
        raise DomainError(f"{record.id} has no route")
    rec = route_recurrence(record.route, recurrences)
    return lemma_hyperterm(rec, {"x": record.route.x, "y": record.route.y})


def series_for(record: IdentityRecord, recurrences: Optional[RecurrenceCatalog] = None) -> HyperTerm:
    """The series whose value is the record's constant."""
    if record.summand is not None:
        return summand_series(record)
    return route_series(record, recurrences)


# ---------------------------------------------------------------------------
# Alignment of an accelerated series with a summand
# ---------------------------------------------------------------------------

def align(route: HyperTerm, summand: HyperTerm, seed: int = 0) -> Optional[Alignment]:
    """Find (offset, scale) with route(j) = scale * summand(j + offset) for all j.

    The ratio identity ratio_route(j) = ratio_summand(j + offset) is decided exactly with
    rf_equal; the scale then follows from the first terms.
    """
    if route.first_index != 0:
        raise DomainError("route series must start at index 0")
    j = MultiPoly.variable(route.index_var)
    for offset in ALIGN_OFFSETS:
        if offset < summand.first_index:
            continue
        shifted = summand.ratio.substitute({summand.index_var: j + offset})
        if not rf_equal(route.ratio, shifted, seed):
            continue
        base = summand.term(offset)
        if base == 0:
            continue
        found = Alignment(offset, route.first_term / base)
        logger.debug("%s aligned with %s at offset %d, scale %s", route.describe(), summand.describe(), offset, found.scale)
        return found
    return None


def aligned_terms(route: HyperTerm, summand: HyperTerm, alignment: Alignment, count: int) -> Tuple[List[Fraction], List[Fraction]]:
    """First ``count`` route terms next to the matching scaled summand terms."""
    skip = alignment.offset - summand.first_index
    expected = [alignment.scale * t for t in summand.terms(skip + count)[skip:]]
    return route.terms(count), expected


def check_route(record: IdentityRecord, count: int = 30, recurrences: Optional[RecurrenceCatalog] = None, seed: int = 0) -> Alignment:
    """Align the record's route with its summand and compare ``count`` terms exactly.

    Stored offset/scale, when present, must agree with the ones found.
    """
    if record.route is None or record.summand is None:
        raise DomainError(f"{record.id} needs both a summand and a route")
    route = route_series(record, recurrences)
    summand = summand_series(record)
    found = align(route, summand, seed)
    if found is None:
        raise AccelerationFailure(f"{record.id}: {route.describe()} does not match the summand at any offset in {list(ALIGN_OFFSETS)}")
    r = record.route
    if r.offset is not None and r.offset != found.offset:
        raise AccelerationFailure(f"{record.id}: stored offset {r.offset}, found {found.offset}")
    if r.scale is not None and r.scale != found.scale:
        raise AccelerationFailure(f"{record.id}: stored scale {r.scale}, found {found.scale}")
    got, expected = aligned_terms(route, summand, found, count)
    for idx, (a, b) in enumerate(zip(got, expected)):
        if a != b:
            raise AccelerationFailure(f"{record.id}: term {idx} is {a}, expected {b}")
    return found


def match_run(
    rec: Recurrence,
    x: Fraction,
    y: Fraction,
    repeat: int,
    catalog: IdentityCatalog,
    recurrences: Optional[RecurrenceCatalog] = None,
) -> Optional[Tuple[IdentityRecord, Optional[Alignment]]]:
    """Catalog record whose route is this recurrence at (x, y), if any.

    With ``recurrences`` given, route chains written with aliases match too.
    """
    for record in catalog.routed():
        r = record.route
        if (r.x, r.y, r.repeat) != (x, y, repeat):
            continue
        chain = recurrences.canonical_chain(r.recurrence) if recurrences is not None else r.recurrence
        if chain != "+".join(rec.components[: len(rec.components) // repeat]):
            continue
        if record.summand is None:
            return record, None
        route = lemma_hyperterm(rec, {"x": x, "y": y})
        return record, align(route, summand_series(record))
    return None
