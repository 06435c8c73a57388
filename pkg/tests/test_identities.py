import json
from fractions import Fraction

import pytest

from conftest import REPO_ROOT
from hyperaccel_engine.constants import REFERENCE_NAMES
from hyperaccel_engine.errors import AccelerationFailure, CatalogValidationError, DomainError, UnknownEntryError
from hyperaccel_engine.identities import IdentityCatalog, align, check_route, match_run, route_series, series_for, summand_series
from hyperaccel_engine.library import validate_identity_records
from hyperaccel_engine.schemas import IdentityRecord, Route

_RAW = json.loads((REPO_ROOT / "data" / "identities.json").read_text(encoding="utf-8"))["records"]
ROUTED = sorted(r["id"] for r in _RAW if r.get("route") and r.get("summand"))
# one route with a 15-degree polynomial summand and a threefold chain
HEAVY = {"IPI2_RATE2P30"}


def _routed_params():
    for rid in ROUTED:
        marks = [pytest.mark.slow] if rid in HEAVY else []
        yield pytest.param(rid, marks=marks, id=rid)


@pytest.mark.parametrize("record_id", list(_routed_params()))
def test_route_matches_summand_term_by_term(record_id, identities, recurrences):
    record = identities.get(record_id)
    found = check_route(record, 30, recurrences)
    assert found.scale != 0
    assert found.offset >= (record.lower_limit or 0)


def test_route_only_records_use_the_accelerated_series(identities, recurrences):
    record = identities.get("T_HALF_TWO")
    assert record.route_only
    t = series_for(record, recurrences)
    assert t.index_var == "j"
    assert t.first_index == 0
    with pytest.raises(DomainError):
        summand_series(record)


def test_wrong_stored_offset_is_reported(identities, recurrences):
    record = identities.get("T_EXAMPLE_PI")
    found = check_route(record, 10, recurrences)
    bad = IdentityRecord.from_dict(dict(record.to_dict(), route=dict(record.route.to_dict(), offset=found.offset + 1)))
    with pytest.raises(AccelerationFailure):
        check_route(bad, 10, recurrences)


def test_align_rejects_unrelated_series(identities, recurrences):
    route = route_series(identities.get("LUPAS_WOLFRAM"), recurrences)
    assert align(route, summand_series(identities.get("ZETA3_28"))) is None


def test_catalog_lookup(identities):
    assert "ZETA2_RATE64" in identities.ids("proved")
    assert set(identities.ids("conjectured")) >= {"ZHAO", "PI4_CONJ"}
    assert {r.id for r in identities.with_tag("rate-one")} >= {"PI2_ALTERNATING", "T1_IPI_1"}
    with pytest.raises(UnknownEntryError):
        identities.get("NOT_AN_IDENTITY")


def test_shipped_records_validate(recurrences):
    assert validate_identity_records(_RAW, REFERENCE_NAMES, recurrences.names()) == []


def _record(**overrides):
    base = {"id": "X", "summand": "2^(-n)", "constant": {"1": "2"}, "status": "proved", "anchor": "geometric"}
    base.update(overrides)
    return {k: v for k, v in base.items() if v is not None}


@pytest.mark.parametrize(
    "overrides, fragment",
    [
        ({"anchor": ""}, "anchor"),
        ({"constant": {"zeta7": "1"}}, "unknown constant"),
        ({"status": "maybe"}, "status"),
        ({"summand": None}, "a summand or a route"),
        ({"summand": "2^(-n"}, "summand"),
        ({"route": {"recurrence": "NOPE", "x": "1", "y": "1"}}, "unknown recurrences"),
    ],
)
def test_validation_errors(overrides, fragment, recurrences):
    errors = validate_identity_records([_record(**overrides)], REFERENCE_NAMES, recurrences.names())
    assert any(fragment in e for e in errors), errors


def test_duplicate_ids_are_rejected():
    errors = validate_identity_records([_record(), _record()], REFERENCE_NAMES)
    assert any("duplicate" in e for e in errors)


def test_catalog_from_invalid_payload_raises():
    with pytest.raises(CatalogValidationError):
        IdentityCatalog.from_payload({"records": [_record(status="maybe")]})


def test_match_run_finds_the_first_record_on_a_route(identities, recurrences):
    rec = recurrences.resolve("T3M1_Y2")
    record, alignment = match_run(rec, Fraction(1, 2), Fraction(2), 1, identities)
    assert record.id == "LUPAS_WOLFRAM"
    assert alignment is not None
    assert match_run(rec, Fraction(7, 2), Fraction(2), 1, identities) is None


def test_match_run_route_only(identities, recurrences):
    rec = recurrences.resolve("T3M1_YY2")
    record, alignment = match_run(rec, Fraction(1), Fraction(2), 1, identities)
    assert record.id == "LUPAS_LN2"
    assert alignment is None


def test_match_run_through_an_alias(identities, recurrences):
    rec = recurrences.resolve("T3M1_YY2")
    # PI2_ALT_ACCEL writes its route as KNOPP_P
    assert match_run(rec, Fraction(1), Fraction(1), 1, identities) is None
    record, _ = match_run(rec, Fraction(1), Fraction(1), 1, identities, recurrences)
    assert record.id == "PI2_ALT_ACCEL"


def test_route_round_trip():
    route = Route.from_dict({"recurrence": "F65_X+F65_Y", "x": "1/2", "y": "3/2", "repeat": 3})
    assert route.repeat == 3
    assert route.to_dict() == {"recurrence": "F65_X+F65_Y", "x": "1/2", "y": "3/2", "repeat": 3}


def test_summand_series_starts_at_its_lower_limit(identities):
    t = summand_series(identities.get("S_VALUE_HALF_3HALF"))
    assert t.first_index == 1
    assert t.first_term == Fraction(1, 4)
