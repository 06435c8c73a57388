from fractions import Fraction

import pytest
from mpmath import mp

from hyperaccel_engine.core import accelerate
from hyperaccel_engine.errors import DomainError, UnknownEntryError
from hyperaccel_engine.explain import recurrence_text, run_ledger, run_summary


@pytest.fixture(scope="module")
def lupas_run(settings):
    return accelerate("T3M1_Y2", Fraction(1, 2), 2, 12, digits=30, settings=settings)


def test_run_matches_catalog_route(lupas_run):
    assert lupas_run.matched_identity == "LUPAS_WOLFRAM"
    assert lupas_run.match_offset is not None
    assert lupas_run.match_scale is not None
    assert abs(lupas_run.rate) == Fraction(1, 4)


def test_run_value_is_the_route_constant(lupas_run, store):
    # the same route is stored as 9/4 G - 15/8
    expected = store.constant_value({"catalan": "9/4", "1": "-15/8"}, 40)
    with mp.workdps(40):
        assert abs(lupas_run.value - expected) < mp.mpf(10) ** -28


def test_digits_grow_with_steps(lupas_run):
    digits = lupas_run.digits_by_step
    assert len(digits) == 12
    assert digits[-1] >= 5
    assert digits[-1] > digits[0]


def test_remainder_shrinks(lupas_run):
    assert lupas_run.remainder is not None
    assert abs(lupas_run.remainder) < 1e-4


def test_partial_sums_accumulate_terms(lupas_run):
    assert len(lupas_run.terms) == 12
    assert lupas_run.partial_sums[-1] == sum(lupas_run.terms, Fraction(0))
    assert lupas_run.start == {"x": Fraction(1, 2), "y": Fraction(2)}


def test_ledger_and_summary(lupas_run):
    ledger = run_ledger(lupas_run)
    assert [row["j"] for row in ledger] == list(range(12))
    assert ledger[0]["term"] == str(lupas_run.terms[0])
    summary = run_summary(lupas_run)
    assert summary["matched_identity"] == "LUPAS_WOLFRAM"
    assert summary["start"] == "x=1/2, y=2"
    as_dict = lupas_run.to_dict()
    assert as_dict["terms"][0] == str(lupas_run.terms[0])


def test_recurrence_text_names_both_families(recurrences):
    text = recurrence_text(recurrences.get("T3M1_Y2"))
    assert text.count("(") >= 2
    assert "x, y" in text


def test_zero_steps_is_an_empty_expansion(settings):
    run = accelerate("T3M1_Y2", Fraction(1, 2), 2, 0, check_remainder=False, settings=settings)
    assert run.terms == []
    assert run.digits_by_step == []


def test_bad_requests(settings):
    with pytest.raises(DomainError):
        accelerate("T3M1_Y2", 1, 2, -1, settings=settings)
    with pytest.raises(UnknownEntryError):
        accelerate("NOT_A_RECURRENCE", 1, 2, 3, settings=settings)


def test_three_variable_recurrence_is_refused(settings):
    with pytest.raises(DomainError):
        accelerate("FROM_DML", Fraction(1, 2), Fraction(3, 2), 3, check_remainder=False, settings=settings)
