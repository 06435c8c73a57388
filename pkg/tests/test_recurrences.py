from fractions import Fraction

import numpy as np
import pytest
from mpmath import mp

from hyperaccel_engine.errors import (
    AssignmentError,
    CompositionError,
    DomainError,
    InadmissibleParametersError,
    UnknownEntryError,
)
from hyperaccel_engine.exact import rf_equal
from hyperaccel_engine.grammar import parse_rational
from hyperaccel_engine.recurrences import (
    apply,
    compose,
    identity_recurrence,
    lemma_terms,
    numeric_gap,
    residual,
    sweep_terminating,
    telescoping_identities,
    verify_terminating,
    view_coefficients,
    view_rf,
)
from hyperaccel_engine.series import family_value, to_mpf

from conftest import CATALOG_IDS

HALF = Fraction(1, 2)


def test_apply_returns_coefficients_and_shifted_point(recurrences):
    r1, r2, shifted = apply(recurrences.get("T31_X"), 1, 2)
    assert r1 == 1
    assert r2 == Fraction(1 * 2, 3 * 4)
    assert shifted == (2, 2)


def test_apply_needs_every_variable(recurrences):
    with pytest.raises(AssignmentError):
        apply(recurrences.get("T31_X"), 1)


@pytest.mark.parametrize("n", range(1, 7))
def test_first_transform_terminates_exactly(recurrences, n):
    assert verify_terminating(recurrences.get("T31_X"), n, {"y": Fraction(9, 2)})
    assert verify_terminating(recurrences.get("T31_Y"), n, {"y": Fraction(9, 2)})


def test_symbolic_terminating_check(recurrences, seed):
    rec = recurrences.get("T3M1_YY2")
    assert verify_terminating(rec, 4, None, seed)
    assert verify_terminating(recurrences.get("T31_X"), 3, None, seed)


def test_pointwise_pole_is_inadmissible(recurrences):
    with pytest.raises(InadmissibleParametersError):
        verify_terminating(recurrences.get("T3M1_YY2"), 4, {"y": 3})


def test_negative_n_is_a_domain_error(recurrences):
    with pytest.raises(DomainError):
        verify_terminating(recurrences.get("T31_X"), -1, {"y": 2})


@pytest.mark.parametrize("rec_id", CATALOG_IDS)
def test_random_terminating_sweep(recurrences, rec_id, seed):
    report = sweep_terminating(recurrences.get(rec_id), range(0, 5), 3, seed)
    assert report.ok, report.failures


@pytest.mark.slow
@pytest.mark.parametrize("rec_id", CATALOG_IDS)
def test_full_terminating_sweep(recurrences, rec_id):
    report = sweep_terminating(recurrences.get(rec_id), range(0, 26), 20, seed=0)
    assert report.checked == 26 * 20
    assert report.ok, report.failures


@pytest.mark.parametrize("rec_id", ["F54M1_Y", "F65_Y"])
@pytest.mark.parametrize("n, y", [(4, 7), (4, 6), (5, 9)])
def test_linear_weight_cancelling_at_a_lower_integer(recurrences, rec_id, n, y):
    # x+(y-1)/2 is a nonpositive integer at the point or at its shift y+1
    assert verify_terminating(recurrences.get(rec_id), n, {"y": y})


def test_weighted_family_sums_directly(recurrences):
    assert recurrences.get("F54M1_Y").family.terminating_value({"x": -4, "y": 7}) == Fraction(29, 225)
    assert recurrences.get("F65_Y").family.terminating_value({"x": -4, "y": 7}) == Fraction(173, 3375)
    assert verify_terminating(recurrences.get("F65_Y"), 2, {"y": Fraction(7, 2)})


def test_weighted_family_symbolic_in_y(recurrences, seed):
    for rec_id in ("F54M1_X", "F54M1_Y", "F65_X", "F65_Y"):
        assert verify_terminating(recurrences.get(rec_id), 3, None, seed), rec_id


@pytest.mark.parametrize("n, b", [(0, 17), (2, 8)])
def test_inadmissible_target_is_reported_even_when_r2_vanishes(recurrences, n, b):
    rec = recurrences.get("FROM_DML")
    # r1 = r2 = 0 at c = 1, and 2F1(a-1, b-1; 0 | 1) has a pole
    with pytest.raises(InadmissibleParametersError):
        verify_terminating(rec, n, {"b": b, "c": 1})


def test_sweep_redraws_the_dml_pole(recurrences):
    report = sweep_terminating(recurrences.get("FROM_DML"), range(0, 6), 20, seed=3)
    assert report.ok, report.failures
    assert report.checked == 6 * 20


def test_knopp_is_an_alias(recurrences):
    assert "KNOPP_P" not in recurrences.ids()
    assert "KNOPP_P" in recurrences.names()
    assert recurrences.get("KNOPP_P") is recurrences.get("T3M1_YY2")
    assert recurrences.canonical_chain("T3M1_X+KNOPP_P") == "T3M1_X+T3M1_YY2"
    assert recurrences.resolve("KNOPP_P", 2).components == ("T3M1_YY2", "T3M1_YY2")


def test_knopp_view_values(recurrences):
    rec = recurrences.get("KNOPP_P")
    assert view_coefficients(rec, "knopp", 1, 1) == (Fraction(7, 8), Fraction(-8, 4))
    assert view_coefficients(rec, "knopp", 1, 3) == (Fraction(17, 576), Fraction(-192, 4))
    assert view_coefficients(rec, "knopp", 1, 5) == (Fraction(27, 345600), Fraction(-1080, 4))
    with pytest.raises(DomainError):
        view_rf(rec, "knopp")
    with pytest.raises(UnknownEntryError):
        rec.view("missing")


def test_s_view_matches_stored_display(recurrences, seed):
    for rec_id in ("T31_X", "T31_Y"):
        rec = recurrences.get(rec_id)
        view = rec.view("s")
        r1, r2 = view_rf(rec, "s")
        assert rf_equal(r1, parse_rational(view.r1_display, rec.variables), seed)
        assert rf_equal(r2, parse_rational(view.r2_display, rec.variables), seed)


def test_telescoping_identities_hold(seed):
    for name, (lhs, rhs) in telescoping_identities().items():
        assert rf_equal(lhs, rhs, seed), name


def test_composition_is_associative(recurrences, seed):
    a, b, c = (recurrences.get(i) for i in ("T31_X", "T31_Y", "T31_X"))
    left = compose(compose(a, b), c)
    right = compose(a, compose(b, c))
    assert left.id == right.id == "T31_X+T31_Y+T31_X"
    assert left.shift == right.shift
    assert rf_equal(left.r1, right.r1, seed)
    assert rf_equal(left.r2, right.r2, seed)


def test_identity_recurrence_is_neutral(recurrences, seed):
    rec = recurrences.get("F65_Y")
    ident = identity_recurrence(rec.family)
    for composed in (compose(ident, rec), compose(rec, ident)):
        assert composed.id == "F65_Y"
        assert rf_equal(composed.r1, rec.r1, seed)
        assert rf_equal(composed.r2, rec.r2, seed)


def test_incompatible_families_do_not_compose(recurrences):
    with pytest.raises(CompositionError):
        compose(recurrences.get("T31_X"), recurrences.get("F65_Y"))
    with pytest.raises(CompositionError):
        lemma_terms(recurrences.get("FROM_DML"), {"a": 3, "b": 4, "c": 9}, 2)


def test_resolve_chain_and_repeat(recurrences):
    rec = recurrences.resolve("F65_X+F65_Y", 3)
    assert rec.components == ("F65_X", "F65_Y") * 3
    assert rec.shift == (3, 3)
    with pytest.raises(UnknownEntryError):
        recurrences.resolve("F65_X+NOPE")
    with pytest.raises(DomainError):
        recurrences.resolve("F65_X", 0)


def test_real_parameter_gap_is_numerically_zero(recurrences):
    gap = numeric_gap(recurrences.get("T3M1_Y2"), {"x": HALF, "y": 2}, dps=30)
    assert gap < mp.mpf(10) ** -20


def test_dml_reduction_gap(recurrences):
    # unit-argument Gamma tails that Richardson extrapolation leaves at 1e-19
    gap = numeric_gap(recurrences.get("FROM_DML"), {"a": Fraction(1, 3), "b": HALF, "c": Fraction(7, 2)}, dps=50)
    assert gap < mp.mpf(10) ** -40


def _random_point(rec, rng):
    def draw(lo, hi):
        return Fraction(lo) + Fraction(int(rng.integers(1, 60)), 60) * (hi - lo)

    if rec.id == "FROM_DML":
        return {"a": draw(0, 1), "b": draw(0, 1), "c": draw(2, 4)}
    return {"x": draw(0, 2), "y": draw(1, 4)}


@pytest.mark.slow
@pytest.mark.parametrize("rec_id", CATALOG_IDS)
def test_numeric_gap_at_random_points(recurrences, rec_id):
    rec = recurrences.get(rec_id)
    rng = np.random.default_rng(2026)
    for _ in range(10):
        pt = _random_point(rec, rng)
        gap = numeric_gap(rec, pt, dps=50)
        assert gap < mp.mpf(10) ** -40, (pt, gap)


def test_residual_decreases(recurrences):
    rec = recurrences.get("T3M1_Y2")
    values = [abs(residual(rec, HALF, 2, m=m, dps=30)) for m in (2, 4, 6)]
    assert values[0] > values[1] > values[2]
    assert values[2] < mp.mpf(10) ** -3


def test_residual_shrinks_geometrically(recurrences):
    rec = recurrences.get("F65_Y")
    r3 = abs(residual(rec, HALF, Fraction(3, 2), m=3, dps=30))
    r6 = abs(residual(rec, HALF, Fraction(3, 2), m=6, dps=30))
    assert r6 < r3
    # |r2| stays below 1/4 along y = 3/2, 5/2, ...
    assert r6 < r3 / 20


@pytest.mark.parametrize("m", [1, 5, 10])
def test_partial_sum_plus_residual_is_the_starting_value(recurrences, m):
    rec = recurrences.get("T3M1_Y2")
    pt = {"x": HALF, "y": Fraction(2)}
    terms, _ = lemma_terms(rec, pt, m)
    with mp.workdps(40):
        start = family_value(rec.family, pt, 40)
        rebuilt = to_mpf(sum(terms, Fraction(0))) + residual(rec, pt, m=m, dps=40)
        assert abs(start - rebuilt) < mp.mpf(10) ** -25
