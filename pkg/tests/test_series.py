from fractions import Fraction

import math

import pytest
from mpmath import mp

from hyperaccel_engine.errors import DegenerateIndexError, DomainError, MalformedSeriesError, TooSlowError
from hyperaccel_engine.identities import summand_series
from hyperaccel_engine.series import (
    PFQSpec,
    FamilyTemplate,
    compile_pfq,
    compile_summand,
    direct_pfq_term,
    estimate_rate,
    evaluate,
    family_value,
    partial_sum_exact,
    tail_bound,
    terminating_sum,
)


def test_lower_limit_moves_past_a_pole_at_zero():
    t = compile_summand("(-1)^(n-1)/n^2")
    assert t.first_index == 1
    assert t.terms(3) == [Fraction(1), Fraction(-1, 4), Fraction(1, 9)]


def test_explicit_lower_limit_with_pole_is_malformed():
    with pytest.raises(MalformedSeriesError):
        compile_summand("1/n", lower_limit=0)


def test_summand_with_stray_symbol_is_malformed():
    with pytest.raises(MalformedSeriesError):
        compile_summand("x^n")


def test_pfq_terms_match_direct_formula():
    spec = PFQSpec(upper=(Fraction(1, 2), Fraction(1, 2)), lower=(Fraction(1),), argument=Fraction(1, 4))
    t = compile_pfq(spec)
    assert t.terms(12) == [direct_pfq_term(spec, k) for k in range(12)]


def test_terminating_pfq():
    t = compile_pfq(PFQSpec(upper=(-3,), lower=(), argument=1))
    assert t.terms(5) == [1, -3, 3, -1, 0]
    assert t.terminating_length(100) == 4
    assert terminating_sum(t) == 0


def test_lower_pole_before_termination_is_rejected():
    with pytest.raises(MalformedSeriesError):
        compile_pfq(PFQSpec(upper=(-5,), lower=(-2,), argument=1))


def test_geometric_tail_bound_is_exact():
    t = compile_summand("2^(-n)")
    assert tail_bound(t, 10) == Fraction(1, 512)
    assert partial_sum_exact(t, 10) + tail_bound(t, 10) == 2


def test_tail_bound_is_sound(seed):
    t = compile_summand("(3*n+1)/((n+1)*n^2*(n-1)*binomial(2*n,n))", lower_limit=2)
    with mp.workdps(60):
        total = evaluate(t, 45).value
        for count in (3 + seed, 10 + seed, 20 + seed):
            bound = tail_bound(t, count)
            assert bound is not None
            head = partial_sum_exact(t, count)
            assert abs(total - mp.mpf(head.numerator) / head.denominator) <= mp.mpf(bound.numerator) / bound.denominator


def test_evaluate_geometric():
    res = evaluate(compile_summand("2^(-n)"), 30)
    with mp.workdps(40):
        assert abs(res.value - 2) < mp.mpf(10) ** -30
    assert res.digits_correct >= 30
    assert res.exact_sum is not None


def test_fixed_precision_mode_widens_the_radius():
    res = evaluate(compile_summand("3^(-n)"), 25, exact=False)
    assert not res.exact_mode
    assert res.exact_sum is None
    with mp.workdps(35):
        assert abs(res.value - mp.mpf(3) / 2) < mp.mpf(10) ** -25


def test_rate_one_series_is_too_slow():
    with pytest.raises(TooSlowError) as info:
        evaluate(compile_summand("(-1)^(n-1)/n^2"), 20)
    assert info.value.partial is not None
    assert info.value.partial.terms_used > 0


def test_term_cap_is_honoured():
    with pytest.raises(TooSlowError):
        evaluate(compile_summand("(9/10)^n"), 50, term_cap=100)


def test_estimate_rate():
    t = compile_summand("2^(4*n)/((2*n+1)*n*(n-1)*binomial(2*n,n)^3)", lower_limit=2)
    with mp.workdps(20):
        assert abs(estimate_rate(t, 1000) - mp.mpf(1) / 4) < mp.mpf(1) / 400
    with pytest.raises(DomainError):
        estimate_rate(t, 5)


def test_estimate_rate_on_terminated_series():
    t = compile_pfq(PFQSpec(upper=(-3,), lower=(), argument=1))
    with pytest.raises(DegenerateIndexError):
        estimate_rate(t, 20)


def test_two_f_one_at_one_half():
    t = compile_pfq(PFQSpec(upper=(1, 1), lower=(2,), argument=Fraction(1, 2)))
    assert t.terms(3) == [Fraction(1), Fraction(1, 4), Fraction(1, 12)]
    res = evaluate(t, 30)
    with mp.workdps(40):
        assert abs(res.value - 2 * mp.log(2)) < mp.mpf(10) ** -30


def test_three_f_two_at_one_two():
    # 3F2(x, x+1, 1; x+y, x+y+1 | 1) at x = 1, y = 2
    spec = PFQSpec(upper=(1, 2, 1), lower=(3, 4), argument=1)
    t = compile_pfq(spec)
    assert t.terms(11) == [direct_pfq_term(spec, k) for k in range(11)]
    assert t.term(1) == Fraction(2, 12)


@pytest.mark.parametrize("k", range(1, 41))
def test_central_binomial_partial_sums_close(identities, k):
    t = summand_series(identities.get("S_VALUE_HALF_3HALF"))
    closed = 2 - Fraction(8, 3) * k * (4 * k - 1) / (2 * k - 1) * Fraction(math.comb(2 * k, k) ** 2, 2 ** (4 * k))
    assert partial_sum_exact(t, k - 1) == closed


@pytest.mark.parametrize(
    "record_id, x, y",
    [
        ("S_VALUE_1_2", 1, 2),
        ("S_VALUE_HALF_3HALF", Fraction(1, 2), Fraction(3, 2)),
        ("S_VALUE_HALF_2", Fraction(1, 2), 2),
        ("S_VALUE_1_3HALF", 1, Fraction(3, 2)),
    ],
)
def test_s_family_closed_values(recurrences, identities, store, record_id, x, y):
    family = recurrences.families["s_one"]
    with mp.workdps(45):
        value = family_value(family, {"x": x, "y": y}, 40)
        expected = store.constant_value(identities.get(record_id).constant, 40)
        assert abs(value - expected) < mp.mpf(10) ** -30


def test_family_weight_is_a_polynomial_in_k():
    with pytest.raises(MalformedSeriesError):
        FamilyTemplate("bad", ("x",), ("x",), (), 1, weight="1/(x+k)")
    with pytest.raises(MalformedSeriesError):
        FamilyTemplate("bad", ("x",), ("x",), (), 1, weight="x+k+z")
    with pytest.raises(MalformedSeriesError):
        FamilyTemplate("bad", ("k",), ("k",), (), 1)


def test_weighted_family_terms_and_excess(recurrences):
    family = recurrences.families["f65_one"]
    assert family.weighted
    assert not recurrences.families["f32_one"].weighted
    # (x)_k^4 / (x+y)_k^4 * (x+k+(y-1)/2) at x = 1, y = 1
    assert family.terms({"x": 1, "y": 1}, 3) == [Fraction(1), Fraction(2, 16), Fraction(3, 81)]
    # 4y from the Pochhammers, minus one for the linear weight
    assert family.parameter_excess({"x": 1, "y": 1}) == 3
    assert FamilyTemplate.from_dict("f65_one", family.to_dict()).weight == family.weight
