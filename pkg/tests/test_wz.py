from fractions import Fraction
from pathlib import Path

import pytest

from hyperaccel_engine.errors import MalformedPairError, ParseError
from hyperaccel_engine.wz import (
    WZPair,
    boundary_check,
    check_certificate,
    check_sum_constant,
    load_certificate_file,
    mutation_sweep,
    parse_certificate_text,
    pointwise_oracle,
    row_sum,
    summed_difference,
    term_f0,
)

CERT_DIR = Path(__file__).resolve().parents[1] / "data" / "certificates"

# non-integer y keeps the terminating rows free of poles
SAMPLE_Y = {"t31_x.cert": Fraction(9, 2), "t3m1_x.cert": Fraction(7, 2)}


def _pair(name: str, seed: int = 0) -> WZPair:
    cf = load_certificate_file(CERT_DIR / name)
    return WZPair.from_term(cf.term, cf.certificate, cf.variables[0], cf.variables[1], label=cf.recurrence, seed=seed)


@pytest.mark.parametrize("name", sorted(SAMPLE_Y))
def test_shipped_certificates_are_valid(name, seed):
    pair = _pair(name, seed)
    assert pair.parameters == ("y",)
    assert check_certificate(pair, seed)


@pytest.mark.parametrize("name", sorted(SAMPLE_Y))
def test_mutated_certificates_are_rejected(name, seed):
    assert not any(mutation_sweep(_pair(name), 20, seed))


@pytest.mark.parametrize("name", sorted(SAMPLE_Y))
def test_pointwise_oracle_agrees(name):
    checked, failures = pointwise_oracle(_pair(name), {"y": SAMPLE_Y[name]}, 10, 10)
    assert checked > 50
    assert failures == []


def test_first_transform_rows_sum_to_one():
    pair = _pair("t31_x.cert")
    params = {"y": SAMPLE_Y["t31_x.cert"]}
    f0 = term_f0(pair, params)
    assert check_sum_constant(pair, f0, range(1, 8), params)
    assert row_sum(pair, f0, 4, params) == 1


def test_y_plus_two_proof_rows_sum_to_one(recurrences):
    term = recurrences.get("T3M1_Y2").proof_term
    pair = WZPair.from_term(term, "0", label="T3M1_Y2")
    params = {"y": Fraction(7, 2)}
    f0 = term_f0(pair, params)
    assert check_sum_constant(pair, f0, range(1, 11), params)
    assert row_sum(pair, f0, 6, params) == 1


def test_boundary_equals_summed_difference():
    pair = _pair("t31_x.cert")
    for n in range(1, 6):
        for stop in range(1, n + 3):
            params = {"y": SAMPLE_Y["t31_x.cert"]}
            k_range = range(0, stop)
            assert boundary_check(pair, n, k_range, params) == summed_difference(pair, n, k_range, params)


def test_boundary_with_vanishing_first_term():
    # F(3, 0) = 0 at y = 5 while the certificate has a removable pole there
    pair = _pair("t31_x.cert")
    params = {"y": 5}
    assert boundary_check(pair, 3, range(0, 2), params) == Fraction(-35, 6)
    assert summed_difference(pair, 3, range(0, 2), params) == Fraction(-35, 6)


def test_empty_range_boundary_is_zero():
    assert boundary_check(_pair("t31_x.cert"), 3, range(0, 0), {"y": 5}) == 0


def test_incompatible_ratios_are_malformed():
    with pytest.raises(MalformedPairError):
        WZPair.from_term("binomial(n, k)*2^(k^2)", "1")


def test_certificate_file_parsing():
    cf = parse_certificate_text(
        "# comment\nrecurrence: T31_X\nvariables: n, k, y\ncertificate:\nk\n/(n+1)\n"
    )
    assert cf.recurrence == "T31_X"
    assert cf.variables == ("n", "k", "y")
    assert cf.term is None
    assert cf.certificate == "k /(n+1)"
    with pytest.raises(ParseError):
        parse_certificate_text("recurrence: T31_X\n")
    with pytest.raises(ParseError):
        parse_certificate_text("not a header\ncertificate: 1\n")
