import json

import pytest
from mpmath import mp

from hyperaccel_engine.constants import (
    REFERENCE_DIGITS,
    REFERENCE_NAMES,
    ReferenceStore,
    agreeing_places,
    default_payload,
    load_reference_store,
    regenerate_reference_store,
)
from hyperaccel_engine.errors import CatalogValidationError, DomainError, UnknownConstantError
from hyperaccel_engine.library import CATALOG_FILES


@pytest.mark.parametrize(
    "name, prefix",
    [
        ("pi", "3.141592653589793238462643383279"),
        ("catalan", "0.915965594177219015054603514932"),
        ("ln2", "0.693147180559945309417232121458"),
        ("zeta3", "1.202056903159594285399738161511"),
    ],
)
def test_reference_prefixes(store, name, prefix):
    assert store.reference(name, 30) == prefix


def test_every_constant_is_stored_to_full_places(store):
    for name in REFERENCE_NAMES:
        assert store.places(name) == REFERENCE_DIGITS


def test_zeta2_is_pi_squared_over_six(store):
    with mp.workdps(130):
        assert abs(store.value("zeta2", 125) - store.value("pi2", 125) / 6) < mp.mpf(10) ** -119


def test_constant_value_combines_coefficients(store):
    with mp.workdps(60):
        value = store.constant_value({"1": "7/8", "zeta2": "-1/2"}, 50)
        assert abs(value - (mp.mpf(7) / 8 - mp.zeta(2) / 2)) < mp.mpf(10) ** -48


def test_bad_lookups(store):
    with pytest.raises(DomainError):
        store.reference("pi", REFERENCE_DIGITS + 1)
    with pytest.raises(UnknownConstantError):
        store.reference("euler_gamma", 10)
    assert store.reference("pi", 0) == "3"


def test_store_is_seeded_into_a_fresh_directory(tmp_path):
    store = load_reference_store(tmp_path)
    path = tmp_path / CATALOG_FILES["constants"]
    assert path.exists()
    payload = json.loads(path.read_text(encoding="utf-8"))
    assert payload["library_hash"] == store.library_hash
    # a second load reads the file back under the same hash
    assert load_reference_store(tmp_path).library_hash == store.library_hash


def test_short_digit_strings_are_rejected():
    payload = default_payload()
    payload["constants"][0]["digits"] = "3.14159"
    with pytest.raises(CatalogValidationError):
        ReferenceStore.from_payload(payload)


def test_missing_constant_is_rejected():
    payload = default_payload()
    payload["constants"] = payload["constants"][1:]
    with pytest.raises(CatalogValidationError):
        ReferenceStore.from_payload(payload)


def test_shipped_store_is_not_computed_by_mpmath(data_dir):
    payload = json.loads((data_dir / CATALOG_FILES["constants"]).read_text(encoding="utf-8"))
    assert "mpmath" not in payload["generated_from"]
    assert "library_hash" not in payload


def test_shipped_digits_agree_with_mpmath_on_every_place(store):
    places = agreeing_places(store)
    assert set(places) == set(REFERENCE_NAMES)
    assert all(n == REFERENCE_DIGITS for n in places.values()), places


def test_agreeing_places_finds_the_first_wrong_digit(store):
    payload = default_payload()
    broken = dict(payload["constants"][0])
    digits = broken["digits"]
    # flip the 40th decimal of pi
    i = digits.index(".") + 40
    broken["digits"] = digits[:i] + str((int(digits[i]) + 1) % 10) + digits[i + 1:]
    bad = ReferenceStore.from_payload(dict(payload, constants=[broken] + payload["constants"][1:]))
    places = agreeing_places(bad)
    assert places["pi"] == 39
    assert places["ln2"] == REFERENCE_DIGITS


def test_regenerate_writes_a_hashed_store(tmp_path):
    lib_hash = regenerate_reference_store(tmp_path)
    store = load_reference_store(tmp_path)
    assert store.library_hash == lib_hash
    assert min(agreeing_places(store).values()) == REFERENCE_DIGITS
