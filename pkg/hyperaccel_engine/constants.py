"""Reference digits for the target constants.

data/reference_constants.json ships frozen; its digits were computed outside mpmath
(see the file's ``generated_from``). ``agreeing_places`` compares them with mpmath's own
algorithms (pi, catalan, zeta, log) at REFERENCE_DPS working digits, and
``regenerate_reference_store`` rewrites the file from those. A data directory without
the file is seeded the same way. The catalog series in core.reference_oracles are a
further, independent computation the tests compare against.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass
from fractions import Fraction
from functools import lru_cache
from pathlib import Path
from typing import Callable, Dict, List, Mapping, Optional

from mpmath import mp

from .errors import CatalogValidationError, DomainError, UnknownConstantError
from .exact import as_rational
from .library import datetime_now_iso, load_catalog, save_catalog
from .schemas import ReferenceConstant
from .settings import DEFAULT_SETTINGS

logger = logging.getLogger(__name__)

# decimal places stored per constant
REFERENCE_DIGITS = 125
REFERENCE_DPS = 150

# name -> mpmath expression
REFERENCE_EXPRESSIONS: Dict[str, Callable[[], object]] = {
    "pi": lambda: +mp.pi,
    "pi2": lambda: mp.pi ** 2,
    "inv_pi": lambda: 1 / mp.pi,
    "inv_pi2": lambda: 1 / mp.pi ** 2,
    "pi4": lambda: mp.pi ** 4,
    "inv_pi4": lambda: 1 / mp.pi ** 4,
    "catalan": lambda: +mp.catalan,
    "zeta2": lambda: mp.zeta(2),
    "zeta3": lambda: mp.zeta(3),
    "ln2": lambda: mp.log(2),
}

REFERENCE_NAMES = tuple(REFERENCE_EXPRESSIONS)

_EXPRESSION_TEXT = {
    "pi": "mp.pi",
    "pi2": "mp.pi**2",
    "inv_pi": "1/mp.pi",
    "inv_pi2": "1/mp.pi**2",
    "pi4": "mp.pi**4",
    "inv_pi4": "1/mp.pi**4",
    "catalan": "mp.catalan",
    "zeta2": "mp.zeta(2)",
    "zeta3": "mp.zeta(3)",
    "ln2": "mp.log(2)",
}

_ORACLE_NOTES = {
    "pi": "rate-1/64 1/pi series (42n+5) and the s(1, 3/2) accelerated series (6n+5)",
    "catalan": "Wolfram Language G series and the rate-4/729 G series",
    "zeta2": "rate-1/64 s(1, 2) series (7/8 - zeta(2)/2)",
    "zeta3": "28 zeta(3) 6F5 series",
    "ln2": "(x,y)->(x,y+2) 3F2(-1) route at (1, 2)",
}


def _decimal_digits(value, places: int) -> str:
    """floor(value * 10^places) rendered as a decimal string with ``places`` decimals."""
    scaled = int(mp.floor(value * mp.mpf(10) ** places))
    sign = "-" if scaled < 0 else ""
    text = str(abs(scaled)).rjust(places + 1, "0")
    return f"{sign}{text[:-places]}.{text[-places:]}"


def default_payload() -> Dict:
    """Fresh store content computed by mpmath."""
    records: List[Dict] = []
    with mp.workdps(REFERENCE_DPS):
        for name, expr in REFERENCE_EXPRESSIONS.items():
            rc = ReferenceConstant(
                name=name,
                digits=_decimal_digits(expr(), REFERENCE_DIGITS),
                oracle_note=_ORACLE_NOTES.get(name, "power of pi; pi itself is checked by two series"),
                expression=_EXPRESSION_TEXT[name],
            )
            records.append(rc.to_dict())
    logger.info("computed %d reference constants at %d digits", len(records), REFERENCE_DIGITS)
    return {
        "schema_version": "v1.0",
        "generated_from": f"mpmath at {REFERENCE_DPS} working digits",
        "history": [{"ts": datetime_now_iso(), "note": "seeded"}],
        "constants": records,
    }


@dataclass
class ReferenceStore:
    constants: Dict[str, ReferenceConstant]
    library_hash: str = ""

    @classmethod
    def from_payload(cls, payload: Mapping, library_hash: str = "") -> "ReferenceStore":
        constants: Dict[str, ReferenceConstant] = {}
        errors: List[str] = []
        for entry in payload.get("constants") or []:
            name = entry.get("name", "")
            digits = str(entry.get("digits", ""))
            whole, _, frac = digits.lstrip("-").partition(".")
            if name not in REFERENCE_EXPRESSIONS:
                errors.append(f"[{name}] unknown reference constant")
            elif not whole.isdigit() or not frac.isdigit() or len(frac) < 120:
                errors.append(f"[{name}] digits must be a decimal string with at least 120 places")
            constants[name] = ReferenceConstant(name, digits, entry.get("oracle_note", ""), entry.get("expression", ""))
        missing = sorted(set(REFERENCE_NAMES) - set(constants))
        if missing:
            errors.append(f"[constants] missing {missing}")
        if errors:
            raise CatalogValidationError("Reference store validation failed:\n" + "\n".join(errors))
        return cls(constants, library_hash)

    def _get(self, name: str) -> ReferenceConstant:
        try:
            return self.constants[name]
        except KeyError:
            raise UnknownConstantError(f"unknown constant {name!r}; known: {', '.join(REFERENCE_NAMES)}") from None

    def places(self, name: str) -> int:
        return len(self._get(name).digits.partition(".")[2])

    def digits(self, name: str) -> str:
        return self._get(name).digits

    def reference(self, name: str, digits: int) -> str:
        """The stored decimal string truncated to ``digits`` places."""
        stored = self._get(name).digits
        if digits < 0:
            raise DomainError(f"digits must be nonnegative, got {digits}")
        whole, _, frac = stored.partition(".")
        if digits > len(frac):
            raise DomainError(f"{name} is stored to {len(frac)} places, {digits} requested")
        return whole if digits == 0 else f"{whole}.{frac[:digits]}"

    def value(self, name: str, dps: int):
        if name == "1":
            return mp.one
        with mp.workdps(dps):
            return mp.mpf(self._get(name).digits)

    def constant_value(self, constant: Mapping[str, object], dps: int):
        """sum coeff * constant, with the key "1" standing for the rational part."""
        with mp.workdps(dps + 5):
            total = mp.zero
            for name, coeff in constant.items():
                q: Fraction = as_rational(coeff)
                total += mp.mpf(q.numerator) / q.denominator * self.value(name, dps + 5)
        with mp.workdps(dps):
            return +total


def load_reference_store(base_dir: Optional[Path] = None) -> ReferenceStore:
    payload, lib_hash = load_catalog("constants", base_dir, default=default_payload)
    return ReferenceStore.from_payload(payload, lib_hash)


@lru_cache(maxsize=1)
def default_store() -> ReferenceStore:
    return load_reference_store(DEFAULT_SETTINGS.data_dir)


def agreeing_places(store: ReferenceStore, payload: Optional[Mapping] = None) -> Dict[str, int]:
    """Decimal places on which each stored constant agrees with a fresh mpmath computation."""
    fresh = ReferenceStore.from_payload(payload or default_payload())
    out: Dict[str, int] = {}
    for name in REFERENCE_NAMES:
        ours, theirs = store.digits(name), fresh.digits(name)
        whole = ours.partition(".")[0]
        if whole != theirs.partition(".")[0]:
            out[name] = 0
            continue
        same = 0
        for a, b in zip(ours[len(whole) + 1:], theirs[len(whole) + 1:]):
            if a != b:
                break
            same += 1
        out[name] = same
        if same < min(store.places(name), fresh.places(name)):
            logger.warning("%s: stored digits leave mpmath after %d places", name, same)
    return out


def regenerate_reference_store(base_dir: Optional[Path] = None) -> str:
    """Rewrite the store from mpmath; returns the new hash."""
    lib_hash = save_catalog(default_payload(), "constants", base_dir)
    logger.warning("reference store regenerated from mpmath (hash %s)", lib_hash)
    return lib_hash
