from __future__ import annotations

import hashlib
import io
import json
import logging
from pathlib import Path
from typing import Any, Callable, Dict, Iterable, List, Mapping, Optional, Tuple

import pandas as pd

from .errors import CatalogIntegrityError, CatalogValidationError, HyperaccelError
from .settings import DATA_REL_PATH

logger = logging.getLogger(__name__)

# Catalogs are versioned JSON files beside app.py; each carries a library_hash over its
# canonical content (the hash key itself excluded).

CATALOG_FILES = {
    "recurrences": "recurrences.json",
    "identities": "identities.json",
    "constants": "reference_constants.json",
}

SCHEMA_VERSION = "v1.0"

EXPORT_COLUMNS = ["id", "constant", "rate_claimed", "rate_measured", "status", "anchor"]

IDENTITY_STATUSES = {"proved", "conjectured"}


def _default_catalog_path(kind: str, base_dir: Optional[Path] = None) -> Path:
    if kind not in CATALOG_FILES:
        raise CatalogValidationError(f"unknown catalog kind {kind!r}")
    if base_dir is None:
        # data/ beside app.py (repo root)
        return Path(__file__).resolve().parents[1] / DATA_REL_PATH / CATALOG_FILES[kind]
    return Path(base_dir) / CATALOG_FILES[kind]


def hash_payload(payload: Mapping[str, Any]) -> str:
    body = {k: v for k, v in payload.items() if k != "library_hash"}
    blob = json.dumps(body, sort_keys=True, separators=(",", ":")).encode("utf-8")
    return hashlib.sha256(blob).hexdigest()[:12]


def load_catalog(
    kind: str,
    base_dir: Optional[Path] = None,
    default: Optional[Callable[[], Dict[str, Any]]] = None,
) -> Tuple[Dict[str, Any], str]:
    """Read a catalog file and return (payload, hash).

    A missing file is created from ``default`` when one is given. A stored hash that
    disagrees with the content raises CatalogIntegrityError.
    """
    path = _default_catalog_path(kind, base_dir)
    if not path.exists():
        if default is None:
            raise CatalogValidationError(f"catalog file {path} does not exist")
        payload = default()
        lib_hash = save_catalog(payload, kind, base_dir)
        logger.info("seeded %s catalog at %s (hash %s)", kind, path, lib_hash)
        payload = dict(payload, library_hash=lib_hash)
        return payload, lib_hash

    try:
        payload = json.loads(path.read_text(encoding="utf-8"))
    except json.JSONDecodeError as e:
        raise CatalogValidationError(f"{path} is not valid JSON: {e}") from e
    computed = hash_payload(payload)
    stored = payload.get("library_hash")
    if stored and stored != computed:
        raise CatalogIntegrityError(f"{path}: stored hash {stored} but content hashes to {computed}")
    logger.info("loaded %s catalog from %s (hash %s)", kind, path, computed)
    return payload, computed


def save_catalog(payload: Dict[str, Any], kind: str, base_dir: Optional[Path] = None) -> str:
    path = _default_catalog_path(kind, base_dir)
    path.parent.mkdir(parents=True, exist_ok=True)
    payload = dict(payload)
    payload["library_hash"] = hash_payload(payload)
    path.write_text(json.dumps(payload, indent=2) + "\n", encoding="utf-8")
    return payload["library_hash"]


def list_records(payload: Mapping[str, Any], key: str = "records", status: Optional[str] = None) -> List[Dict[str, Any]]:
    recs = list(payload.get(key, []))
    if status:
        recs = [r for r in recs if r.get("status") == status]
    return recs


# ---------------------------------------------------------------------------
# Validation (errors are "[id] message" strings, empty list means valid)
# ---------------------------------------------------------------------------

def _check_text(errors: List[str], rid: str, label: str, text: Any, parse: Callable[[str], Any]) -> None:
    if not isinstance(text, str) or not text.strip():
        errors.append(f"[{rid}] {label} must be a non-empty expression string")
        return
    try:
        parse(text)
    except HyperaccelError as e:
        errors.append(f"[{rid}] {label}: {e}")


def validate_recurrence_payload(payload: Mapping[str, Any]) -> List[str]:
    from .grammar import parse_expression, parse_rational

    errors: List[str] = []
    families = payload.get("families") or {}
    if not isinstance(families, dict) or not families:
        return ["[families] at least one family is required"]
    for name, fam in families.items():
        variables = tuple(fam.get("variables") or ())
        if not variables:
            errors.append(f"[{name}] family needs variables")
            continue
        for label in ("upper", "lower"):
            for text in fam.get(label) or []:
                _check_text(errors, name, label, text, lambda t: parse_rational(t, variables))
        _check_text(errors, name, "argument", fam.get("argument", ""), lambda t: parse_rational(t))
        _check_text(errors, name, "prefactor", fam.get("prefactor", "1"), lambda t: parse_rational(t, variables))
        if "weight" in fam:
            _check_text(errors, name, "weight", fam["weight"], lambda t: parse_rational(t, variables + ("k",)))
            try:
                if not parse_rational(str(fam["weight"]), variables + ("k",)).is_polynomial():
                    errors.append(f"[{name}] weight must be a polynomial in {list(variables) + ['k']}")
            except HyperaccelError:
                pass

    seen = set()
    records = payload.get("recurrences") or []
    ids = {(rec.get("id") or "").strip() for rec in records}
    aliases: set = set()
    for i, rec in enumerate(records):
        rid = (rec.get("id") or "").strip() or f"#{i}"
        if rid in seen:
            errors.append(f"[{rid}] duplicate recurrence id")
        seen.add(rid)
        if "+" in rid:
            errors.append(f"[{rid}] '+' is reserved for composite chains")
        for alias in rec.get("aliases") or []:
            if not isinstance(alias, str) or not alias.strip() or "+" in alias:
                errors.append(f"[{rid}] alias {alias!r} must be a non-empty name without '+'")
            elif alias in ids or alias in aliases:
                errors.append(f"[{rid}] alias {alias!r} is already a recurrence id or alias")
            else:
                aliases.add(alias)
        for key in ("family", "target_family"):
            fam = rec.get(key, rec.get("family"))
            if fam not in families:
                errors.append(f"[{rid}] unknown {key} {fam!r}")
        variables = tuple(rec.get("variables") or ())
        if rec.get("family") in families and tuple(families[rec["family"]]["variables"]) != variables:
            errors.append(f"[{rid}] variables {list(variables)} differ from its family's")
        if rec.get("terminating_var") not in variables:
            errors.append(f"[{rid}] terminating_var must be one of {list(variables)}")
        shift = rec.get("shift") or {}
        if set(shift) - set(variables):
            errors.append(f"[{rid}] shift names unknown variables {sorted(set(shift) - set(variables))}")
        for v, s in shift.items():
            _check_text(errors, rid, f"shift[{v}]", s, lambda t: parse_rational(t))
        for key in ("r1", "r2"):
            _check_text(errors, rid, key, rec.get(key), lambda t: parse_rational(t, variables))
        if rec.get("proof_term"):
            _check_text(errors, rid, "proof_term", rec["proof_term"], lambda t: parse_expression(t, functions=True))
        for view in rec.get("views") or []:
            gauge = view.get("gauge") or {}
            _check_text(errors, rid, f"view {view.get('name')} gauge", gauge.get("rational", "1"), lambda t: parse_rational(t, variables))
            for entry in gauge.get("pochhammer") or []:
                if len(entry) != 3 or not isinstance(entry[2], int):
                    errors.append(f"[{rid}] view {view.get('name')}: pochhammer entries are [base, length, exponent]")
    return errors


def validate_identity_records(
    records: Iterable[Mapping[str, Any]],
    constant_names: Iterable[str],
    recurrence_ids: Iterable[str] = (),
) -> List[str]:
    from .grammar import parse_expression, parse_rational

    errors: List[str] = []
    names = set(constant_names) | {"1"}
    known = set(recurrence_ids)
    seen = set()
    for i, r in enumerate(records):
        rid = (r.get("id") or "").strip() or f"#{i}"
        if rid in seen:
            errors.append(f"[{rid}] duplicate identity id")
        seen.add(rid)
        summand, route = r.get("summand"), r.get("route")
        if not summand and not route:
            errors.append(f"[{rid}] a summand or a route is required")
        if summand:
            _check_text(errors, rid, "summand", summand, lambda t: parse_expression(t, functions=True))
        if route:
            chain = str(route.get("recurrence", ""))
            missing = [c for c in chain.split("+") if c not in known] if known else []
            if not chain or missing:
                errors.append(f"[{rid}] route uses unknown recurrences {missing or [chain]}")
            for key in ("x", "y", "scale"):
                if key in route:
                    _check_text(errors, rid, f"route.{key}", str(route[key]), lambda t: parse_rational(t))
        constant = r.get("constant") or {}
        if not isinstance(constant, dict) or not constant:
            errors.append(f"[{rid}] constant must be a non-empty mapping name -> rational coefficient")
        else:
            for name, coeff in constant.items():
                if name not in names:
                    errors.append(f"[{rid}] unknown constant {name!r}")
                _check_text(errors, rid, f"constant[{name}]", str(coeff), lambda t: parse_rational(t))
        if r.get("status") not in IDENTITY_STATUSES:
            errors.append(f"[{rid}] status must be one of {sorted(IDENTITY_STATUSES)}")
        if r.get("claimed_rate") is not None:
            _check_text(errors, rid, "claimed_rate", str(r["claimed_rate"]), lambda t: parse_rational(t))
        if not (r.get("anchor") or "").strip():
            errors.append(f"[{rid}] anchor (provenance) is required")
    return errors


def upsert_records(
    payload: Dict[str, Any],
    updated_records: List[Dict[str, Any]],
    validator: Callable[[List[Dict[str, Any]]], List[str]],
    user_note: str = "",
    key: str = "records",
) -> Tuple[Dict[str, Any], str]:
    """Replace the record list after validation and append a history entry."""
    errors = validator(updated_records)
    if errors:
        raise CatalogValidationError("Catalog validation failed:\n" + "\n".join(errors))
    old_hash = payload.get("library_hash", "")
    new_payload = dict(payload)
    new_payload[key] = updated_records
    history = list(new_payload.get("history", []))
    history.append({"ts": datetime_now_iso(), "prev_hash": old_hash, "note": user_note[:2000]})
    new_payload["history"] = history
    new_hash = hash_payload(new_payload)
    new_payload["library_hash"] = new_hash
    return new_payload, new_hash


def datetime_now_iso() -> str:
    from datetime import datetime, timezone
    return datetime.now(timezone.utc).isoformat()


# ---------------------------------------------------------------------------
# Export
# ---------------------------------------------------------------------------

def format_constant(constant: Mapping[str, Any]) -> str:
    """{"1": "7/4", "zeta2": "-1"} -> "7/4 - zeta2"."""
    parts: List[str] = []
    for name, coeff in constant.items():
        c = str(coeff).strip()
        sign = "-" if c.startswith("-") else "+"
        mag = c.lstrip("-+")
        if name == "1":
            body = mag
        elif mag == "1":
            body = name
        else:
            body = f"{mag}*{name}"
        parts.append((sign, body))
    if not parts:
        return "0"
    head_sign, head = parts[0]
    text = ("-" if head_sign == "-" else "") + head
    for sign, body in parts[1:]:
        text += f" {sign} {body}"
    return text


def catalog_export(
    records: List[Mapping[str, Any]],
    fmt: str = "json",
    path: Optional[Path] = None,
    measured_rates: Optional[Mapping[str, Any]] = None,
    reports: Optional[Mapping[str, Mapping[str, Any]]] = None,
    library_hash: str = "",
) -> str:
    """Dump identity records as JSON (lossless, re-ingestible) or CSV.

    ``measured_rates`` maps id -> rate string; ``reports`` maps id -> verification
    report dict and adds the digits_achieved column.
    """
    measured_rates = measured_rates or {}
    if fmt == "json":
        out = []
        for r in records:
            row = dict(r)
            row["rate_measured"] = measured_rates.get(r["id"])
            if reports is not None:
                row["digits_achieved"] = (reports.get(r["id"]) or {}).get("digits_achieved")
            out.append(row)
        text = json.dumps(
            {"schema_version": SCHEMA_VERSION, "library_hash": library_hash, "records": out},
            indent=2,
        ) + "\n"
    elif fmt == "csv":
        rows = []
        for r in records:
            row = {
                "id": r["id"],
                "constant": format_constant(r.get("constant") or {}),
                "rate_claimed": r.get("claimed_rate"),
                "rate_measured": measured_rates.get(r["id"]),
                "status": r.get("status"),
                "anchor": r.get("anchor"),
            }
            if reports is not None:
                row["digits_achieved"] = (reports.get(r["id"]) or {}).get("digits_achieved")
            rows.append(row)
        columns = EXPORT_COLUMNS + (["digits_achieved"] if reports is not None else [])
        buf = io.StringIO()
        pd.DataFrame(rows, columns=columns).to_csv(buf, index=False)
        text = buf.getvalue()
    else:
        raise CatalogValidationError(f"unknown export format {fmt!r} (json or csv)")
    if path is not None:
        Path(path).write_text(text, encoding="utf-8")
    return text


EXPORT_ONLY_FIELDS = ("rate_measured", "digits_achieved")


def ingest_export(text: str) -> List[Dict[str, Any]]:
    """Records from a JSON export, with the measured columns stripped."""
    try:
        payload = json.loads(text)
    except json.JSONDecodeError as e:
        raise CatalogValidationError(f"export is not valid JSON: {e}") from e
    records = []
    for r in payload.get("records", []):
        records.append({k: v for k, v in r.items() if k not in EXPORT_ONLY_FIELDS})
    return records
