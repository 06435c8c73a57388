from __future__ import annotations

import logging
from dataclasses import dataclass, field
from fractions import Fraction
from functools import lru_cache
from multiprocessing import Pool
from pathlib import Path
from typing import Dict, Iterable, List, Optional, Tuple, Union

import numpy as np
from mpmath import mp

from .constants import REFERENCE_DIGITS, ReferenceStore, load_reference_store
from .errors import (
    AccelerationFailure,
    DomainError,
    HyperaccelError,
    InadmissibleParametersError,
    NonVanishingRemainderError,
    TooSlowError,
    UnknownEntryError,
)
from .exact import Scalar
from .identities import IdentityCatalog, load_identity_catalog, match_run, series_for
from .library import catalog_export
from .recurrences import RecurrenceCatalog, lemma_hyperterm, lemma_terms, load_recurrence_catalog, random_parameter, residual
from .schemas import AccelerationRun, VerificationReport
from .series import HyperTerm, compile_summand, estimate_rate, evaluate
from .settings import DEFAULT_SETTINGS, Settings
from .wz import WZPair, boundary_check, check_certificate, load_certificate_file, parse_certificate_text, summed_difference

logger = logging.getLogger(__name__)

# digits kept in reserve below the stored reference places
REFERENCE_MARGIN = 10


@lru_cache(maxsize=4)
def catalogs_for(data_dir: Path) -> Tuple[RecurrenceCatalog, IdentityCatalog, ReferenceStore]:
    """Recurrences, identities and reference store from one data directory."""
    recurrences = load_recurrence_catalog(data_dir)
    identities = load_identity_catalog(data_dir, recurrences)
    store = load_reference_store(data_dir)
    return recurrences, identities, store


def _correct_digits(error, cap: int) -> int:
    if error == 0:
        return cap
    return max(0, min(cap, int(mp.floor(-mp.log10(error)))))


# ---------------------------------------------------------------------------
# Acceleration
# ---------------------------------------------------------------------------

def accelerate(
    chain: str,
    x: Scalar,
    y: Scalar,
    m: int,
    repeat: int = 1,
    *,
    digits: int = 30,
    check_remainder: bool = True,
    settings: Optional[Settings] = None,
) -> AccelerationRun:
    """Expand h(x, y) into m accelerated terms plus a remainder.

    The remainder prod r2 * h(v + m*shift) is summed numerically and must not grow
    between m/2 and m steps. When the accelerated series converges geometrically its
    certified value gives the correct digits after each step, and a catalog record with
    the same route is reported as the match.
    """
    settings = settings or DEFAULT_SETTINGS
    recurrences, identities, _ = catalogs_for(settings.data_dir)
    if m < 0:
        raise DomainError(f"steps must be nonnegative, got {m}")
    rec = recurrences.resolve(chain, repeat)
    if len(rec.variables) != 2:
        raise DomainError(f"{rec.id} has variables {rec.variables}; accelerate takes two")
    pt = rec.point({rec.variables[0]: x, rec.variables[1]: y})
    terms, _ = lemma_terms(rec, pt, m)
    partial: List[Fraction] = []
    total = Fraction(0)
    for t in terms:
        total += t
        partial.append(total)
    run = AccelerationRun(recurrence=rec.id, start=dict(pt), steps=m, terms=terms, partial_sums=partial)

    if check_remainder:
        dps = settings.numeric_dps
        try:
            run.remainder = residual(rec, pt, m=m, dps=dps)
            if m >= 2:
                earlier = residual(rec, pt, m=m // 2, dps=dps)
                if abs(run.remainder) > abs(earlier):
                    raise AccelerationFailure(
                        f"{rec.id} at {pt}: remainder grows from {mp.nstr(earlier, 5)} (m={m // 2}) to {mp.nstr(run.remainder, 5)} (m={m})"
                    )
        except NonVanishingRemainderError as e:
            raise AccelerationFailure(str(e)) from e

    if not rec.iterable:
        return run
    t = lemma_hyperterm(rec, pt)
    run.rate = t.limit_ratio()
    if run.rate is not None and abs(run.rate) < 1:
        try:
            res = evaluate(t, digits, settings=settings)
            run.value = res.value
            with mp.workdps(digits + settings.guard_digits):
                run.digits_by_step = [_correct_digits(abs(res.value - s.numerator / mp.mpf(s.denominator)), digits) for s in partial]
        except TooSlowError as e:
            logger.warning("%s: accelerated series too slow for %d digits (%s)", rec.id, digits, e)
    match = match_run(rec, pt[rec.variables[0]], pt[rec.variables[1]], repeat, identities, recurrences)
    if match is not None:
        record, alignment = match
        run.matched_identity = record.id
        if alignment is not None:
            run.match_offset = alignment.offset
            run.match_scale = alignment.scale
    return run


# ---------------------------------------------------------------------------
# Verification
# ---------------------------------------------------------------------------

def measured_rate(t: HyperTerm, n: Optional[int] = None, settings: Optional[Settings] = None) -> Optional[str]:
    settings = settings or DEFAULT_SETTINGS
    n = max(n or settings.rate_sample, t.first_index + 10)
    try:
        with mp.workdps(20):
            return mp.nstr(estimate_rate(t, n), 8)
    except HyperaccelError:
        return None


def verify_identity(record_id: str, digits: int, settings: Optional[Settings] = None) -> VerificationReport:
    """Evaluate the record's series with a certified tail bound and compare with the reference."""
    settings = settings or DEFAULT_SETTINGS
    recurrences, identities, store = catalogs_for(settings.data_dir)
    record = identities.get(record_id)
    limit = min((store.places(name) for name in record.constant if name != "1"), default=REFERENCE_DIGITS)
    if digits < 1 or digits > limit - REFERENCE_MARGIN:
        raise DomainError(f"digits must be in [1, {limit - REFERENCE_MARGIN}], got {digits}")

    report = VerificationReport(
        identity=record.id,
        status="error",
        target_digits=digits,
        rate_claimed=None if record.claimed_rate is None else str(record.claimed_rate),
        conjectured=record.status == "conjectured",
    )
    try:
        t = series_for(record, recurrences)
    except HyperaccelError as e:
        report.message = str(e)
        logger.error("%s: cannot build series: %s", record.id, e)
        return report
    report.rate_measured = measured_rate(t, settings=settings)

    dps = digits + settings.guard_digits
    expected = store.constant_value(record.constant, dps)
    try:
        res = evaluate(t, digits, settings=settings)
    except TooSlowError as e:
        report.status = "too_slow"
        report.message = str(e)
        if e.partial is not None:
            report.terms_used = e.partial.terms_used
            with mp.workdps(dps):
                report.digits_achieved = _correct_digits(abs(e.partial.value - expected), digits)
        return report

    with mp.workdps(dps):
        diff = abs(res.value - expected)
        report.digits_achieved = _correct_digits(diff, dps)
        passed = diff < mp.mpf(10) ** (-digits)
    report.terms_used = res.terms_used
    report.status = "pass" if passed else "fail"
    if not passed:
        report.message = f"series and constant differ by {mp.nstr(diff, 5)}"
        logger.error("%s fails at %d digits: %s", record.id, digits, report.message)
    elif report.conjectured:
        report.message = "numerical agreement only; the record stays conjectured"
    return report


def _verify_job(args: Tuple[str, int, Settings]) -> VerificationReport:
    record_id, digits, settings = args
    try:
        return verify_identity(record_id, digits, settings)
    except DomainError:
        raise
    except HyperaccelError as e:
        return VerificationReport(identity=record_id, status="error", target_digits=digits, message=str(e))


def verify_all(ids: Optional[Iterable[str]] = None, digits: int = 50, settings: Optional[Settings] = None) -> List[VerificationReport]:
    """One verification job per identity; the order of the result is by id, whatever the schedule."""
    settings = settings or DEFAULT_SETTINGS
    _, identities, _ = catalogs_for(settings.data_dir)
    selected = sorted(ids) if ids is not None else sorted(identities.ids())
    for rid in selected:
        identities.get(rid)
    jobs = [(rid, digits, settings) for rid in selected]
    if settings.jobs > 1 and len(jobs) > 1:
        with Pool(processes=settings.jobs) as pool:
            reports = pool.map(_verify_job, jobs)
    else:
        reports = [_verify_job(j) for j in jobs]
    return sorted(reports, key=lambda r: r.identity)


# ---------------------------------------------------------------------------
# Second, independent computation of the reference constants
# ---------------------------------------------------------------------------

# how a solved catalog constant converts to the oracle's target
_TO_TARGET = {
    ("pi", "pi"): lambda v: v,
    ("inv_pi", "pi"): lambda v: 1 / v,
    ("pi2", "pi"): lambda v: mp.sqrt(v),
    ("inv_pi2", "pi"): lambda v: 1 / mp.sqrt(v),
}


def reference_oracles(digits: int, settings: Optional[Settings] = None) -> Dict[str, List[Tuple[str, object]]]:
    """name -> [(record id, value)] from the catalog series tagged ``oracle:<name>``.

    Each record's series is summed with a certified tail bound and solved for its single
    non-rational constant.
    """
    settings = settings or DEFAULT_SETTINGS
    recurrences, identities, _ = catalogs_for(settings.data_dir)
    dps = digits + settings.guard_digits
    out: Dict[str, List[Tuple[str, object]]] = {}
    for record in sorted(identities.records.values(), key=lambda r: r.id):
        for tag in record.tags:
            if not tag.startswith("oracle:"):
                continue
            target = tag.split(":", 1)[1]
            keys = [k for k in record.constant if k != "1"]
            if len(keys) != 1:
                raise DomainError(f"{record.id}: oracle records need exactly one non-rational constant")
            key = keys[0]
            convert = _TO_TARGET.get((key, target), (lambda v: v) if key == target else None)
            if convert is None:
                raise DomainError(f"{record.id}: cannot turn {key} into {target}")
            res = evaluate(series_for(record, recurrences), digits + 2, settings=settings)
            c1 = record.constant.get("1", Fraction(0))
            ck = record.constant[key]
            with mp.workdps(dps):
                solved = (res.value - mp.mpf(c1.numerator) / c1.denominator) * ck.denominator / ck.numerator
                out.setdefault(target, []).append((record.id, convert(solved)))
    return out


def oracle_agreement(digits: int, settings: Optional[Settings] = None) -> Dict[str, List[Tuple[str, int]]]:
    """name -> [(record id, decimal places shared with the stored reference)]."""
    settings = settings or DEFAULT_SETTINGS
    _, _, store = catalogs_for(settings.data_dir)
    out: Dict[str, List[Tuple[str, int]]] = {}
    dps = digits + settings.guard_digits
    for name, values in reference_oracles(digits, settings).items():
        ref = store.value(name, dps)
        with mp.workdps(dps):
            out[name] = [(rid, _correct_digits(abs(v - ref), dps)) for rid, v in values]
    return out


# ---------------------------------------------------------------------------
# Certificates
# ---------------------------------------------------------------------------

@dataclass
class CertificationReport:
    label: str
    valid: bool
    parameters: Tuple[str, ...] = ()
    # (n, k range, G(n, stop) - G(n, start), sum of F(n+1, k) - F(n, k)) at a sample point
    boundary: Optional[Tuple[int, Tuple[int, int], Fraction, Fraction]] = None
    sample: Dict[str, str] = field(default_factory=dict)
    message: str = ""

    def to_dict(self) -> Dict:
        out = {
            "label": self.label,
            "valid": self.valid,
            "parameters": list(self.parameters),
            "sample": dict(self.sample),
            "message": self.message,
        }
        if self.boundary is not None:
            n, (start, stop), g_diff, f_diff = self.boundary
            out["boundary"] = {"n": n, "k_range": [start, stop], "g_difference": str(g_diff), "f_difference": str(f_diff)}
        return out


def certify(
    text: Optional[str] = None,
    path: Optional[Union[str, Path]] = None,
    seed: int = 0,
    settings: Optional[Settings] = None,
) -> CertificationReport:
    """Check a certificate file (given as text or path) as a rational-function identity.

    A file without a ``term:`` header takes F from its recurrence's proof term. The
    boundary diagnostic compares both sides of the summed WZ equation at n = 3 over
    k = 0..1 for a random rational draw of the remaining parameters.
    """
    settings = settings or DEFAULT_SETTINGS
    if (text is None) == (path is None):
        raise DomainError("pass exactly one of text / path")
    cf = parse_certificate_text(text) if text is not None else load_certificate_file(path)
    term = cf.term
    if term is None:
        if cf.recurrence is None:
            raise UnknownEntryError("certificate names neither a term nor a recurrence")
        recurrences, _, _ = catalogs_for(settings.data_dir)
        term = recurrences.get(cf.recurrence).proof_term
        if term is None:
            raise UnknownEntryError(f"{cf.recurrence} has no proof term")
    n, k = cf.variables[0], cf.variables[1]
    label = cf.recurrence or (Path(path).name if path is not None else "certificate")
    pair = WZPair.from_term(term, cf.certificate, n, k, label=label, seed=seed)
    report = CertificationReport(label=label, valid=check_certificate(pair, seed), parameters=pair.parameters)

    rng = np.random.default_rng(seed)
    k_range = range(0, 2)
    for _ in range(20):
        params = {v: random_parameter(rng) for v in pair.parameters}
        try:
            g_diff = boundary_check(pair, 3, k_range, params)
            f_diff = summed_difference(pair, 3, k_range, params)
        except InadmissibleParametersError:
            continue
        report.boundary = (3, (k_range.start, k_range.stop), g_diff, f_diff)
        report.sample = {name: str(v) for name, v in params.items()}
        break
    report.message = "certificate valid" if report.valid else "certificate rejected"
    return report


# ---------------------------------------------------------------------------
# Series specs for eval / rate
# ---------------------------------------------------------------------------

def resolve_series(spec: str, lower_limit: Optional[int] = None, settings: Optional[Settings] = None) -> HyperTerm:
    """A catalog identity id or a summand formula in n."""
    settings = settings or DEFAULT_SETTINGS
    recurrences, identities, _ = catalogs_for(settings.data_dir)
    if spec in identities.records:
        return series_for(identities.get(spec), recurrences)
    return compile_summand(spec, "n", lower_limit, spec)


def export(fmt: str = "json", path: Optional[Path] = None, reports: Optional[List[VerificationReport]] = None, settings: Optional[Settings] = None) -> str:
    """Catalog export with measured rates (and digits achieved when reports are given)."""
    settings = settings or DEFAULT_SETTINGS
    recurrences, identities, _ = catalogs_for(settings.data_dir)
    rates: Dict[str, Optional[str]] = {}
    for rid, record in identities.records.items():
        try:
            rates[rid] = measured_rate(series_for(record, recurrences), settings=settings)
        except HyperaccelError:
            rates[rid] = None
    report_map = None if reports is None else {r.identity: r.to_dict() for r in reports}
    records = [r.to_dict() for r in identities.records.values()]
    return catalog_export(records, fmt, path, rates, report_map, identities.library_hash)
