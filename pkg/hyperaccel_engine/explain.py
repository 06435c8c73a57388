from typing import Dict, List, Optional

from mpmath import mp

from .recurrences import Recurrence
from .schemas import AccelerationRun, VerificationReport


def recurrence_text(rec: Recurrence) -> str:
    """Human-readable statement h(v) = r1 + r2 * h'(v + shift)."""
    shifted = ", ".join(f"{v}{'+' if d >= 0 else ''}{d}" if d else v for v, d in rec.shift_map().items())
    here = ", ".join(rec.variables)
    return (
        f"{rec.family.name}({here})\n"
        f"  = {rec.r1_text or rec.r1.to_text()}\n"
        f"  + ({rec.r2_text or rec.r2.to_text()}) * {rec.target_family.name}({shifted})"
    )


def run_ledger(run: AccelerationRun) -> List[Dict]:
    ledger = []
    for j, (term, total) in enumerate(zip(run.terms, run.partial_sums)):
        ledger.append({
            "j": j,
            "term": str(term),
            "partial_sum": mp.nstr(mp.mpf(total.numerator) / total.denominator, 25),
            "digits": run.digits_by_step[j] if j < len(run.digits_by_step) else None,
        })
    return ledger


def run_summary(run: AccelerationRun) -> Dict:
    return {
        "recurrence": run.recurrence,
        "start": ", ".join(f"{k}={v}" for k, v in run.start.items()),
        "steps": run.steps,
        "rate": None if run.rate is None else str(run.rate),
        "remainder": None if run.remainder is None else mp.nstr(run.remainder, 6),
        "value": None if run.value is None else mp.nstr(run.value, 30),
        "matched_identity": run.matched_identity,
        "match_offset": run.match_offset,
        "match_scale": None if run.match_scale is None else str(run.match_scale),
    }


def report_rows(reports: List[VerificationReport]) -> List[Dict]:
    return [r.to_dict() for r in reports]


def verification_summary(reports: List[VerificationReport]) -> Dict[str, int]:
    """Counts per status, plus conjectured entries that agree numerically."""
    out = {"pass": 0, "fail": 0, "too_slow": 0, "error": 0, "conjectured_agreeing": 0}
    for r in reports:
        out[r.status] = out.get(r.status, 0) + 1
        if r.conjectured and r.passed:
            out["conjectured_agreeing"] += 1
    return out


def worst_report(reports: List[VerificationReport]) -> Optional[VerificationReport]:
    # fail/error first, then the fewest digits
    order = {"fail": 0, "error": 1, "too_slow": 2, "pass": 3}
    if not reports:
        return None
    return min(reports, key=lambda r: (order.get(r.status, 0), r.digits_achieved))
