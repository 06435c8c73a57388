"""Command-line interface: python -m hyperaccel_engine <command> ...

Exit codes: 0 all checks pass, 1 a verification failed, 2 bad input, 3 a series
converges too slowly for the requested digits.
"""

from __future__ import annotations

import argparse
import json
import logging
import os
import sys
from pathlib import Path
from typing import Optional, Sequence

from .constants import REFERENCE_DIGITS, agreeing_places, regenerate_reference_store
from .core import accelerate, catalogs_for, certify, export, measured_rate, resolve_series, verify_all
from .errors import (
    AssignmentError,
    CatalogIntegrityError,
    CatalogValidationError,
    DomainError,
    HyperaccelError,
    MalformedSeriesError,
    ParseError,
    TooSlowError,
    UnknownConstantError,
    UnknownEntryError,
)
from .exact import as_rational
from .explain import run_ledger, verification_summary
from .recurrences import sweep_terminating
from .series import evaluate
from .settings import Settings

logger = logging.getLogger(__name__)

EXIT_OK = 0
EXIT_FAILED = 1
EXIT_INPUT = 2
EXIT_TOO_SLOW = 3

INPUT_ERRORS = (
    ParseError,
    UnknownEntryError,
    UnknownConstantError,
    CatalogValidationError,
    CatalogIntegrityError,
    DomainError,
    AssignmentError,
    MalformedSeriesError,
)

LOG_ENV = "HYPERACCEL_LOG_LEVEL"


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="hyperaccel",
        description="Exact hypergeometric recurrences, accelerated series and WZ certificate checks.",
    )
    parser.add_argument("--seed", type=int, default=None, help="seed for randomized checks")
    parser.add_argument("--jobs", type=int, default=None, help="parallel verification jobs")
    parser.add_argument("--term-cap", type=int, default=None, help="maximum number of summed terms")
    parser.add_argument("--log-level", default=None, help=f"logging level (default from {LOG_ENV}, else WARNING)")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("eval", help="sum a series to a number of correct digits")
    p.add_argument("series", help="catalog identity id or summand formula in n")
    p.add_argument("--digits", type=int, default=30)
    p.add_argument("--lower", type=int, default=None, help="lower summation limit of a formula")
    p.add_argument("--fixed", action="store_true", help="fixed-precision accumulation instead of exact")

    p = sub.add_parser("accel", help="expand a family instance into accelerated terms")
    p.add_argument("recurrence", help="recurrence id or chain such as F65_X+F65_Y")
    p.add_argument("--x", required=True)
    p.add_argument("--y", required=True)
    p.add_argument("--steps", type=int, default=10)
    p.add_argument("--repeat", type=int, default=1)
    p.add_argument("--digits", type=int, default=30)
    p.add_argument("--no-remainder", action="store_true", help="skip the numeric remainder check")

    p = sub.add_parser("verify", help="check catalog identities against the reference constants")
    group = p.add_mutually_exclusive_group(required=True)
    group.add_argument("--identity", action="append", help="identity id (repeatable)")
    group.add_argument("--all", action="store_true")
    p.add_argument("--digits", type=int, default=50)

    p = sub.add_parser("certify", help="check a WZ certificate file")
    p.add_argument("path", type=Path)

    p = sub.add_parser("rate", help="empirical convergence rate |t(N+1)/t(N)|")
    p.add_argument("series", help="catalog identity id or summand formula in n")
    p.add_argument("--n", type=int, default=1000)
    p.add_argument("--lower", type=int, default=None)

    p = sub.add_parser("export", help="dump the identity catalog")
    p.add_argument("--format", choices=("json", "csv"), default="json")
    p.add_argument("--output", type=Path, default=None)
    p.add_argument("--verify-digits", type=int, default=None, help="verify first and add digits_achieved")

    p = sub.add_parser("sweep", help="terminating checks of catalog recurrences at random parameters")
    p.add_argument("--id", action="append", help="recurrence id (repeatable, default all)")
    p.add_argument("--n-max", type=int, default=25)
    p.add_argument("--samples", type=int, default=20)

    p = sub.add_parser("constants", help="compare the reference digits with mpmath")
    p.add_argument("--regenerate", action="store_true", help="rewrite the store from mpmath")
    return parser


def configure_logging(level: Optional[str]) -> None:
    name = (level or os.environ.get(LOG_ENV) or "WARNING").upper()
    logging.basicConfig(level=getattr(logging, name, logging.WARNING), format="%(levelname)s %(name)s: %(message)s")


def _print_json(payload) -> None:
    print(json.dumps(payload, indent=2))


def cmd_eval(args, settings: Settings) -> int:
    t = resolve_series(args.series, args.lower, settings)
    try:
        res = evaluate(t, args.digits, exact=not args.fixed, settings=settings)
    except TooSlowError as e:
        print(f"too slow: {e}")
        if e.partial is not None:
            _print_json(e.partial.to_dict())
        return EXIT_TOO_SLOW
    _print_json(res.to_dict())
    return EXIT_OK


def cmd_accel(args, settings: Settings) -> int:
    run = accelerate(
        args.recurrence,
        as_rational(args.x),
        as_rational(args.y),
        args.steps,
        args.repeat,
        digits=args.digits,
        check_remainder=not args.no_remainder,
        settings=settings,
    )
    for row in run_ledger(run):
        print(f"{row['j']:>4}  {row['partial_sum']:>30}  digits={row['digits']}  term={row['term']}")
    _print_json({k: v for k, v in run.to_dict().items() if k not in ("terms", "partial_sums")})
    return EXIT_OK


def cmd_verify(args, settings: Settings) -> int:
    ids = None if args.all else args.identity
    reports = verify_all(ids, args.digits, settings)
    for r in reports:
        flag = " (conjectured)" if r.conjectured else ""
        print(f"{r.identity:<22} {r.status:<9} digits={r.digits_achieved:<4} terms={r.terms_used:<6} "
              f"rate={r.rate_measured} claimed={r.rate_claimed}{flag} {r.message}")
    counts = verification_summary(reports)
    print(" ".join(f"{k}={v}" for k, v in counts.items()))
    if counts["fail"] or counts["error"]:
        return EXIT_FAILED
    # rate-1 entries in a full sweep are reported, not failed
    if counts["too_slow"] and not args.all:
        return EXIT_TOO_SLOW
    return EXIT_OK


def cmd_certify(args, settings: Settings) -> int:
    report = certify(path=args.path, seed=settings.seed, settings=settings)
    _print_json(report.to_dict())
    return EXIT_OK if report.valid else EXIT_FAILED


def cmd_rate(args, settings: Settings) -> int:
    t = resolve_series(args.series, args.lower, settings)
    rate = measured_rate(t, args.n, settings)
    if rate is None:
        print("no rate: the series terminates or vanishes before the sample index")
        return EXIT_INPUT
    limit = t.limit_ratio()
    print(f"|t({args.n}+1)/t({args.n})| = {rate}")
    print(f"limit = {limit}" if limit is not None else "limit = unbounded")
    return EXIT_OK


def cmd_export(args, settings: Settings) -> int:
    reports = None
    if args.verify_digits is not None:
        reports = verify_all(None, args.verify_digits, settings)
    text = export(args.format, args.output, reports, settings)
    if args.output is None:
        sys.stdout.write(text)
    else:
        print(f"wrote {args.output}")
    return EXIT_OK


def cmd_sweep(args, settings: Settings) -> int:
    recurrences, _, _ = catalogs_for(settings.data_dir)
    ids = args.id or recurrences.ids()
    failed = False
    for rid in ids:
        report = sweep_terminating(recurrences.get(rid), range(args.n_max + 1), args.samples, settings.seed)
        print(f"{rid:<10} checked={report.checked} redraws={report.redraws} failures={len(report.failures)}")
        failed = failed or not report.ok
    return EXIT_FAILED if failed else EXIT_OK



def cmd_constants(args, settings: Settings) -> int:
    if args.regenerate:
        print(f"regenerated (hash {regenerate_reference_store(settings.data_dir)})")
        catalogs_for.cache_clear()
        return EXIT_OK
    _, _, store = catalogs_for(settings.data_dir)
    places = agreeing_places(store)
    for name, n in places.items():
        print(f"{name:<8} stored={store.places(name):<4} agrees={n}")
    return EXIT_OK if min(places.values()) >= REFERENCE_DIGITS else EXIT_FAILED


COMMANDS = {
    "eval": cmd_eval,
    "accel": cmd_accel,
    "verify": cmd_verify,
    "certify": cmd_certify,
    "rate": cmd_rate,
    "export": cmd_export,
    "sweep": cmd_sweep,
    "constants": cmd_constants,
}


def main(argv: Optional[Sequence[str]] = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    configure_logging(args.log_level)
    settings = Settings.from_env().with_overrides(seed=args.seed, jobs=args.jobs, term_cap=args.term_cap)
    try:
        return COMMANDS[args.command](args, settings)
    except INPUT_ERRORS as e:
        print(f"error: {e}", file=sys.stderr)
        return EXIT_INPUT
    except TooSlowError as e:
        print(f"too slow: {e}", file=sys.stderr)
        return EXIT_TOO_SLOW
    except HyperaccelError as e:
        logger.error("%s", e)
        print(f"failed: {e}", file=sys.stderr)
        return EXIT_FAILED
    except OSError as e:
        print(f"error: {e}", file=sys.stderr)
        return EXIT_INPUT
