"""Record types shared by the engine, the CLI and the Streamlit tabs."""

from __future__ import annotations

from dataclasses import dataclass, field
from fractions import Fraction
from typing import Any, Dict, List, Mapping, Optional

from mpmath import mp


@dataclass
class Route:
    """An identity reached by accelerating a family instance.

    The accelerated series sum_j T_j (j from 0) is matched to the record's summand as
    T_j = scale * summand(j + offset); ``offset`` and ``scale`` are searched when absent.
    """

    recurrence: str  # id or chain "A+B"
    x: Fraction
    y: Fraction
    repeat: int = 1
    offset: Optional[int] = None
    scale: Optional[Fraction] = None

    def to_dict(self) -> Dict:
        out: Dict[str, Any] = {"recurrence": self.recurrence, "x": str(self.x), "y": str(self.y)}
        if self.repeat != 1:
            out["repeat"] = self.repeat
        if self.offset is not None:
            out["offset"] = self.offset
        if self.scale is not None:
            out["scale"] = str(self.scale)
        return out

    @classmethod
    def from_dict(cls, d: Mapping[str, Any]) -> "Route":
        return cls(
            recurrence=str(d["recurrence"]),
            x=Fraction(str(d["x"])),
            y=Fraction(str(d["y"])),
            repeat=int(d.get("repeat", 1)),
            offset=None if d.get("offset") is None else int(d["offset"]),
            scale=None if d.get("scale") is None else Fraction(str(d["scale"])),
        )


@dataclass
class IdentityRecord:
    id: str
    constant: Dict[str, Fraction]  # name -> coefficient; "1" is the rational part
    status: str = "proved"  # proved | conjectured
    anchor: str = ""
    summand: Optional[str] = None
    lower_limit: Optional[int] = None
    claimed_rate: Optional[Fraction] = None
    route: Optional[Route] = None
    # the route's series alone (no summand) when True
    route_only: bool = False
    notes: str = ""
    tags: List[str] = field(default_factory=list)

    def to_dict(self) -> Dict:
        out: Dict[str, Any] = {
            "id": self.id,
            "constant": {k: str(v) for k, v in self.constant.items()},
            "status": self.status,
            "anchor": self.anchor,
        }
        if self.summand is not None:
            out["summand"] = self.summand
        if self.lower_limit is not None:
            out["lower_limit"] = self.lower_limit
        if self.claimed_rate is not None:
            out["claimed_rate"] = str(self.claimed_rate)
        if self.route is not None:
            out["route"] = self.route.to_dict()
        if self.notes:
            out["notes"] = self.notes
        if self.tags:
            out["tags"] = list(self.tags)
        return out

    @classmethod
    def from_dict(cls, d: Mapping[str, Any]) -> "IdentityRecord":
        route = Route.from_dict(d["route"]) if d.get("route") else None
        summand = d.get("summand")
        return cls(
            id=d["id"],
            constant={k: Fraction(str(v)) for k, v in d["constant"].items()},
            status=d.get("status", "proved"),
            anchor=d.get("anchor", ""),
            summand=summand,
            lower_limit=d.get("lower_limit"),
            claimed_rate=None if d.get("claimed_rate") is None else Fraction(str(d["claimed_rate"])),
            route=route,
            route_only=summand is None,
            notes=d.get("notes", ""),
            tags=list(d.get("tags") or []),
        )


@dataclass
class ReferenceConstant:
    name: str
    digits: str  # decimal string, at least REFERENCE_DIGITS places
    oracle_note: str = ""
    expression: str = ""

    def to_dict(self) -> Dict:
        return {
            "name": self.name,
            "digits": self.digits,
            "oracle_note": self.oracle_note,
            "expression": self.expression,
        }


@dataclass
class AccelerationRun:
    recurrence: str
    start: Dict[str, Fraction]
    steps: int
    terms: List[Fraction] = field(default_factory=list)
    partial_sums: List[Fraction] = field(default_factory=list)
    remainder: Any = None  # mpf or None
    rate: Optional[Fraction] = None
    matched_identity: Optional[str] = None
    match_offset: Optional[int] = None
    match_scale: Optional[Fraction] = None
    value: Any = None  # mpf, certified sum of the accelerated series
    digits_by_step: List[int] = field(default_factory=list)

    def to_dict(self) -> Dict:
        return {
            "recurrence": self.recurrence,
            "start": {k: str(v) for k, v in self.start.items()},
            "steps": self.steps,
            "terms": [str(t) for t in self.terms],
            "partial_sums": [str(s) for s in self.partial_sums],
            "remainder": None if self.remainder is None else mp.nstr(self.remainder, 8),
            "rate": None if self.rate is None else str(self.rate),
            "matched_identity": self.matched_identity,
            "match_offset": self.match_offset,
            "match_scale": None if self.match_scale is None else str(self.match_scale),
            "value": None if self.value is None else mp.nstr(self.value, 30),
            "digits_by_step": list(self.digits_by_step),
        }


@dataclass
class VerificationReport:
    identity: str
    status: str  # pass | fail | too_slow | error
    target_digits: int
    digits_achieved: int = 0
    terms_used: int = 0
    rate_measured: Optional[str] = None
    rate_claimed: Optional[str] = None
    conjectured: bool = False
    message: str = ""

    @property
    def passed(self) -> bool:
        return self.status == "pass"

    def to_dict(self) -> Dict:
        return {
            "identity": self.identity,
            "status": self.status,
            "target_digits": self.target_digits,
            "digits_achieved": self.digits_achieved,
            "terms_used": self.terms_used,
            "rate_measured": self.rate_measured,
            "rate_claimed": self.rate_claimed,
            "conjectured": self.conjectured,
            "message": self.message,
        }
