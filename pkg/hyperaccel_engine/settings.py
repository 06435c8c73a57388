from __future__ import annotations

import os
from dataclasses import dataclass, field, replace
from pathlib import Path
from typing import Dict, Mapping, Optional

DATA_REL_PATH = Path("data")

ENV_PREFIX = "HYPERACCEL_"


def default_data_dir() -> Path:
    # data/ sits beside app.py (repo root)
    return Path(__file__).resolve().parents[1] / DATA_REL_PATH


@dataclass(frozen=True)
class Settings:
    """Run-wide knobs. CLI flags and HYPERACCEL_* env vars override the defaults."""

    term_cap: int = 20000
    window: int = 32
    seed: int = 0
    jobs: int = 1
    guard_digits: int = 10
    pole_window: int = 64
    # index at which the empirical rate is sampled
    rate_sample: int = 1000
    # working precision for unit-argument family sums (mpmath nsum)
    numeric_dps: int = 40
    data_dir: Path = field(default_factory=default_data_dir)

    @classmethod
    def from_env(cls, environ: Optional[Mapping[str, str]] = None) -> "Settings":
        env = os.environ if environ is None else environ
        overrides: Dict[str, object] = {}
        for name in ("term_cap", "window", "seed", "jobs", "guard_digits", "pole_window", "rate_sample", "numeric_dps"):
            raw = env.get(ENV_PREFIX + name.upper())
            if raw is not None and raw.strip():
                overrides[name] = int(raw)
        raw_dir = env.get(ENV_PREFIX + "DATA_DIR")
        if raw_dir:
            overrides["data_dir"] = Path(raw_dir)
        return cls(**overrides)

    def with_overrides(self, **kwargs) -> "Settings":
        clean = {k: v for k, v in kwargs.items() if v is not None}
        return replace(self, **clean)

    def to_dict(self) -> Dict:
        return {
            "term_cap": self.term_cap,
            "window": self.window,
            "seed": self.seed,
            "jobs": self.jobs,
            "guard_digits": self.guard_digits,
            "pole_window": self.pole_window,
            "rate_sample": self.rate_sample,
            "numeric_dps": self.numeric_dps,
            "data_dir": str(self.data_dir),
        }


DEFAULT_SETTINGS = Settings()
