import logging
import os
import sys
from dataclasses import dataclass, replace
from typing import Optional

from caterlab.errors import ConfigurationError

#environment variables read at startup
WORKERS_ENV = "CATERLAB_WORKERS"
ABS_TOL_ENV = "CATERLAB_ABS_TOL"
REL_TOL_ENV = "CATERLAB_REL_TOL"

DEFAULT_ABS_TOL = 1e-12
DEFAULT_REL_TOL = 1e-12

# exact algebraic identities are held to a tighter relative band
IDENTITY_REL_TOL = 1e-13

LOG_FORMAT = "%(asctime)s %(levelname)s %(name)s: %(message)s"


@dataclass(frozen=True)
class Band:
    """Absolute/relative tolerance pair that defines equality and violation verdicts."""

    abs_tol: float = DEFAULT_ABS_TOL
    rel_tol: float = DEFAULT_REL_TOL

    def __post_init__(self):
        if not (self.abs_tol >= 0.0 and self.rel_tol >= 0.0):
            raise ConfigurationError(
                "tolerances must be non-negative",
                {"abs_tol": self.abs_tol, "rel_tol": self.rel_tol},
            )

    def width(self, lhs: float, rhs: float, scale: float = 0.0) -> float:
        return max(self.abs_tol, self.rel_tol * max(abs(lhs), abs(rhs), abs(scale)))


DEFAULT_BAND = Band()
IDENTITY_BAND = Band(abs_tol=0.0, rel_tol=IDENTITY_REL_TOL)


@dataclass(frozen=True)
class Settings:
    band: Band = DEFAULT_BAND
    workers: int = 1
    recheck_dps: int = 40
    scan_n_cap: int = 8
    quad_panel_budget: int = 100_000

    def __post_init__(self):
        if self.workers < 1:
            raise ConfigurationError("worker count must be at least 1", {"workers": self.workers})
        if self.recheck_dps < 20:
            raise ConfigurationError("recheck precision must be at least 20 digits", {"recheck_dps": self.recheck_dps})

    @classmethod
    def from_env(cls) -> "Settings":
        """Build settings from CATERLAB_* environment variables."""
        workers = _read_env(WORKERS_ENV, int, os.cpu_count() or 1)
        abs_tol = _read_env(ABS_TOL_ENV, float, DEFAULT_ABS_TOL)
        rel_tol = _read_env(REL_TOL_ENV, float, DEFAULT_REL_TOL)
        return cls(band=Band(abs_tol, rel_tol), workers=workers)

    def with_overrides(
        self,
        abs_tol: Optional[float] = None,
        rel_tol: Optional[float] = None,
        workers: Optional[int] = None,
    ) -> "Settings":
        band = Band(
            self.band.abs_tol if abs_tol is None else abs_tol,
            self.band.rel_tol if rel_tol is None else rel_tol,
        )
        return replace(self, band=band, workers=self.workers if workers is None else workers)


def _read_env(name: str, cast, default):
    raw = os.getenv(name)
    if raw is None or raw.strip() == "":
        return default
    try:
        return cast(raw)
    except ValueError:
        raise ConfigurationError(f"cannot parse {name}={raw!r}", {"variable": name, "value": raw}) from None


def configure_logging(debug: bool = False) -> None:
    """Send log records to stderr; stdout is reserved for documents."""
    root = logging.getLogger("caterlab")
    root.setLevel(logging.DEBUG if debug else logging.INFO)
    if not any(getattr(h, "_caterlab", False) for h in root.handlers):
        handler = logging.StreamHandler(sys.stderr)
        handler.setFormatter(logging.Formatter(LOG_FORMAT))
        handler._caterlab = True
        root.addHandler(handler)
