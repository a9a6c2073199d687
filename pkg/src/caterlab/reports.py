"""
Structured results: inequality reports, run manifests and output documents.

Indices in reports are 1-based, matching the way the inequalities are stated.
"""
import csv
import hashlib
import json
import logging
from dataclasses import asdict, dataclass, field
from datetime import datetime, timezone
from pathlib import Path
from typing import Any, Dict, Iterable, List, Optional, Sequence, TextIO

import numpy as np

from caterlab import __version__
from caterlab.config import DEFAULT_BAND, Band
from caterlab.errors import ContradictionError

logger = logging.getLogger(__name__)

SCHEMA_VERSION = "1.0"
SCHEMA_DIR = Path(__file__).parent / "schemas"

HOLDS = "holds"
EQUALITY = "equality"
VIOLATED = "violated"

# relation -> (margin orientation, strict)
_RELATIONS = {
    "le": (-1, False),
    "lt": (-1, True),
    "ge": (1, False),
    "gt": (1, True),
}


@dataclass(frozen=True)
class EvalReport:
    """One inequality check: both sides, the signed margin and the verdict."""

    label: str
    relation: str
    lhs: float
    rhs: float
    margin: float
    verdict: str
    abs_tol: float
    rel_tol: float
    inputs_digest: str
    strict: bool = False
    proved: bool = True
    expected_equality: Optional[bool] = None
    note: Optional[str] = None
    seed: Optional[int] = None

    @property
    def ok(self) -> bool:
        return self.verdict != VIOLATED

    def to_dict(self) -> Dict[str, Any]:
        return asdict(self)


def inputs_digest(inputs: Any) -> str:
    canonical = json.dumps(inputs, sort_keys=True, default=_jsonable)
    return hashlib.sha256(canonical.encode("utf-8")).hexdigest()[:16]


def classify(margin: float, lhs: float, rhs: float, band: Band = DEFAULT_BAND, scale: float = 0.0) -> str:
    width = band.width(lhs, rhs, scale)
    if abs(margin) <= width:
        return EQUALITY
    if margin < -width:
        return VIOLATED
    return HOLDS


def make_report(
    label: str,
    lhs: float,
    relation: str,
    rhs: float,
    inputs: Any,
    band: Optional[Band] = None,
    proved: bool = True,
    expected_equality: Optional[bool] = None,
    note: Optional[str] = None,
    seed: Optional[int] = None,
    scale: float = 0.0,
) -> EvalReport:
    """Build a report on the claim ``lhs <relation> rhs``; never raises on the verdict."""
    band = band or DEFAULT_BAND
    sign, strict = _RELATIONS[relation]
    margin = sign * (lhs - rhs)
    verdict = classify(margin, lhs, rhs, band, scale)

    if expected_equality is not None and note is None:
        if verdict == EQUALITY and not expected_equality:
            note = "noteworthy: equality within band where none is predicted"
        elif verdict != EQUALITY and expected_equality:
            note = "expected equality not observed"
    if strict and verdict == EQUALITY and note is None:
        note = "strict claim resolved only to within the band"

    return EvalReport(
        label=label,
        relation=relation,
        lhs=lhs,
        rhs=rhs,
        margin=margin,
        verdict=verdict,
        abs_tol=band.abs_tol,
        rel_tol=band.rel_tol,
        inputs_digest=inputs_digest(inputs),
        strict=strict,
        proved=proved,
        expected_equality=expected_equality,
        note=note,
        seed=seed,
    )


def require(report: EvalReport, context: Optional[Dict[str, Any]] = None) -> EvalReport:
    """
    Raise ContradictionError when a proved claim is numerically falsified.

    Covers a violated verdict and a predicted equality whose margin lies
    outside the band. Unpredicted equality is only ever a note.
    """
    if not report.proved:
        return report
    if report.verdict == VIOLATED:
        reason = f"{report.label}: margin {report.margin!r} below the band"
    elif report.expected_equality and report.verdict != EQUALITY:
        reason = f"{report.label}: predicted equality but margin {report.margin!r} is outside the band"
    else:
        return report
    logger.error("contradiction: %s", reason)
    raise ContradictionError(reason, context=context, evidence=report)


@dataclass(frozen=True)
class RunManifest:
    command: str
    config: Dict[str, Any]
    seed: Optional[int] = None
    tool_version: str = __version__
    timestamp: str = field(default_factory=lambda: datetime.now(timezone.utc).isoformat())
    schema_version: str = SCHEMA_VERSION

    def to_dict(self) -> Dict[str, Any]:
        return asdict(self)


def build_document(manifest: RunManifest, payload: Dict[str, Any]) -> Dict[str, Any]:
    document = {"schema_version": SCHEMA_VERSION, "manifest": manifest.to_dict()}
    document.update(payload)
    return document


def _jsonable(value: Any) -> Any:
    to_dict = getattr(value, "to_dict", None)
    if callable(to_dict):
        return to_dict()
    if isinstance(value, (tuple, set, frozenset)):
        return list(value)
    if hasattr(value, "tolist"):
        return value.tolist()
    raise TypeError(f"cannot serialize {type(value).__name__}")


def dumps(document: Dict[str, Any], indent: Optional[int] = 2) -> str:
    """Serialize a document; floats keep their shortest round-trip repr. ``indent=None`` gives one line."""
    return json.dumps(document, default=_jsonable, indent=indent, ensure_ascii=False)


#write a list of flat rows as csv with a header line, after a manifest comment line when given
def write_csv(
    rows: Iterable[Dict[str, Any]],
    fieldnames: Sequence[str],
    stream: TextIO,
    manifest: Optional[RunManifest] = None,
) -> None:
    if manifest is not None:
        stream.write(f"# manifest: {dumps(manifest.to_dict(), indent=None)}\n")
    writer = csv.DictWriter(stream, fieldnames=list(fieldnames), lineterminator="\n")
    writer.writeheader()
    for row in rows:
        writer.writerow({key: _csv_cell(row.get(key)) for key in fieldnames})


def _csv_cell(value: Any) -> Any:
    if isinstance(value, float):
        return repr(value)
    if isinstance(value, (list, tuple)):
        return " ".join(str(v) for v in value)
    return value


@dataclass(frozen=True)
class BatteryResult:
    """Verdict counts of one sampled property battery."""

    name: str
    samples: int
    seed: int
    holds: int
    equality: int
    violated: int
    worst_margin: float
    worst_inputs: List[float]
    mismatched_equality: int = 0

    @property
    def ok(self) -> bool:
        return self.violated == 0 and self.mismatched_equality == 0

    def to_dict(self) -> Dict[str, Any]:
        data = asdict(self)
        data["ok"] = self.ok
        return data


def tally(
    name: str,
    margins: np.ndarray,
    lhs: np.ndarray,
    rhs: np.ndarray,
    rows: np.ndarray,
    seed: int,
    band: Optional[Band] = None,
    expected_equality: Optional[np.ndarray] = None,
    scale: Optional[np.ndarray] = None,
) -> BatteryResult:
    """Classify a whole batch of margins at once with the same band rule as make_report."""
    band = band or DEFAULT_BAND
    magnitude = np.maximum(np.abs(lhs), np.abs(rhs))
    if scale is not None:
        magnitude = np.maximum(magnitude, np.abs(scale))
    width = np.maximum(band.abs_tol, band.rel_tol * magnitude)
    equal = np.abs(margins) <= width
    violated = margins < -width
    mismatched = 0
    if expected_equality is not None:
        mismatched = int(np.count_nonzero(expected_equality & ~equal & ~violated))
    worst = int(np.argmin(margins)) if len(margins) else 0
    return BatteryResult(
        name=name,
        samples=int(len(margins)),
        seed=seed,
        holds=int(np.count_nonzero(~equal & ~violated)),
        equality=int(np.count_nonzero(equal)),
        violated=int(np.count_nonzero(violated)),
        worst_margin=float(margins[worst]) if len(margins) else 0.0,
        worst_inputs=[float(v) for v in np.atleast_1d(rows[worst])] if len(margins) else [],
        mismatched_equality=mismatched,
    )


def enforce_battery(result: BatteryResult) -> BatteryResult:
    if not result.ok:
        logger.error("battery %s failed: %s", result.name, result.to_dict())
        raise ContradictionError(
            f"battery {result.name}: {result.violated} violations, "
            f"{result.mismatched_equality} missed equalities",
            context={"seed": result.seed},
            evidence=result,
        )
    return result


def load_schema(name: str) -> Dict[str, Any]:
    with (SCHEMA_DIR / f"{name}.schema.json").open() as handle:
        return json.load(handle)


def missing_keys(document: Dict[str, Any], schema: Dict[str, Any], path: str = "") -> List[str]:
    """Required keys of ``schema`` absent from ``document``, followed into nested objects and arrays."""
    missing = [f"{path}{key}" for key in schema.get("required", []) if key not in document]
    for key, sub in schema.get("properties", {}).items():
        value = document.get(key)
        if isinstance(value, dict):
            missing += missing_keys(value, sub, f"{path}{key}.")
        elif isinstance(value, list) and isinstance(sub.get("items"), dict):
            for index, item in enumerate(value):
                if isinstance(item, dict):
                    missing += missing_keys(item, sub["items"], f"{path}{key}[{index}].")
    return missing
