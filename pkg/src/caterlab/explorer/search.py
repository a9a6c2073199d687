"""
Seeded counterexample search around the hypotheses of the comparisons.

The sample index space is cut into fixed-size shards; shard k draws from
(seed, k) so the findings do not depend on how many workers ran them.
Candidates flagged in binary64 are rechecked with mpmath before they are
reported.
"""
import logging
import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from typing import Any, Callable, Dict, List, Optional, Tuple

import numpy as np

from caterlab.config import DEFAULT_BAND, Band
from caterlab.cyclic_core import (
    MAX_ELEMENT,
    MIN_ELEMENT,
    PositiveTuple,
    batch_cater_C,
    batch_cater_C_lower,
    batch_cater_C_upper,
    batch_cyclic_min,
    batch_hypothesis,
)
from caterlab.errors import ConfigurationError, ContradictionError
from caterlab.tools.precision import DEFAULT_DPS, hp_margin
from caterlab.tools.sampling import hypothesis_fail_tuples, hypothesis_tuples, shard_rng, sorted_log_uniform

logger = logging.getLogger(__name__)

REGIONS = ("hypothesis_fail", "hypothesis_hold", "unconstrained")
TARGETS = ("violate_lower_5_01", "violate_upper_5", "violate_cater_2")

# short names accepted on the command line
TARGET_ALIASES = {"lower": "violate_lower_5_01", "upper": "violate_upper_5", "cater": "violate_cater_2"}

SHARD_SIZE = 4096


@dataclass(frozen=True)
class SearchConfig:
    n: int
    region: str = "unconstrained"
    samples: int = 10_000
    seed: int = 0
    value_range: Tuple[float, float] = (1e-3, 2.0)
    target: str = "violate_lower_5_01"

    def __post_init__(self):
        region = self.region.replace("-", "_")
        target = TARGET_ALIASES.get(self.target, self.target)
        object.__setattr__(self, "region", region)
        object.__setattr__(self, "target", target)
        lo, hi = (float(v) for v in self.value_range)
        object.__setattr__(self, "value_range", (lo, hi))
        problems = []
        if self.n < 2:
            problems.append("n must be at least 2")
        if region not in REGIONS:
            problems.append(f"region must be one of {REGIONS}")
        if target not in TARGETS:
            problems.append(f"target must be one of {TARGETS}")
        if self.samples < 1:
            problems.append("samples must be at least 1")
        if not 0 <= self.seed < 2**64:
            problems.append("seed must be a non-negative 64-bit integer")
        if not (MIN_ELEMENT <= lo < hi <= MAX_ELEMENT):
            problems.append(f"value range needs {MIN_ELEMENT} <= lo < hi <= {MAX_ELEMENT}")
        if problems:
            raise ConfigurationError("; ".join(problems), self.to_dict())

    @property
    def claimed(self) -> bool:
        """True when the target inequality is a proved statement on the sampled region."""
        if self.target == "violate_lower_5_01":
            return self.region == "hypothesis_hold"
        return True

    def to_dict(self) -> Dict[str, Any]:
        return {
            "n": self.n,
            "region": self.region,
            "samples": self.samples,
            "seed": self.seed,
            "value_range": list(self.value_range),
            "target": self.target,
        }


@dataclass(frozen=True)
class SearchFinding:
    tuple: PositiveTuple
    margin: float
    recheck_margin: float
    hypothesis_H: bool
    seed: int
    sample_index: int

    def to_dict(self) -> Dict[str, Any]:
        return {
            "tuple": list(self.tuple.values),
            "margin": self.margin,
            "recheck_margin": self.recheck_margin,
            "hypothesis_H": self.hypothesis_H,
            "seed": self.seed,
            "sample_index": self.sample_index,
        }


@dataclass
class SearchOutcome:
    """Findings plus the region statistics gathered on the way."""

    config: SearchConfig
    findings: List[SearchFinding] = field(default_factory=list)
    candidates: int = 0
    unverified: int = 0
    hypothesis_true: int = 0
    worst_margin: float = math.inf
    worst_index: int = -1

    def to_dict(self) -> Dict[str, Any]:
        return {
            "config": self.config.to_dict(),
            "samples": self.config.samples,
            "findings": [f.to_dict() for f in self.findings],
            "summary": {
                "findings": len(self.findings),
                "candidates": self.candidates,
                "unverified": self.unverified,
                "hypothesis_true": self.hypothesis_true,
                "hypothesis_false": self.config.samples - self.hypothesis_true,
                "worst_margin": None if self.worst_index < 0 else self.worst_margin,
                "worst_index": self.worst_index,
            },
        }


def _draw(cfg: SearchConfig, rng: np.random.Generator, count: int) -> np.ndarray:
    lo, hi = cfg.value_range
    if cfg.region == "hypothesis_fail":
        return hypothesis_fail_tuples(rng, cfg.n, count, lo, hi)
    if cfg.region == "hypothesis_hold":
        return hypothesis_tuples(rng, cfg.n, count, lo, hi)
    return sorted_log_uniform(rng, cfg.n, count, lo, hi)


def batch_margins(target: str, rows: np.ndarray) -> Tuple[np.ndarray, np.ndarray, np.ndarray]:
    """(margin, lhs, rhs) of the target claim per row; a negative margin is a violation."""
    c = batch_cater_C(rows)
    if target == "violate_lower_5_01":
        lower = batch_cater_C_lower(rows)
        return c - lower, lower, c
    if target == "violate_upper_5":
        upper = batch_cater_C_upper(rows)
        return upper - c, c, upper
    bound = 1.0 + (rows.shape[1] - 2) * batch_cyclic_min(rows)
    return c - bound, c, bound


def _search_shard(
    cfg: SearchConfig, shard_id: int, start: int, stop: int, band: Band, dps: int
) -> Dict[str, Any]:
    """One shard: draw, screen in binary64, recheck candidates. Top-level so it pickles."""
    rows = _draw(cfg, shard_rng(cfg.seed, shard_id), stop - start)
    margins, lhs, rhs = batch_margins(cfg.target, rows)
    width = np.maximum(band.abs_tol, band.rel_tol * np.maximum(np.abs(lhs), np.abs(rhs)))
    flags = batch_hypothesis(rows)
    findings, unverified = [], 0
    candidates = np.flatnonzero(margins < -width)
    for index in candidates:
        values = tuple(float(v) for v in rows[index])
        recheck = hp_margin(cfg.target, values, dps)
        if recheck < -width[index]:
            findings.append(
                SearchFinding(
                    tuple=PositiveTuple(values),
                    margin=float(margins[index]),
                    recheck_margin=recheck,
                    hypothesis_H=bool(flags[index]),
                    seed=cfg.seed,
                    sample_index=start + int(index),
                )
            )
        else:
            unverified += 1
            logger.warning(
                "candidate %d did not survive the recheck: margin %r, recheck %r",
                start + int(index), float(margins[index]), recheck,
            )
    worst = int(np.argmin(margins))
    return {
        "findings": findings,
        "candidates": int(len(candidates)),
        "unverified": unverified,
        "hypothesis_true": int(np.count_nonzero(flags)),
        "worst_margin": float(margins[worst]),
        "worst_index": start + worst,
    }


def shard_ranges(samples: int, shard_size: int = SHARD_SIZE) -> List[Tuple[int, int, int]]:
    """(shard_id, start, stop) covering [0, samples); fixed by sample count alone."""
    return [(k, start, min(start + shard_size, samples)) for k, start in enumerate(range(0, samples, shard_size))]


def search_with_stats(
    cfg: SearchConfig,
    band: Optional[Band] = None,
    workers: int = 1,
    dps: int = DEFAULT_DPS,
    on_finding: Optional[Callable[[SearchFinding], None]] = None,
) -> SearchOutcome:
    """
    Run the search and keep the region statistics.

    Findings of a claimed inequality raise ContradictionError as soon as the
    shard holding them has been merged.
    """
    band = band or DEFAULT_BAND
    shards = shard_ranges(cfg.samples)
    outcome = SearchOutcome(config=cfg)
    logger.info(
        "search %s on %s: n=%d, %d samples in %d shards, seed %d",
        cfg.target, cfg.region, cfg.n, cfg.samples, len(shards), cfg.seed,
    )
    args = [(cfg, k, start, stop, band, dps) for k, start, stop in shards]
    if workers > 1 and len(shards) > 1:
        pool = ProcessPoolExecutor(max_workers=min(workers, len(shards)))
        results = pool.map(_search_shard, *zip(*args))
    else:
        pool = None
        results = (_search_shard(*a) for a in args)
    try:
        # pool.map yields in shard order, so merging stays deterministic
        for part in results:
            _absorb(outcome, part, on_finding)
    finally:
        if pool is not None:
            pool.shutdown(cancel_futures=True)
    logger.info(
        "search finished: %d findings, %d candidates, %d unverified",
        len(outcome.findings), outcome.candidates, outcome.unverified,
    )
    return outcome


def _absorb(outcome: SearchOutcome, part: Dict[str, Any], on_finding) -> None:
    cfg = outcome.config
    outcome.candidates += part["candidates"]
    outcome.unverified += part["unverified"]
    outcome.hypothesis_true += part["hypothesis_true"]
    if part["worst_margin"] < outcome.worst_margin:
        outcome.worst_margin, outcome.worst_index = part["worst_margin"], part["worst_index"]
    for finding in sorted(part["findings"], key=lambda f: f.sample_index):
        if cfg.claimed:
            logger.error("finding contradicts a proved inequality: %s", finding.to_dict())
            raise ContradictionError(
                f"{cfg.target} violated at sample {finding.sample_index}",
                context=cfg.to_dict(),
                evidence=finding,
            )
        logger.info("finding at sample %d: margin %r", finding.sample_index, finding.margin)
        outcome.findings.append(finding)
        if on_finding is not None:
            on_finding(finding)


def counterexample_search(
    cfg: SearchConfig,
    band: Optional[Band] = None,
    workers: int = 1,
    dps: int = DEFAULT_DPS,
    on_finding: Optional[Callable[[SearchFinding], None]] = None,
) -> List[SearchFinding]:
    """Verified violations of ``cfg.target`` over ``cfg.samples`` seeded tuples, by sample index."""
    return search_with_stats(cfg, band=band, workers=workers, dps=dps, on_finding=on_finding).findings
