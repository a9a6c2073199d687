"""
Rearrangement machinery behind the lower comparison C^* <= C.

Under the hypothesis flag (sorted, a_1^(a_n) >= 1/e) exchanging two
exponents that are in increasing order never increases
F(j) = sum_i a_i^(a_{j_i}). Repeating the exchange to place n, n-1, ..., 1
in positions 1, 2, ..., n drives any assignment down to the reverse
permutation, which gives C^*; the cyclic shift 23...n1 gives C.
"""
import logging
import math
from concurrent.futures import Executor, ProcessPoolExecutor
from contextlib import nullcontext
from dataclasses import dataclass, field
from typing import Any, Dict, List, Optional, Sequence, Tuple

import numpy as np

from caterlab.config import DEFAULT_BAND, Band
from caterlab.cyclic_core import (
    Permutation,
    PositiveTuple,
    cater_C,
    cater_C_lower,
    cater_C_upper,
    perm_functional,
    power,
)
from caterlab.errors import ConfigurationError, ContradictionError, DomainError, ResourceError
from caterlab.reports import BatteryResult, EvalReport, enforce_battery, make_report, require, tally
from caterlab.tools.permutations import iter_lexicographic, split_ranges, unrank
from caterlab.tools.sampling import hypothesis_tuples, random_permutation, shard_rng

logger = logging.getLogger(__name__)

DEFAULT_N_CAP = 8
MAX_N_CAP = 9

# below this many permutations a process pool costs more than it saves
PARALLEL_SCAN_THRESHOLD = 5040


@dataclass(frozen=True)
class SwapStep:
    position_low: int
    position_high: int
    perm_before: Permutation
    perm_after: Permutation
    f_before: float
    f_after: float

    def to_dict(self) -> Dict[str, Any]:
        return {
            "position_low": self.position_low,
            "position_high": self.position_high,
            "perm_before": list(self.perm_before.map),
            "perm_after": list(self.perm_after.map),
            "f_before": self.f_before,
            "f_after": self.f_after,
        }


@dataclass(frozen=True)
class SwapChain:
    tuple: PositiveTuple
    start_perm: Permutation
    end_perm: Permutation
    steps: List[SwapStep] = field(default_factory=list)

    @property
    def f_values(self) -> List[float]:
        if not self.steps:
            return [perm_functional(self.tuple, self.start_perm)]
        return [self.steps[0].f_before] + [s.f_after for s in self.steps]

    def to_dict(self) -> Dict[str, Any]:
        return {
            "tuple": list(self.tuple.values),
            "start_perm": list(self.start_perm.map),
            "end_perm": list(self.end_perm.map),
            "steps": [s.to_dict() for s in self.steps],
            "f_values": self.f_values,
        }


@dataclass(frozen=True)
class PermScan:
    tuple: PositiveTuple
    min_perm: Permutation
    min_value: float
    max_perm: Permutation
    max_value: float
    count: int

    def to_dict(self) -> Dict[str, Any]:
        return {
            "tuple": list(self.tuple.values),
            "min_perm": list(self.min_perm.map),
            "min_value": self.min_value,
            "max_perm": list(self.max_perm.map),
            "max_value": self.max_value,
            "count": self.count,
        }


def _require_hypothesis(a: PositiveTuple, what: str) -> None:
    if not a.hypothesis_H:
        raise DomainError(
            f"{what} is only claimed for sorted tuples with a_1^(a_n) >= 1/e",
            {"values": list(a.values), "sorted_ascending": a.sorted_ascending},
        )


def swap_inequality_check(
    a: PositiveTuple,
    i: int,
    k: int,
    j: Permutation,
    band: Optional[Band] = None,
    enforce: bool = True,
) -> EvalReport:
    """a_i^(a_{j_i}) + a_k^(a_{j_k}) >= a_i^(a_{j_k}) + a_k^(a_{j_i}) for i < k, j_i < j_k."""
    _require_hypothesis(a, "the pairwise swap inequality")
    if len(j) != a.n:
        raise DomainError("permutation length does not match the tuple", {"n": a.n, "perm": list(j.map)})
    if not (1 <= i < k <= a.n and j[i] < j[k]):
        raise DomainError(
            "swap positions need 1 <= i < k <= n and j_i < j_k",
            {"i": i, "k": k, "perm": list(j.map)},
        )
    x_i, x_k = a.values[i - 1], a.values[k - 1]
    e_i, e_k = a.values[j[i] - 1], a.values[j[k] - 1]
    lhs = power(x_i, e_i) + power(x_k, e_k)
    rhs = power(x_i, e_k) + power(x_k, e_i)
    report = make_report(
        "swap",
        lhs,
        "ge",
        rhs,
        inputs={"values": list(a.values), "i": i, "k": k, "perm": list(j.map)},
        band=band,
        expected_equality=(x_i == x_k or e_i == e_k),
    )
    return require(report, {"values": list(a.values), "i": i, "k": k}) if enforce else report


def sort_to_reverse(a: PositiveTuple, start: Permutation, band: Optional[Band] = None) -> SwapChain:
    """
    Place exponent n at position 1, then n-1 at position 2, and so on.

    Each exchange is one instance of the pairwise swap inequality, so F may
    only decrease along the chain; a step that increases F beyond the band
    raises ContradictionError carrying that step.
    """
    _require_hypothesis(a, "the swap chain")
    if len(start) != a.n:
        raise DomainError("permutation length does not match the tuple", {"n": a.n, "perm": list(start.map)})
    band = band or DEFAULT_BAND
    current = start
    f_current = perm_functional(a, current)
    steps = []
    for m in range(a.n):
        target = a.n - m
        k = current.position_of(target)
        if k == m + 1:
            continue
        after = current.swapped(m + 1, k)
        f_after = perm_functional(a, after)
        step = SwapStep(m + 1, k, current, after, f_current, f_after)
        if f_after > f_current + band.width(f_current, f_after):
            logger.error("non-monotone swap step %s", step.to_dict())
            raise ContradictionError(
                f"swap at positions ({m + 1}, {k}) increased F from {f_current!r} to {f_after!r}",
                context={"values": list(a.values), "start": list(start.map)},
                evidence=step,
            )
        logger.debug("swap (%d, %d): F %r -> %r", m + 1, k, f_current, f_after)
        steps.append(step)
        current, f_current = after, f_after
    return SwapChain(tuple=a, start_perm=start, end_perm=current, steps=steps)


def _power_matrix(values: Sequence[float]) -> List[List[float]]:
    return [[power(x, e) for e in values] for x in values]


def _scan_range(values: Tuple[float, ...], start: int, stop: int) -> Tuple[float, int, float, int, int]:
    """Best (value, rank) pairs over one contiguous block of the lexicographic order."""
    matrix = _power_matrix(values)
    rows = range(len(values))
    fsum = math.fsum
    best_min = (math.inf, -1)
    best_max = (-math.inf, -1)
    count = 0
    for offset, perm in enumerate(iter_lexicographic(len(values), start, stop)):
        value = fsum(matrix[i][perm[i] - 1] for i in rows)
        # strict comparisons keep the earliest rank on ties
        if value < best_min[0]:
            best_min = (value, start + offset)
        if value > best_max[0]:
            best_max = (value, start + offset)
        count += 1
    return best_min[0], best_min[1], best_max[0], best_max[1], count


def _merge(parts: List[Tuple[float, int, float, int, int]]) -> Tuple[float, int, float, int, int]:
    min_value, min_rank = min((p[0], p[1]) for p in parts)
    max_value, neg_rank = max((p[2], -p[3]) for p in parts)
    return min_value, min_rank, max_value, -neg_rank, sum(p[4] for p in parts)


def brute_force_scan(
    a: PositiveTuple,
    n_cap: int = DEFAULT_N_CAP,
    band: Optional[Band] = None,
    workers: int = 1,
    pool: Optional[Executor] = None,
) -> PermScan:
    """
    Enumerate all n! exponent assignments; argmin/argmax ties go to the lexicographically smallest.

    Large scans are split over ``workers`` processes, on ``pool`` when one is
    given and on a pool of their own otherwise.
    """
    if n_cap > MAX_N_CAP:
        raise ConfigurationError(f"permutation scans are capped at n = {MAX_N_CAP}", {"n_cap": n_cap})
    if a.n > n_cap:
        raise ResourceError(
            f"n = {a.n} exceeds the scan cap {n_cap} ({math.factorial(a.n)} permutations)",
            {"n": a.n, "n_cap": n_cap},
        )
    band = band or DEFAULT_BAND
    total = math.factorial(a.n)
    ranges = split_ranges(total, workers if total >= PARALLEL_SCAN_THRESHOLD else 1)
    if len(ranges) > 1 and pool is not None:
        parts = list(pool.map(_scan_range, [a.values] * len(ranges), *zip(*ranges)))
    elif len(ranges) > 1:
        with ProcessPoolExecutor(max_workers=len(ranges)) as own_pool:
            parts = list(own_pool.map(_scan_range, [a.values] * len(ranges), *zip(*ranges)))
    else:
        parts = [_scan_range(a.values, 0, total)]
    min_value, min_rank, max_value, max_rank, count = _merge(parts)

    scan = PermScan(
        tuple=a,
        min_perm=Permutation(tuple(unrank(a.n, min_rank))),
        min_value=min_value,
        max_perm=Permutation(tuple(unrank(a.n, max_rank))),
        max_value=max_value,
        count=count,
    )
    if a.hypothesis_H:
        lower, upper = cater_C_lower(a), cater_C_upper(a)
        if abs(scan.min_value - lower) > band.width(scan.min_value, lower) or abs(
            scan.max_value - upper
        ) > band.width(scan.max_value, upper):
            logger.error("scan extremes off the comparators: %s", scan.to_dict())
            raise ContradictionError(
                "permutation extremes do not sit at the reverse/identity assignments",
                context={"values": list(a.values), "C_lower": lower, "C_upper": upper},
                evidence=scan,
            )
    return scan


def verify_chain(a: PositiveTuple, band: Optional[Band] = None, enforce: bool = True) -> Tuple[EvalReport, EvalReport]:
    """
    Reports on C^*(a) <= C(a) and C(a) <= C_*(a) for a sorted tuple.

    The lower comparison is only claimed under the hypothesis flag; outside
    it the report is informational and never raises.
    """
    if not a.sorted_ascending:
        raise DomainError("both comparisons need a sorted tuple", {"values": list(a.values)})
    c, lower, upper = cater_C(a), cater_C_lower(a), cater_C_upper(a)
    constant = a.is_constant()
    inputs = {"values": list(a.values)}
    lower_report = make_report(
        "C_lower <= C",
        lower,
        "le",
        c,
        inputs,
        band=band,
        proved=a.hypothesis_H,
        expected_equality=(a.n == 2 or constant),
        note=None if a.hypothesis_H else "hypothesis not satisfied - informational only",
    )
    upper_report = make_report("C <= C_upper", c, "le", upper, inputs, band=band, expected_equality=constant)
    if enforce:
        require(lower_report, inputs)
        require(upper_report, inputs)
    return lower_report, upper_report


# ---------------------------------------------------------------------------
# sampled batteries


def exhaustive_chain_battery(n: int, tuples: int, seed: int, band: Optional[Band] = None, workers: int = 1) -> BatteryResult:
    """Exhaustive scans on seeded hypothesis tuples: min at reverse, max at identity."""
    if tuples < 1:
        raise DomainError("the exhaustive chain battery needs at least one tuple", {"tuples": tuples})
    rows = hypothesis_tuples(shard_rng(seed, n), n, tuples)
    margins, lhs, rhs = [], [], []
    parallel = workers > 1 and math.factorial(n) >= PARALLEL_SCAN_THRESHOLD
    # one pool serves every tuple of the battery
    with ProcessPoolExecutor(max_workers=workers) if parallel else nullcontext() as pool:
        for row in rows:
            a = PositiveTuple(tuple(row))
            scan = brute_force_scan(a, n_cap=max(n, DEFAULT_N_CAP), band=band, workers=workers, pool=pool)
            lower, upper = cater_C_lower(a), cater_C_upper(a)
            # zero when both extremes sit exactly on the comparators
            margins.append(-max(abs(scan.min_value - lower), abs(scan.max_value - upper)))
            lhs.append(scan.max_value)
            rhs.append(upper)
    return tally(f"chain_exhaustive_n{n}", np.asarray(margins), np.asarray(lhs), np.asarray(rhs), rows, seed, band)


def chain_property_battery(
    n: int,
    tuples: int,
    perms_per_tuple: int,
    seed: int,
    band: Optional[Band] = None,
    enforce: bool = True,
) -> BatteryResult:
    """Random permutations for larger n: C^* - band <= F(j) <= C_* + band."""
    rng = shard_rng(seed, n)
    rows = hypothesis_tuples(rng, n, tuples)
    margins, lhs, rhs, where = [], [], [], []
    index = np.arange(n)
    for row in rows:
        matrix = np.exp(row[None, :] * np.log(row)[:, None])
        perms = rng.permuted(np.tile(index, (perms_per_tuple, 1)), axis=1)
        values = matrix[index, perms].sum(axis=1)
        lower = matrix[index, index[::-1]].sum()
        upper = matrix[index, index].sum()
        # the tighter side of the two-sided claim
        margin = np.minimum(values - lower, upper - values)
        margins.append(margin)
        lhs.append(values)
        rhs.append(np.where(values - lower < upper - values, lower, upper))
        where.append(np.repeat(row[None, :], perms_per_tuple, axis=0))
    result = tally(
        f"chain_sampled_n{n}",
        np.concatenate(margins),
        np.concatenate(lhs),
        np.concatenate(rhs),
        np.concatenate(where),
        seed,
        band,
    )
    return enforce_battery(result) if enforce else result


def swap_inequality_battery(samples: int, seed: int, n_range: Tuple[int, int] = (2, 10), band: Optional[Band] = None) -> BatteryResult:
    """Random (a, i, k, j) in the hypothesis region, vectorized per n."""
    rng = shard_rng(seed)
    margins, lhs_all, rhs_all, rows_all, expected = [], [], [], [], []
    sizes = rng.integers(n_range[0], n_range[1] + 1, size=samples)
    for n in np.unique(sizes):
        count = int(np.count_nonzero(sizes == n))
        rows = hypothesis_tuples(rng, int(n), count)
        # two distinct positions and two distinct exponent indices, each ordered
        pos = np.sort(np.argsort(rng.random((count, int(n))), axis=1)[:, :2], axis=1)
        exp = np.sort(np.argsort(rng.random((count, int(n))), axis=1)[:, :2], axis=1)
        r = np.arange(count)
        x_i, x_k = rows[r, pos[:, 0]], rows[r, pos[:, 1]]
        e_i, e_k = rows[r, exp[:, 0]], rows[r, exp[:, 1]]
        lhs = np.exp(e_i * np.log(x_i)) + np.exp(e_k * np.log(x_k))
        rhs = np.exp(e_k * np.log(x_i)) + np.exp(e_i * np.log(x_k))
        margins.append(lhs - rhs)
        lhs_all.append(lhs)
        rhs_all.append(rhs)
        rows_all.append(np.column_stack([x_i, x_k, e_i, e_k]))
        expected.append((x_i == x_k) | (e_i == e_k))
    result = tally(
        "swap_inequality",
        np.concatenate(margins),
        np.concatenate(lhs_all),
        np.concatenate(rhs_all),
        np.concatenate(rows_all),
        seed,
        band,
        expected_equality=np.concatenate(expected),
    )
    return enforce_battery(result)


def swap_chain_battery(samples: int, seed: int, n_range: Tuple[int, int] = (3, 10), band: Optional[Band] = None) -> BatteryResult:
    """Random hypothesis tuples and start assignments; every chain must end at the reverse."""
    rng = shard_rng(seed)
    sizes = rng.integers(n_range[0], n_range[1] + 1, size=samples)
    worst_margin, worst_inputs, steps = math.inf, [], 0
    for n in sizes:
        row = hypothesis_tuples(rng, int(n), 1)[0]
        a = PositiveTuple(tuple(row))
        chain = sort_to_reverse(a, Permutation(random_permutation(rng, int(n))), band=band)
        if chain.end_perm != Permutation.reverse(int(n)):
            raise ContradictionError("swap chain did not terminate at the reverse assignment", evidence=chain)
        for step in chain.steps:
            steps += 1
            if step.f_before - step.f_after < worst_margin:
                worst_margin, worst_inputs = step.f_before - step.f_after, list(a.values)
    return BatteryResult(
        name="swap_chain",
        samples=int(samples),
        seed=seed,
        holds=steps,
        equality=0,
        violated=0,
        worst_margin=0.0 if worst_margin == math.inf else worst_margin,
        worst_inputs=worst_inputs,
    )
