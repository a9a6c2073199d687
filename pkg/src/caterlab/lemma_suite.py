"""
Scalar auxiliary functions and lemma-level inequalities behind C <= C_*.

The upper comparison is proved by induction on n: the gap
C(a_1..a_{n+1}) - C_*(a_1..a_{n+1}) equals the n-variable gap minus
phi(a_1, a_{n+1}, a_n), and phi >= 0 on the regions covered below. The
three-variable inequality for phi is in turn reduced to the two-variable
F(x, y) > 0 and finally to its endpoint values.
"""
import logging
import math
from dataclasses import dataclass
from typing import Callable, Dict, List, Optional, Sequence, Tuple

import numpy as np

from caterlab.config import DEFAULT_BAND, IDENTITY_BAND, Band
from caterlab.cyclic_core import (
    E_INV,
    PositiveTuple,
    batch_cater_C,
    batch_cater_C_lower,
    batch_cater_C_upper,
    batch_cyclic_min,
    batch_hypothesis,
    cater_C,
    cater_C_lower,
    cater_C_upper,
    cyclic_terms,
    power,
)
from caterlab.errors import ContradictionError, DomainError
from caterlab.reports import BatteryResult, EvalReport, enforce_battery, make_report, require, tally
from caterlab.tools.sampling import (
    hypothesis_tuples,
    log_uniform,
    open_unit_pairs,
    phi_above_one_points,
    phi_nested_points,
    shard_rng,
    sorted_log_uniform,
)

logger = logging.getLogger(__name__)

# inf_{t>0} t^t, attained at t = 1/e
SELF_POWER_MIN = math.exp(-E_INV)

DELTA_SEQUENCE = (1e-2, 1e-4, 1e-6, 1e-8)


@dataclass(frozen=True)
class OmegaPoint:
    """(x, y, z) in (0, inf)^3 with max(x, z) <= y."""

    x: float
    y: float
    z: float

    def __post_init__(self):
        if not (self.x > 0 and self.y > 0 and self.z > 0):
            raise DomainError("Omega points are strictly positive", self._context())
        if max(self.x, self.z) > self.y:
            raise DomainError("Omega needs max(x, z) <= y", self._context())

    def _context(self) -> Dict[str, float]:
        return {"x": self.x, "y": self.y, "z": self.z}

    @property
    def region(self) -> Optional[str]:
        """Which phi lemma covers the point, or None if neither does."""
        if self.y >= 1.0:
            return "y_at_least_one"
        if self.x <= self.z <= self.y < 1.0:
            return "nested_below_one"
        return None


def aux_F(x: float, y: float) -> float:
    """F(x, y) = (y - x) log x + log y - log x."""
    if not (x > 0 and y > 0):
        raise DomainError("F is defined for positive arguments", {"x": x, "y": y})
    log_x = math.log(x)
    return (y - x) * log_x + math.log(y) - log_x


def lemma_301_check(x: float, y: float, band: Optional[Band] = None, enforce: bool = True) -> EvalReport:
    if not (0.0 < x < y < 1.0):
        raise DomainError("F(x, y) > 0 is claimed only for 0 < x < y < 1", {"x": x, "y": y})
    report = make_report("F(x,y) > 0", aux_F(x, y), "gt", 0.0, {"x": x, "y": y}, band=band)
    return require(report) if enforce else report


def endpoint_values_check(x: float, band: Optional[Band] = None) -> Tuple[EvalReport, EvalReport]:
    """F(x, x) = 0 and F(x, 1) = -x log x, the endpoint values of the one-variable reduction."""
    if not 0.0 < x < 1.0:
        raise DomainError("endpoint values are taken for 0 < x < 1", {"x": x})
    inputs = {"x": x}
    diagonal = make_report("F(x,x) = 0", aux_F(x, x), "ge", 0.0, inputs, band=band, expected_equality=True)
    right = make_report(
        "F(x,1) = -x log x", aux_F(x, 1.0), "ge", -x * math.log(x), inputs, band=band, expected_equality=True
    )
    return require(diagonal), require(right)


def phi(p: OmegaPoint) -> float:
    """phi(x, y, z) = y^y + z^x - (z^y + y^x)."""
    return power(p.y, p.y) + power(p.z, p.x) - (power(p.z, p.y) + power(p.y, p.x))


def phi_nonneg_check(p: OmegaPoint, band: Optional[Band] = None, enforce: bool = True) -> EvalReport:
    region = p.region
    if region is None:
        raise DomainError(
            "phi >= 0 is only claimed for y >= 1 or 0 < x <= z <= y < 1",
            {"x": p.x, "y": p.y, "z": p.z, "tag": "outside_claimed_region"},
        )
    if region == "y_at_least_one":
        expected = p.y == p.z or p.y == p.x
    else:
        expected = p.y == p.z
    lhs = power(p.y, p.y) + power(p.z, p.x)
    rhs = power(p.z, p.y) + power(p.y, p.x)
    report = make_report(
        f"phi >= 0 [{region}]",
        lhs,
        "ge",
        rhs,
        {"x": p.x, "y": p.y, "z": p.z},
        band=band,
        expected_equality=expected,
    )
    return require(report) if enforce else report


def two_var_check(a: float, b: float, band: Optional[Band] = None, enforce: bool = True) -> Tuple[EvalReport, EvalReport]:
    """(i) a^a + b^b >= a^b + b^a, equality iff a == b; (ii) a^b + b^a > 1."""
    pair = PositiveTuple.of(a, b)
    inputs = {"a": pair.values[0], "b": pair.values[1]}
    upper = make_report(
        "a^a + b^b >= a^b + b^a",
        cater_C_upper(pair),
        "ge",
        cater_C(pair),
        inputs,
        band=band,
        expected_equality=(a == b),
    )
    above_one = make_report("a^b + b^a > 1", cater_C(pair), "gt", 1.0, inputs, band=band)
    if enforce:
        require(upper)
        require(above_one)
    return upper, above_one


def cater_inequality_check(a: PositiveTuple, band: Optional[Band] = None, enforce: bool = True) -> EvalReport:
    """C(a) > 1 + (n - 2) min_i a_i^(a_{i+1}); unconditional on (0, inf)^n."""
    terms = cyclic_terms(a)
    bound = 1.0 + (a.n - 2) * min(terms)
    report = make_report("C > 1 + (n-2) min term", math.fsum(terms), "gt", bound, {"values": list(a.values)}, band=band)
    return require(report) if enforce else report


def induction_identity_check(a: PositiveTuple, band: Optional[Band] = None, enforce: bool = True) -> EvalReport:
    """
    C - C_* on a_1..a_{n+1} against [C - C_* on a_1..a_n] - phi(a_1, a_{n+1}, a_n).

    An exact identity; the band is relative to the largest sum involved.
    """
    if not a.sorted_ascending:
        raise DomainError("the induction step is stated for sorted tuples", {"values": list(a.values)})
    if a.n < 3:
        raise DomainError("the induction step needs n + 1 >= 3", {"values": list(a.values)})
    band = band or IDENTITY_BAND
    head = PositiveTuple(a.values[:-1])
    c_full, u_full = cater_C(a), cater_C_upper(a)
    lhs = c_full - u_full
    rhs = (cater_C(head) - cater_C_upper(head)) - phi(OmegaPoint(a.values[0], a.values[-1], a.values[-2]))
    report = make_report(
        "dimension reduction identity",
        lhs,
        "ge",
        rhs,
        {"values": list(a.values)},
        band=band,
        expected_equality=True,
        scale=max(c_full, u_full),
    )
    return require(report) if enforce else report


def infimum_limit(m: int, parity: str) -> float:
    if parity == "even":
        return float(m)
    if parity == "odd":
        return m + SELF_POWER_MIN
    raise DomainError("parity is 'even' or 'odd'", {"parity": parity})


def infimum_construction(m: int, parity: str, delta: float) -> float:
    """
    C^* of the delta-approximant of the infimum.

    even: (delta x m, 1 x m); odd: (delta x m, 1/e, 1 x m). As delta -> 0+
    the value decreases to m, respectively m + e^(-1/e).
    """
    if not 0.0 < delta <= 0.1:
        raise DomainError("delta must lie in (0, 0.1]", {"delta": delta})
    if m < 1:
        raise DomainError("m must be a positive integer", {"m": m})
    infimum_limit(m, parity)
    middle = (E_INV,) if parity == "odd" else ()
    return cater_C_lower(PositiveTuple((delta,) * m + middle + (1.0,) * m))


def infimum_convergence(m: int, parity: str, deltas: Sequence[float] = DELTA_SEQUENCE) -> Dict[str, object]:
    """Values along a shrinking delta sequence; each must exceed the limit and the gaps must shrink."""
    limit = infimum_limit(m, parity)
    values = [infimum_construction(m, parity, d) for d in deltas]
    gaps = [v - limit for v in values]
    monotone = all(g > 0 for g in gaps) and all(later < earlier for earlier, later in zip(gaps, gaps[1:]))
    if not all(g > 0 for g in gaps):
        raise ContradictionError(
            "a delta-approximant fell below the stated infimum",
            context={"m": m, "parity": parity, "deltas": list(deltas), "values": values},
        )
    if not monotone:
        logger.warning("infimum approximants for m=%d (%s) are not monotone: %s", m, parity, gaps)
    return {"m": m, "parity": parity, "limit": limit, "deltas": list(deltas), "values": values, "gaps": gaps, "monotone": monotone}


def pairing_identity_check(a: PositiveTuple, band: Optional[Band] = None) -> EvalReport:
    """C^*(a) = 1/2 sum_i C(a_i, a_{n+1-i}), which yields C^* > n/2 from the two-variable bound."""
    v = a.values
    halves = math.fsum(cater_C(PositiveTuple.of(v[i], v[-1 - i])) for i in range(a.n)) / 2.0
    report = make_report(
        "pairing identity", cater_C_lower(a), "ge", halves, {"values": list(v)}, band=band or IDENTITY_BAND, expected_equality=True
    )
    return require(report)


def lower_half_bound_check(a: PositiveTuple, band: Optional[Band] = None, enforce: bool = True) -> EvalReport:
    report = make_report("C_lower > n/2", cater_C_lower(a), "gt", a.n / 2.0, {"values": list(a.values)}, band=band)
    return require(report) if enforce else report


def self_power_minimum(grid: int = 100_001, band: Optional[Band] = None) -> Dict[str, float]:
    """t^t is minimal at t = 1/e with value e^(-1/e); checked against a grid on (0, 4]."""
    band = band or DEFAULT_BAND
    t = np.linspace(4.0 / grid, 4.0, grid)
    sampled = np.exp(t * np.log(t))
    lowest = float(sampled.min())
    if lowest < SELF_POWER_MIN - band.width(lowest, SELF_POWER_MIN):
        raise ContradictionError("t^t dropped below e^(-1/e)", context={"grid_min": lowest})
    return {
        "argmin": E_INV,
        "value": SELF_POWER_MIN,
        "pair_value": 2.0 * SELF_POWER_MIN,
        "grid_min": lowest,
        "grid_argmin": float(t[int(sampled.argmin())]),
    }


# ---------------------------------------------------------------------------
# property batteries; each draws from its own seeded stream


def _battery_lemma_301(rng, samples, seed, band):
    pairs = open_unit_pairs(rng, samples)
    x, y = pairs[:, 0], pairs[:, 1]
    f = (y - x) * np.log(x) + np.log(y) - np.log(x)
    return tally("lemma_301", f, f, np.zeros_like(f), pairs, seed, band)


def _phi_batch(points: np.ndarray) -> Tuple[np.ndarray, np.ndarray]:
    x, y, z = points[:, 0], points[:, 1], points[:, 2]
    lhs = np.exp(y * np.log(y)) + np.exp(x * np.log(z))
    rhs = np.exp(y * np.log(z)) + np.exp(x * np.log(y))
    return lhs, rhs


def _battery_phi_above_one(rng, samples, seed, band):
    points = phi_above_one_points(rng, samples)
    lhs, rhs = _phi_batch(points)
    expected = (points[:, 1] == points[:, 2]) | (points[:, 1] == points[:, 0])
    return tally("phi_above_one", lhs - rhs, lhs, rhs, points, seed, band, expected_equality=expected)


def _battery_phi_nested(rng, samples, seed, band):
    points = phi_nested_points(rng, samples)
    lhs, rhs = _phi_batch(points)
    expected = points[:, 1] == points[:, 2]
    return tally("phi_nested", lhs - rhs, lhs, rhs, points, seed, band, expected_equality=expected)


def _battery_two_var(rng, samples, seed, band):
    pairs = log_uniform(rng, 1e-3, 10.0, size=(samples, 2))
    upper, c = batch_cater_C_upper(pairs), batch_cater_C(pairs)
    # the margin is O((a - b)^2), so pairs near the diagonal fall inside the band from
    # rounding alone; those count as equality notes, only missed predicted equalities fail
    return tally("two_var", upper - c, upper, c, pairs, seed, band, expected_equality=pairs[:, 0] == pairs[:, 1])


def _battery_two_var_sum(rng, samples, seed, band):
    pairs = log_uniform(rng, 1e-3, 10.0, size=(samples, 2))
    c = batch_cater_C(pairs)
    return tally("two_var_sum", c - 1.0, c, np.ones_like(c), pairs, seed, band)


def _by_size(rng, samples: int, sizes: Tuple[int, int], draw: Callable[[int, int], np.ndarray], evaluate) -> List[tuple]:
    """Split ``samples`` over n drawn uniformly from ``sizes`` and evaluate each group."""
    counts = np.bincount(rng.integers(sizes[0], sizes[1] + 1, size=samples), minlength=sizes[1] + 1)
    out = []
    for n in range(sizes[0], sizes[1] + 1):
        if counts[n]:
            rows = draw(n, int(counts[n]))
            out.append(evaluate(rows))
    return out


def _merge_groups(name, groups, seed, band, with_expected=False, with_scale=False):
    margins = np.concatenate([g[0] for g in groups])
    lhs = np.concatenate([g[1] for g in groups])
    rhs = np.concatenate([g[2] for g in groups])
    # rows differ in length between groups; keep them as padded float rows
    width = max(g[3].shape[1] for g in groups)
    rows = np.concatenate([np.pad(g[3], ((0, 0), (0, width - g[3].shape[1])), constant_values=np.nan) for g in groups])
    expected = np.concatenate([g[4] for g in groups]) if with_expected else None
    scale = np.concatenate([g[5] for g in groups]) if with_scale else None
    return tally(name, margins, lhs, rhs, rows, seed, band, expected_equality=expected, scale=scale)


def _battery_cater_2(rng, samples, seed, band):
    def draw(n, count):
        return log_uniform(rng, 1e-3, 10.0, size=(count, n))

    def evaluate(rows):
        c = batch_cater_C(rows)
        bound = 1.0 + (rows.shape[1] - 2) * batch_cyclic_min(rows)
        return c - bound, c, bound, rows

    return _merge_groups("cater_2", _by_size(rng, samples, (2, 10), draw, evaluate), seed, band)


def _battery_lower_half(rng, samples, seed, band):
    def draw(n, count):
        return log_uniform(rng, 1e-3, 10.0, size=(count, n))

    def evaluate(rows):
        lower = batch_cater_C_lower(rows)
        half = np.full_like(lower, rows.shape[1] / 2.0)
        return lower - half, lower, half, rows

    return _merge_groups("lower_half_bound", _by_size(rng, samples, (2, 10), draw, evaluate), seed, band)


def _battery_induction(rng, samples, seed, band):
    def draw(n, count):
        return sorted_log_uniform(rng, n, count, 1e-3, 10.0)

    def evaluate(rows):
        c, u = batch_cater_C(rows), batch_cater_C_upper(rows)
        head = rows[:, :-1]
        x, y, z = rows[:, 0], rows[:, -1], rows[:, -2]
        lhs_phi, rhs_phi = _phi_batch(np.column_stack([x, y, z]))
        left = c - u
        right = (batch_cater_C(head) - batch_cater_C_upper(head)) - (lhs_phi - rhs_phi)
        expected = np.ones(len(rows), dtype=bool)
        return left - right, left, right, rows, expected, np.maximum(c, u)

    groups = _by_size(rng, samples, (3, 20), draw, evaluate)
    return _merge_groups("induction_identity", groups, seed, band or IDENTITY_BAND, with_expected=True, with_scale=True)


def _battery_chain_upper(rng, samples, seed, band):
    def draw(n, count):
        return sorted_log_uniform(rng, n, count, 1e-3, 10.0)

    def evaluate(rows):
        c, u = batch_cater_C(rows), batch_cater_C_upper(rows)
        constant = np.all(rows == rows[:, :1], axis=1)
        return u - c, c, u, rows, constant

    return _merge_groups("chain_upper", _by_size(rng, samples, (2, 12), draw, evaluate), seed, band, with_expected=True)


def _battery_chain_lower(rng, samples, seed, band):
    def draw(n, count):
        return hypothesis_tuples(rng, n, count)

    def evaluate(rows):
        c, lower = batch_cater_C(rows), batch_cater_C_lower(rows)
        expected = np.full(len(rows), rows.shape[1] == 2) | np.all(rows == rows[:, :1], axis=1)
        return c - lower, lower, c, rows, expected

    return _merge_groups("chain_lower", _by_size(rng, samples, (2, 12), draw, evaluate), seed, band, with_expected=True)


# name -> (stream id, battery); stream ids are fixed so a seed always reproduces a battery
BATTERIES: Dict[str, Tuple[int, Callable]] = {
    "lemma_301": (1, _battery_lemma_301),
    "phi_above_one": (2, _battery_phi_above_one),
    "phi_nested": (3, _battery_phi_nested),
    "two_var": (4, _battery_two_var),
    "two_var_sum": (5, _battery_two_var_sum),
    "cater_2": (6, _battery_cater_2),
    "lower_half_bound": (7, _battery_lower_half),
    "induction_identity": (8, _battery_induction),
    "chain_upper": (9, _battery_chain_upper),
    "chain_lower": (10, _battery_chain_lower),
}


def run_battery(name: str, samples: int, seed: int, band: Optional[Band] = None, enforce: bool = True) -> BatteryResult:
    if name not in BATTERIES:
        raise DomainError(f"unknown battery {name!r}", {"known": sorted(BATTERIES)})
    if samples < 1:
        raise DomainError("a battery needs at least one sample", {"samples": samples})
    stream, battery = BATTERIES[name]
    result = battery(shard_rng(seed, stream), samples, seed, band)
    logger.info(
        "battery %s: %d samples, %d holds, %d equality, %d violated",
        name, result.samples, result.holds, result.equality, result.violated,
    )
    return enforce_battery(result) if enforce else result
