"""
Seeded samplers for tuples, permutations and lemma regions.

Every stream is derived from (seed, shard_id) through numpy's SeedSequence,
so a shard draws the same numbers however the shards are scheduled.
"""
import math
from typing import Tuple

import numpy as np

from caterlab.cyclic_core import E_INV, batch_hypothesis
from caterlab.errors import ConfigurationError

# acceptance rate assumed when sizing batches; a region that stays below it is unreachable
MIN_ACCEPTANCE = 1e-4
# draws with nothing accepted before giving up early
EMPTY_DRAW_LIMIT = 200_000
MAX_BATCH = 262_144


def shard_rng(seed: int, shard_id: int = 0) -> np.random.Generator:
    return np.random.default_rng(np.random.SeedSequence(seed, spawn_key=(shard_id,)))


def log_uniform(rng: np.random.Generator, lo, hi, size=None) -> np.ndarray:
    return np.exp(rng.uniform(np.log(lo), np.log(hi), size=size))


def sorted_log_uniform(rng: np.random.Generator, n: int, count: int, lo: float, hi: float) -> np.ndarray:
    return np.sort(log_uniform(rng, lo, hi, size=(count, n)), axis=1)


def _collect(draw, count: int, n: int, region: str) -> np.ndarray:
    """
    Call ``draw(batch)`` until ``count`` accepted rows exist.

    Batches are sized from the acceptance rate seen so far. The total number
    of draws is bounded by ``count / MIN_ACCEPTANCE``.
    """
    if count <= 0:
        return np.empty((0, n))
    accepted = []
    have = drawn = 0
    budget = max(math.ceil(count / MIN_ACCEPTANCE), EMPTY_DRAW_LIMIT)
    while have < count:
        if drawn >= budget or (have == 0 and drawn >= EMPTY_DRAW_LIMIT):
            raise ConfigurationError(
                f"region {region!r} unreachable within the resample budget",
                {"region": region, "n": n, "requested": count, "accepted": have, "drawn": drawn},
            )
        if not drawn:
            rate = 0.5
        else:
            # with nothing accepted yet the batch grows geometrically
            rate = max(have / drawn if have else 1.0 / (2 * drawn), MIN_ACCEPTANCE)
        batch = math.ceil(1.5 * (count - have) / rate)
        batch = min(max(batch, 16), MAX_BATCH, budget - drawn)
        rows = draw(batch)
        drawn += batch
        if rows.size:
            accepted.append(rows)
            have += len(rows)
    return np.concatenate(accepted)[:count]


def hypothesis_tuples(
    rng: np.random.Generator,
    n: int,
    count: int,
    lo: float = E_INV,
    hi: float = 10.0,
) -> np.ndarray:
    """Sorted log-uniform rows on [lo, hi] that satisfy the hypothesis flag (rejection)."""

    def draw(batch: int) -> np.ndarray:
        rows = sorted_log_uniform(rng, n, batch, lo, hi)
        return rows[batch_hypothesis(rows)]

    return _collect(draw, count, n, "hypothesis_hold")


def hypothesis_fail_tuples(rng: np.random.Generator, n: int, count: int, lo: float, hi: float) -> np.ndarray:
    """
    Sorted rows with a_1^(a_n) < 1/e, drawn by parameterizing the failing constraint.

    a_n is uniform on (max(lo, 1), hi) (or (lo, hi) when hi <= 1), a_1 is
    log-uniform on (lo, exp(-1/a_n)), interior points uniform on (a_1, a_n).
    """
    top_lo = max(lo, 1.0) if hi > 1.0 else lo

    def draw(batch: int) -> np.ndarray:
        last = rng.uniform(top_lo, hi, size=batch)
        ceiling = np.exp(-1.0 / last)
        usable = ceiling > lo
        last, ceiling = last[usable], ceiling[usable]
        if last.size == 0:
            return np.empty((0, n))
        first = log_uniform(rng, lo, ceiling)
        interior = np.sort(rng.uniform(first[:, None], last[:, None], size=(last.size, n - 2)), axis=1)
        rows = np.column_stack([first, interior, last]) if n > 2 else np.column_stack([first, last])
        return rows[~batch_hypothesis(rows)]

    return _collect(draw, count, n, "hypothesis_fail")


def random_permutation(rng: np.random.Generator, n: int) -> Tuple[int, ...]:
    return tuple(int(v) + 1 for v in rng.permutation(n))


def open_unit_pairs(rng: np.random.Generator, count: int) -> np.ndarray:
    """Rows (x, y) with 0 < x < y < 1."""
    pairs = np.sort(rng.uniform(0.0, 1.0, size=(count, 2)), axis=1)
    keep = (pairs[:, 0] > 0.0) & (pairs[:, 0] < pairs[:, 1])
    return pairs[keep]


def phi_nested_points(rng: np.random.Generator, count: int) -> np.ndarray:
    """Rows (x, y, z) with 0 < x <= z <= y < 1: three sorted uniforms."""
    u = np.sort(rng.uniform(0.0, 1.0, size=(count, 3)), axis=1)
    u = u[u[:, 0] > 0.0]
    return np.column_stack([u[:, 0], u[:, 2], u[:, 1]])


def phi_above_one_points(rng: np.random.Generator, count: int, y_max: float = 10.0) -> np.ndarray:
    """Rows (x, y, z) with y >= 1 and x, z uniform on (0, y]."""
    y = rng.uniform(1.0, y_max, size=count)
    x = y * (1.0 - rng.uniform(0.0, 1.0, size=count))
    z = y * (1.0 - rng.uniform(0.0, 1.0, size=count))
    return np.column_stack([x, y, z])
