"""
Exact-definition evaluation of the tuple-level cyclic functions.

C(a)   = sum_i a_i^(a_{i+1})        (cyclic, a_{n+1} = a_1)
C_*(a) = sum_i a_i^(a_i)            (upper comparator)
C^*(a) = sum_i a_i^(a_{n+1-i})      (lower comparator)
F(a,j) = sum_i a_i^(a_{j_i})        (exponent assignment by a permutation j)

Powers are evaluated as exp(y * log x) in binary64 and summed with
math.fsum, which is correctly rounded and therefore independent of the
order of the terms: C is exactly invariant under rotation of the tuple.
Index arguments are 1-based throughout.
"""
import math
from dataclasses import dataclass, field
from typing import Any, Callable, Dict, Iterable, List, Tuple

import numpy as np

from caterlab.errors import DomainError, NonFiniteResultError

E_INV = math.exp(-1.0)

# construction guardrails: keep exp/log in a safe range
MIN_ELEMENT = 1e-300
MAX_ELEMENT = 1e6


def power(x: float, y: float) -> float:
    try:
        value = math.exp(y * math.log(x))
    except OverflowError:
        raise NonFiniteResultError(f"{x!r}**{y!r} overflows binary64", {"base": x, "exponent": y}) from None
    return value


def cyc_index(k: int, n: int) -> int:
    """Return the unique i in 1..n with k = i (mod n)."""
    if n < 2:
        raise DomainError("cyclic index needs n >= 2", {"k": k, "n": n})
    return (k - 1) % n + 1


@dataclass(frozen=True)
class PositiveTuple:
    """Ordered tuple of strictly positive reals with cached order/hypothesis flags."""

    values: Tuple[float, ...]
    sorted_ascending: bool = field(init=False)
    hypothesis_H: bool = field(init=False)

    def __post_init__(self):
        values = tuple(float(v) for v in self.values)
        if len(values) < 2:
            raise DomainError("a tuple needs at least two elements", {"values": list(values)})
        for position, v in enumerate(values, 1):
            if not math.isfinite(v) or not (MIN_ELEMENT <= v <= MAX_ELEMENT):
                raise DomainError(
                    f"element a_{position}={v!r} outside [{MIN_ELEMENT}, {MAX_ELEMENT}]",
                    {"values": list(values), "position": position},
                )
        ordered = all(values[i] <= values[i + 1] for i in range(len(values) - 1))
        object.__setattr__(self, "values", values)
        object.__setattr__(self, "sorted_ascending", ordered)
        object.__setattr__(self, "hypothesis_H", ordered and power(values[0], values[-1]) >= E_INV)

    @classmethod
    def of(cls, *values: float) -> "PositiveTuple":
        return cls(tuple(values))

    @property
    def n(self) -> int:
        return len(self.values)

    def __len__(self) -> int:
        return len(self.values)

    def at(self, k: int) -> float:
        """a_k with cyclic wraparound; k may be any integer."""
        return self.values[cyc_index(k, self.n) - 1]

    def is_constant(self) -> bool:
        return all(v == self.values[0] for v in self.values)

    def to_dict(self) -> Dict[str, Any]:
        return {
            "values": list(self.values),
            "sorted_ascending": self.sorted_ascending,
            "hypothesis_H": self.hypothesis_H,
        }


@dataclass(frozen=True)
class Permutation:
    """Exponent assignment j_1..j_n, stored 1-based."""

    map: Tuple[int, ...]

    def __post_init__(self):
        mapping = tuple(int(v) for v in self.map)
        if sorted(mapping) != list(range(1, len(mapping) + 1)):
            raise DomainError("not a permutation of 1..n", {"map": list(mapping)})
        object.__setattr__(self, "map", mapping)

    @classmethod
    def identity(cls, n: int) -> "Permutation":
        return cls(tuple(range(1, n + 1)))

    @classmethod
    def reverse(cls, n: int) -> "Permutation":
        return cls(tuple(range(n, 0, -1)))

    @classmethod
    def shift(cls, n: int) -> "Permutation":
        """23...n1, the assignment that turns F into C."""
        return cls(tuple(range(2, n + 1)) + (1,))

    def __len__(self) -> int:
        return len(self.map)

    def __getitem__(self, i: int) -> int:
        """j_i for 1-based i."""
        return self.map[i - 1]

    def position_of(self, value: int) -> int:
        return self.map.index(value) + 1

    def swapped(self, i: int, k: int) -> "Permutation":
        items = list(self.map)
        items[i - 1], items[k - 1] = items[k - 1], items[i - 1]
        return Permutation(tuple(items))

    def to_dict(self) -> Dict[str, Any]:
        return {"map": list(self.map)}


def rotate(a: PositiveTuple, r: int) -> PositiveTuple:
    """(a_{1+r}, ..., a_{n+r}) with wraparound."""
    return PositiveTuple(tuple(a.at(i + r) for i in range(1, a.n + 1)))


def reverse(a: PositiveTuple) -> PositiveTuple:
    return PositiveTuple(a.values[::-1])


def _finite_sum(terms: Iterable[float], what: str, a: PositiveTuple) -> float:
    total = math.fsum(terms)
    if not math.isfinite(total):
        raise NonFiniteResultError(f"{what} is not finite", {"values": list(a.values)})
    return total


def cyclic_terms(a: PositiveTuple) -> List[float]:
    return [power(a.at(i), a.at(i + 1)) for i in range(1, a.n + 1)]


def cater_C(a: PositiveTuple) -> float:
    return _finite_sum(cyclic_terms(a), "C", a)


def cater_C_upper(a: PositiveTuple) -> float:
    return _finite_sum((power(v, v) for v in a.values), "C_*", a)


def cater_C_lower(a: PositiveTuple) -> float:
    v = a.values
    return _finite_sum((power(v[i], v[-1 - i]) for i in range(a.n)), "C^*", a)


def perm_terms(a: PositiveTuple, j: Permutation) -> List[float]:
    if len(j) != a.n:
        raise DomainError("permutation length does not match the tuple", {"n": a.n, "perm": list(j.map)})
    return [power(a.values[i - 1], a.values[j[i] - 1]) for i in range(1, a.n + 1)]


def perm_functional(a: PositiveTuple, j: Permutation) -> float:
    return _finite_sum(perm_terms(a, j), "F", a)


def cyclic_sum(kernel: Callable[..., float], a: PositiveTuple, m: int) -> float:
    """Sum of an m-ary kernel over the n cyclically consecutive windows of ``a``."""
    if not 2 <= m <= a.n:
        raise DomainError(f"window size m={m} outside [2, {a.n}]", {"m": m, "n": a.n})
    windows = (tuple(a.at(i + s) for s in range(m)) for i in range(1, a.n + 1))
    return _finite_sum((kernel(*w) for w in windows), "cyclic sum", a)


def in_sufficient_region(a: PositiveTuple) -> bool:
    """Sorted and inside [1, inf) or [1/e, 1]; either region implies the hypothesis flag."""
    if not a.sorted_ascending:
        return False
    first, last = a.values[0], a.values[-1]
    return first >= 1.0 or (first >= E_INV and last <= 1.0)


# ---------------------------------------------------------------------------
# batch evaluation for the property batteries: rows of a 2-d array are tuples

def batch_powers(base: np.ndarray, exponent: np.ndarray) -> np.ndarray:
    with np.errstate(over="raise"):
        try:
            return np.exp(exponent * np.log(base))
        except FloatingPointError:
            raise NonFiniteResultError("batch power overflows binary64") from None


def batch_cater_C(rows: np.ndarray) -> np.ndarray:
    return batch_powers(rows, np.roll(rows, -1, axis=1)).sum(axis=1)


def batch_cater_C_upper(rows: np.ndarray) -> np.ndarray:
    return batch_powers(rows, rows).sum(axis=1)


def batch_cater_C_lower(rows: np.ndarray) -> np.ndarray:
    return batch_powers(rows, rows[:, ::-1]).sum(axis=1)


def batch_cyclic_min(rows: np.ndarray) -> np.ndarray:
    return batch_powers(rows, np.roll(rows, -1, axis=1)).min(axis=1)


def batch_hypothesis(rows: np.ndarray) -> np.ndarray:
    ordered = np.all(np.diff(rows, axis=1) >= 0.0, axis=1)
    return ordered & (batch_powers(rows[:, 0], rows[:, -1]) >= E_INV)
