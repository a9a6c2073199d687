"""
Extended-precision rechecks.

A claimed violation is a strong statement, so candidate margins are
re-evaluated with mpmath at ``dps`` decimal digits (exact-rounded power
and fsum) before anything is reported.
"""
from typing import Callable, Dict, List, Sequence

import mpmath

DEFAULT_DPS = 40


def _terms(values: Sequence[float], exponent_of: Callable[[int, int], int]) -> List[mpmath.mpf]:
    n = len(values)
    xs = [mpmath.mpf(v) for v in values]
    return [mpmath.power(xs[i], xs[exponent_of(i, n)]) for i in range(n)]


def _cyclic(i: int, n: int) -> int:
    return (i + 1) % n


def _upper(i: int, n: int) -> int:
    return i


def _lower(i: int, n: int) -> int:
    return n - 1 - i


def _lower_margin(values: Sequence[float]) -> mpmath.mpf:
    # C - C^*, the claim of the lower comparison
    return mpmath.fsum(_terms(values, _cyclic)) - mpmath.fsum(_terms(values, _lower))


def _upper_margin(values: Sequence[float]) -> mpmath.mpf:
    # C_* - C
    return mpmath.fsum(_terms(values, _upper)) - mpmath.fsum(_terms(values, _cyclic))


def _cater_margin(values: Sequence[float]) -> mpmath.mpf:
    # C - (1 + (n-2) * min term), the 1980 lower bound
    terms = _terms(values, _cyclic)
    return mpmath.fsum(terms) - (1 + (len(values) - 2) * min(terms))


MARGINS: Dict[str, Callable[[Sequence[float]], mpmath.mpf]] = {
    "violate_lower_5_01": _lower_margin,
    "violate_upper_5": _upper_margin,
    "violate_cater_2": _cater_margin,
}


def hp_margin(target: str, values: Sequence[float], dps: int = DEFAULT_DPS) -> float:
    """Margin of ``target``'s inequality at ``dps`` digits, rounded once to binary64."""
    with mpmath.workdps(dps):
        return float(MARGINS[target](values))


def hp_exp_neg_exp_inv(dps: int = DEFAULT_DPS) -> float:
    with mpmath.workdps(dps):
        return float(mpmath.exp(-mpmath.exp(-1)))


def hp_epsilon_residual(x: float, dps: int = DEFAULT_DPS) -> float:
    """(x + 1) log x + 1 evaluated at ``dps`` digits."""
    with mpmath.workdps(dps):
        mx = mpmath.mpf(x)
        return float((mx + 1) * mpmath.log(mx) + 1)
