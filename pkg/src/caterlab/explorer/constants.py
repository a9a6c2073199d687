"""
The two named constants: epsilon, the root of x^(x+1) = 1/e in (0, 1), and
e^(-1/e), the minimum of t^t.

Both are reported next to their commonly quoted decimal digits so a
reader can see how far those digits are from the computed values.
"""
import logging
import math
from typing import Any, Dict

from caterlab.cyclic_core import E_INV, PositiveTuple
from caterlab.errors import ContradictionError, DomainError, NumericMethodError
from caterlab.rearrangement import verify_chain
from caterlab.reports import require
from caterlab.tools.precision import DEFAULT_DPS, hp_epsilon_residual, hp_exp_neg_exp_inv

logger = logging.getLogger(__name__)

# commonly quoted decimal digits
PRINTED_EPSILON = 0.5173446105249118
PRINTED_SELF_POWER = 0.6922006275553464

EPSILON_BRACKET = (0.1, 0.9)
MAX_BISECTIONS = 200


def _g(x: float) -> float:
    # log form of x^(x+1) - 1/e, strictly increasing on (0, 1)
    return (x + 1.0) * math.log(x) + 1.0


#function to bisect g on the fixed bracket
def find_epsilon(tol: float = 1e-14) -> float:
    """Root of (x + 1) log x + 1 = 0 on [0.1, 0.9] by bisection."""
    if not tol >= 1e-15:
        raise DomainError("bisection tolerance must be at least 1e-15", {"tol": tol})
    lo, hi = EPSILON_BRACKET
    if not _g(lo) < 0.0 < _g(hi):
        raise NumericMethodError("bracket does not enclose a sign change", {"bracket": [lo, hi]})
    for _ in range(MAX_BISECTIONS):
        mid = 0.5 * (lo + hi)
        if hi - lo <= tol or mid in (lo, hi):
            return mid
        value = _g(mid)
        if value == 0.0:
            return mid
        if value < 0.0:
            lo = mid
        else:
            hi = mid
    raise NumericMethodError(
        f"bisection did not reach {tol!r} in {MAX_BISECTIONS} steps",
        {"bracket": [lo, hi]},
        estimate=0.5 * (lo + hi),
    )


def epsilon_constant(dps: int = DEFAULT_DPS) -> Dict[str, Any]:
    epsilon = find_epsilon()
    residual = hp_epsilon_residual(epsilon, dps)
    return {
        "name": "epsilon",
        "value": epsilon,
        "residual": residual,
        "defining_residual": abs(math.exp((epsilon + 1.0) * math.log(epsilon)) - E_INV),
        "printed_digits": PRINTED_EPSILON,
        "printed_distance": abs(epsilon - PRINTED_EPSILON),
        "printed_residual": hp_epsilon_residual(PRINTED_EPSILON, dps),
    }


def self_power_constant(dps: int = DEFAULT_DPS) -> Dict[str, Any]:
    """e^(-1/e) in binary64 with its distance to an mpmath evaluation."""
    value = math.exp(-E_INV)
    return {
        "name": "exp_neg_exp_inv",
        "value": value,
        "residual": abs(value - hp_exp_neg_exp_inv(dps)),
        "printed_digits": PRINTED_SELF_POWER,
        "printed_distance": abs(value - PRINTED_SELF_POWER),
    }


def remark42_tuple(n: int) -> PositiveTuple:
    """a_i = epsilon + (i - 1)/n: sorted, with a_1^(a_n) = eps^(eps + 1 - 1/n) > 1/e."""
    if n < 2:
        raise DomainError("the construction needs n >= 2", {"n": n})
    epsilon = find_epsilon()
    a = PositiveTuple(tuple(epsilon + (i - 1) / n for i in range(1, n + 1)))
    if not a.hypothesis_H:
        raise ContradictionError(
            "epsilon construction does not satisfy a_1^(a_n) >= 1/e",
            context={"n": n, "values": list(a.values)},
        )
    lower, _ = verify_chain(a, enforce=False)
    require(lower, {"n": n})
    logger.debug("epsilon tuple n=%d: C_lower=%r C=%r", n, lower.lhs, lower.rhs)
    return a
