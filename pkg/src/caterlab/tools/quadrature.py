"""
Adaptive Gauss-Legendre quadrature on a finite interval.

Every panel is integrated with a 10-point and a 5-point rule; their
difference is the panel's error estimate. The panel with the largest
estimate is bisected until the summed estimate is below ``tol`` (or below
rounding level for the running value).
"""
import heapq
import logging
import math
from dataclasses import dataclass
from typing import Callable, List, Tuple

import numpy as np
from numpy.polynomial.legendre import leggauss

from caterlab.errors import QuadratureError

logger = logging.getLogger(__name__)

HIGH_ORDER = 10
LOW_ORDER = 5
DEFAULT_PANEL_BUDGET = 100_000
# relative error binary64 panel sums can resolve
ROUNDING_FLOOR = 1e-14

_HIGH = leggauss(HIGH_ORDER)
_LOW = leggauss(LOW_ORDER)

Integrand = Callable[[np.ndarray], np.ndarray]


@dataclass(frozen=True)
class QuadratureResult:
    value: float
    error: float
    panels: int


def _rule(f: Integrand, a: float, b: float, nodes: np.ndarray, weights: np.ndarray) -> float:
    half = 0.5 * (b - a)
    mid = 0.5 * (a + b)
    return half * float(np.dot(weights, f(mid + half * nodes)))


def panel(f: Integrand, a: float, b: float) -> Tuple[float, float]:
    """(high-order value, |high - low|) on [a, b]."""
    high = _rule(f, a, b, *_HIGH)
    low = _rule(f, a, b, *_LOW)
    return high, abs(high - low)


def adaptive_gauss_legendre(
    f: Integrand,
    a: float,
    b: float,
    tol: float = 1e-10,
    panel_budget: int = DEFAULT_PANEL_BUDGET,
) -> QuadratureResult:
    """
    Integrate a vectorized ``f`` over [a, b] to an estimated absolute error of ``tol``.

    The target never drops below ROUNDING_FLOOR times the running value, which
    is as far as binary64 panel sums can resolve a large integrand.
    """
    if not b > a:
        raise QuadratureError("integration limits must satisfy a < b", {"a": a, "b": b})
    value, error = panel(f, a, b)
    if not (math.isfinite(value) and math.isfinite(error)):
        raise QuadratureError("integrand is not finite on the interval", {"a": a, "b": b})
    # max-heap on the panel error estimate
    heap: List[Tuple[float, float, float, float]] = [(-error, a, b, value)]
    panels = 1
    # running sums, resynced exactly before convergence is accepted
    total_error, total_value = error, value
    while True:
        target = max(tol, ROUNDING_FLOOR * abs(total_value))
        if total_error <= target:
            total_error = math.fsum(-item[0] for item in heap)
            total_value = math.fsum(item[3] for item in heap)
            if total_error <= max(tol, ROUNDING_FLOOR * abs(total_value)):
                break
        if panels >= panel_budget:
            raise QuadratureError(
                f"no convergence to {tol!r} within {panel_budget} panels",
                {"tol": tol, "panels": panels, "error_estimate": math.fsum(-item[0] for item in heap)},
                estimate=math.fsum(item[3] for item in heap),
            )
        neg_error, lo, hi, old = heapq.heappop(heap)
        total_error += neg_error
        total_value -= old
        mid = 0.5 * (lo + hi)
        for left, right in ((lo, mid), (mid, hi)):
            v, e = panel(f, left, right)
            heapq.heappush(heap, (-e, left, right, v))
            total_error += e
            total_value += v
        panels += 1
    logger.debug("quadrature on [%r, %r]: %d panels, error %.3e", a, b, panels, total_error)
    return QuadratureResult(value=total_value, error=total_error, panels=panels)
