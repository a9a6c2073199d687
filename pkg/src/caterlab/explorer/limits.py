"""
Riemann means of the cyclic sum against the integral of f^f.

For a continuous non-decreasing f: [0, 1] -> (0, inf) and a_i = f(i/n),
n^-1 C(a_1..a_n) is compared with the integral of f(t)^f(t) over [0, 1],
and with the C_* Riemann sum n^-1 sum_i f(i/n)^f(i/n).
"""
import logging
import math
from dataclasses import dataclass, field
from typing import Any, Dict, List, Optional, Sequence, Tuple, Union

import numpy as np

from caterlab.config import DEFAULT_BAND, Band
from caterlab.cyclic_core import E_INV, PositiveTuple, cater_C, cater_C_upper
from caterlab.errors import ConfigurationError, ContradictionError, DomainError, InputParseError
from caterlab.reports import make_report, require
from caterlab.tools.quadrature import DEFAULT_PANEL_BUDGET, adaptive_gauss_legendre

logger = logging.getLogger(__name__)

# kind -> number of parameters
KINDS = {"const": 1, "affine": 2, "power": 3, "exp_scaled": 2}

SHRINKING = "shrinking"
FLAT = "flat"
NOT_SHRINKING = "not_shrinking"

Number = Union[float, np.ndarray]


@dataclass(frozen=True)
class FunctionSpec:
    """
    Closed family of positive non-decreasing functions on [0, 1].

    const: c; affine: c0 + c1 t; power: c0 + c1 t^p; exp_scaled: c0 e^(c1 t).
    """

    kind: str
    params: Tuple[float, ...]

    def __post_init__(self):
        params = tuple(float(p) for p in self.params)
        object.__setattr__(self, "params", params)
        if self.kind not in KINDS:
            raise ConfigurationError(f"unknown function kind {self.kind!r}", {"known": sorted(KINDS)})
        if len(params) != KINDS[self.kind]:
            raise ConfigurationError(
                f"{self.kind} takes {KINDS[self.kind]} parameters",
                {"kind": self.kind, "params": list(params)},
            )
        if not all(math.isfinite(p) for p in params):
            raise ConfigurationError("parameters must be finite", {"params": list(params)})
        c0 = params[0]
        rest_ok = all(p >= 0.0 for p in params[1:2])
        if self.kind == "power":
            rest_ok = rest_ok and params[2] > 0.0
        if not (c0 > 0.0 and rest_ok):
            raise ConfigurationError(
                f"{self.kind} parameters do not give a positive non-decreasing function",
                {"kind": self.kind, "params": list(params)},
            )

    @classmethod
    def parse(cls, text: str) -> "FunctionSpec":
        """'affine:1,1' -> FunctionSpec('affine', (1.0, 1.0))."""
        kind, sep, raw = text.partition(":")
        if not sep or not raw.strip():
            raise InputParseError(f"function spec {text!r} is not of the form kind:p1,p2,...", {"text": text})
        try:
            params = tuple(float(p) for p in raw.split(","))
        except ValueError:
            raise InputParseError(f"cannot parse parameters of {text!r}", {"text": text}) from None
        return cls(kind.strip(), params)

    def __call__(self, t: Number) -> Number:
        p = self.params
        if self.kind == "const":
            return p[0] + 0.0 * np.asarray(t) if isinstance(t, np.ndarray) else p[0]
        if self.kind == "affine":
            return p[0] + p[1] * t
        if self.kind == "power":
            return p[0] + p[1] * t ** p[2]
        return p[0] * np.exp(p[1] * t)

    def self_power(self, t: np.ndarray) -> np.ndarray:
        values = self(np.asarray(t, dtype=float))
        return np.exp(values * np.log(values))

    def to_dict(self) -> Dict[str, Any]:
        return {"kind": self.kind, "params": list(self.params)}


def _sampled_tuple(f: FunctionSpec, n: int) -> PositiveTuple:
    if n < 2:
        raise DomainError("a Riemann mean needs n >= 2", {"n": n})
    return PositiveTuple(tuple(float(f(i / n)) for i in range(1, n + 1)))


def riemann_mean(f: FunctionSpec, n: int) -> float:
    """n^-1 C(f(1/n), ..., f(1))."""
    return cater_C(_sampled_tuple(f, n)) / n


def upper_riemann_mean(f: FunctionSpec, n: int) -> float:
    """n^-1 sum_i f(i/n)^f(i/n), the right Riemann sum of f^f."""
    return cater_C_upper(_sampled_tuple(f, n)) / n


def integral_mean(f: FunctionSpec, tol: float = 1e-10, panel_budget: int = DEFAULT_PANEL_BUDGET) -> float:
    return integrate_self_power(f, tol, panel_budget)[0]


def integrate_self_power(
    f: FunctionSpec, tol: float = 1e-10, panel_budget: int = DEFAULT_PANEL_BUDGET
) -> Tuple[float, float]:
    """(integral of f^f over [0, 1], error estimate)."""
    if not tol >= 1e-12:
        raise DomainError("quadrature tolerance must be at least 1e-12", {"tol": tol})
    result = adaptive_gauss_legendre(f.self_power, 0.0, 1.0, tol=tol, panel_budget=panel_budget)
    return result.value, result.error


def _self_power(y: float) -> float:
    return math.exp(y * math.log(y))


def variation_bound(f: FunctionSpec) -> Dict[str, float]:
    """
    Constant L with |n^-1 C - integral of f^f| <= L/n.

    With f non-decreasing on [m0, m1] = [f(0), f(1)]:
      L = TV(f^f) + 2 M TV(f),  M = max over x, y in [m0, m1] of x^y |log x|,
    the first term bounding the right Riemann sum of f^f and the second the
    shifted exponents (n - 1 adjacent pairs plus the wrap pair).
    """
    m0, m1 = float(f(0.0)), float(f(1.0))
    tv_f = m1 - m0
    if m0 < E_INV < m1:
        tv_g = (_self_power(m0) - _self_power(E_INV)) + (_self_power(m1) - _self_power(E_INV))
    else:
        tv_g = abs(_self_power(m1) - _self_power(m0))

    # x >= 1: x^y log x grows with both x and y
    above = _self_power(m1) * math.log(m1) if m1 > 1.0 else 0.0
    # x < 1: x^y |log x| is largest at y = m0, and -x^c log x peaks at x = e^(-1/c)
    below = 0.0
    if m0 < 1.0:
        top = min(m1, 1.0)
        peak = math.exp(-1.0 / m0)
        candidates = [m0, top] + ([peak] if m0 < peak < top else [])
        below = max(-math.exp(m0 * math.log(x)) * math.log(x) for x in candidates)
    bound = max(above, below)
    return {"tv_f": tv_f, "tv_self_power": tv_g, "max_partial": bound, "L": tv_g + 2.0 * bound * tv_f}


@dataclass(frozen=True)
class ConvergenceRow:
    n: int
    riemann_mean: float
    upper_riemann_mean: float
    integral_mean: float
    gap: float
    slack: float

    def to_dict(self) -> Dict[str, Any]:
        return {
            "n": self.n,
            "riemann_mean": self.riemann_mean,
            "upper_riemann_mean": self.upper_riemann_mean,
            "integral_mean": self.integral_mean,
            "gap": self.gap,
            "slack": self.slack,
        }


@dataclass(frozen=True)
class ConvergenceReport:
    function: FunctionSpec
    integral: float
    integral_error: float
    L: float
    rows: List[ConvergenceRow] = field(default_factory=list)
    trend: str = FLAT

    @property
    def gaps(self) -> List[float]:
        return [row.gap for row in self.rows]

    def to_dict(self) -> Dict[str, Any]:
        return {
            "function": self.function.to_dict(),
            "integral": self.integral,
            "integral_error": self.integral_error,
            "L": self.L,
            "rows": [row.to_dict() for row in self.rows],
            "trend": self.trend,
        }


def _trend(gaps: Sequence[float], widths: Sequence[float]) -> str:
    if all(abs(g) <= w for g, w in zip(gaps, widths)):
        return FLAT
    if len(gaps) > 1 and abs(gaps[-1]) < abs(gaps[0]):
        return SHRINKING
    return NOT_SHRINKING


def convergence_report(
    f: FunctionSpec,
    n_list: Sequence[int],
    band: Optional[Band] = None,
    tol: float = 1e-10,
    panel_budget: int = DEFAULT_PANEL_BUDGET,
) -> ConvergenceReport:
    """
    (n, riemann, integral, gap) table with gap = integral - riemann.

    Each row must satisfy riemann <= integral + band + L/n and
    riemann <= upper riemann (the chain C <= C_* on the sampled tuple).
    The trend is judged on |gap|, which shrinks like 1/n.
    """
    band = band or DEFAULT_BAND
    n_list = [int(n) for n in n_list]
    if not n_list or any(n < 2 for n in n_list) or any(b <= a for a, b in zip(n_list, n_list[1:])):
        raise DomainError("n list must be strictly ascending with every n >= 2", {"n_list": n_list})
    integral, integral_error = integrate_self_power(f, tol, panel_budget)
    L = variation_bound(f)["L"]
    rows, widths = [], []
    for n in n_list:
        a = _sampled_tuple(f, n)
        mean = cater_C(a) / n
        upper = cater_C_upper(a) / n
        slack = L / n
        width = band.width(mean, integral)
        if mean > integral + width + integral_error + slack:
            logger.error("riemann mean %r above integral %r + slack %r at n=%d", mean, integral, slack, n)
            raise ContradictionError(
                f"n^-1 C exceeds the integral of f^f by more than L/n at n={n}",
                context={"function": f.to_dict(), "n": n, "riemann": mean, "integral": integral, "slack": slack},
            )
        require(
            make_report("C <= C_upper (Riemann)", mean, "le", upper, {"function": f.to_dict(), "n": n}, band=band),
            {"function": f.to_dict(), "n": n},
        )
        rows.append(ConvergenceRow(n, mean, upper, integral, integral - mean, slack))
        widths.append(width)
        logger.debug("n=%d riemann=%r gap=%r", n, mean, integral - mean)
    trend = _trend([row.gap for row in rows], widths)
    if trend == NOT_SHRINKING:
        logger.warning("gap does not shrink for %s over n=%s", f.to_dict(), n_list)
    return ConvergenceReport(f, integral, integral_error, L, rows, trend)
