"""
Exception hierarchy shared by every caterlab module.

Each exception carries a ``context`` dict with the inputs that produced it,
and the exit code the command line maps it to.
"""
from typing import Any, Dict, Optional


class CaterlabError(Exception):
    """Base class for all caterlab failures."""

    exit_code = 1
    kind = "error"

    def __init__(self, message: str, context: Optional[Dict[str, Any]] = None):
        super().__init__(message)
        self.message = message
        self.context: Dict[str, Any] = dict(context or {})

    def to_dict(self) -> Dict[str, Any]:
        return {
            "kind": self.kind,
            "message": self.message,
            "exit_code": self.exit_code,
            "context": self.context,
        }


class InputParseError(CaterlabError):
    """Tuple or flag text that does not parse."""

    exit_code = 2
    kind = "parse_error"


class ConfigurationError(CaterlabError):
    """Invalid settings or search configuration (incl. unreachable regions)."""

    exit_code = 2
    kind = "configuration_error"


class DomainError(CaterlabError):
    """A precondition of the claim being checked is not met."""

    exit_code = 3
    kind = "domain_error"


class NonFiniteResultError(DomainError):
    """An evaluation overflowed or produced a non-finite value."""

    kind = "non_finite_result"


class ResourceError(DomainError):
    """The request is above a hard resource cap (e.g. n! enumeration)."""

    kind = "resource_error"


class ContradictionError(CaterlabError):
    """
    A numerical result that would falsify a proved statement.

    Never swallowed: it means either floating point pathology or a bug.
    """

    exit_code = 4
    kind = "contradiction"

    def __init__(self, message: str, context: Optional[Dict[str, Any]] = None, evidence: Any = None):
        super().__init__(message, context)
        self.evidence = evidence

    def to_dict(self) -> Dict[str, Any]:
        data = super().to_dict()
        to_dict = getattr(self.evidence, "to_dict", None)
        if callable(to_dict):
            data["evidence"] = to_dict()
        return data


class NumericMethodError(CaterlabError):
    """A root finder or quadrature routine did not converge."""

    exit_code = 5
    kind = "numeric_method_error"

    def __init__(self, message: str, context: Optional[Dict[str, Any]] = None, estimate: Optional[float] = None):
        super().__init__(message, context)
        self.estimate = estimate
        if estimate is not None:
            self.context.setdefault("achieved_estimate", estimate)


class QuadratureError(NumericMethodError):
    kind = "quadrature_error"
