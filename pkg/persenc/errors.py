"""
Error types. Every error carries a machine readable certificate so the CLI can
report exactly which relation, cover, point or reference failed.
"""

from __future__ import annotations

from typing import Any, Dict, Optional


class PersencError(ValueError):
    code = "error"

    def __init__(self, message: str, certificate: Optional[Dict[str, Any]] = None):
        super().__init__(message)
        self.message = message
        self.certificate = certificate or {}

    def to_dict(self) -> Dict[str, Any]:
        return {"error": self.code, "message": self.message, "certificate": self.certificate}


class NoSolution(PersencError):
    code = "no_solution"


class CycleDetected(PersencError):
    code = "cycle_detected"


class NotMonotone(PersencError):
    code = "not_monotone"


class NotCommutative(PersencError):
    code = "not_commutative"


class NotNatural(PersencError):
    code = "not_natural"


class NotInterval(PersencError):
    code = "not_interval"


class NotClosedClass(PersencError):
    code = "not_closed_class"


class DimensionMismatch(PersencError):
    code = "dimension_mismatch"


class UnknownElement(PersencError):
    code = "unknown_element"


class NotAFactorization(PersencError):
    code = "not_a_factorization"


class FieldMismatch(PersencError):
    code = "field_mismatch"


class Mismatch(PersencError):
    code = "mismatch"


class ParseError(PersencError):
    code = "parse_error"


class UnresolvedReference(PersencError):
    code = "unresolved_reference"
