"""Instance-level verdicts shared by every checker."""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Any

PASS_TOL = 1e-9


def _clean(v):
    if isinstance(v, complex):
        return [v.real, v.imag]
    if isinstance(v, float) and not math.isfinite(v):
        return "inf" if v > 0 else ("-inf" if v < 0 else "nan")
    if hasattr(v, "item") and not isinstance(v, (list, tuple, dict)):
        try:
            return _clean(v.item())
        except (ValueError, AttributeError):
            pass
    if isinstance(v, dict):
        return {str(k): _clean(x) for k, x in v.items()}
    if isinstance(v, (list, tuple)):
        return [_clean(x) for x in v]
    return v


@dataclass
class CheckReport:
    lemma_id: str
    lhs: float = 0.0
    rhs: float = 0.0
    instance: dict = field(default_factory=dict)
    skipped: bool = False
    reason: str = ""
    tol: float = PASS_TOL

    @property
    def margin(self) -> float:
        return float(self.rhs) - float(self.lhs)

    @property
    def passed(self) -> bool:
        if self.skipped:
            return False
        m = self.margin
        return bool(m >= -self.tol) if not math.isnan(m) else False

    @property
    def failed(self) -> bool:
        return not self.skipped and not self.passed

    @classmethod
    def skip(cls, lemma_id: str, reason: str, instance: dict | None = None) -> "CheckReport":
        return cls(lemma_id, math.nan, math.nan, instance or {}, skipped=True, reason=reason)

    def to_json(self) -> dict[str, Any]:
        return {
            "lemma_id": self.lemma_id,
            "params": _clean(self.instance),
            "seed": _clean(self.instance.get("seed")),
            "lhs": _clean(float(self.lhs)),
            "rhs": _clean(float(self.rhs)),
            "margin": _clean(self.margin),
            "pass": self.passed,
            "skipped": self.skipped,
            "reason": self.reason,
        }

    def __str__(self):
        if self.skipped:
            return f"{self.lemma_id}: skipped ({self.reason})"
        tag = "pass" if self.passed else "FAIL"
        return f"{self.lemma_id}: {tag} lhs={self.lhs:.6g} rhs={self.rhs:.6g} margin={self.margin:.3g}"


class BoundViolation(AssertionError):
    """A constructive step measured its own postcondition and found it false."""

    def __init__(self, report: CheckReport):
        super().__init__(str(report))
        self.report = report


def assert_report(report: CheckReport) -> CheckReport:
    if report.failed:
        raise BoundViolation(report)
    return report
