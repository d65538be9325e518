"""Pass/fail results with residual statistics, shared by every verifier."""
from __future__ import annotations

import statistics
from dataclasses import dataclass, field

from .jetexpr.oracle import ZeroVerdict


@dataclass
class Check:
    name: str
    passed: bool
    max_residual: float = 0.0
    median_residual: float = 0.0
    witness: dict | None = None
    note: str = ""

    @classmethod
    def from_zero(cls, name: str, zv: ZeroVerdict, note: str = "") -> "Check":
        return cls(name, zv.zero, zv.max_residual, zv.median_residual, zv.witness, note)

    def as_dict(self) -> dict:
        d = {"name": self.name, "verdict": "pass" if self.passed else "fail",
             "max_residual": self.max_residual, "median_residual": self.median_residual}
        if self.witness:
            d["witness"] = self.witness
        if self.note:
            d["note"] = self.note
        return d


@dataclass
class Verdict:
    """Aggregate of named checks; passes iff every check passes."""

    checks: list = field(default_factory=list)
    data: dict = field(default_factory=dict)
    notes: list = field(default_factory=list)
    status: str | None = None  # overrides pass/fail, e.g. "degenerate"

    @property
    def passed(self) -> bool:
        return self.status is None and all(c.passed for c in self.checks)

    @property
    def label(self) -> str:
        return self.status or ("pass" if self.passed else "fail")

    def add(self, check: Check) -> "Verdict":
        self.checks.append(check)
        return self

    @property
    def max_residual(self) -> float:
        return max((c.max_residual for c in self.checks), default=0.0)

    @property
    def median_residual(self) -> float:
        vals = [c.median_residual for c in self.checks]
        return statistics.median(vals) if vals else 0.0

    def failed(self) -> list:
        return [c for c in self.checks if not c.passed]

    def __bool__(self):
        return self.passed

    def as_dict(self) -> dict:
        return {"verdict": self.label, "max_residual": self.max_residual,
                "median_residual": self.median_residual,
                "checks": [c.as_dict() for c in self.checks], "notes": list(self.notes)}
