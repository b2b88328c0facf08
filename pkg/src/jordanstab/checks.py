"""Inequality verdicts that always carry their measured sides."""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Sequence

PASS = "PASS"
FAIL = "FAIL"
NOT_APPLICABLE = "NOT-APPLICABLE"


@dataclass
class Check:
    """``lhs <= rhs`` up to ``tol``."""

    name: str
    lhs: float
    rhs: float
    tol: float = 0.0
    note: str = ""

    @property
    def margin(self) -> float:
        if math.isinf(self.rhs) and math.isinf(self.lhs):
            return 0.0 if self.rhs > 0 or self.lhs < 0 else -math.inf
        return self.rhs - self.lhs

    @property
    def passed(self) -> bool:
        return self.margin >= -self.tol

    def to_record(self) -> dict:
        rec = {"check": self.name, "lhs": self.lhs, "rhs": self.rhs,
               "margin": self.margin, "tol": self.tol, "passed": self.passed}
        if self.note:
            rec["note"] = self.note
        return rec


@dataclass
class SampleCheck:
    """A per-sample family of ``lhs_i <= rhs_i`` inequalities."""

    name: str
    lhs: list[float]
    rhs: list[float]
    tol: float = 1e-9
    labels: list[str] = field(default_factory=list)

    def __post_init__(self):
        if len(self.lhs) != len(self.rhs):
            raise ValueError("lhs and rhs lengths differ")

    @property
    def margins(self) -> list[float]:
        return [r - l for l, r in zip(self.lhs, self.rhs)]

    @property
    def min_margin(self) -> float:
        return min(self.margins, default=math.inf)

    @property
    def worst(self) -> int:
        m = self.margins
        return min(range(len(m)), key=m.__getitem__) if m else -1

    @property
    def violations(self) -> int:
        return sum(m < -self.tol for m in self.margins)

    @property
    def passed(self) -> bool:
        return self.violations == 0

    def summary(self) -> Check:
        i = self.worst
        lhs, rhs = (self.lhs[i], self.rhs[i]) if i >= 0 else (0.0, 0.0)
        return Check(self.name, lhs, rhs, self.tol,
                     note=f"worst of {len(self.lhs)} samples, {self.violations} violations")

    def rows(self) -> list[dict]:
        labels = self.labels or [str(i) for i in range(len(self.lhs))]
        return [{"check": self.name, "sample": lab, "lhs": l, "rhs": r, "margin": r - l}
                for lab, l, r in zip(labels, self.lhs, self.rhs)]


def combine(verdicts: Sequence[bool]) -> str:
    return PASS if all(verdicts) else FAIL
