"""
Pydantic models for certification reports, validation reports and run manifests.

Every check returns a report rather than raising: the verdict, the worst
violation, the index that achieves it, and the tolerance used.
"""

from enum import Enum
from typing import Dict, List, Optional, Sequence

import numpy as np
from pydantic import BaseModel, Field


class Verdict(str, Enum):
    PASS = "pass"
    FAIL = "fail"


class ObedienceMode(str, Enum):
    """Dominant-strategy or Bayesian obedience."""
    DS = "ds"
    BAYESIAN = "bayesian"


class AdmissibilityMode(str, Enum):
    STRONG = "strong"
    WEAK = "weak"


class CertificationReport(BaseModel):
    """Outcome of one certified condition, possibly with sub-reports."""

    condition: str = Field(description="Name of the certified condition")

    verdict: Verdict = Field(description="pass iff violation <= tolerance")

    violation: float = Field(
        default=0.0,
        description="Worst-case violation magnitude (0 when nothing is violated)"
    )

    witness: Optional[Dict[str, int]] = Field(
        default=None,
        description="Index tuple achieving the worst violation"
    )

    tolerance: float = Field(description="Tolerance the verdict was taken at")

    children: List["CertificationReport"] = Field(
        default_factory=list,
        description="Sub-reports of a conjunction"
    )

    class Config:
        """Pydantic config."""
        use_enum_values = True

    @property
    def passed(self) -> bool:
        return self.verdict == Verdict.PASS

    @classmethod
    def from_violations(
        cls,
        condition: str,
        violations: np.ndarray,
        axes: Sequence[str],
        tolerance: float,
    ) -> "CertificationReport":
        """
        Build a report from a table of signed violations.

        Entries that do not take part in the condition must be -inf. The
        witness is the lexicographically smallest index among the maxima.

        Args:
            condition: Condition name
            violations: Array whose axes are named by `axes`
            axes: Witness field names, one per axis
            tolerance: Pass threshold (ties pass)
        """
        violations = np.asarray(violations, dtype=np.float64)
        if violations.size == 0 or not np.any(np.isfinite(violations)):
            return cls(condition=condition, verdict=Verdict.PASS, violation=0.0, tolerance=tolerance)
        flat = int(np.argmax(violations))
        worst = max(float(violations.flat[flat]), 0.0)
        location = np.unravel_index(flat, violations.shape)
        witness = {name: int(position) for name, position in zip(axes, location)}
        verdict = Verdict.PASS if worst <= tolerance else Verdict.FAIL
        return cls(condition=condition, verdict=verdict, violation=worst, witness=witness, tolerance=tolerance)

    @classmethod
    def conjunction(cls, condition: str, children: List["CertificationReport"], tolerance: float) -> "CertificationReport":
        """Pass iff every child passes; the first failing child supplies the witness."""
        failing = [child for child in children if not child.passed]
        if failing:
            first = failing[0]
            return cls(
                condition=condition, verdict=Verdict.FAIL, violation=max(c.violation for c in failing),
                witness={"failed": children.index(first), **(first.witness or {})},
                tolerance=tolerance, children=children,
            )
        violation = max((child.violation for child in children), default=0.0)
        return cls(condition=condition, verdict=Verdict.PASS, violation=violation, tolerance=tolerance, children=children)

    def find(self, condition: str) -> Optional["CertificationReport"]:
        """Depth-first lookup of a sub-report by condition name."""
        if self.condition == condition:
            return self
        for child in self.children:
            found = child.find(condition)
            if found is not None:
                return found
        return None


CertificationReport.model_rebuild()


class Violation(BaseModel):
    """One invariant breach found by validate_game."""

    location: str = Field(description="Table and index of the breach")
    message: str = Field(description="What is wrong")


class ValidationReport(BaseModel):
    violations: List[Violation] = Field(default_factory=list)

    @property
    def valid(self) -> bool:
        return not self.violations

    def add(self, location: str, message: str) -> None:
        self.violations.append(Violation(location=location, message=message))


class RunManifest(BaseModel):
    """Self-description embedded in every report."""

    command: str
    inputs: List[str] = Field(default_factory=list)
    options: Dict[str, str] = Field(default_factory=dict)
    seed: int = 0
    version: str
    duration_seconds: Optional[float] = Field(
        default=None,
        description="Wall-clock duration; only recorded with --timing"
    )
