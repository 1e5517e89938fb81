"""Design problems, certificates and solutions for the fixed-point-alignment solvers."""

from dataclasses import dataclass, field
from enum import Enum
from typing import Dict, Optional

import numpy as np
from pydantic import BaseModel, Field

from exceptions import InfoDesignError
from models.game import AugmentedGame
from models.report import AdmissibilityMode, CertificationReport
from models.strategy import Goal, Policy, SignalingRule

CONSTRAINT_LABELS = ("RG", "FE", "BOB0", "BOB1", "FS", "AD")
MISALIGNMENT_LABELS = ("FPM1", "FPM2")


class DesignVerdict(str, Enum):
    CERTIFIED = "oil-certified"
    UNCERTIFIED = "uncertified"


@dataclass(frozen=True)
class DesignProblem:
    """
    A game together with a goal κ and the certificate tolerances.

    All joint-type blocks are solved together: π_i depends on θ_i only, so
    blocks sharing an agent's type share that agent's policy rows.
    """
    game: AugmentedGame
    goal: Optional[Goal]
    admissibility_mode: AdmissibilityMode = AdmissibilityMode.WEAK
    feasibility_tol: float = 1e-7
    complementarity_tol: float = 1e-7
    alignment_tol: float = 1e-7

    def __post_init__(self):
        for name in ("feasibility_tol", "complementarity_tol", "alignment_tol"):
            if not getattr(self, name) > 0:
                raise InfoDesignError(f"{name} must be positive")
        if self.goal is not None:
            table = self.goal.table
            expected = (self.game.n_states, self.game.n_joint_types, self.game.n_joint_actions)
            if table.shape != expected:
                raise InfoDesignError(f"goal table has shape {table.shape}, expected {expected}")
            if np.any(table < 0) or np.max(np.abs(table.sum(axis=-1) - 1.0)) > 1e-12:
                raise InfoDesignError("goal rows must be distributions over joint actions")


class Certificate(BaseModel):
    """Residuals named by their constraint labels plus the side conditions."""

    z: float = Field(description="Z objective (Bellman fixed-point gap)")
    zfpa: float = Field(description="Fixed-point-alignment objective")
    constraints: Dict[str, float] = Field(description="RG, FE, BOB0, BOB1, FS, AD residuals")
    misalignments: Dict[str, float] = Field(description="FPM1, FPM2 residuals")
    witnesses: Dict[str, Dict[str, int]] = Field(default_factory=dict)
    nash_goal: bool = Field(description="Goal passes the Nash-goal check")
    admissible: bool = Field(description="Policy passes the admissibility check")
    oil_confirmed: bool = Field(description="Independent OIL certification passes")
    verdict: DesignVerdict

    class Config:
        """Pydantic config."""
        use_enum_values = True

    @property
    def certified(self) -> bool:
        return self.verdict == DesignVerdict.CERTIFIED

    @property
    def max_residual(self) -> float:
        return max(
            [abs(self.z), abs(self.zfpa)]
            + list(self.constraints.values())
            + list(self.misalignments.values())
        )


@dataclass
class DesignSolution:
    """
    Best candidate of a design run.

    Attributes:
        signaling: α
        policy: π
        J: (|Θ|^n, n, G) exact state values under (α, β^O, π)
        V: (|Θ|^n, n, G, |Ω|^n) exact state-signal values
        certificate: Residuals and verdict
        restart: Index of the restart that produced the candidate
    """
    signaling: SignalingRule
    policy: Policy
    J: np.ndarray
    V: np.ndarray
    certificate: Certificate
    restart: int = 0
    checks: Optional[CertificationReport] = None
    induced_goal: Optional[Goal] = None
    principal_value: Optional[float] = None
    principal_value_by_type: Optional[np.ndarray] = None
    history: list = field(default_factory=list)

    @property
    def certified(self) -> bool:
        return self.certificate.certified
