"""Models for games, strategies, values and reports."""

from models.game import AugmentedGame, CanonicalGame
from models.strategy import (
    Goal,
    JointPolicy,
    Policy,
    PrincipalPayoff,
    SelectionRule,
    SignalingRule,
    StrategyProfile,
)
from models.values import AggregateValues, BellmanResiduals, ValueBundle
from models.report import (
    AdmissibilityMode,
    CertificationReport,
    ObedienceMode,
    RunManifest,
    ValidationReport,
    Verdict,
)
from models.design import Certificate, DesignProblem, DesignSolution, DesignVerdict

__all__ = [
    "AugmentedGame",
    "CanonicalGame",
    "Goal",
    "JointPolicy",
    "Policy",
    "PrincipalPayoff",
    "SelectionRule",
    "SignalingRule",
    "StrategyProfile",
    "AggregateValues",
    "BellmanResiduals",
    "ValueBundle",
    "AdmissibilityMode",
    "CertificationReport",
    "ObedienceMode",
    "RunManifest",
    "ValidationReport",
    "Verdict",
    "Certificate",
    "DesignProblem",
    "DesignSolution",
    "DesignVerdict",
]
