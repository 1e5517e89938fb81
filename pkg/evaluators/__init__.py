"""Validators and certifiers for games, equilibria, obedience and admissibility."""

from .validation import GameValidator, canonical_projection, validate_game, validate_strategies
from .equilibrium import EquilibriumCertifier, check_mce, check_one_shot
from .obedience import ObedienceEvaluator, check_obedience
from .admissibility import AdmissibilityEvaluator, check_admissibility, check_nash_goal
from .oil import (
    OILEvaluator,
    check_implementability,
    check_oil,
    construct_direct,
    induced_goal,
    obedience_principle_experiment,
)

__all__ = [
    "GameValidator",
    "canonical_projection",
    "validate_game",
    "validate_strategies",
    "EquilibriumCertifier",
    "check_mce",
    "check_one_shot",
    "ObedienceEvaluator",
    "check_obedience",
    "AdmissibilityEvaluator",
    "check_admissibility",
    "check_nash_goal",
    "OILEvaluator",
    "check_implementability",
    "check_oil",
    "construct_direct",
    "induced_goal",
    "obedience_principle_experiment",
]
