"""
Obedient implementability (OIL) and the direct-design transformation.

OIL holds when the obedient profile (β^O, π*) is sequentially rational,
obedience holds in the requested mode and π* is admissible for κ.
`construct_direct` turns an indirect design (α, β*, π*) into a direct one
whose signals already are the kept signals.
"""

import logging
from pathlib import Path
from typing import Optional, Tuple, Union

import numpy as np
from pydantic import BaseModel, Field

from evaluators.admissibility import AdmissibilityEvaluator
from evaluators.equilibrium import DEFAULT_TOLERANCE, EquilibriumCertifier
from evaluators.obedience import ObedienceEvaluator
from markov.dynamics import pushforward, selected_signal_distribution, selection_channels
from models.game import AugmentedGame
from models.report import AdmissibilityMode, CertificationReport, ObedienceMode
from models.strategy import Goal, Policy, SelectionRule, SignalingRule
from utils.records import ReportWriter
from utils.tables import total_variation

logger = logging.getLogger(__name__)


class OILEvaluator:
    """Runs the one-shot, obedience and admissibility certifiers together."""

    def __init__(self, tolerance: float = DEFAULT_TOLERANCE, cap: Optional[int] = None):
        self.tolerance = tolerance
        self.equilibrium = EquilibriumCertifier(tolerance, cap)
        self.obedience = ObedienceEvaluator(tolerance, cap)
        self.admissibility = AdmissibilityEvaluator(tolerance, cap)

    def check_oil(
        self,
        game: AugmentedGame,
        signaling: SignalingRule,
        policy: Policy,
        goal: Goal,
        obedience_mode: ObedienceMode = ObedienceMode.BAYESIAN,
        admissibility_mode: AdmissibilityMode = AdmissibilityMode.WEAK,
    ) -> CertificationReport:
        obedient = SelectionRule.obedient(game)
        children = [
            self.equilibrium.check_one_shot(game, signaling, obedient, policy),
            self.obedience.evaluate(game, signaling, policy, obedience_mode),
            self.admissibility.check_admissibility(game, signaling, obedient, policy, goal, admissibility_mode),
        ]
        report = CertificationReport.conjunction("OIL", children, self.tolerance)
        logger.debug("OIL verdict %s (violation %.3e)", report.verdict, report.violation)
        return report

    def check_implementability(
        self,
        game: AugmentedGame,
        signaling: SignalingRule,
        selection: SelectionRule,
        policy: Policy,
        goal: Goal,
        admissibility_mode: AdmissibilityMode = AdmissibilityMode.WEAK,
    ) -> CertificationReport:
        """SMPBE implementability of κ by (β*, π*), with no obedience requirement."""
        children = [
            self.equilibrium.check_one_shot(game, signaling, selection, policy),
            self.admissibility.check_admissibility(game, signaling, selection, policy, goal, admissibility_mode),
        ]
        return CertificationReport.conjunction("implementability", children, self.tolerance)


def check_oil(
    game: AugmentedGame,
    signaling: SignalingRule,
    policy: Policy,
    goal: Goal,
    obedience_mode: ObedienceMode = ObedienceMode.BAYESIAN,
    admissibility_mode: AdmissibilityMode = AdmissibilityMode.WEAK,
    tol: float = DEFAULT_TOLERANCE,
    cap: Optional[int] = None,
) -> CertificationReport:
    return OILEvaluator(tol, cap).check_oil(game, signaling, policy, goal, obedience_mode, admissibility_mode)


def check_implementability(
    game: AugmentedGame,
    signaling: SignalingRule,
    selection: SelectionRule,
    policy: Policy,
    goal: Goal,
    admissibility_mode: AdmissibilityMode = AdmissibilityMode.WEAK,
    tol: float = DEFAULT_TOLERANCE,
) -> CertificationReport:
    return OILEvaluator(tol).check_implementability(game, signaling, selection, policy, goal, admissibility_mode)


def construct_direct(
    game: AugmentedGame,
    signaling: SignalingRule,
    selection: SelectionRule,
    policy: Policy,
) -> Tuple[SignalingRule, Policy]:
    """
    Direct design from an indirect one.

    α_direct(ω⃗ | g, θ⃗) is the probability that (α, P^{-k}, β*) leaves the
    agents holding ω⃗; the policy is unchanged.

    Returns:
        (α_direct, π_direct)
    """
    blocks = []
    for t in range(game.n_joint_types):
        types = game.type_profile(t)
        channels = None if selection.is_obedient else selection_channels(game, selection, types)
        blocks.append(selected_signal_distribution(signaling.block(t), channels, game.index))
    return SignalingRule.from_blocks(np.stack(blocks)), policy


def induced_goal(game: AugmentedGame, signaling: SignalingRule, selection: SelectionRule, policy: Policy) -> Goal:
    """κ induced by (α, β, π) for every joint type."""
    return Goal.from_blocks(np.stack([
        pushforward(game, signaling, selection, policy, t) for t in range(game.n_joint_types)
    ]))


class ObedienceExperiment(BaseModel):
    """Measurement of the direct-design transformation on one instance."""

    total_variation: float = Field(description="Largest TV distance between induced action distributions")
    direct_obedience: CertificationReport = Field(description="Bayesian obedience of the direct design")
    direct_one_shot: CertificationReport = Field(description="One-shot check of (β^O, π*) under the direct design")
    indirect_implementability: CertificationReport = Field(
        description="One-shot and weak admissibility of the indirect design against its own induced goal"
    )

    @property
    def counterexample(self) -> bool:
        """Indirect design implements its goal but the direct one is not obedient."""
        return self.indirect_implementability.passed and not (
            self.direct_obedience.passed and self.direct_one_shot.passed
        )


def obedience_principle_experiment(
    game: AugmentedGame,
    signaling: SignalingRule,
    selection: SelectionRule,
    policy: Policy,
    tol: float = DEFAULT_TOLERANCE,
    artifact: Optional[Union[str, Path]] = None,
) -> ObedienceExperiment:
    """
    Run construct_direct and measure, without asserting, what it preserves.

    Args:
        artifact: Report path written when the instance is a counterexample
    """
    direct_signaling, direct_policy = construct_direct(game, signaling, selection, policy)
    obedient = SelectionRule.obedient(game)
    indirect_goal = induced_goal(game, signaling, selection, policy)
    direct_goal = induced_goal(game, direct_signaling, obedient, direct_policy)
    evaluator = OILEvaluator(tol)
    experiment = ObedienceExperiment(
        total_variation=total_variation(indirect_goal.table, direct_goal.table),
        direct_obedience=evaluator.obedience.check_bayesian(game, direct_signaling, direct_policy),
        direct_one_shot=evaluator.equilibrium.check_one_shot(game, direct_signaling, obedient, direct_policy),
        indirect_implementability=evaluator.check_implementability(game, signaling, selection, policy, indirect_goal),
    )
    if experiment.counterexample:
        logger.info("Direct design lost obedience (tv %.3e)", experiment.total_variation)
        if artifact is not None:
            ReportWriter().experiment(experiment).write(artifact)
    return experiment
