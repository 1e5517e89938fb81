"""
Admissibility of an equilibrium policy against the principal's goal, and the
Nash-goal condition on the goal itself.

Strong admissibility compares the induced joint action distribution with κ
entry by entry. Weak admissibility compares each agent's expected one-stage
reward under the two distributions; both sides integrate the agent's reward
averaged over its kept-signal marginal, so a strong pass is always a weak pass.
"""

import logging
from typing import Optional

import numpy as np

from evaluators.equilibrium import DEFAULT_TOLERANCE, iter_blocks
from markov.dynamics import action_distribution
from markov.valuation import signal_marginals
from models.game import AugmentedGame
from models.report import AdmissibilityMode, CertificationReport
from models.strategy import Goal, Policy, SelectionRule, SignalingRule
from utils.tables import signal_marginal

logger = logging.getLogger(__name__)


def signal_averaged_rewards(rewards: np.ndarray, sigma: np.ndarray, n_agents: int, n_signals: int) -> np.ndarray:
    """
    r̄_i(a⃗, g) = Σ_ω σ_i(ω | g) R_i(a⃗, g, ω).

    Args:
        rewards: (n, |A|^n, G, Ω)
        sigma: (..., G, |Ω|^n) kept-signal distribution

    Returns:
        (..., n, |A|^n, G)
    """
    marginals = np.stack([signal_marginal(sigma, i, n_agents, n_signals) for i in range(n_agents)], axis=-3)
    return np.einsum("...igw,iagw->...iag", marginals, rewards)


def weak_admissibility_gap(rewards: np.ndarray, sigma: np.ndarray, goal: np.ndarray,
                           actions: np.ndarray, n_agents: int, n_signals: int) -> np.ndarray:
    """(..., n, G) signed gap between expected rewards under κ and under the induced distribution."""
    averaged = signal_averaged_rewards(rewards, sigma, n_agents, n_signals)
    return np.einsum("...ga,...iag->...ig", goal - actions, averaged)


class AdmissibilityEvaluator:
    """Certifies strong or weak admissibility, and Nash goals."""

    def __init__(self, tolerance: float = DEFAULT_TOLERANCE, cap: Optional[int] = None):
        self.tolerance = tolerance
        self.cap = cap

    def check_admissibility(
        self,
        game: AugmentedGame,
        signaling: SignalingRule,
        selection: SelectionRule,
        policy: Policy,
        goal: Goal,
        mode: AdmissibilityMode = AdmissibilityMode.WEAK,
    ) -> CertificationReport:
        """
        Compare the distribution induced by (α, β*, π*) with κ.

        Args:
            mode: STRONG (entrywise) or WEAK (expected rewards per agent and state)
        """
        mode = AdmissibilityMode(mode)
        n, s = game.n_agents, game.n_signals
        if mode == AdmissibilityMode.STRONG:
            gaps = np.zeros((game.n_joint_types, game.n_states, game.n_joint_actions))
        else:
            gaps = np.zeros((game.n_joint_types, n, game.n_states))
        for ctx in iter_blocks(game, signaling, selection, policy, self.cap):
            actions = action_distribution(ctx.sigma, ctx.pis, game.index)
            kappa = goal.block(ctx.type_index)
            if mode == AdmissibilityMode.STRONG:
                gaps[ctx.type_index] = np.abs(kappa - actions)
            else:
                gaps[ctx.type_index] = np.abs(weak_admissibility_gap(ctx.rewards, ctx.sigma, kappa, actions, n, s))
        axes = ("joint_type", "state", "joint_action") if mode == AdmissibilityMode.STRONG else ("joint_type", "agent", "state")
        return CertificationReport.from_violations(f"admissibility-{mode.value}", gaps, axes, self.tolerance)

    def check_nash_goal(self, game: AugmentedGame, signaling: SignalingRule, goal: Goal) -> CertificationReport:
        """
        One-stage best-reply consistency of κ.

        For every action a_i that κ plays with positive probability, every
        deviation a'_i and every signal with α_i > 0:
        α_i(ω) Σ κ(a⃗_{-i}) R_i(a_i, a⃗_{-i}, g, ω) ≥ α_i(ω) Σ κ(a⃗_{-i}) R_i(a'_i, a⃗_{-i}, g, ω).
        """
        index = game.index
        n, a, s = game.n_agents, game.n_actions, game.n_signals
        gaps = np.full((game.n_joint_types, n, game.n_states, a, a, s), -np.inf)
        for t in range(game.n_joint_types):
            types = game.type_profile(t)
            rewards = game.rewards_for(types)
            kappa = goal.block(t)
            marginals = signal_marginals(signaling.block(t), index)
            for agent in range(n):
                split_goal = index.split_actions(kappa, agent, axis=1)          # (G, A, A^{n-1})
                own = split_goal.sum(axis=2)
                opponents = split_goal.sum(axis=1)
                split_rewards = index.split_actions(rewards[agent], agent, axis=0)  # (A, A^{n-1}, G, Ω)
                value = np.einsum("gr,args->gas", opponents, split_rewards) * marginals[agent][:, None, :]
                gain = value[:, None, :, :] - value[:, :, None, :]              # (G, a_i, a'_i, Ω)
                valid = (own[:, :, None, None] > 0) & (marginals[agent][:, None, None, :] > 0)
                gaps[t, agent] = np.where(valid, gain, -np.inf)
        return CertificationReport.from_violations(
            "nash-goal", gaps, ("joint_type", "agent", "state", "action", "deviation", "signal"), self.tolerance
        )


def check_admissibility(
    game: AugmentedGame,
    signaling: SignalingRule,
    selection: SelectionRule,
    policy: Policy,
    goal: Goal,
    mode: AdmissibilityMode = AdmissibilityMode.WEAK,
    tol: float = DEFAULT_TOLERANCE,
) -> CertificationReport:
    return AdmissibilityEvaluator(tol).check_admissibility(game, signaling, selection, policy, goal, mode)


def check_nash_goal(game: AugmentedGame, signaling: SignalingRule, goal: Goal, tol: float = DEFAULT_TOLERANCE) -> CertificationReport:
    return AdmissibilityEvaluator(tol).check_nash_goal(game, signaling, goal)
