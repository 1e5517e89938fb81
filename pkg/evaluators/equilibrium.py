"""
Equilibrium certifiers: Markov correlated equilibrium of the canonical game
and one-shot deviation checks of a stationary strategy profile.

A profile is sequentially rational iff no agent gains from deviating for a
single period and reverting afterwards. Deviations are enumerated over
deterministic one-period rules; a mixed deviation is a convex combination of
those and cannot do better.
"""

import logging
from dataclasses import dataclass
from typing import Iterator, Optional, Tuple

import numpy as np

from config import EnumerationConfig
from markov.dynamics import selected_signal_distribution, selection_channels
from markov.valuation import block_values, interim_payoffs, opponent_averaged_q, signal_marginals
from models.game import AugmentedGame, CanonicalGame
from models.report import CertificationReport
from models.strategy import JointPolicy, Policy, SelectionRule, SignalingRule
from utils.tables import JointIndex, apply_channels, check_cap, joint_tuples, own_signal_average

logger = logging.getLogger(__name__)

DEFAULT_TOLERANCE = 1e-8


@dataclass(frozen=True)
class BlockContext:
    """Everything the certifiers need for one joint type."""
    types: Tuple[int, ...]
    type_index: int
    alpha: np.ndarray       # (G, |Ω|^n)
    channels: np.ndarray    # (n, G, Ω, Ω)
    sigma: np.ndarray       # (G, |Ω|^n)
    pis: np.ndarray         # (n, G, Ω, A)
    rewards: np.ndarray     # (n, |A|^n, G, Ω)
    J: np.ndarray
    V: np.ndarray
    Q: np.ndarray
    marginals: np.ndarray   # (n, G, Ω) α_i(ω_i^k | g)


def identity_channels(game: AugmentedGame) -> np.ndarray:
    return np.broadcast_to(np.eye(game.n_signals), (game.n_agents, game.n_states, game.n_signals, game.n_signals))


def block_context(
    game: AugmentedGame,
    signaling: SignalingRule,
    selection: SelectionRule,
    policy: Policy,
    type_index: int,
    channels: Optional[np.ndarray] = None,
) -> BlockContext:
    """Exact values and kernels for one joint type; `channels` overrides β's channels."""
    types = game.type_profile(type_index)
    if channels is None:
        channels = identity_channels(game) if selection.is_obedient else selection_channels(game, selection, types)
    alpha = signaling.block(type_index)
    sigma = selected_signal_distribution(alpha, channels, game.index)
    pis = policy.for_types(types)
    rewards = game.rewards_for(types)
    J, V, Q = block_values(rewards, game.transition, game.discount, sigma, pis, game.index)
    return BlockContext(
        types=types, type_index=type_index, alpha=alpha, channels=channels, sigma=sigma,
        pis=pis, rewards=rewards, J=J, V=V, Q=Q, marginals=signal_marginals(alpha, game.index),
    )


def iter_blocks(game: AugmentedGame, signaling: SignalingRule, selection: SelectionRule,
                policy: Policy, cap: Optional[int] = None) -> Iterator[BlockContext]:
    check_cap(
        "joint signal-action table",
        game.joint_cells,
        EnumerationConfig().cap if cap is None else cap,
    )
    for t in range(game.n_joint_types):
        yield block_context(game, signaling, selection, policy, t)


def pulled_back_values(table: np.ndarray, ctx: BlockContext, index: JointIndex, agent: int) -> np.ndarray:
    """Pull a kept-signal table back to opponents' principal signals (agent's own slot untouched)."""
    return apply_channels(table, ctx.channels, index.opponents(agent), index.n_agents, index.n_signals, pull_back=True)


class EquilibriumCertifier:
    """Certifies MCE and one-shot sequential rationality."""

    def __init__(self, tolerance: float = DEFAULT_TOLERANCE, cap: Optional[int] = None):
        """
        Initialize certifier.

        Args:
            tolerance: Slack allowed in every value comparison (ties pass)
            cap: Enumeration cap override
        """
        self.tolerance = tolerance
        self.cap = cap

    def check_mce(self, game: CanonicalGame, policy: JointPolicy) -> CertificationReport:
        """
        Markov correlated equilibrium of a canonical game.

        Each action an agent plays with positive probability must be a best
        reply, in interim payoff, against the opponents' marginal action
        distribution.
        """
        index = game.index
        payoffs = interim_payoffs(game, policy)
        violations = np.full((game.n_agents, game.n_states, game.n_actions, game.n_actions), -np.inf)
        for agent in range(game.n_agents):
            own = index.split_actions(payoffs[agent], agent, axis=0)               # (A, A^{n-1}, G)
            split_policy = index.split_actions(policy.table, agent, axis=1)        # (G, A, A^{n-1})
            own_marginal = split_policy.sum(axis=2)
            opponents = split_policy.sum(axis=1)
            value = np.einsum("gk,akg->ga", opponents, own)
            gain = value[:, None, :] - value[:, :, None]
            violations[agent] = np.where(own_marginal[:, :, None] > 0, gain, -np.inf)
        return CertificationReport.from_violations(
            "MCE", violations, ("agent", "state", "action", "deviation"), self.tolerance
        )

    def check_one_shot(
        self,
        game: AugmentedGame,
        signaling: SignalingRule,
        selection: SelectionRule,
        policy: Policy,
    ) -> CertificationReport:
        """
        One-period deviations in selection and in action.

        Selection: per (θ⃗, i, g) the gain of a joint one-period deviation that
        keeps any member of every batch and plays any deterministic action
        rule of the kept signal. Action: per information set (θ⃗, i, g,
        principal signal, kept signal) the conditional gain of a deterministic
        action over π_i.

        Raises:
            EnumerationCapError: More one-period action rules than the cap
        """
        index = game.index
        n, s, a = game.n_agents, game.n_signals, game.n_actions
        cap = EnumerationConfig().cap if self.cap is None else self.cap
        check_cap("one-period action rules", a ** s, cap)
        rules = joint_tuples(s, a)                                                     # (P, S) action per kept signal
        kept_slots = np.arange(s)[None, :]
        selection_gaps = np.full((game.n_joint_types, n, game.n_states), -np.inf)
        action_gaps = np.full((game.n_joint_types, n, game.n_states, s, s, a), -np.inf)
        kept_table = selection.selected_signals(game)
        batches = game.batches
        principal_of_batch = batches[:, :1]
        batch_weights = game.exogenous_source[np.arange(game.n_batches) % game.n_exogenous]

        for ctx in iter_blocks(game, signaling, selection, policy, self.cap):
            q_pi = opponent_averaged_q(ctx.Q, ctx.pis, index)
            for agent in range(n):
                table = np.moveaxis(q_pi[agent], -1, 0)                               # (A, G, |Ω|^n)
                H = own_signal_average(pulled_back_values(table, ctx, index, agent), ctx.alpha, agent, n, s)
                followed = np.einsum("gwa,agwk->gwk", ctx.pis[agent], H)             # U[g, w, k]

                chosen = kept_table[agent, :, ctx.types[agent], :]                    # (G, B)
                current = np.take_along_axis(followed.reshape(game.n_states, -1), chosen * s + principal_of_batch[:, 0], axis=1)
                by_rule = np.moveaxis(H, 0, 2)[:, kept_slots, rules, :]               # (G, P, w, k)
                by_batch = by_rule[:, :, batches, principal_of_batch]                 # (G, P, B, m)
                best = (by_batch.max(axis=3) @ batch_weights).max(axis=1)
                selection_gaps[ctx.type_index, agent] = best - current @ batch_weights

                marginal = ctx.marginals[agent][:, None, :]
                reachable = (marginal > 0) & (np.swapaxes(ctx.channels[agent], 1, 2) > 0)
                safe = np.where(marginal > 0, marginal, 1.0)
                gain = (np.moveaxis(H, 0, -1) - followed[..., None]) / safe[..., None]  # (G, w, k, A)
                gain = np.where(reachable[..., None], gain, -np.inf)
                action_gaps[ctx.type_index, agent] = np.swapaxes(gain, 1, 2)           # (G, k, w, A)

        children = [
            CertificationReport.from_violations(
                "one-shot-selection", selection_gaps, ("joint_type", "agent", "state"), self.tolerance
            ),
            CertificationReport.from_violations(
                "one-shot-policy", action_gaps,
                ("joint_type", "agent", "state", "principal_signal", "kept_signal", "action"), self.tolerance,
            ),
        ]
        return CertificationReport.conjunction("one-shot", children, self.tolerance)


def check_mce(game: CanonicalGame, policy: JointPolicy, tol: float = DEFAULT_TOLERANCE) -> CertificationReport:
    return EquilibriumCertifier(tol).check_mce(game, policy)


def check_one_shot(
    game: AugmentedGame,
    signaling: SignalingRule,
    selection: SelectionRule,
    policy: Policy,
    tol: float = DEFAULT_TOLERANCE,
    cap: Optional[int] = None,
) -> CertificationReport:
    return EquilibriumCertifier(tol, cap).check_one_shot(game, signaling, selection, policy)
