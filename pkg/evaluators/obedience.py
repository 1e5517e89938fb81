"""
Obedience certifiers.

Bayesian obedience: with every opponent keeping the principal's signal, an
agent holding principal signal k gains nothing by keeping another member of
any positive-probability batch instead.

Dominant-strategy obedience: the same holds against every deterministic
selection profile of the opponents. Only the kept signal value matters, so
profiles are enumerated over the distinct members of each reachable batch.
"""

import itertools
import logging
from typing import List, Optional, Tuple

import numpy as np

from config import EnumerationConfig
from evaluators.equilibrium import DEFAULT_TOLERANCE, BlockContext, block_context, identity_channels, iter_blocks, pulled_back_values
from models.game import AugmentedGame
from models.report import CertificationReport, ObedienceMode
from models.strategy import Policy, SelectionRule, SignalingRule
from utils.tables import check_cap, joint_tuples, own_signal_average

logger = logging.getLogger(__name__)


def exogenous_support(game: AugmentedGame) -> np.ndarray:
    """(Ω,) mask of signals that appear in some positive-probability exogenous draw."""
    support = np.zeros(game.n_signals, dtype=bool)
    tuples = joint_tuples(game.batch_size - 1, game.n_signals)
    support[np.unique(tuples[game.exogenous_source > 0])] = True
    return support


class ObedienceEvaluator:
    """Certifies DS or Bayesian obedience of a signaling rule under a policy."""

    def __init__(self, tolerance: float = DEFAULT_TOLERANCE, cap: Optional[int] = None):
        """
        Initialize evaluator.

        Args:
            tolerance: Slack allowed in every value comparison
            cap: Bound on enumerated tables and on opponent selection profiles (DS mode)
        """
        self.tolerance = tolerance
        self.cap = EnumerationConfig().cap if cap is None else cap

    def evaluate(
        self,
        game: AugmentedGame,
        signaling: SignalingRule,
        policy: Policy,
        mode: ObedienceMode = ObedienceMode.BAYESIAN,
    ) -> CertificationReport:
        if ObedienceMode(mode) == ObedienceMode.DS:
            return self.check_dominant(game, signaling, policy)
        return self.check_bayesian(game, signaling, policy)

    def _agent_gains(self, game: AugmentedGame, ctx: BlockContext, agent: int, support: np.ndarray) -> np.ndarray:
        """(G, k, w) normalized gain of keeping w instead of the principal's k."""
        n, s = game.n_agents, game.n_signals
        U = own_signal_average(pulled_back_values(ctx.V[agent], ctx, game.index, agent), ctx.alpha, agent, n, s)
        diagonal = np.einsum("gkk->gk", U)
        marginal = ctx.marginals[agent]
        safe = np.where(marginal > 0, marginal, 1.0)
        gain = (np.swapaxes(U, 1, 2) - diagonal[:, :, None]) / safe[:, :, None]
        allowed = (marginal[:, :, None] > 0) & support[None, None, :]
        return np.where(allowed, gain, -np.inf)

    def check_bayesian(self, game: AugmentedGame, signaling: SignalingRule, policy: Policy) -> CertificationReport:
        """Obedience against obedient opponents."""
        support = exogenous_support(game)
        gains = np.full((game.n_joint_types, game.n_agents, game.n_states, game.n_signals, game.n_signals), -np.inf)
        obedient = SelectionRule.obedient(game)
        for ctx in iter_blocks(game, signaling, obedient, policy, self.cap):
            for agent in range(game.n_agents):
                gains[ctx.type_index, agent] = self._agent_gains(game, ctx, agent, support)
        return CertificationReport.from_violations(
            "obedience-bayesian", gains,
            ("joint_type", "agent", "state", "principal_signal", "alternative"), self.tolerance,
        )

    def opponent_choices(self, game: AugmentedGame, ctx: BlockContext, agent: int) -> List[Tuple[int, int, int, Tuple[int, ...]]]:
        """
        Free choices of the opponents' deterministic selection rules.

        Returns:
            (opponent, state, batch, distinct members) for every reachable batch
            with more than one distinct member
        """
        choices = []
        batches = game.batches
        for opponent in game.index.opponents(agent):
            for state in range(game.n_states):
                for b, batch in enumerate(batches):
                    principal = int(batch[0])
                    if ctx.marginals[opponent, state, principal] <= 0:
                        continue
                    if game.exogenous_source[b % game.n_exogenous] <= 0:
                        continue
                    members = tuple(sorted(set(int(x) for x in batch)))
                    if len(members) > 1:
                        choices.append((opponent, state, b, members))
        return choices

    def count_profiles(self, game: AugmentedGame, signaling: SignalingRule, policy: Policy) -> int:
        obedient = SelectionRule.obedient(game)
        total = 0
        for t in range(game.n_joint_types):
            ctx = block_context(game, signaling, obedient, policy, t)
            for agent in range(game.n_agents):
                total += int(np.prod([len(c[3]) for c in self.opponent_choices(game, ctx, agent)], dtype=object))
        return total

    def _profile_channels(self, game: AugmentedGame, choices, picks) -> np.ndarray:
        s = game.n_signals
        kept = np.broadcast_to(game.batches[:, 0], (game.n_agents, game.n_states, game.n_batches)).copy()
        for (opponent, state, b, _), signal in zip(choices, picks):
            kept[opponent, state, b] = signal
        eye = np.eye(s)
        per_agent = kept.reshape(game.n_agents, game.n_states, s, game.n_exogenous)
        return np.einsum("ngkes,e->ngks", eye[per_agent], game.exogenous_source)

    def check_dominant(self, game: AugmentedGame, signaling: SignalingRule, policy: Policy) -> CertificationReport:
        """
        Obedience against every deterministic opponent selection profile.

        Raises:
            EnumerationCapError: More profiles than the cap
        """
        check_cap("opponent selection profiles", self.count_profiles(game, signaling, policy), self.cap)
        support = exogenous_support(game)
        obedient = SelectionRule.obedient(game)
        worst = None
        for t in range(game.n_joint_types):
            base = block_context(game, signaling, obedient, policy, t)
            for agent in range(game.n_agents):
                choices = self.opponent_choices(game, base, agent)
                for profile, picks in enumerate(itertools.product(*[c[3] for c in choices])):
                    channels = self._profile_channels(game, choices, picks)
                    channels[agent] = identity_channels(game)[agent]
                    ctx = block_context(game, signaling, obedient, policy, t, channels=channels)
                    gains = self._agent_gains(game, ctx, agent, support)
                    if not np.any(np.isfinite(gains)):
                        continue
                    flat = int(np.argmax(gains))
                    value = float(gains.flat[flat])
                    if worst is None or value > worst[0]:
                        state, principal, alternative = np.unravel_index(flat, gains.shape)
                        worst = (value, {
                            "joint_type": t, "agent": agent, "profile": profile, "state": int(state),
                            "principal_signal": int(principal), "alternative": int(alternative),
                        })
        if worst is None:
            return CertificationReport(condition="obedience-ds", verdict="pass", violation=0.0, tolerance=self.tolerance)
        violation = max(worst[0], 0.0)
        verdict = "pass" if violation <= self.tolerance else "fail"
        return CertificationReport(
            condition="obedience-ds", verdict=verdict, violation=violation, witness=worst[1], tolerance=self.tolerance
        )


def check_obedience(
    game: AugmentedGame,
    signaling: SignalingRule,
    policy: Policy,
    mode: ObedienceMode = ObedienceMode.BAYESIAN,
    tol: float = DEFAULT_TOLERANCE,
    cap: Optional[int] = None,
) -> CertificationReport:
    return ObedienceEvaluator(tol, cap).evaluate(game, signaling, policy, mode)
