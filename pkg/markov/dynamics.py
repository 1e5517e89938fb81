"""
Induced stochastic kernels of an augmented Markov game.

Handles:
- Bayes posteriors over opponents' principal signals
- Batch distributions (principal signal in slot 0, exogenous draws after it)
- Selection channels: how a selection rule maps principal signals to kept signals
- The joint action distribution and state kernel induced by (α, β, π)

Kernels that the solvers evaluate repeatedly are split into array-level
functions taking raw tables with arbitrary leading batch dimensions.
"""

import logging
from typing import Optional, Sequence

import numpy as np

from config import EnumerationConfig
from exceptions import OffSupportSignalError
from models.game import AugmentedGame
from models.strategy import Policy, SelectionRule, SignalingRule
from utils.tables import JointIndex, apply_channels, check_cap, joint_policy

logger = logging.getLogger(__name__)


def _cap(cap: Optional[int]) -> int:
    return EnumerationConfig().cap if cap is None else cap


def belief_update(
    signaling: SignalingRule,
    game: AugmentedGame,
    state: int,
    types: Sequence[int],
    signal: int,
    agent: int,
) -> np.ndarray:
    """
    Posterior over opponents' principal signals given the agent's own.

    Args:
        signaling: α
        game: Game the rule belongs to
        state: Current state g
        types: Joint type (tuple or flat index)
        signal: Agent's own principal signal ω_i^k
        agent: Agent i

    Returns:
        (|Ω|^(n-1),) distribution, opponents in increasing order

    Raises:
        OffSupportSignalError: α_i(ω_i^k | g, θ⃗) = 0
    """
    t = game.type_index(game.type_profile(types))
    row = signaling.block(t)[state].reshape((game.n_signals,) * game.n_agents)
    conditional = np.moveaxis(row, agent, 0)[signal].reshape(-1)
    mass = conditional.sum()
    if mass <= 0.0:
        raise OffSupportSignalError(
            f"agent {agent} never receives signal {signal} in state {state} under joint type {t}"
        )
    return conditional / mass


def batch_distribution(
    signaling: SignalingRule,
    game: AugmentedGame,
    state: int,
    types: Sequence[int],
    cap: Optional[int] = None,
) -> np.ndarray:
    """
    Distribution over joint batches (W_1, ..., W_n).

    Agent 0's batch is the most significant block of the flat index; within a
    batch the principal's signal comes first.

    Returns:
        (|Ω|^(m·n),) probabilities
    """
    size = game.n_batches ** game.n_agents
    check_cap("batch distribution", size, _cap(cap))
    t = game.type_index(game.type_profile(types))
    n, s = game.n_agents, game.n_signals
    table = signaling.block(t)[state].reshape((s,) * n)
    for _ in range(n):
        table = np.multiply.outer(table, game.exogenous_source)
    # axes are (k_0..k_{n-1}, W_0..W_{n-1}); interleave per agent
    order = [axis for i in range(n) for axis in (i, n + i)]
    return np.transpose(table, order).reshape(-1)


def selection_channels(game: AugmentedGame, selection: SelectionRule, types: Sequence[int]) -> np.ndarray:
    """
    Per-agent channels M_i[g, k, w] = P(kept signal = w | principal signal = k).

    The exogenous slots are integrated out against P^{-k}.

    Returns:
        (n, G, Ω, Ω) row-stochastic tables
    """
    types = game.type_profile(types)
    s = game.n_signals
    kept = selection.selected_signals(game)
    eye = np.eye(s)
    channels = []
    for agent in range(game.n_agents):
        own = kept[agent, :, types[agent], :].reshape(game.n_states, s, game.n_exogenous)
        channels.append(np.einsum("gkes,e->gks", eye[own], game.exogenous_source))
    return np.stack(channels)


def selected_signal_distribution(alpha: np.ndarray, channels: Optional[np.ndarray], index: JointIndex) -> np.ndarray:
    """σ(g, ω⃗): joint distribution of kept signals; α itself under obedience."""
    if channels is None:
        return alpha
    return apply_channels(alpha, channels, range(index.n_agents), index.n_agents, index.n_signals)


def action_distribution(sigma: np.ndarray, pis: np.ndarray, index: JointIndex) -> np.ndarray:
    """
    Joint action distribution per state.

    Args:
        sigma: (..., G, |Ω|^n) kept-signal distribution
        pis: (..., n, G, Ω, A) per-agent policy rows for the joint type

    Returns:
        (..., G, |A|^n)
    """
    return np.einsum("...gs,...gsa->...ga", sigma, joint_policy(pis, index))


def kernel_from_actions(actions: np.ndarray, transition: np.ndarray) -> np.ndarray:
    """K[g, g'] = Σ_a p(a | g) T(g' | g, a)."""
    return np.einsum("...ga,gah->...gh", actions, transition)


def pushforward(
    game: AugmentedGame,
    signaling: SignalingRule,
    selection: SelectionRule,
    policy: Policy,
    types: Sequence[int],
    cap: Optional[int] = None,
) -> np.ndarray:
    """
    Induced action distribution under (α, β, π) for one joint type.

    Returns:
        (G, |A|^n) rows
    """
    check_cap("joint signal-action table", game.n_states * game.n_joint_signals * game.n_joint_actions, _cap(cap))
    types = game.type_profile(types)
    t = game.type_index(types)
    channels = None if selection.is_obedient else selection_channels(game, selection, types)
    sigma = selected_signal_distribution(signaling.block(t), channels, game.index)
    return action_distribution(sigma, policy.for_types(types), game.index)


def induced_transition(
    game: AugmentedGame,
    signaling: SignalingRule,
    selection: SelectionRule,
    policy: Policy,
    types: Sequence[int],
    cap: Optional[int] = None,
) -> np.ndarray:
    """
    One-step state kernel under the full strategy stack.

    Returns:
        (G, G) row-stochastic table K[g, g']
    """
    return kernel_from_actions(pushforward(game, signaling, selection, policy, types, cap), game.transition)
