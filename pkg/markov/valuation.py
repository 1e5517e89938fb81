"""
Exact value tables for augmented and canonical Markov games.

For one joint type, with kept-signal distribution σ, joint policy Π and
transition T the recursions are

    Q_i(a⃗, g, ω_i)   = R_i(a⃗, g, ω_i) + γ Σ_h T(h | g, a⃗) J_i(h)
    V_i(g, ω⃗)        = Σ_a⃗ Π(a⃗ | g, ω⃗) Q_i(a⃗, g, ω_i)
    J_i(g)           = Σ_ω⃗ σ(ω⃗ | g) V_i(g, ω⃗)

so J solves (I - γK) J = r̄ with K the induced kernel; V and Q follow by
back-substitution. Array-level kernels accept leading batch dimensions.
"""

import logging
from typing import Optional, Sequence, Tuple, Union

import numpy as np

from config import CertificationConfig, EnumerationConfig
from exceptions import ConvergenceError, OffSupportSignalError
from markov.dynamics import selected_signal_distribution, selection_channels
from models.game import AugmentedGame, CanonicalGame
from models.strategy import JointPolicy, Policy, SelectionRule, SignalingRule
from models.values import AggregateValues, BellmanResiduals, ValueBundle
from utils.tables import (
    JointIndex,
    check_cap,
    joint_policy,
    opponent_policy,
    own_signal_average,
    signal_marginal,
)

logger = logging.getLogger(__name__)


# Array-level kernels

def selected_rewards(rewards: np.ndarray, index: JointIndex) -> np.ndarray:
    """(n, |A|^n, G, |Ω|^n): each agent's reward read at its own slot of the joint signal."""
    return np.stack([rewards[i][:, :, index.signals[:, i]] for i in range(index.n_agents)])


def block_values(
    rewards: np.ndarray,
    transition: np.ndarray,
    gamma: float,
    sigma: np.ndarray,
    pis: np.ndarray,
    index: JointIndex,
) -> Tuple[np.ndarray, np.ndarray, np.ndarray]:
    """
    Exact (J, V, Q) by a direct linear solve.

    Args:
        rewards: (n, |A|^n, G, Ω) rewards for the joint type
        transition: (G, |A|^n, G)
        gamma: Discount
        sigma: (..., G, |Ω|^n) kept-signal distribution
        pis: (..., n, G, Ω, A) policy rows for the joint type
        index: Joint index bookkeeping

    Returns:
        J (..., n, G), V (..., n, G, |Ω|^n), Q (..., n, |A|^n, G, Ω)
    """
    joint = joint_policy(pis, index)
    immediate = np.einsum("...gsa,iags->...igs", joint, selected_rewards(rewards, index))
    step = np.einsum("...gsa,gah->...gsh", joint, transition)
    reward_rate = np.einsum("...gs,...igs->...ig", sigma, immediate)
    kernel = np.einsum("...gs,...gsh->...gh", sigma, step)
    g = transition.shape[0]
    system = np.eye(g) - gamma * kernel
    J = np.moveaxis(np.linalg.solve(system, np.moveaxis(reward_rate, -2, -1)), -1, -2)
    V = immediate + gamma * np.einsum("...gsh,...ih->...igs", step, J)
    Q = continuation_q(rewards, transition, gamma, J)
    return J, V, Q


def continuation_q(rewards: np.ndarray, transition: np.ndarray, gamma: float, J: np.ndarray) -> np.ndarray:
    """Q_i(a⃗, g, ω_i) = R_i + γ T·J_i; J is (..., n, G)."""
    future = np.einsum("gah,...ih->...iag", transition, J)
    return rewards + gamma * future[..., None]


def opponent_averaged_q(q: np.ndarray, pis: np.ndarray, index: JointIndex) -> np.ndarray:
    """
    Qπ_i(a_i, g, ω⃗): Q averaged over opponents' actions drawn at their own signals.

    Args:
        q: (..., n, |A|^n, G, Ω)
        pis: (..., n, G, Ω, A)

    Returns:
        (..., n, G, |Ω|^n, A)
    """
    tables = []
    for agent in range(index.n_agents):
        split = index.split_actions(q[..., agent, :, :, :], agent, axis=-3)
        at_signals = np.take(split, index.signals[:, agent], axis=-1)
        opponents = opponent_policy(pis, index, agent)
        tables.append(np.einsum("...gsk,...akgs->...gsa", opponents, at_signals))
    return np.stack(tables, axis=-4)


def alpha_averaged_q(
    rewards: np.ndarray,
    transition: np.ndarray,
    gamma: float,
    alpha: np.ndarray,
    V: np.ndarray,
) -> np.ndarray:
    """Qα_i(a⃗, g, ω_i^k) = R_i + γ Σ_h T(h|g,a⃗) Σ_ω⃗ α(ω⃗|h) V_i(h, ω⃗)."""
    expected = np.einsum("...hs,...ihs->...ih", alpha, V)
    return continuation_q(rewards, transition, gamma, expected)


def own_signal_values(V: np.ndarray, alpha: np.ndarray, index: JointIndex) -> np.ndarray:
    """
    U_i[g, ω_i, ω_i^k] = Σ_{ω⃗_{-i}} α(ω_i^k, ω⃗_{-i} | g) V_i(g, ω_i, ω⃗_{-i}).

    Dividing by α_i(ω_i^k | g) gives V^{α_{-i}}_i.

    Returns:
        (..., n, G, Ω, Ω)
    """
    return np.stack(
        [own_signal_average(V[..., i, :, :], alpha, i, index.n_agents, index.n_signals) for i in range(index.n_agents)],
        axis=-4,
    )


def signal_marginals(alpha: np.ndarray, index: JointIndex) -> np.ndarray:
    """(..., n, G, Ω) per-agent marginals α_i(ω_i^k | g)."""
    return np.stack(
        [signal_marginal(alpha, i, index.n_agents, index.n_signals) for i in range(index.n_agents)],
        axis=-3,
    )


# Game-level operations

def _block_inputs(game: AugmentedGame, signaling: SignalingRule, selection: SelectionRule,
                  policy: Policy, types, cap: Optional[int]):
    check_cap(
        "joint signal-action table",
        game.n_states * game.n_joint_signals * game.n_joint_actions,
        EnumerationConfig().cap if cap is None else cap,
    )
    types = game.type_profile(types)
    t = game.type_index(types)
    channels = None if selection.is_obedient else selection_channels(game, selection, types)
    sigma = selected_signal_distribution(signaling.block(t), channels, game.index)
    return types, sigma, policy.for_types(types)


def evaluate_values(
    game: AugmentedGame,
    signaling: SignalingRule,
    selection: SelectionRule,
    policy: Policy,
    types: Union[int, Sequence[int]],
    cap: Optional[int] = None,
) -> ValueBundle:
    """
    Exact V, J, Q for one joint type by direct solve.

    Args:
        game: Augmented game
        signaling: α
        selection: β (use SelectionRule.obedient for β^O)
        policy: π
        types: Joint type, tuple or flat index
        cap: Enumeration cap override

    Returns:
        ValueBundle satisfying the three recursions
    """
    types, sigma, pis = _block_inputs(game, signaling, selection, policy, types, cap)
    J, V, Q = block_values(game.rewards_for(types), game.transition, game.discount, sigma, pis, game.index)
    return ValueBundle(V=V, J=J, Q=Q)


def solve_values_iterative(
    game: AugmentedGame,
    signaling: SignalingRule,
    selection: SelectionRule,
    policy: Policy,
    types: Union[int, Sequence[int]],
    start: Union[str, np.ndarray] = "zero",
    config: Optional[CertificationConfig] = None,
    cap: Optional[int] = None,
) -> ValueBundle:
    """
    Value iteration on J from a chosen start, then back-substitution.

    Args:
        start: "zero", "upper" (R_max/(1-γ) everywhere) or an (n, G) table
        config: Iteration budget and sup-norm criterion

    Raises:
        ConvergenceError: Budget exhausted before the sup-norm change fell below tolerance
    """
    config = config or CertificationConfig()
    types, sigma, pis = _block_inputs(game, signaling, selection, policy, types, cap)
    rewards = game.rewards_for(types)
    index = game.index
    joint = joint_policy(pis, index)
    immediate = np.einsum("gsa,iags->igs", joint, selected_rewards(rewards, index))
    step = np.einsum("gsa,gah->gsh", joint, game.transition)
    reward_rate = np.einsum("gs,igs->ig", sigma, immediate)
    kernel = np.einsum("gs,gsh->gh", sigma, step)

    if isinstance(start, str):
        fill = 0.0 if start == "zero" else game.value_bound
        J = np.full((game.n_agents, game.n_states), fill)
    else:
        J = np.array(start, dtype=np.float64)

    change = np.inf
    for iteration in range(config.max_iterations):
        updated = reward_rate + game.discount * J @ kernel.T
        change = float(np.max(np.abs(updated - J)))
        J = updated
        if change <= config.convergence_tol:
            logger.debug("Value iteration converged after %d sweeps", iteration + 1)
            break
    else:
        raise ConvergenceError("value iteration did not converge", change)

    V = immediate + game.discount * np.einsum("gsh,ih->igs", step, J)
    Q = continuation_q(rewards, game.transition, game.discount, J)
    return ValueBundle(V=V, J=J, Q=Q)


def bellman_residuals(
    game: AugmentedGame,
    signaling: SignalingRule,
    selection: SelectionRule,
    policy: Policy,
    types: Union[int, Sequence[int]],
    bundle: ValueBundle,
) -> BellmanResiduals:
    """Max absolute residual of the V, J and Q recursions for a bundle."""
    types, sigma, pis = _block_inputs(game, signaling, selection, policy, types, None)
    index = game.index
    rewards = game.rewards_for(types)
    joint = joint_policy(pis, index)
    q_at_signals = np.stack([bundle.Q[i][:, :, index.signals[:, i]] for i in range(game.n_agents)])
    v_rhs = np.einsum("gsa,iags->igs", joint, q_at_signals)
    j_rhs = np.einsum("gs,igs->ig", sigma, bundle.V)
    q_rhs = continuation_q(rewards, game.transition, game.discount, bundle.J)
    return BellmanResiduals(
        v_recursion=float(np.max(np.abs(bundle.V - v_rhs))),
        j_recursion=float(np.max(np.abs(bundle.J - j_rhs))),
        q_recursion=float(np.max(np.abs(bundle.Q - q_rhs))),
    )


def q_from_j(game: AugmentedGame, J: np.ndarray, types: Union[int, Sequence[int]]) -> np.ndarray:
    """(n, |A|^n, G, Ω) table of R_i(a⃗, g, ω_i | θ_i) + γ Σ_h T(h|g,a⃗) J_i(h)."""
    return continuation_q(game.rewards_for(game.type_profile(types)), game.transition, game.discount, J)


def q_under_opponents(game: AugmentedGame, policy: Policy, J: np.ndarray, types: Union[int, Sequence[int]]) -> np.ndarray:
    """(n, G, |Ω|^n, A) table of Qπ_i(a_i, g, ω⃗; J_i)."""
    types = game.type_profile(types)
    return opponent_averaged_q(q_from_j(game, J, types), policy.for_types(types), game.index)


def q_under_alpha(game: AugmentedGame, signaling: SignalingRule, V: np.ndarray, types: Union[int, Sequence[int]]) -> np.ndarray:
    """(n, |A|^n, G, Ω) table of Qα_i(a⃗, g; ω_i^k; V_i)."""
    types = game.type_profile(types)
    alpha = signaling.block(game.type_index(types))
    return alpha_averaged_q(game.rewards_for(types), game.transition, game.discount, alpha, V)


def v_under_alpha(game: AugmentedGame, signaling: SignalingRule, V: np.ndarray, types: Union[int, Sequence[int]]) -> np.ndarray:
    """
    (n, G, Ω[ω_i], Ω[ω_i^k]) table of V^{α_{-i}}_i with the Bayes conditional of α.

    Columns with α_i(ω_i^k | g) = 0 are NaN; use `conditional_value` for a
    checked point lookup.
    """
    types = game.type_profile(types)
    alpha = signaling.block(game.type_index(types))
    unnormalized = own_signal_values(V, alpha, game.index)
    marginals = signal_marginals(alpha, game.index)[:, :, None, :]
    with np.errstate(invalid="ignore", divide="ignore"):
        return np.where(marginals > 0, unnormalized / np.where(marginals > 0, marginals, 1.0), np.nan)


def conditional_value(
    game: AugmentedGame,
    signaling: SignalingRule,
    V: np.ndarray,
    types: Union[int, Sequence[int]],
    agent: int,
    state: int,
    kept: int,
    principal: int,
) -> float:
    """
    V^{α_{-i}}_i(g, ω_i; ω_i^k) at one index.

    Raises:
        OffSupportSignalError: α_i(ω_i^k | g) = 0
    """
    types = game.type_profile(types)
    alpha = signaling.block(game.type_index(types))
    if signal_marginals(alpha, game.index)[agent, state, principal] <= 0:
        raise OffSupportSignalError(f"agent {agent} never receives signal {principal} in state {state}")
    return float(v_under_alpha(game, signaling, V, types)[agent, state, kept, principal])


def aggregate_values(
    game: AugmentedGame,
    signaling: SignalingRule,
    policy: Policy,
    bundle: ValueBundle,
    types: Union[int, Sequence[int]],
) -> AggregateValues:
    """Qπ from J, Qα and Vα from V, all for one joint type."""
    return AggregateValues(
        q_pi=q_under_opponents(game, policy, bundle.J, types),
        q_alpha=q_under_alpha(game, signaling, bundle.V, types),
        v_alpha=v_under_alpha(game, signaling, bundle.V, types),
    )


# Canonical games

def canonical_values(game: CanonicalGame, policy: JointPolicy) -> np.ndarray:
    """(n, G) discounted values of the canonical game under a joint policy."""
    reward_rate = np.einsum("ga,iag->ig", policy.table, game.rewards)
    kernel = np.einsum("ga,gah->gh", policy.table, game.transition)
    system = np.eye(game.n_states) - game.discount * kernel
    return np.linalg.solve(system, reward_rate.T).T


def interim_payoffs(game: CanonicalGame, policy: JointPolicy) -> np.ndarray:
    """(n, |A|^n, G) table of Expr_i(g, a⃗): play a⃗ now, then follow π̂."""
    J = canonical_values(game, policy)
    return game.rewards + game.discount * np.einsum("gah,ih->iag", game.transition, J)


def interim_payoff(game: CanonicalGame, policy: JointPolicy, state: int, joint_action: int, agent: int) -> float:
    return float(interim_payoffs(game, policy)[agent, joint_action, state])
