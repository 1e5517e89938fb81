"""
Monte Carlo rollouts of the augmented game, used as a sampling oracle for the
exact value solves.

Each period follows the timing of the design problem: the principal draws a
joint signal, every agent receives exogenous batch entries, keeps one signal
through its selection rule, acts through its policy, collects its reward and
the state moves on.
"""

import logging
from dataclasses import dataclass
from typing import Sequence, Union

import numpy as np

from models.game import AugmentedGame
from models.strategy import Goal, Policy, PrincipalPayoff, SelectionRule, SignalingRule

logger = logging.getLogger(__name__)


@dataclass(frozen=True)
class RolloutResult:
    """
    Attributes:
        means: (n, G) mean discounted return per agent and initial state
        std_errors: (n, G) standard errors of the means
        horizon: Periods simulated per run
        runs: Runs per initial state
    """
    means: np.ndarray
    std_errors: np.ndarray
    horizon: int
    runs: int


def sample_rows(rng: np.random.Generator, probabilities: np.ndarray) -> np.ndarray:
    """Inverse-CDF draw of one index per row of a (..., K) probability table."""
    cdf = np.cumsum(probabilities, axis=-1)
    u = rng.random(probabilities.shape[:-1])
    return np.minimum((cdf <= u[..., None]).sum(axis=-1), probabilities.shape[-1] - 1)


def _summarize(returns: np.ndarray, runs: int) -> tuple:
    means = returns.mean(axis=-1)
    if runs > 1:
        errors = returns.std(axis=-1, ddof=1) / np.sqrt(runs)
    else:
        errors = np.zeros_like(means)
    return means, errors


def simulate_rollouts(
    game: AugmentedGame,
    signaling: SignalingRule,
    selection: SelectionRule,
    policy: Policy,
    types: Union[int, Sequence[int]],
    horizon: int,
    n_runs: int,
    seed: int = 0,
) -> RolloutResult:
    """
    Discounted returns from every initial state, truncated at the horizon.

    Args:
        game: Augmented game
        signaling: α
        selection: β
        policy: π
        types: Joint type held fixed for the whole run
        horizon: Number of periods (≥ 1)
        n_runs: Runs per initial state
        seed: Seed for numpy's default generator

    Returns:
        RolloutResult with (n, G) means and standard errors
    """
    if horizon < 1:
        raise ValueError("horizon must be at least 1")
    rng = np.random.default_rng(seed)
    types = game.type_profile(types)
    t = game.type_index(types)
    n = game.n_agents
    alpha = signaling.block(t)
    signals = game.index.signals
    kept_table = selection.selected_signals(game)
    pis = policy.for_types(types)
    rewards = game.rewards_for(types)
    action_weights = np.array([game.n_actions ** (n - 1 - i) for i in range(n)])

    states = np.repeat(np.arange(game.n_states), n_runs)
    returns = np.zeros((n, states.size))
    discount = 1.0
    for _ in range(horizon):
        principal = signals[sample_rows(rng, alpha[states])]
        exogenous = sample_rows(rng, np.broadcast_to(game.exogenous_source, (states.size, n, game.n_exogenous)))
        batches = principal * game.n_exogenous + exogenous
        kept = np.stack([kept_table[i, states, types[i], batches[:, i]] for i in range(n)], axis=1)
        actions = np.stack([sample_rows(rng, pis[i, states, kept[:, i]]) for i in range(n)], axis=1)
        joint = actions @ action_weights
        for i in range(n):
            returns[i] += discount * rewards[i, joint, states, kept[:, i]]
        states = sample_rows(rng, game.transition[states, joint])
        discount *= game.discount

    means, errors = _summarize(returns.reshape(n, game.n_states, n_runs), n_runs)
    logger.debug("Simulated %d runs of %d periods from each of %d states", n_runs, horizon, game.n_states)
    return RolloutResult(means=means, std_errors=errors, horizon=horizon, runs=n_runs)


def simulate_goal_rollouts(
    game: AugmentedGame,
    payoff: PrincipalPayoff,
    goal: Goal,
    horizon: int,
    n_runs: int,
    seed: int = 0,
) -> tuple:
    """
    Principal's discounted payoff when joint actions are drawn from κ directly.

    Types come from d_θ and initial states from d_g.

    Returns:
        (mean, standard error)
    """
    rng = np.random.default_rng(seed)
    types = sample_rows(rng, np.broadcast_to(game.type_prior, (n_runs, game.n_joint_types)))
    states = sample_rows(rng, np.broadcast_to(game.initial_state_dist, (n_runs, game.n_states)))
    total = np.zeros(n_runs)
    discount = 1.0
    for _ in range(horizon):
        joint = sample_rows(rng, goal.table[states, types])
        total += discount * payoff.table[joint, states, types]
        states = sample_rows(rng, game.transition[states, joint])
        discount *= game.discount
    means, errors = _summarize(total[None, :], n_runs)
    return float(means[0]), float(errors[0])

