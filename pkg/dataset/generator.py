"""
Seeded generators for games, strategies and planted design instances.

Every generator is a pure function of its seed: probability rows come from
the uniform-simplex sampler and rewards are uniform on the given interval.
"""

import logging
from dataclasses import dataclass
from typing import Optional, Tuple

import numpy as np

from config import EnumerationConfig
from evaluators.oil import induced_goal
from models.game import AugmentedGame
from models.strategy import Goal, Policy, PrincipalPayoff, SelectionRule, SignalingRule
from utils.tables import check_cap, ravel_joint, uniform_simplex

logger = logging.getLogger(__name__)

# (n_agents, |G|, |A|, |Ω|, |Θ|, m)
Dims = Tuple[int, int, int, int, int, int]


def random_game(
    seed: int,
    dims: Dims,
    reward_range: Tuple[float, float] = (0.0, 1.0),
    discount: float = 0.9,
    cap: Optional[int] = None,
) -> AugmentedGame:
    """
    Random augmented game.

    Raises:
        EnumerationCapError: G · |Ω|^n · |A|^n · |Θ|^n exceeds the cap
    """
    n, g, a, s, types, m = dims
    if min(dims) < 1 or m < 2:
        raise ValueError(f"dims must be positive with m >= 2, got {dims}")
    cap = EnumerationConfig().cap if cap is None else cap
    check_cap("joint game cells", g * s ** n * a ** n * types ** n, cap)
    rng = np.random.default_rng(seed)
    low, high = reward_range
    game = AugmentedGame(
        n_agents=n, n_states=g, n_actions=a, n_signals=s, n_types=types, batch_size=m,
        discount=discount,
        initial_state_dist=uniform_simplex(rng, (), g),
        type_prior=uniform_simplex(rng, (), types ** n),
        transition=uniform_simplex(rng, (g, a ** n), g),
        rewards=rng.uniform(low, high, size=(n, a ** n, g, s, types)),
        exogenous_source=uniform_simplex(rng, (), s ** (m - 1)),
        name=f"random-{seed}",
    )
    return game


def random_signaling(game: AugmentedGame, seed: int) -> SignalingRule:
    rng = np.random.default_rng(seed)
    return SignalingRule(uniform_simplex(rng, (game.n_states, game.n_joint_types), game.n_joint_signals))


def random_policy(game: AugmentedGame, seed: int, deterministic: bool = False) -> Policy:
    """Random policy; with `deterministic` every row is a vertex."""
    rng = np.random.default_rng(seed)
    shape = (game.n_agents, game.n_states, game.n_signals, game.n_types)
    if deterministic:
        return Policy(np.eye(game.n_actions)[rng.integers(0, game.n_actions, size=shape)])
    return Policy(uniform_simplex(rng, shape, game.n_actions))


def random_selection(game: AugmentedGame, seed: int) -> SelectionRule:
    rng = np.random.default_rng(seed)
    shape = (game.n_agents, game.n_states, game.n_types, game.n_batches)
    return SelectionRule(rng.integers(0, game.batch_size, size=shape))


@dataclass(frozen=True)
class PlantedInstance:
    """A game with a hand-built obedient equilibrium and the goal it induces."""
    game: AugmentedGame
    signaling: SignalingRule
    policy: Policy
    goal: Goal


def coordination_game(seed: int = 0, n_states: int = 2, discount: float = 0.9) -> AugmentedGame:
    """
    Two agents, |A| = |Ω| = |G|, one type, m = 2.

    Both agents earn a state-dependent bonus when they both play the action
    named after the current state; transitions ignore actions.
    """
    rng = np.random.default_rng(seed)
    g = n_states
    rewards = np.zeros((2, g * g, g, g, 1))
    bonus = rng.uniform(1.0, 2.0, size=(2, g))
    for state in range(g):
        rewards[:, ravel_joint((state, state), g), state, :, 0] = bonus[:, state, None]
    row = uniform_simplex(rng, (g,), g)
    return AugmentedGame(
        n_agents=2, n_states=g, n_actions=g, n_signals=g, n_types=1, batch_size=2,
        discount=discount,
        initial_state_dist=uniform_simplex(rng, (), g),
        type_prior=np.ones(1),
        transition=np.broadcast_to(row[:, None, :], (g, g * g, g)),
        rewards=rewards,
        exogenous_source=uniform_simplex(rng, (), g),
        name=f"coordination-{seed}",
    )


def planted_coordination(seed: int = 0, n_states: int = 2) -> PlantedInstance:
    """
    Coordination game with a revealing signaling rule: both agents are told
    the state and play the action named after it. κ is the induced goal.
    """
    game = coordination_game(seed, n_states)
    g = game.n_states
    alpha = np.zeros((g, 1, g * g))
    for state in range(g):
        alpha[state, 0, ravel_joint((state, state), g)] = 1.0
    policy = Policy(np.broadcast_to(np.eye(g)[None, None, :, None, :], (2, g, g, 1, g)))
    signaling = SignalingRule(alpha)
    goal = induced_goal(game, signaling, SelectionRule.obedient(game), policy)
    return PlantedInstance(game, signaling, policy, goal)


def dominated_goal_instance(seed: int = 0, n_agents: int = 2) -> Tuple[AugmentedGame, Goal]:
    """
    Game where action 1 is strictly dominated for every agent, paired with
    the goal that puts all mass on every agent playing it.
    """
    game = random_game(seed, (n_agents, 2, 2, 2, 1, 2))
    own_action = game.index.actions                                     # (|A|^n, n)
    bonus = (own_action == 0).T.astype(float)                           # (n, |A|^n)
    rewards = 0.1 * game.rewards + bonus[:, :, None, None, None]
    game = game.with_rewards(rewards)
    target = np.zeros((game.n_states, game.n_joint_types, game.n_joint_actions))
    target[..., ravel_joint((1,) * n_agents, 2)] = 1.0
    return game, Goal(target)


def random_payoff(game: AugmentedGame, seed: int, low: float = 0.0, high: float = 1.0) -> PrincipalPayoff:
    rng = np.random.default_rng(seed)
    return PrincipalPayoff(rng.uniform(low, high, size=(game.n_joint_actions, game.n_states, game.n_joint_types)))
