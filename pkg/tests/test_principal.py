"""Principal values and the optimal-design solver."""

import numpy as np
import pytest

from config import SolverConfig
from dataset.generator import random_payoff, random_policy, random_signaling
from exceptions import ShapeMismatchError
from models.strategy import Goal, PrincipalPayoff
from solvers.principal import (
    favorite_goal,
    goal_and_direct_values,
    principal_value,
    principal_value_direct,
    principal_values_by_type,
    solve_optimal_design,
)


def _constant(game, c):
    return PrincipalPayoff(np.full((game.n_joint_actions, game.n_states, game.n_joint_types), c))


def test_constant_payoff_is_a_geometric_series(small_game):
    goal = Goal(np.full((small_game.n_states, small_game.n_joint_types, small_game.n_joint_actions),
                        1.0 / small_game.n_joint_actions))
    value = principal_value(small_game, _constant(small_game, 2.0), goal)
    assert value == pytest.approx(2.0 / (1 - small_game.discount))


@pytest.mark.parametrize("seed", range(5))
def test_goal_and_direct_values_agree(typed_game, seed):
    signaling, policy = random_signaling(typed_game, seed), random_policy(typed_game, seed + 1)
    payoff = random_payoff(typed_game, seed + 2)
    through_goal, direct = goal_and_direct_values(typed_game, payoff, signaling, policy)
    assert through_goal == pytest.approx(direct, abs=1e-10)


def test_values_are_monotone_in_the_payoff(small_game):
    signaling, policy = random_signaling(small_game, 0), random_policy(small_game, 1)
    payoff = random_payoff(small_game, 2)
    raised = PrincipalPayoff(payoff.table + 0.5)
    base = principal_value_direct(small_game, payoff, signaling, policy)
    assert principal_value_direct(small_game, raised, signaling, policy) == pytest.approx(
        base + 0.5 / (1 - small_game.discount))


def test_values_by_type_average_to_the_value(typed_game):
    payoff = random_payoff(typed_game, 4)
    goal = favorite_goal(typed_game, payoff)
    by_type = principal_values_by_type(typed_game, payoff, goal)
    assert by_type.shape == (typed_game.n_joint_types,)
    assert float(typed_game.type_prior @ by_type) == pytest.approx(principal_value(typed_game, payoff, goal))


def test_favorite_goal_is_the_argmax(micro):
    goal = favorite_goal(micro, PrincipalPayoff(np.array([0.2, 0.7]).reshape(2, 1, 1)))
    assert goal.table.tolist() == [[[0.0, 1.0]]]


def test_payoff_shape_is_checked(micro, micro_goal):
    with pytest.raises(ShapeMismatchError):
        principal_value(micro, PrincipalPayoff(np.zeros((3, 1, 1))), micro_goal)


def test_optimal_design_on_the_micro_game(micro, serial):
    payoff = PrincipalPayoff(np.array([1.0, 0.0]).reshape(2, 1, 1))
    solution = solve_optimal_design(micro, payoff, SolverConfig(restarts=1), serial)
    assert solution.certified
    assert solution.principal_value == pytest.approx(10.0, abs=1e-6)
    assert solution.principal_value_by_type.shape == (1,)
    assert solution.induced_goal.table[0, 0, 0] == pytest.approx(1.0)
