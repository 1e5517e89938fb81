"""Exact value solves, the iterative path and Monte Carlo agreement."""

import math

import numpy as np
import pytest

from config import CertificationConfig
from dataset.generator import random_game, random_policy, random_selection, random_signaling
from evaluators.validation import canonical_projection
from exceptions import ConvergenceError, OffSupportSignalError
from markov.dynamics import pushforward
from markov.rollouts import simulate_rollouts
from markov.valuation import (
    aggregate_values,
    bellman_residuals,
    canonical_values,
    conditional_value,
    evaluate_values,
    q_from_j,
    q_under_alpha,
    solve_values_iterative,
)
from models.strategy import JointPolicy, Policy, SelectionRule, SignalingRule

BELLMAN_DIMS = (2, 3, 2, 2, 1, 2)


def _strategies(game, seed):
    return random_signaling(game, seed), random_selection(game, seed + 1), random_policy(game, seed + 2)


@pytest.mark.parametrize("seed", range(10))
def test_bellman_recursions_hold(seed):
    game = random_game(seed, BELLMAN_DIMS)
    signaling, selection, policy = _strategies(game, 100 + seed)
    bundle = evaluate_values(game, signaling, selection, policy, 0)
    residuals = bellman_residuals(game, signaling, selection, policy, 0, bundle)
    assert residuals.worst <= 1e-10


def test_bellman_recursions_hold_for_every_joint_type(typed_game):
    signaling, selection, policy = _strategies(typed_game, 4)
    for t in range(typed_game.n_joint_types):
        bundle = evaluate_values(typed_game, signaling, selection, policy, t)
        assert bellman_residuals(typed_game, signaling, selection, policy, t, bundle).worst <= 1e-10


def test_shifted_bundle_breaks_recursions(small_game):
    signaling, selection, policy = _strategies(small_game, 0)
    bundle = evaluate_values(small_game, signaling, selection, policy, 0)
    residuals = bellman_residuals(small_game, signaling, selection, policy, 0, bundle.shifted(0, 0.0, 1.0, 0.0))
    assert residuals.j_recursion == pytest.approx(1.0)
    assert residuals.q_recursion == pytest.approx(small_game.discount)


def test_values_are_bounded(small_game):
    signaling, selection, policy = _strategies(small_game, 9)
    bundle = evaluate_values(small_game, signaling, selection, policy, 0)
    assert np.all(np.abs(bundle.J) <= small_game.value_bound + 1e-12)


@pytest.mark.parametrize("agent", range(2))
def test_reward_shift_moves_one_agents_values(small_game, agent):
    shift, gamma = 0.7, small_game.discount
    signaling, selection, policy = _strategies(small_game, 11)
    rewards = np.array(small_game.rewards)
    rewards[agent] += shift
    base = evaluate_values(small_game, signaling, selection, policy, 0)
    moved = evaluate_values(small_game.with_rewards(rewards), signaling, selection, policy, 0)
    expected = np.zeros(small_game.n_agents)
    expected[agent] = shift / (1 - gamma)
    assert np.allclose(moved.J - base.J, expected[:, None], atol=1e-10)
    assert np.allclose(moved.V - base.V, expected[:, None, None], atol=1e-10)
    assert np.allclose(moved.Q - base.Q, expected[:, None, None, None], atol=1e-10)


@pytest.mark.parametrize("gamma", [0.0, 0.5, 0.9, 0.99])
def test_values_are_continuous_in_the_discount(small_game, gamma):
    signaling, selection, policy = _strategies(small_game, 12)
    near = evaluate_values(small_game.with_discount(gamma), signaling, selection, policy, 0).J
    nudged = evaluate_values(small_game.with_discount(gamma + 1e-6), signaling, selection, policy, 0).J
    assert np.max(np.abs(near - nudged)) <= 1e-4 * small_game.reward_max / (1 - gamma) ** 2


def test_continuation_tables_are_affine_in_values(small_game):
    signaling, selection, policy = _strategies(small_game, 13)
    bundle = evaluate_values(small_game, signaling, selection, policy, 0)
    for table, values in ((lambda x: q_from_j(small_game, x, 0), bundle.J),
                          (lambda x: q_under_alpha(small_game, signaling, x, 0), bundle.V)):
        zero, once, twice = table(np.zeros_like(values)), table(values), table(2 * values)
        assert np.allclose(twice - once, once - zero, atol=1e-12)
        assert np.allclose(zero, small_game.rewards_for(0))


def test_continuation_tables_scale_without_rewards(small_game):
    game = small_game.with_rewards(np.zeros_like(small_game.rewards))
    signaling, selection, policy = _strategies(small_game, 14)
    bundle = evaluate_values(small_game, signaling, selection, policy, 0)
    assert np.allclose(q_from_j(game, 3 * bundle.J, 0), 3 * q_from_j(game, bundle.J, 0))
    assert np.allclose(q_under_alpha(game, signaling, -2 * bundle.V, 0), -2 * q_under_alpha(game, signaling, bundle.V, 0))


@pytest.mark.parametrize("start", ["zero", "upper"])
def test_iteration_reaches_the_unique_fixed_point(small_game, start):
    signaling, selection, policy = _strategies(small_game, 2)
    exact = evaluate_values(small_game, signaling, selection, policy, 0)
    iterated = solve_values_iterative(small_game, signaling, selection, policy, 0, start=start)
    assert np.allclose(iterated.J, exact.J, atol=1e-10)
    assert np.allclose(iterated.V, exact.V, atol=1e-10)
    assert np.allclose(iterated.Q, exact.Q, atol=1e-10)


def test_iteration_budget(small_game):
    signaling, selection, policy = _strategies(small_game, 2)
    with pytest.raises(ConvergenceError) as info:
        solve_values_iterative(small_game, signaling, selection, policy, 0,
                               config=CertificationConfig(max_iterations=3))
    assert info.value.residual > 0


def test_micro_values(micro):
    # action 0 pays 1 forever
    policy = Policy(np.array([[[[[1.0, 0.0]]]]]))
    bundle = evaluate_values(micro, SignalingRule.uniform(micro), SelectionRule.obedient(micro), policy, 0)
    assert bundle.J[0, 0] == pytest.approx(10.0)
    assert bundle.Q[0, :, 0, 0] == pytest.approx([10.0, 9.0])


def test_conditional_value_off_support(planted):
    game = planted.game
    bundle = evaluate_values(game, planted.signaling, SelectionRule.obedient(game), planted.policy, 0)
    with pytest.raises(OffSupportSignalError):
        conditional_value(game, planted.signaling, bundle.V, 0, agent=0, state=0, kept=0, principal=1)
    assert conditional_value(game, planted.signaling, bundle.V, 0, 0, 0, 0, 0) == pytest.approx(bundle.J[0, 0])


def test_aggregate_tables_have_documented_shapes(small_game):
    signaling, selection, policy = _strategies(small_game, 6)
    bundle = evaluate_values(small_game, signaling, SelectionRule.obedient(small_game), policy, 0)
    aggregate = aggregate_values(small_game, signaling, policy, bundle, 0)
    assert aggregate.q_pi.shape == (2, 3, 4, 2)
    assert aggregate.q_alpha.shape == (2, 4, 3, 2)
    assert aggregate.v_alpha.shape == (2, 3, 2, 2)


def test_canonical_values_match_obedient_values(planted):
    game = planted.game
    bundle = evaluate_values(game, planted.signaling, SelectionRule.obedient(game), planted.policy, 0)
    canonical = canonical_projection(game, 0, signal=0)
    joint = JointPolicy(pushforward(game, planted.signaling, SelectionRule.obedient(game), planted.policy, 0))
    # coordination rewards do not depend on the signal
    assert np.allclose(canonical_values(canonical, joint), bundle.J)


def _horizon(game, bound=1e-3):
    return math.ceil(math.log(bound * (1 - game.discount) / game.reward_max) / math.log(game.discount))


@pytest.mark.parametrize("seed", range(2))
def test_rollouts_agree_with_exact_values(seed):
    game = random_game(seed, BELLMAN_DIMS)
    signaling, selection, policy = _strategies(game, seed)
    exact = evaluate_values(game, signaling, selection, policy, 0)
    horizon = _horizon(game)
    result = simulate_rollouts(game, signaling, selection, policy, 0, horizon, 4000, seed=seed)
    slack = 4 * result.std_errors + 1e-3
    assert np.all(np.abs(result.means - exact.J) <= slack)


def test_rollouts_are_seeded(small_game):
    signaling, selection, policy = _strategies(small_game, 0)
    first = simulate_rollouts(small_game, signaling, selection, policy, 0, 10, 50, seed=3)
    second = simulate_rollouts(small_game, signaling, selection, policy, 0, 10, 50, seed=3)
    assert np.array_equal(first.means, second.means)


def test_rollouts_need_a_horizon(small_game):
    signaling, selection, policy = _strategies(small_game, 0)
    with pytest.raises(ValueError):
        simulate_rollouts(small_game, signaling, selection, policy, 0, 0, 10)
