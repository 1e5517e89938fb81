"""
Full-size acceptance runs. Deselected by default; run with `pytest -m slow`.
"""

import dataclasses

import numpy as np
import pytest

from config import SolverConfig
from dataset.generator import (
    dominated_goal_instance,
    planted_coordination,
    random_game,
    random_policy,
    random_selection,
    random_signaling,
)
from deviations import best_deviation_gains
from evaluators.admissibility import check_admissibility
from evaluators.equilibrium import check_one_shot
from evaluators.oil import check_oil, induced_goal, obedience_principle_experiment
from main import main
from markov.rollouts import simulate_rollouts
from markov.valuation import bellman_residuals, evaluate_values
from models.design import DesignProblem
from models.report import AdmissibilityMode
from models.strategy import Policy, SelectionRule, SignalingRule
from solvers.fpalign import solve_fpalign
from solvers.oracle import brute_force_oracle
from solvers.residuals import fpm_residuals
from utils.tables import joint_tuples, total_variation

pytestmark = pytest.mark.slow

SHAPES = [(2, 2, 2, 2, 1, 2), (2, 3, 2, 2, 1, 2), (3, 2, 2, 2, 1, 2), (2, 2, 2, 2, 2, 2)]


def _random_design(seed, shape):
    game = random_game(seed, shape)
    return game, random_signaling(game, seed), random_selection(game, seed + 1), random_policy(game, seed + 2)


def test_bellman_recursions_hold():
    for seed in range(100):
        game, signaling, selection, policy = _random_design(seed, SHAPES[seed % len(SHAPES)])
        for t in range(game.n_joint_types):
            bundle = evaluate_values(game, signaling, selection, policy, t)
            assert bellman_residuals(game, signaling, selection, policy, t, bundle).worst <= 1e-10


def test_rollouts_match_exact_values():
    for seed in range(20):
        game, signaling, selection, policy = _random_design(seed, SHAPES[0])
        J = evaluate_values(game, signaling, selection, policy, 0).J
        result = simulate_rollouts(game, signaling, selection, policy, 0, 200, 20000, seed)
        assert np.all(np.abs(result.means - J) <= 4 * result.std_errors + 1e-3)


def test_direct_designs_preserve_action_distributions(tmp_path):
    for seed in range(50):
        game = random_game(seed, SHAPES[seed % 2])
        signaling, selection = random_signaling(game, seed), random_selection(game, seed + 1)
        policy = random_policy(game, seed + 2, deterministic=True)
        artifact = tmp_path / f"counterexample-{seed}.txt"
        experiment = obedience_principle_experiment(game, signaling, selection, policy, artifact=artifact)
        assert experiment.total_variation <= 1e-12
        assert artifact.exists() == experiment.counterexample


def test_one_shot_check_covers_two_period_deviations():
    for seed in range(20):
        game = random_game(seed, SHAPES[0])
        signaling, obedient = random_signaling(game, seed), SelectionRule.obedient(game)
        policy = random_policy(game, seed + 1, deterministic=True)
        report = check_one_shot(game, signaling, obedient, policy)
        gains = [best_deviation_gains(game, signaling, obedient, policy, agent) for agent in range(game.n_agents)]
        best = max(one_period.max() for one_period, _ in gains)
        assert report.find("one-shot-selection").violation == pytest.approx(max(best, 0.0), abs=1e-9)
        if report.passed:
            assert max(two_period.max() for _, two_period in gains) <= 1e-7


def _favorite_play_game(seed):
    """Each agent is paid 2 for its favorite action and 1 for keeping signal 0; moves never steer the state."""
    rng = np.random.default_rng(seed)
    game = random_game(seed, SHAPES[0], discount=0.8)
    n, g, a = game.n_agents, game.n_states, game.n_actions
    transition = np.repeat(rng.dirichlet(np.ones(g), size=g)[:, None, :], game.n_joint_actions, axis=1)
    favorite = rng.integers(0, a, size=(n, g))
    rewards = np.array(game.rewards)
    own = joint_tuples(n, a)
    for i in range(n):
        rewards[i] += 2.0 * (own[:, i][:, None] == favorite[i][None, :])[..., None, None]
    rewards[:, :, :, 0, :] += 1.0
    alpha = np.zeros((g, game.n_joint_types, game.n_joint_signals))
    alpha[..., 0] = 1.0
    table = np.zeros((n, g, game.n_signals, game.n_types, a))
    for i in range(n):
        for state in range(g):
            table[i, state, :, :, favorite[i, state]] = 1.0
    return dataclasses.replace(game, transition=transition, rewards=rewards), SignalingRule(alpha), Policy(table)


def test_signal_paying_equilibria_have_no_two_period_deviation():
    for seed in range(20):
        game, signaling, policy = _favorite_play_game(seed)
        obedient = SelectionRule.obedient(game)
        assert check_one_shot(game, signaling, obedient, policy).passed
        for agent in range(game.n_agents):
            one_period, two_period = best_deviation_gains(game, signaling, obedient, policy, agent)
            assert one_period.max() <= 1e-9
            assert two_period.max() <= 1e-9


def test_strong_admissibility_implies_weak():
    for seed in range(100):
        game, signaling, selection, policy = _random_design(seed, SHAPES[3])
        goal = induced_goal(game, signaling, selection, policy)
        strong = check_admissibility(game, signaling, selection, policy, goal, AdmissibilityMode.STRONG)
        if strong.passed:
            assert check_admissibility(game, signaling, selection, policy, goal, AdmissibilityMode.WEAK).passed


def test_planted_goals_are_recovered():
    options = SolverConfig(restarts=16)
    recovered = 0
    for seed in range(20):
        instance = planted_coordination(seed)
        solution = solve_fpalign(DesignProblem(game=instance.game, goal=instance.goal), options)
        if solution.certified:
            # certificates are never issued without OIL
            assert check_oil(instance.game, solution.signaling, solution.policy, instance.goal, tol=1e-6).passed
            if total_variation(solution.induced_goal.table, instance.goal.table) <= 1e-3:
                recovered += 1
    assert recovered >= 16


def test_oracle_agrees_with_the_solver(micro, micro_goal):
    for seed in range(5):
        problem = DesignProblem(game=micro, goal=micro_goal)
        oracle = brute_force_oracle(problem, grid_resolution=10)
        solution = solve_fpalign(problem, SolverConfig(restarts=4, seed=seed))
        assert solution.certified
        assert np.max(np.abs(oracle.best[0].policy.table - solution.policy.table)) <= 0.1


def test_injected_misalignments_are_detected():
    rng = np.random.default_rng(0)
    for trial in range(100):
        instance = planted_coordination(trial % 5)
        game = instance.game
        bundle = evaluate_values(game, instance.signaling, SelectionRule.obedient(game), instance.policy, 0)
        agent, state = int(rng.integers(game.n_agents)), int(rng.integers(game.n_states))
        J = bundle.J.copy()
        J[agent, state] += 1e-4
        report = fpm_residuals(game, instance.signaling, instance.policy, J, bundle.V, 0)["FPM1"]
        assert report.violation >= 5e-5
        assert (report.witness["agent"], report.witness["state"]) == (agent, state)


def test_dominated_goals_are_never_certified():
    options = SolverConfig(restarts=4)
    for seed in range(10):
        game, goal = dominated_goal_instance(seed)
        assert not solve_fpalign(DesignProblem(game=game, goal=goal), options).certified


def test_cli_reports_are_deterministic(capsys, instances):
    argv = ["--seed", "7", "design", str(instances / "micro.toml"), str(instances / "micro-goal.toml")]
    outputs = set()
    for _ in range(10):
        assert main(argv) == 0
        outputs.add(capsys.readouterr().out)
    assert len(outputs) == 1
