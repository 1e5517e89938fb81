"""Objectives and residual families of the fixed-point-alignment program."""

import numpy as np
import pytest

from dataset.generator import random_policy, random_signaling
from markov.valuation import evaluate_values
from models.report import AdmissibilityMode
from models.strategy import Goal, Policy, SelectionRule, SignalingRule
from solvers.residuals import (
    constraint_residuals,
    fpm_residuals,
    j_optimality_residual,
    z_objective,
    zfpa_objective,
)


def _exact(instance):
    game = instance.game
    return evaluate_values(game, instance.signaling, SelectionRule.obedient(game), instance.policy, 0)


def test_planted_design_has_no_residuals(planted):
    game, bundle = planted.game, _exact(planted)
    reports = constraint_residuals(game, planted.signaling, planted.policy, bundle.J, bundle.V, planted.goal, 0)
    assert set(reports) == {"RG", "FE", "BOB0", "BOB1", "FS", "AD"}
    assert all(report.violation <= 1e-10 for report in reports.values())
    assert all(report.violation <= 1e-10 for report in fpm_residuals(
        game, planted.signaling, planted.policy, bundle.J, bundle.V, 0).values())


def test_objectives_vanish_at_exact_values(planted):
    game, bundle = planted.game, _exact(planted)
    assert abs(z_objective(game, planted.signaling, planted.policy, bundle.V, 0)) <= 1e-10
    assert abs(zfpa_objective(game, planted.signaling, bundle.J, bundle.V, 0)) <= 1e-10


def test_shifting_v_moves_z_by_one_minus_gamma(planted):
    game, bundle = planted.game, _exact(planted)
    # one supported joint signal per state: n * G terms
    terms = game.n_agents * game.n_states
    z = z_objective(game, planted.signaling, planted.policy, bundle.V + 1.0, 0)
    assert z == pytest.approx((1 - game.discount) * terms, abs=1e-9)


def test_zfpa_is_linear_in_j(planted):
    game, bundle = planted.game, _exact(planted)
    base = zfpa_objective(game, planted.signaling, bundle.J, bundle.V, 0)
    shifted = zfpa_objective(game, planted.signaling, bundle.J + 0.25, bundle.V, 0)
    assert shifted - base == pytest.approx(0.25 * game.n_agents * game.n_states)


def test_zfpa_vanishes_at_exact_values_of_any_design(small_game):
    signaling = random_signaling(small_game, 0)
    bundle = evaluate_values(small_game, signaling, SelectionRule.obedient(small_game), random_policy(small_game, 1), 0)
    assert abs(zfpa_objective(small_game, signaling, bundle.J, bundle.V, 0)) <= 1e-9


def test_rows_off_the_simplex_are_reported(micro):
    policy = Policy(np.array([[[[[0.6, 0.3]]]]]))
    signaling = SignalingRule.uniform(micro)
    bundle = evaluate_values(micro, signaling, SelectionRule.obedient(micro), policy, 0)
    reports = constraint_residuals(micro, signaling, policy, bundle.J, bundle.V, None, 0)
    assert reports["RG"].violation == pytest.approx(0.1)
    assert "AD" not in reports


@pytest.mark.parametrize("gamma", [0.0, 0.9])
def test_feasibility_gap_of_the_unpaid_action(micro, gamma):
    game = micro.with_discount(gamma)
    policy = Policy(np.array([[[[[0.0, 1.0]]]]]))
    signaling = SignalingRule.uniform(game)
    bundle = evaluate_values(game, signaling, SelectionRule.obedient(game), policy, 0)
    reports = constraint_residuals(game, signaling, policy, bundle.J, bundle.V, None, 0)
    assert reports["FE"].violation == pytest.approx(1.0)
    assert reports["FE"].witness["action"] == 0


def test_admissibility_residual_modes(planted):
    game, bundle = planted.game, _exact(planted)
    # coordinate on the other action in both states
    wrong = Goal(np.flip(planted.goal.table, axis=-1))
    strong = constraint_residuals(game, planted.signaling, planted.policy, bundle.J, bundle.V, wrong, 0,
                                  mode=AdmissibilityMode.STRONG)
    assert strong["AD"].violation == pytest.approx(1.0)
    weak = constraint_residuals(game, planted.signaling, planted.policy, bundle.J, bundle.V, wrong, 0)
    assert weak["AD"].violation > 0.5


def test_injected_misalignment_is_detected(planted):
    game, bundle = planted.game, _exact(planted)
    rng = np.random.default_rng(0)
    for _ in range(20):
        agent, state = int(rng.integers(2)), int(rng.integers(2))
        J = bundle.J.copy()
        J[agent, state] += 1e-4
        reports = fpm_residuals(game, planted.signaling, planted.policy, J, bundle.V, 0)
        assert reports["FPM1"].violation >= 5e-5
        assert reports["FPM1"].witness == {"agent": agent, "state": state, "principal_signal": state}


def test_policy_misalignment_is_detected(planted):
    game, bundle = planted.game, _exact(planted)
    V = bundle.V.copy()
    V[0, 0, 0] += 1e-4         # agent 0, state 0, supported joint signal (0, 0)
    reports = fpm_residuals(game, planted.signaling, planted.policy, bundle.J, V, 0)
    assert reports["FPM2"].violation >= 5e-5


def test_j_optimality_at_planted_values(planted):
    game, bundle = planted.game, _exact(planted)
    assert j_optimality_residual(game, planted.signaling, planted.policy, bundle.J, 0) <= 1e-10
    assert j_optimality_residual(game, planted.signaling, planted.policy, bundle.J + 1.0, 0) > 0.05
