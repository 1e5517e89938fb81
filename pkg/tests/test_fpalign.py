"""Fixed-point-alignment design: certificates, recovery, soundness and determinism."""

import numpy as np
import pytest

from config import SolverConfig
from dataset.generator import dominated_goal_instance, planted_coordination
from evaluators.oil import check_oil
from exceptions import EnumerationCapError, InfoDesignError
from models.design import CONSTRAINT_LABELS, MISALIGNMENT_LABELS, DesignProblem, DesignVerdict
from models.report import AdmissibilityMode
from models.strategy import Goal
from solvers.fpalign import (
    DesignVariables,
    FPAlignSolver,
    certify_design,
    recommendation_start,
    round_to_vertices,
    solve_fpalign,
)
from utils.tables import total_variation


def _problem(game, goal, **kwargs):
    return DesignProblem(game=game, goal=goal, **kwargs)


def test_certificate_of_planted_design(planted):
    certificate, checks, J, V = certify_design(planted.game, planted.signaling, planted.policy, planted.goal)
    assert certificate.certified
    assert certificate.verdict == DesignVerdict.CERTIFIED.value
    assert set(certificate.constraints) == set(CONSTRAINT_LABELS)
    assert set(certificate.misalignments) == set(MISALIGNMENT_LABELS)
    assert certificate.oil_confirmed and certificate.nash_goal and certificate.admissible
    assert checks.condition == "side-conditions" and checks.passed
    assert J.shape == (1, 2, 2) and V.shape == (1, 2, 2, 4)


def test_certificate_against_a_wrong_goal(planted):
    wrong = Goal(np.flip(planted.goal.table, axis=-1))
    certificate, checks, _, _ = certify_design(planted.game, planted.signaling, planted.policy, wrong)
    assert not certificate.certified
    assert certificate.constraints["AD"] > 0.5
    assert "AD" in certificate.witnesses
    assert not checks.passed


def test_recommendation_start_reads_the_goal(planted):
    signaling, policy = recommendation_start(planted.game, planted.goal)
    assert np.allclose(signaling.table, planted.signaling.table)
    assert np.allclose(policy.table, planted.policy.table)


def test_recommendation_start_with_few_signals(micro, micro_goal):
    signaling, policy = recommendation_start(micro, micro_goal)
    assert np.allclose(signaling.table, 1.0)
    assert policy.table[0, 0, 0, 0].tolist() == [1.0, 0.0]


def test_variables_round_trip(planted):
    variables = DesignVariables(planted.game)
    x = variables.pack(planted.signaling, planted.policy)
    assert x.shape == (variables.size,)
    signaling, policy = variables.strategies(x)
    assert np.array_equal(signaling.table, planted.signaling.table)
    assert np.array_equal(policy.table, planted.policy.table)


def test_vertex_rounding(planted):
    variables = DesignVariables(planted.game)
    x = variables.pack(planted.signaling, planted.policy) * 0.9 + 0.1 / 4
    rounded = round_to_vertices(x, variables.blocks)
    signaling, _ = variables.strategies(rounded)
    assert np.array_equal(signaling.table, planted.signaling.table)


def test_planted_goal_is_recovered(planted, serial):
    solution = solve_fpalign(_problem(planted.game, planted.goal), SolverConfig(restarts=1), serial)
    assert solution.certified
    assert solution.restart == 0
    assert max(solution.certificate.misalignments.values()) <= 1e-6
    assert total_variation(solution.induced_goal.table, planted.goal.table) <= 1e-9
    assert check_oil(planted.game, solution.signaling, solution.policy, planted.goal, tol=1e-6).passed


def test_micro_goal_is_certified(micro, micro_goal, serial):
    solution = solve_fpalign(_problem(micro, micro_goal), SolverConfig(restarts=1), serial)
    assert solution.certified
    assert solution.policy.table[0, 0, 0, 0, 0] == pytest.approx(1.0)


def test_non_nash_micro_goal_is_never_certified(micro, micro_nonnash_goal, fast_solver, serial):
    solution = solve_fpalign(_problem(micro, micro_nonnash_goal), fast_solver, serial)
    assert not solution.certified
    assert not solution.certificate.nash_goal


@pytest.mark.parametrize("seed", range(2))
def test_dominated_goal_is_never_certified(seed, fast_solver, serial):
    game, goal = dominated_goal_instance(seed)
    solution = solve_fpalign(_problem(game, goal), fast_solver, serial)
    assert solution.certificate.verdict == DesignVerdict.UNCERTIFIED.value


def test_strong_admissibility_mode(planted, serial):
    problem = _problem(planted.game, planted.goal, admissibility_mode=AdmissibilityMode.STRONG)
    solution = solve_fpalign(problem, SolverConfig(restarts=1), serial)
    assert solution.certified


def test_solutions_are_deterministic(fast_solver):
    instance = planted_coordination(seed=3)
    problem = _problem(instance.game, instance.goal)
    first = solve_fpalign(problem, fast_solver)
    second = solve_fpalign(problem, fast_solver)
    assert np.array_equal(first.signaling.table, second.signaling.table)
    assert np.array_equal(first.policy.table, second.policy.table)
    assert first.certificate == second.certificate
    assert first.restart == second.restart


def test_restarts_are_ranked(micro, micro_goal, fast_solver, serial):
    results = FPAlignSolver(_problem(micro, micro_goal), fast_solver, serial).run_restarts()
    assert len(results) == fast_solver.restarts
    assert results[0].certificate.certified
    assert [r.sort_key() for r in results] == sorted(r.sort_key() for r in results)


def test_goal_is_required(micro):
    with pytest.raises(InfoDesignError):
        solve_fpalign(_problem(micro, None))


def test_problem_rejects_bad_goals(micro, coordination, micro_goal):
    with pytest.raises(InfoDesignError):
        _problem(coordination, micro_goal)
    with pytest.raises(InfoDesignError):
        _problem(micro, Goal(np.array([[[0.5, 0.6]]])))
    with pytest.raises(InfoDesignError):
        _problem(micro, micro_goal, feasibility_tol=0.0)


def test_cap_is_enforced(planted):
    with pytest.raises(EnumerationCapError):
        solve_fpalign(_problem(planted.game, planted.goal), SolverConfig(restarts=1), cap=4)
