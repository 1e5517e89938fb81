"""
The principal's objective and the optimal-design solver.

C(κ) is the expected discounted principal payoff when joint actions are
drawn from κ; C^O(α, π) is the same quantity for the actions induced by
(α, β^O, π). Both are exact linear solves, averaged over the joint-type
prior d_θ.
"""

import logging
from typing import Optional, Tuple

import numpy as np

from config import RuntimeConfig, SolverConfig
from exceptions import ShapeMismatchError
from evaluators.oil import induced_goal
from markov.dynamics import action_distribution, kernel_from_actions
from models.design import DesignProblem, DesignSolution
from models.game import AugmentedGame
from models.report import AdmissibilityMode
from models.strategy import Goal, Policy, PrincipalPayoff, SelectionRule, SignalingRule
from solvers.fpalign import FPAlignSolver, PenalizedDesignObjective, RestartResult
from solvers.residuals import block_policy

logger = logging.getLogger(__name__)


def _check_payoff(game: AugmentedGame, payoff: PrincipalPayoff) -> np.ndarray:
    expected = (game.n_joint_actions, game.n_states, game.n_joint_types)
    if payoff.table.shape != expected:
        raise ShapeMismatchError(f"principal payoff has shape {payoff.table.shape}, expected {expected}")
    return payoff.table


def action_values(game: AugmentedGame, payoff: np.ndarray, actions: np.ndarray, type_index: int) -> np.ndarray:
    """
    Discounted principal value from the initial distribution.

    Args:
        payoff: (|A|^n, G, |Θ|^n) table
        actions: (..., G, |A|^n) joint action rows for one joint type

    Returns:
        (...,) values
    """
    rate = np.einsum("...ga,ag->...g", actions, payoff[:, :, type_index])
    kernel = kernel_from_actions(actions, game.transition)
    system = np.eye(game.n_states) - game.discount * kernel
    values = np.linalg.solve(system, rate[..., None])[..., 0]
    return values @ game.initial_state_dist


def principal_values_by_type(game: AugmentedGame, payoff: PrincipalPayoff, goal: Goal) -> np.ndarray:
    """(|Θ|^n,) C(κ) conditional on each joint type."""
    table = _check_payoff(game, payoff)
    return np.array([action_values(game, table, goal.block(t), t) for t in range(game.n_joint_types)])


def principal_value(game: AugmentedGame, payoff: PrincipalPayoff, goal: Goal) -> float:
    """C(κ), averaged over joint types with the prior d_θ."""
    return float(game.type_prior @ principal_values_by_type(game, payoff, goal))


def direct_values(game: AugmentedGame, payoff: np.ndarray, alpha: np.ndarray, pi: np.ndarray) -> np.ndarray:
    """
    C^O per joint type for batched strategy tables.

    Args:
        alpha: (..., G, |Θ|^n, |Ω|^n)
        pi: (..., n, G, Ω, Θ, A)

    Returns:
        (..., |Θ|^n)
    """
    values = []
    for t, types in enumerate(game.type_profiles):
        actions = action_distribution(alpha[..., :, t, :], block_policy(pi, types), game.index)
        values.append(action_values(game, payoff, actions, t))
    return np.stack(values, axis=-1)


def principal_value_direct(game: AugmentedGame, payoff: PrincipalPayoff, signaling: SignalingRule, policy: Policy) -> float:
    """C^O(α, π) under obedient selection."""
    table = _check_payoff(game, payoff)
    return float(direct_values(game, table, signaling.table, policy.table) @ game.type_prior)


def favorite_goal(game: AugmentedGame, payoff: PrincipalPayoff) -> Goal:
    """Point mass on the principal's one-stage best joint action, per state and joint type."""
    table = _check_payoff(game, payoff)
    best = np.argmax(table, axis=0)                                     # (G, |Θ|^n)
    return Goal(np.eye(game.n_joint_actions)[best])


class OptimalDesignSolver(FPAlignSolver):
    """
    Maximizes C^O(α, π) over obedient equilibria.

    The penalty drops AD and adds FPM2; candidates are certified against
    the goal they induce.
    """

    def __init__(
        self,
        game: AugmentedGame,
        payoff: PrincipalPayoff,
        config: Optional[SolverConfig] = None,
        runtime: Optional[RuntimeConfig] = None,
        cap: Optional[int] = None,
        admissibility_mode: AdmissibilityMode = AdmissibilityMode.WEAK,
    ):
        config = config or SolverConfig()
        problem = DesignProblem(
            game=game, goal=None, admissibility_mode=admissibility_mode,
            feasibility_tol=config.feasibility_tol, complementarity_tol=config.complementarity_tol,
            alignment_tol=config.alignment_tol,
        )
        super().__init__(problem, config, runtime, cap)
        self.payoff = payoff
        self.table = _check_payoff(game, payoff)

    def value(self, alpha: np.ndarray, pi: np.ndarray) -> np.ndarray:
        return direct_values(self.problem.game, self.table, alpha, pi) @ self.problem.game.type_prior

    def objective(self) -> PenalizedDesignObjective:
        return PenalizedDesignObjective(
            self.problem.game, None, self.problem.admissibility_mode,
            include_fpm2=True, value_term=lambda alpha, pi: -self.value(alpha, pi),
        )

    def descent_floor(self) -> float:
        return -np.inf

    def start_goal(self) -> Goal:
        return favorite_goal(self.problem.game, self.payoff)

    def certification_goal(self, signaling: SignalingRule, policy: Policy) -> Goal:
        game = self.problem.game
        return induced_goal(game, signaling, SelectionRule.obedient(game), policy)

    def rank(self, result: RestartResult) -> tuple:
        alpha, pi = self.variables.unpack(result.x)
        achieved = round(float(self.value(alpha, pi)), 12)
        residual = 0.0 if result.certificate.certified else result.certificate.max_residual
        return (not result.certificate.certified, residual, -achieved, tuple(result.x.tolist()))

    def build_solution(self, best: RestartResult) -> DesignSolution:
        solution = super().build_solution(best)
        game = self.problem.game
        by_type = direct_values(game, self.table, solution.signaling.table, solution.policy.table)
        solution.principal_value_by_type = by_type
        solution.principal_value = float(by_type @ game.type_prior)
        return solution


def solve_optimal_design(
    game: AugmentedGame,
    payoff: PrincipalPayoff,
    options: Optional[SolverConfig] = None,
    runtime: Optional[RuntimeConfig] = None,
    cap: Optional[int] = None,
    admissibility_mode: AdmissibilityMode = AdmissibilityMode.WEAK,
) -> DesignSolution:
    """
    Best certified (α, π) for the principal's payoff.

    The returned solution carries the achieved C^O, its per-type values and
    the induced goal; its certificate includes the Nash-goal and weak
    admissibility checks for that goal.
    """
    solver = OptimalDesignSolver(game, payoff, options, runtime, cap, admissibility_mode)
    solution = solver.solve()
    logger.info("optimal design: C^O = %.6g (%s)", solution.principal_value, solution.certificate.verdict)
    return solution


def goal_and_direct_values(game: AugmentedGame, payoff: PrincipalPayoff, signaling: SignalingRule,
                           policy: Policy) -> Tuple[float, float]:
    """(C(pushforward(α, π)), C^O(α, π)); equal up to rounding."""
    goal = induced_goal(game, signaling, SelectionRule.obedient(game), policy)
    return principal_value(game, payoff, goal), principal_value_direct(game, payoff, signaling, policy)
