"""
Fixed-point-alignment design solver.

Searches over (α, π) for every joint type at once. J and V are always the
exact values under (α, β^O, π), so Z and Z^FPA vanish by construction and
the penalty carries the remaining inequality families (FE, BOB1, FS, AD).
Restarts are independent and run on a thread pool; the merge picks the
best certificate and breaks ties by the smallest flattened (α, π).
"""

import logging
from concurrent.futures import ThreadPoolExecutor, as_completed
from dataclasses import dataclass
from typing import Callable, Dict, List, Optional, Tuple

import numpy as np
from tqdm import tqdm

from config import EnumerationConfig, RuntimeConfig, SolverConfig
from evaluators.admissibility import AdmissibilityEvaluator
from evaluators.oil import OILEvaluator, induced_goal
from exceptions import InfoDesignError
from models.design import (
    CONSTRAINT_LABELS,
    MISALIGNMENT_LABELS,
    Certificate,
    DesignProblem,
    DesignSolution,
    DesignVerdict,
)
from models.game import AugmentedGame
from models.report import AdmissibilityMode, CertificationReport, ObedienceMode
from models.strategy import Goal, Policy, SelectionRule, SignalingRule
from solvers.penalty import DescentTrace, PenaltyDescent, SimplexBlock, project
from solvers.residuals import AD_AXES, RESIDUAL_AXES, block_policy, design_terms, residual_tables, smooth_penalty
from utils.tables import check_cap, ravel_joint, uniform_simplex

logger = logging.getLogger(__name__)

# value_term(alpha, pi) -> (B,) added to the penalized objective
ValueTerm = Callable[[np.ndarray, np.ndarray], np.ndarray]


class DesignVariables:
    """
    Flat layout of the decision vector: the signaling table (G, |Θ|^n, |Ω|^n)
    followed by the policy table (n, G, Ω, Θ, A), both in C order.
    """

    def __init__(self, game: AugmentedGame):
        self.game = game
        self.alpha_shape = (game.n_states, game.n_joint_types, game.n_joint_signals)
        self.pi_shape = (game.n_agents, game.n_states, game.n_signals, game.n_types, game.n_actions)
        self.alpha_size = int(np.prod(self.alpha_shape))
        self.size = self.alpha_size + int(np.prod(self.pi_shape))
        self.blocks = [
            SimplexBlock(0, self.alpha_size, game.n_joint_signals),
            SimplexBlock(self.alpha_size, self.size, game.n_actions),
        ]

    def pack(self, signaling: SignalingRule, policy: Policy) -> np.ndarray:
        return np.concatenate([signaling.table.ravel(), policy.table.ravel()])

    def unpack(self, X: np.ndarray) -> Tuple[np.ndarray, np.ndarray]:
        """(..., D) → α (..., G, |Θ|^n, |Ω|^n), π (..., n, G, Ω, Θ, A)."""
        lead = X.shape[:-1]
        alpha = X[..., :self.alpha_size].reshape(lead + self.alpha_shape)
        pi = X[..., self.alpha_size:].reshape(lead + self.pi_shape)
        return alpha, pi

    def strategies(self, x: np.ndarray) -> Tuple[SignalingRule, Policy]:
        alpha, pi = self.unpack(x)
        return SignalingRule(alpha), Policy(pi)


class PenalizedDesignObjective:
    """ρ · Σ_θ⃗ smooth penalty, plus an optional unpenalized value term."""

    def __init__(
        self,
        game: AugmentedGame,
        goal: Optional[Goal],
        mode: AdmissibilityMode = AdmissibilityMode.WEAK,
        include_fpm2: bool = False,
        value_term: Optional[ValueTerm] = None,
    ):
        self.game = game
        self.goal = goal
        self.mode = AdmissibilityMode(mode)
        self.include_fpm2 = include_fpm2
        self.value_term = value_term
        self.variables = DesignVariables(game)

    def penalty(self, X: np.ndarray) -> np.ndarray:
        game = self.game
        alpha, pi = self.variables.unpack(X)
        total = np.zeros(X.shape[:-1])
        for t, types in enumerate(game.type_profiles):
            kappa = None if self.goal is None else self.goal.block(t)
            terms = design_terms(
                game.rewards_for(types), game.transition, game.discount,
                alpha[..., :, t, :], block_policy(pi, types), game.index,
                kappa=kappa, mode=self.mode,
            )
            total = total + smooth_penalty(terms, include_ad=kappa is not None, include_fpm2=self.include_fpm2)
        return total

    def __call__(self, X: np.ndarray, rho: float) -> np.ndarray:
        value = rho * self.penalty(X)
        if self.value_term is not None:
            alpha, pi = self.variables.unpack(X)
            value = value + self.value_term(alpha, pi)
        return value


def max_table_residual(game: AugmentedGame, signaling: SignalingRule, policy: Policy,
                       goal: Optional[Goal], mode: AdmissibilityMode) -> float:
    """Largest residual over every label and joint type (no side checks)."""
    worst = 0.0
    for t, types in enumerate(game.type_profiles):
        kappa = None if goal is None else goal.block(t)
        terms = design_terms(
            game.rewards_for(types), game.transition, game.discount, signaling.block(t),
            policy.for_types(types), game.index, kappa=kappa, mode=mode,
        )
        for table in residual_tables(terms).values():
            if table.size and np.any(np.isfinite(table)):
                worst = max(worst, float(np.max(table)))
        worst = max(worst, abs(float(terms.z())), abs(float(terms.zfpa())))
    return worst


def certify_design(
    game: AugmentedGame,
    signaling: SignalingRule,
    policy: Policy,
    goal: Goal,
    mode: AdmissibilityMode = AdmissibilityMode.WEAK,
    feasibility_tol: float = 1e-7,
    complementarity_tol: float = 1e-7,
    alignment_tol: float = 1e-7,
    cap: Optional[int] = None,
) -> Tuple[Certificate, CertificationReport, np.ndarray, np.ndarray]:
    """
    Full certificate of a candidate (α, π) against κ.

    Returns:
        (certificate, side-condition report, J (|Θ|^n, n, G), V (|Θ|^n, n, G, |Ω|^n))
    """
    mode = AdmissibilityMode(mode)
    per_label: Dict[str, List[np.ndarray]] = {}
    z = zfpa = 0.0
    Js, Vs = [], []
    for t, types in enumerate(game.type_profiles):
        terms = design_terms(
            game.rewards_for(types), game.transition, game.discount, signaling.block(t),
            policy.for_types(types), game.index, kappa=goal.block(t), mode=mode,
        )
        z += float(terms.z())
        zfpa += float(terms.zfpa())
        Js.append(terms.J)
        Vs.append(terms.V)
        for label, table in residual_tables(terms).items():
            per_label.setdefault(label, []).append(table)

    reports = {}
    for label, tables in per_label.items():
        axes = AD_AXES[mode] if label == "AD" else RESIDUAL_AXES[label]
        tol = complementarity_tol if label in MISALIGNMENT_LABELS else feasibility_tol
        reports[label] = CertificationReport.from_violations(label, np.stack(tables), ("joint_type",) + axes, tol)

    obedient = SelectionRule.obedient(game)
    side = AdmissibilityEvaluator(feasibility_tol, cap)
    nash = side.check_nash_goal(game, signaling, goal)
    admissible = side.check_admissibility(game, signaling, obedient, policy, goal, mode)
    oil = OILEvaluator(10.0 * feasibility_tol, cap).check_oil(game, signaling, policy, goal, ObedienceMode.BAYESIAN, mode)
    checks = CertificationReport.conjunction("side-conditions", [nash, admissible, oil], feasibility_tol)

    constraints = {label: reports[label].violation for label in CONSTRAINT_LABELS if label in reports}
    misalignments = {label: reports[label].violation for label in MISALIGNMENT_LABELS}
    certified = (
        abs(z) <= alignment_tol and abs(zfpa) <= alignment_tol
        and all(v <= feasibility_tol for v in constraints.values())
        and all(v <= complementarity_tol for v in misalignments.values())
        and nash.passed and admissible.passed and oil.passed
    )
    certificate = Certificate(
        z=z, zfpa=zfpa, constraints=constraints, misalignments=misalignments,
        witnesses={label: report.witness for label, report in reports.items() if report.witness},
        nash_goal=nash.passed, admissible=admissible.passed, oil_confirmed=oil.passed,
        verdict=DesignVerdict.CERTIFIED if certified else DesignVerdict.UNCERTIFIED,
    )
    return certificate, checks, np.stack(Js), np.stack(Vs)


def recommendation_start(game: AugmentedGame, goal: Goal) -> Tuple[SignalingRule, Policy]:
    """
    Starting point read off κ.

    With |Ω| ≥ |A| the principal recommends joint actions: α(ω⃗ = a⃗) = κ(a⃗)
    and every agent follows its recommendation. Otherwise α is uniform and
    each agent plays its κ marginal, averaged over opponents' types.
    """
    n, a, s = game.n_agents, game.n_actions, game.n_signals
    alpha = np.zeros((game.n_states, game.n_joint_types, game.n_joint_signals))
    pi = np.zeros((n, game.n_states, s, game.n_types, a))
    if s >= a:
        for flat, joint in enumerate(game.index.actions):
            alpha[:, :, ravel_joint(joint, s)] = goal.table[:, :, flat]
        pi[..., :a, :, :] = np.eye(a)[:, None, :]
        pi[..., a:, :, :] = 1.0 / a
        return SignalingRule(alpha), Policy(pi)
    alpha[:] = 1.0 / game.n_joint_signals
    counts = np.zeros((n, game.n_types))
    for t, types in enumerate(game.type_profiles):
        kappa = goal.block(t)
        for i in range(n):
            marginal = game.index.split_actions(kappa, i, axis=1).sum(axis=2)   # (G, A)
            pi[i, :, :, types[i], :] += marginal[:, None, :]
            counts[i, types[i]] += 1
    pi /= counts[:, None, None, :, None]
    return SignalingRule(alpha), Policy(pi)


def random_start(game: AugmentedGame, rng: np.random.Generator) -> Tuple[SignalingRule, Policy]:
    alpha = uniform_simplex(rng, (game.n_states, game.n_joint_types), game.n_joint_signals)
    pi = uniform_simplex(rng, (game.n_agents, game.n_states, game.n_signals, game.n_types), game.n_actions)
    return SignalingRule(alpha), Policy(pi)


def round_to_vertices(x: np.ndarray, blocks: List[SimplexBlock]) -> np.ndarray:
    """Replace every row of the given blocks by the vertex at its largest entry."""
    out = x.copy()
    for block in blocks:
        rows = out[block.start:block.stop].reshape(-1, block.width)
        out[block.start:block.stop] = np.eye(block.width)[np.argmax(rows, axis=1)].ravel()
    return out


@dataclass
class RestartResult:
    restart: int
    x: np.ndarray
    certificate: Certificate
    checks: CertificationReport
    J: np.ndarray
    V: np.ndarray
    trace: DescentTrace

    def sort_key(self) -> tuple:
        residual = 0.0 if self.certificate.certified else self.certificate.max_residual
        return (not self.certificate.certified, residual, tuple(self.x.tolist()))


class FPAlignSolver:
    """Multi-start penalty descent followed by polishing and certification."""

    def __init__(
        self,
        problem: DesignProblem,
        config: Optional[SolverConfig] = None,
        runtime: Optional[RuntimeConfig] = None,
        cap: Optional[int] = None,
    ):
        self.problem = problem
        self.config = config or SolverConfig()
        self.runtime = runtime or RuntimeConfig()
        self.cap = EnumerationConfig().cap if cap is None else cap
        self.variables = DesignVariables(problem.game)

    # Hooks overridden by the optimal-design solver

    def objective(self) -> PenalizedDesignObjective:
        return PenalizedDesignObjective(self.problem.game, self.problem.goal, self.problem.admissibility_mode)

    def descent_floor(self) -> float:
        return 0.0

    def start_goal(self) -> Goal:
        return self.problem.goal

    def certification_goal(self, signaling: SignalingRule, policy: Policy) -> Goal:
        return self.problem.goal

    def start(self, restart: int) -> np.ndarray:
        game = self.problem.game
        if restart == 0:
            signaling, policy = recommendation_start(game, self.start_goal())
        else:
            signaling, policy = random_start(game, np.random.default_rng(self.config.seed + restart))
        return self.variables.pack(signaling, policy)

    def rank(self, result: RestartResult) -> tuple:
        return result.sort_key()

    def certify(self, x: np.ndarray):
        problem = self.problem
        signaling, policy = self.variables.strategies(x)
        return certify_design(
            problem.game, signaling, policy, self.certification_goal(signaling, policy),
            problem.admissibility_mode, problem.feasibility_tol, problem.complementarity_tol,
            problem.alignment_tol, self.cap,
        )

    def residual(self, x: np.ndarray) -> float:
        signaling, policy = self.variables.strategies(x)
        goal = self.certification_goal(signaling, policy)
        return max_table_residual(self.problem.game, signaling, policy, goal, self.problem.admissibility_mode)

    def polish(self, x: np.ndarray) -> np.ndarray:
        """Drop signals below the support floor, then keep any vertex rounding that does not worsen residuals."""
        alpha_block, pi_block = self.variables.blocks
        x = x.copy()
        rows = x[:alpha_block.stop].reshape(-1, alpha_block.width)
        rows = np.where(rows < self.config.support_floor, 0.0, rows)
        x[:alpha_block.stop] = (rows / rows.sum(axis=1, keepdims=True)).ravel()
        best, best_residual = x, self.residual(x)
        for blocks in ([alpha_block, pi_block], [pi_block], [alpha_block]):
            candidate = round_to_vertices(x, blocks)
            residual = self.residual(candidate)
            if residual < best_residual:
                best, best_residual = candidate, residual
        return best

    def run_restart(self, restart: int) -> RestartResult:
        descent = PenaltyDescent(self.objective(), self.variables.blocks, self.config, floor=self.descent_floor())
        x, trace = descent.run(self.start(restart))
        if self.config.polish:
            x = self.polish(x)
        x = project(x, self.variables.blocks)
        certificate, checks, J, V = self.certify(x)
        logger.debug("restart %d: %s (max residual %.3e)", restart, certificate.verdict, certificate.max_residual)
        return RestartResult(restart, x, certificate, checks, J, V, trace)

    def run_restarts(self) -> List[RestartResult]:
        game = self.problem.game
        check_cap("joint game cells", game.joint_cells, self.cap)
        restarts = max(1, self.config.restarts)
        workers = min(self.runtime.worker_count(), restarts)
        results = []
        with ThreadPoolExecutor(max_workers=workers) as pool:
            futures = [pool.submit(self.run_restart, r) for r in range(restarts)]
            for future in tqdm(as_completed(futures), total=restarts, desc="restarts", disable=not self.runtime.progress):
                results.append(future.result())
        return sorted(results, key=self.rank)

    def build_solution(self, best: RestartResult) -> DesignSolution:
        signaling, policy = self.variables.strategies(best.x)
        return DesignSolution(
            signaling=signaling, policy=policy, J=best.J, V=best.V, certificate=best.certificate,
            restart=best.restart, checks=best.checks,
            induced_goal=induced_goal(self.problem.game, signaling, SelectionRule.obedient(self.problem.game), policy),
            history=list(best.trace.rounds),
        )

    def solve(self) -> DesignSolution:
        best = self.run_restarts()[0]
        if best.certificate.certified:
            logger.info("certified design from restart %d", best.restart)
        else:
            logger.warning("no certified design; best max residual %.3e", best.certificate.max_residual)
        return self.build_solution(best)


def solve_fpalign(
    problem: DesignProblem,
    options: Optional[SolverConfig] = None,
    runtime: Optional[RuntimeConfig] = None,
    cap: Optional[int] = None,
) -> DesignSolution:
    """
    Search for an OIL-certified signaling rule implementing κ.

    Raises:
        InfoDesignError: problem without a goal
        EnumerationCapError: joint space over the cap
    """
    if problem.goal is None:
        raise InfoDesignError("solve_fpalign needs a goal; use solve_optimal_design without one")
    return FPAlignSolver(problem, options, runtime, cap).solve()
