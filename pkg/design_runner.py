"""
Command runner for the information design laboratory.

Loads instance files, runs validation, evaluation, certification, design or
simulation, and renders a self-describing report. Every command returns an
exit code: 0 pass, 2 semantic failure, 3 input error (raised as
InfoDesignError and mapped by main.py).
"""

import logging
import time
from dataclasses import dataclass, field
from pathlib import Path
from typing import Dict, List, Optional

import numpy as np
import pandas as pd

from config import TOOL_VERSION, LabConfig
from dataset.game_loader import (
    load_game,
    load_goal,
    load_principal,
    load_signaling,
    load_strategy,
    save_strategy,
)
from evaluators.admissibility import AdmissibilityEvaluator
from evaluators.equilibrium import EquilibriumCertifier
from evaluators.obedience import ObedienceEvaluator
from evaluators.oil import OILEvaluator
from evaluators.validation import canonical_projection, validate_game, validate_strategies
from exceptions import InfoDesignError
from markov.dynamics import pushforward
from markov.rollouts import simulate_rollouts
from markov.valuation import bellman_residuals, evaluate_values
from models.design import DesignProblem, DesignSolution
from models.game import AugmentedGame
from models.report import AdmissibilityMode, CertificationReport, ObedienceMode, RunManifest, ValidationReport
from models.strategy import JointPolicy, SelectionRule, StrategyProfile
from solvers.fpalign import solve_fpalign
from solvers.principal import solve_optimal_design
from utils.records import ReportWriter, table_frame

logger = logging.getLogger(__name__)

EXIT_PASS = 0
EXIT_FAIL = 2
EXIT_INPUT = 3


@dataclass
class RunResult:
    """Outcome of one command."""
    exit_code: int
    report: str
    artifacts: List[Path] = field(default_factory=list)


@dataclass
class CertifyOptions:
    mce: bool = False
    one_shot: bool = False
    obedience: bool = False
    admissibility: bool = False
    nash_goal: bool = False
    obedience_mode: ObedienceMode = ObedienceMode.BAYESIAN
    admissibility_mode: AdmissibilityMode = AdmissibilityMode.WEAK
    obedient: bool = False
    signal: int = 0

    @property
    def individual(self) -> bool:
        return self.mce or self.one_shot or self.obedience or self.admissibility or self.nash_goal


class DesignRunner:
    """Orchestrates the laboratory commands."""

    def __init__(
        self,
        config: Optional[LabConfig] = None,
        seed: int = 0,
        tolerance: Optional[float] = None,
        out_dir: Optional[str] = None,
        timing: bool = False,
        options: Optional[Dict[str, str]] = None,
    ):
        """
        Initialize the runner.

        Args:
            config: Resolved configuration sections
            seed: Seed recorded in the manifest and used by random components
            tolerance: Certification tolerance override (--tol)
            out_dir: Directory for report and artifact files (--out)
            timing: Record wall-clock duration in the manifest
            options: Resolved command-line options for the manifest
        """
        self.config = config or LabConfig()
        self.seed = seed
        self.tolerance = self.config.certification.tolerance if tolerance is None else tolerance
        self.out_dir = Path(out_dir) if out_dir else None
        self.timing = timing
        self.options = dict(options or {})

    @property
    def cap(self) -> int:
        return self.config.enumeration.cap

    def _manifest(self, command: str, inputs: List[str], started: float) -> RunManifest:
        return RunManifest(
            command=command,
            inputs=[str(path) for path in inputs],
            options={key: str(value) for key, value in self.options.items()},
            seed=self.seed,
            version=TOOL_VERSION,
            duration_seconds=round(time.perf_counter() - started, 6) if self.timing else None,
        )

    def _finish(self, command: str, inputs: List[str], started: float, body: ReportWriter,
                exit_code: int, artifacts: Optional[List[Path]] = None) -> RunResult:
        writer = ReportWriter().manifest(self._manifest(command, inputs, started))
        writer.lines.append("")
        writer.lines.extend(body.lines)
        writer.section("result").field("exit_code", exit_code)
        artifacts = list(artifacts or [])
        if self.out_dir is not None:
            artifacts.insert(0, writer.write(self.out_dir / f"{command}-report.txt"))
        return RunResult(exit_code=exit_code, report=writer.render(), artifacts=artifacts)

    @staticmethod
    def _strategy_inputs(strategy_file: str, signaling_file: Optional[str]):
        profile = load_strategy(strategy_file)
        signaling = load_signaling(signaling_file or strategy_file)
        return profile, signaling

    def _invalid(self, command: str, inputs: List[str], started: float, report: ValidationReport) -> RunResult:
        return self._finish(command, inputs, started, ReportWriter().validation(report), EXIT_FAIL)

    # Commands

    def validate(self, game_file: str) -> RunResult:
        """Validation report; exit 0 valid, 2 invalid."""
        started = time.perf_counter()
        game = load_game(game_file)
        report = validate_game(game)
        body = ReportWriter().validation(report)
        return self._finish("validate", [game_file], started, body, EXIT_PASS if report.valid else EXIT_FAIL)

    def evaluate(self, game_file: str, strategy_file: str, signaling_file: Optional[str] = None) -> RunResult:
        """Exact V, J, Q tables and Bellman residuals for every joint type."""
        started = time.perf_counter()
        inputs = [game_file, strategy_file] + ([signaling_file] if signaling_file else [])
        game = load_game(game_file)
        validation = validate_game(game)
        if not validation.valid:
            return self._invalid("evaluate", inputs, started, validation)
        profile, signaling = self._strategy_inputs(strategy_file, signaling_file)
        checked = validate_strategies(game, signaling, profile.policy, profile.selection)
        if not checked.valid:
            return self._invalid("evaluate", inputs, started, checked)
        selection = profile.selection_or_obedient(game)
        Js, Vs, Qs = [], [], []
        body = ReportWriter()
        for t in range(game.n_joint_types):
            bundle = evaluate_values(game, signaling, selection, profile.policy, t, self.cap)
            residuals = bellman_residuals(game, signaling, selection, profile.policy, t, bundle)
            body.section(f"bellman.{t}").fields({
                "V": residuals.v_recursion, "J": residuals.j_recursion, "Q": residuals.q_recursion,
            })
            Js.append(bundle.J)
            Vs.append(bundle.V)
            Qs.append(bundle.Q)
        body.section("values")
        body.table("J", table_frame(np.stack(Js), ("joint_type", "agent", "state")))
        body.table("V", table_frame(np.stack(Vs), ("joint_type", "agent", "state", "joint_signal")))
        body.table("Q", table_frame(np.stack(Qs), ("joint_type", "agent", "joint_action", "state", "signal")))
        return self._finish("evaluate", inputs, started, body, EXIT_PASS)

    def certify(self, game_file: str, strategy_file: str, goal_file: str,
                signaling_file: Optional[str] = None, options: Optional[CertifyOptions] = None) -> RunResult:
        """check_oil, or the conjunction of the individually requested checks."""
        options = options or CertifyOptions()
        started = time.perf_counter()
        inputs = [game_file, strategy_file, goal_file] + ([signaling_file] if signaling_file else [])
        game = load_game(game_file)
        validation = validate_game(game)
        if not validation.valid:
            return self._invalid("certify", inputs, started, validation)
        profile, signaling = self._strategy_inputs(strategy_file, signaling_file)
        goal = load_goal(goal_file)
        checked = validate_strategies(game, signaling, profile.policy, profile.selection, goal)
        if not checked.valid:
            return self._invalid("certify", inputs, started, checked)
        selection = SelectionRule.obedient(game) if options.obedient else profile.selection_or_obedient(game)
        tol = self.tolerance
        if not options.individual:
            report = OILEvaluator(tol, self.cap).check_oil(
                game, signaling, profile.policy, goal, options.obedience_mode, options.admissibility_mode,
            )
        else:
            children: List[CertificationReport] = []
            if options.mce:
                children.append(self._check_mce(game, signaling, selection, profile, options.signal, tol))
            if options.one_shot:
                children.append(EquilibriumCertifier(tol, self.cap).check_one_shot(game, signaling, selection, profile.policy))
            if options.obedience:
                children.append(ObedienceEvaluator(tol, self.cap).evaluate(game, signaling, profile.policy, options.obedience_mode))
            if options.admissibility:
                children.append(AdmissibilityEvaluator(tol, self.cap).check_admissibility(
                    game, signaling, selection, profile.policy, goal, options.admissibility_mode,
                ))
            if options.nash_goal:
                children.append(AdmissibilityEvaluator(tol, self.cap).check_nash_goal(game, signaling, goal))
            report = CertificationReport.conjunction("requested", children, tol)
        body = ReportWriter().certification(report)
        return self._finish("certify", inputs, started, body, EXIT_PASS if report.passed else EXIT_FAIL)

    def _check_mce(self, game: AugmentedGame, signaling, selection, profile: StrategyProfile,
                   signal: int, tol: float) -> CertificationReport:
        """MCE of each joint type's induced action distribution in the canonical projection."""
        certifier = EquilibriumCertifier(tol, self.cap)
        reports = []
        for t in range(game.n_joint_types):
            canonical = canonical_projection(game, t, signal)
            joint = JointPolicy(pushforward(game, signaling, selection, profile.policy, t, self.cap))
            report = certifier.check_mce(canonical, joint)
            reports.append(report.model_copy(update={"condition": f"MCE.{t}"}))
        return CertificationReport.conjunction("MCE", reports, tol)

    def design(self, game_file: str, goal_file: Optional[str] = None, principal_file: Optional[str] = None,
               optimal: bool = False, admissibility_mode: AdmissibilityMode = AdmissibilityMode.WEAK) -> RunResult:
        """solve_fpalign for a goal, or solve_optimal_design with --optimal."""
        started = time.perf_counter()
        game = load_game(game_file)
        inputs = [game_file] + [path for path in (goal_file, principal_file) if path]
        validation = validate_game(game)
        if not validation.valid:
            return self._invalid("design", inputs, started, validation)
        solver_config = self.config.solver
        runtime = self.config.runtime
        if optimal:
            if principal_file is None:
                raise InfoDesignError("design --optimal needs --principal FILE")
            payoff = load_principal(principal_file)
            checked = validate_strategies(game, payoff=payoff)
            if not checked.valid:
                return self._invalid("design", inputs, started, checked)
            solution = solve_optimal_design(game, payoff, solver_config, runtime, self.cap, admissibility_mode)
        else:
            if goal_file is None:
                raise InfoDesignError("design needs a goal file unless --optimal is given")
            goal = load_goal(goal_file)
            checked = validate_strategies(game, goal=goal)
            if not checked.valid:
                return self._invalid("design", inputs, started, checked)
            problem = DesignProblem(
                game=game, goal=goal, admissibility_mode=admissibility_mode,
                feasibility_tol=solver_config.feasibility_tol,
                complementarity_tol=solver_config.complementarity_tol,
                alignment_tol=solver_config.alignment_tol,
            )
            solution = solve_fpalign(problem, solver_config, runtime, self.cap)
        body = self._solution_body(solution)
        artifacts = []
        if self.out_dir is not None:
            path = self.out_dir / "design-solution.toml"
            save_strategy(StrategyProfile(policy=solution.policy), path, signaling=solution.signaling)
            artifacts.append(path)
        exit_code = EXIT_PASS if solution.certified else EXIT_FAIL
        return self._finish("design", inputs, started, body, exit_code, artifacts)

    @staticmethod
    def _solution_body(solution: DesignSolution) -> ReportWriter:
        body = ReportWriter().certificate(solution.certificate)
        body.section("solution").field("restart", solution.restart)
        if solution.principal_value is not None:
            body.field("principal_value", solution.principal_value)
            for t, value in enumerate(solution.principal_value_by_type):
                body.field(f"principal_value.{t}", value)
        if solution.checks is not None:
            failed = [child.condition for child in solution.checks.children if not child.passed]
            body.field("failed_side_conditions", ",".join(failed) if failed else "none")
        body.table("signaling", table_frame(solution.signaling.table, ("state", "joint_type", "joint_signal")))
        body.table("policy", table_frame(solution.policy.table, ("agent", "state", "signal", "type", "action")))
        if solution.induced_goal is not None:
            body.table("induced_goal", table_frame(solution.induced_goal.table, ("state", "joint_type", "joint_action")))
        body.table("J", table_frame(solution.J, ("joint_type", "agent", "state")))
        if solution.history:
            body.table("history", pd.DataFrame(solution.history, columns=["penalty", "objective"]))
        return body

    def simulate(self, game_file: str, strategy_file: str, signaling_file: Optional[str] = None,
                 horizon: Optional[int] = None, runs: Optional[int] = None) -> RunResult:
        """Monte Carlo means and standard errors per joint type, agent and initial state."""
        started = time.perf_counter()
        inputs = [game_file, strategy_file] + ([signaling_file] if signaling_file else [])
        game = load_game(game_file)
        validation = validate_game(game)
        if not validation.valid:
            return self._invalid("simulate", inputs, started, validation)
        profile, signaling = self._strategy_inputs(strategy_file, signaling_file)
        checked = validate_strategies(game, signaling, profile.policy, profile.selection)
        if not checked.valid:
            return self._invalid("simulate", inputs, started, checked)
        simulation = self.config.simulation
        horizon = simulation.horizon if horizon is None else horizon
        runs = simulation.runs if runs is None else runs
        selection = profile.selection_or_obedient(game)
        means, errors = [], []
        for t in range(game.n_joint_types):
            result = simulate_rollouts(game, signaling, selection, profile.policy, t, horizon, runs, self.seed + t)
            means.append(result.means)
            errors.append(result.std_errors)
        frame = table_frame(np.stack(means), ("joint_type", "agent", "state"), "mean")
        frame["std_error"] = np.stack(errors).ravel()
        body = ReportWriter().section("simulation").fields({"horizon": horizon, "runs": runs})
        body.table("returns", frame)
        return self._finish("simulate", inputs, started, body, EXIT_PASS)
