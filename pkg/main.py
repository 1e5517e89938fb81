"""
Main entry point for the information design laboratory.

Commands:
1. validate - check a game file
2. evaluate - exact V, J, Q tables for a strategy profile
3. certify  - OIL or individual equilibrium conditions
4. design   - fixed-point-alignment design for a goal, or optimal design
5. simulate - Monte Carlo returns

Exit codes: 0 pass, 2 semantic failure, 3 input or usage error.
"""

import argparse
import logging
import sys
from dataclasses import replace
from typing import Dict, List, Optional

from dotenv import load_dotenv
from rich.console import Console
from rich.logging import RichHandler

from config import EnumerationConfig, LabConfig
from dataset.game_loader import load_solver_config
from design_runner import EXIT_INPUT, CertifyOptions, DesignRunner, RunResult
from exceptions import InfoDesignError
from models.report import AdmissibilityMode, ObedienceMode

logger = logging.getLogger("infodesign")


class UsageError(InfoDesignError):
    """Bad command-line usage."""


class LabArgumentParser(argparse.ArgumentParser):
    """argparse exits with 2 on usage errors; this laboratory reserves 2 for failed checks."""

    def error(self, message: str):
        raise UsageError(message)


def configure_logging(verbose: bool) -> None:
    logging.basicConfig(
        level=logging.DEBUG if verbose else logging.WARNING,
        format="%(message)s",
        handlers=[RichHandler(console=Console(stderr=True), show_path=False)],
        force=True,
    )


def build_parser() -> argparse.ArgumentParser:
    parser = LabArgumentParser(
        prog="infodesign",
        description="Certify and design information structures for augmented Markov games",
    )
    parser.add_argument("--seed", type=int, default=0, help="Seed for every random component (default: 0)")
    parser.add_argument("--tol", type=float, default=None, help="Certification tolerance (default: 1e-8)")
    parser.add_argument("--out", default=None, help="Directory for report and artifact files")
    parser.add_argument("--cap", type=int, default=None, help="Enumeration cap in table cells")
    parser.add_argument("--config", default=None, help="TOML file with a [solver] section")
    parser.add_argument("--verbose", action="store_true", help="Debug logging on stderr")
    parser.add_argument("--progress", action="store_true", help="Progress bars on stderr")
    parser.add_argument("--timing", action="store_true", help="Record wall-clock duration in the manifest")

    commands = parser.add_subparsers(dest="command", required=True)

    validate = commands.add_parser("validate", help="Validate a game file")
    validate.add_argument("game")

    evaluate = commands.add_parser("evaluate", help="Exact value tables")
    evaluate.add_argument("game")
    evaluate.add_argument("strategy")
    evaluate.add_argument("--signaling", default=None, help="Signaling file (default: the strategy file)")

    certify = commands.add_parser("certify", help="Certify OIL or individual conditions")
    certify.add_argument("game")
    certify.add_argument("strategy")
    certify.add_argument("goal")
    certify.add_argument("--signaling", default=None, help="Signaling file (default: the strategy file)")
    certify.add_argument("--mce", action="store_true", help="Markov correlated equilibrium of the canonical game")
    certify.add_argument("--one-shot", action="store_true", help="One-shot deviation check")
    certify.add_argument("--obedience", action="store_true", help="Obedience check")
    certify.add_argument("--admissibility", action="store_true", help="Admissibility against the goal")
    certify.add_argument("--nash-goal", action="store_true", help="Nash-goal check")
    certify.add_argument("--obedience-mode", choices=[m.value for m in ObedienceMode], default=ObedienceMode.BAYESIAN.value)
    certify.add_argument("--admissibility-mode", choices=[m.value for m in AdmissibilityMode], default=AdmissibilityMode.WEAK.value)
    certify.add_argument("--obedient", action="store_true", help="Use the obedient selection rule")
    certify.add_argument("--signal", type=int, default=0, help="Signal fixed by the canonical projection (--mce)")

    design = commands.add_parser("design", help="Design a signaling rule")
    design.add_argument("game")
    design.add_argument("goal", nargs="?", default=None)
    design.add_argument("--optimal", action="store_true", help="Maximize the principal's payoff instead of a goal")
    design.add_argument("--principal", default=None, help="Principal payoff file (with --optimal)")
    design.add_argument("--restarts", type=int, default=None)
    design.add_argument("--max-iters", type=int, default=None)
    design.add_argument("--admissibility-mode", choices=[m.value for m in AdmissibilityMode], default=AdmissibilityMode.WEAK.value)

    simulate = commands.add_parser("simulate", help="Monte Carlo returns")
    simulate.add_argument("game")
    simulate.add_argument("strategy")
    simulate.add_argument("--signaling", default=None, help="Signaling file (default: the strategy file)")
    simulate.add_argument("--horizon", type=int, default=None)
    simulate.add_argument("--runs", type=int, default=None)

    return parser


MANIFEST_EXCLUDED = {"verbose", "progress", "timing", "command"}


def resolved_options(args: argparse.Namespace) -> Dict[str, str]:
    """Options recorded in the manifest; display-only flags are left out."""
    return {
        key: str(value) for key, value in sorted(vars(args).items())
        if key not in MANIFEST_EXCLUDED and value is not None and value is not False
        and key not in ("game", "strategy", "goal")
    }


def build_config(args: argparse.Namespace) -> LabConfig:
    config = LabConfig()
    solver = load_solver_config(args.config)
    solver = replace(solver, seed=args.seed)
    if getattr(args, "restarts", None) is not None:
        solver = replace(solver, restarts=args.restarts)
    if getattr(args, "max_iters", None) is not None:
        solver = replace(solver, max_iters=args.max_iters)
    config.solver = solver
    config.simulation = replace(config.simulation, seed=args.seed)
    config.runtime = replace(config.runtime, progress=args.progress)
    if args.cap is not None:
        if args.cap < 1:
            raise UsageError("--cap must be positive")
        config.enumeration = EnumerationConfig(cap=args.cap)
    return config


def dispatch(args: argparse.Namespace, runner: DesignRunner) -> RunResult:
    if args.command == "validate":
        return runner.validate(args.game)
    if args.command == "evaluate":
        return runner.evaluate(args.game, args.strategy, args.signaling)
    if args.command == "certify":
        options = CertifyOptions(
            mce=args.mce, one_shot=args.one_shot, obedience=args.obedience,
            admissibility=args.admissibility, nash_goal=args.nash_goal,
            obedience_mode=ObedienceMode(args.obedience_mode),
            admissibility_mode=AdmissibilityMode(args.admissibility_mode),
            obedient=args.obedient, signal=args.signal,
        )
        return runner.certify(args.game, args.strategy, args.goal, args.signaling, options)
    if args.command == "design":
        return runner.design(
            args.game, args.goal, args.principal, args.optimal, AdmissibilityMode(args.admissibility_mode),
        )
    return runner.simulate(args.game, args.strategy, args.signaling, args.horizon, args.runs)


def main(argv: Optional[List[str]] = None) -> int:
    """Main CLI entry point."""
    load_dotenv()
    try:
        args = build_parser().parse_args(argv)
    except UsageError as e:
        print(f"usage error: {e}", file=sys.stderr)
        return EXIT_INPUT
    configure_logging(args.verbose)

    try:
        runner = DesignRunner(
            config=build_config(args),
            seed=args.seed,
            tolerance=args.tol,
            out_dir=args.out,
            timing=args.timing,
            options=resolved_options(args),
        )
        result = dispatch(args, runner)
    except InfoDesignError as e:
        logger.debug("command failed", exc_info=True)
        print(f"error: {e}", file=sys.stderr)
        return EXIT_INPUT

    sys.stdout.write(result.report)
    return result.exit_code


if __name__ == "__main__":
    sys.exit(main())
