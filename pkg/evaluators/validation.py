"""
Structural validation of games and strategy tables.

Checks:
1. Space sizes - positive dimensions, n ≥ 1, m ≥ 2
2. Discount - 0 < γ < 1
3. Table shapes - every table matches the declared spaces
4. Probability rows - nonnegative and summing to 1 within 1e-12
5. Rewards - finite entries
"""

import logging
from typing import Optional, Sequence

import numpy as np

from exceptions import InfoDesignError, ShapeMismatchError
from models.game import AugmentedGame, CanonicalGame
from models.report import ValidationReport
from models.strategy import Goal, Policy, PrincipalPayoff, SelectionRule, SignalingRule
from utils.tables import row_sums

logger = logging.getLogger(__name__)

ROW_TOLERANCE = 1e-12


class GameValidator:
    """Collects every invariant violation of a game instead of stopping at the first."""

    def __init__(self, row_tolerance: float = ROW_TOLERANCE):
        """
        Initialize validator.

        Args:
            row_tolerance: Allowed deviation of a probability row sum from 1
        """
        self.row_tolerance = row_tolerance

    def validate(self, game: AugmentedGame) -> ValidationReport:
        """
        Validate a game.

        Args:
            game: Game to check

        Returns:
            ValidationReport; empty when the game is valid
        """
        report = ValidationReport()
        if not self.check_spaces(game, report):
            return report
        self.check_discount(game, report)
        self.check_distribution(report, "initial", game.initial_state_dist, (game.n_states,))
        self.check_distribution(report, "type_prior", game.type_prior, (game.n_joint_types,))
        self.check_distribution(
            report, "transition", game.transition,
            (game.n_states, game.n_joint_actions, game.n_states), ("state", "joint_action"),
        )
        self.check_distribution(report, "exogenous", game.exogenous_source, (game.n_exogenous,))
        self.check_rewards(game, report)
        if report.violations:
            logger.debug("Game %s has %d violations", game.name, len(report.violations))
        return report

    def check_spaces(self, game: AugmentedGame, report: ValidationReport) -> bool:
        ok = True
        for name in ("n_agents", "n_states", "n_actions", "n_signals", "n_types"):
            if getattr(game, name) < 1:
                report.add("spaces", f"{name} must be positive, got {getattr(game, name)}")
                ok = False
        if game.batch_size < 2:
            report.add("spaces", f"batch-size must be at least 2, got {game.batch_size}")
            ok = False
        return ok

    def check_discount(self, game: AugmentedGame, report: ValidationReport) -> None:
        if not 0.0 < game.discount < 1.0:
            report.add("discount", f"discount out of range: gamma = {game.discount!r} must satisfy 0 < gamma < 1")

    def check_distribution(
        self,
        report: ValidationReport,
        table_name: str,
        table: np.ndarray,
        shape: tuple,
        row_axes: Sequence[str] = (),
    ) -> None:
        """Shape, sign and row-sum checks; each bad row is named by its index."""
        if table.shape != shape:
            report.add(table_name, f"shape {table.shape} does not match expected {shape}")
            return
        rows = table.reshape((-1, shape[-1]))
        sums = row_sums(rows)
        for row in range(rows.shape[0]):
            location = self._row_location(table_name, row, shape[:-1], row_axes)
            if np.any(~np.isfinite(rows[row])):
                report.add(location, "row has non-finite entries")
                continue
            if np.any(rows[row] < 0):
                report.add(location, f"row has negative entries (min {rows[row].min()!r})")
            if abs(sums[row] - 1.0) > self.row_tolerance:
                report.add(location, f"row sums to {sums[row]!r}, not 1")

    def check_rewards(self, game: AugmentedGame, report: ValidationReport) -> None:
        shape = (game.n_agents, game.n_joint_actions, game.n_states, game.n_signals, game.n_types)
        if game.rewards.shape != shape:
            report.add("rewards", f"shape {game.rewards.shape} does not match expected {shape}")
            return
        for agent in range(game.n_agents):
            if not np.all(np.isfinite(game.rewards[agent])):
                report.add(f"rewards.agent_{agent}", "rewards must be finite")

    @staticmethod
    def _row_location(table_name: str, row: int, leading: tuple, row_axes: Sequence[str]) -> str:
        if not row_axes:
            return table_name
        coordinates = np.unravel_index(row, leading)
        named = ", ".join(f"{axis}={int(c)}" for axis, c in zip(row_axes, coordinates))
        return f"{table_name} row {row} ({named})"


def validate_game(game: AugmentedGame) -> ValidationReport:
    return GameValidator().validate(game)


def _expect_shape(what: str, actual: tuple, expected: tuple) -> None:
    if actual != expected:
        raise ShapeMismatchError(f"{what} has shape {actual}, game expects {expected}")


def validate_strategies(
    game: AugmentedGame,
    signaling: Optional[SignalingRule] = None,
    policy: Optional[Policy] = None,
    selection: Optional[SelectionRule] = None,
    goal: Optional[Goal] = None,
    payoff: Optional[PrincipalPayoff] = None,
) -> ValidationReport:
    """
    Check strategy tables against a game.

    Raises:
        ShapeMismatchError: A table disagrees with the game's dimensions

    Returns:
        ValidationReport with row violations
    """
    validator = GameValidator()
    report = ValidationReport()
    if signaling is not None:
        shape = (game.n_states, game.n_joint_types, game.n_joint_signals)
        _expect_shape("signaling table", signaling.table.shape, shape)
        validator.check_distribution(report, "signaling", signaling.table, shape, ("state", "joint_type"))
    if policy is not None:
        shape = (game.n_agents, game.n_states, game.n_signals, game.n_types, game.n_actions)
        _expect_shape("policy table", policy.table.shape, shape)
        validator.check_distribution(report, "policy", policy.table, shape, ("agent", "state", "signal", "type"))
    if selection is not None:
        shape = (game.n_agents, game.n_states, game.n_types, game.n_batches)
        _expect_shape("selection table", selection.positions.shape, shape)
        if np.any((selection.positions < 0) | (selection.positions >= game.batch_size)):
            report.add("selection", f"positions must lie in [0, {game.batch_size})")
    if goal is not None:
        shape = (game.n_states, game.n_joint_types, game.n_joint_actions)
        _expect_shape("goal table", goal.table.shape, shape)
        validator.check_distribution(report, "goal", goal.table, shape, ("state", "joint_type"))
    if payoff is not None:
        _expect_shape("principal payoff", payoff.table.shape, (game.n_joint_actions, game.n_states, game.n_joint_types))
        if not np.all(np.isfinite(payoff.table)):
            report.add("principal", "payoff entries must be finite")
    return report


def canonical_projection(game: AugmentedGame, types, signal: int) -> CanonicalGame:
    """
    Collapse the signal dimension at a fixed signal for one joint type.

    Args:
        game: Augmented game
        types: Joint type (tuple or flat index)
        signal: Signal at which every agent's reward is read

    Returns:
        CanonicalGame with R̂_i(a⃗, g) = R_i(a⃗, g, signal | θ_i)
    """
    if not 0 <= signal < game.n_signals:
        raise InfoDesignError(f"signal {signal} is not in the signal space of size {game.n_signals}")
    rewards = game.rewards_for(game.type_profile(types))[..., signal]
    return CanonicalGame(
        n_agents=game.n_agents,
        n_states=game.n_states,
        n_actions=game.n_actions,
        discount=game.discount,
        initial_state_dist=game.initial_state_dist,
        transition=game.transition,
        rewards=rewards,
    )
