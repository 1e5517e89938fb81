"""
Strategy tables: signaling rules, selection rules, policies, goals and the
principal's payoff.

Layouts:
- SignalingRule.table:   (G, |Θ|^n, |Ω|^n)    α[g, θ⃗, ω⃗^k]
- SelectionRule.positions: (n, G, Θ, |Ω|^m)   batch slot picked by β_i(g, θ_i | W_i)
- Policy.table:          (n, G, Ω, Θ, A)       π_i[g, ω_i, θ_i, a_i]
- Goal.table:            (G, |Θ|^n, |A|^n)     κ[g, θ⃗, a⃗]
- PrincipalPayoff.table: (|A|^n, G, |Θ|^n)     u[a⃗, g, θ⃗]
- JointPolicy.table:     (G, |A|^n)            π̂[g, a⃗] of a canonical game
"""

from dataclasses import dataclass
from typing import Optional, Sequence

import numpy as np

from models.game import AugmentedGame, frozen_array


@dataclass(frozen=True)
class SignalingRule:
    table: np.ndarray

    def __post_init__(self):
        object.__setattr__(self, "table", frozen_array(self.table))

    def block(self, type_index: int) -> np.ndarray:
        """(G, |Ω|^n) rows for one joint type."""
        return self.table[:, type_index, :]

    @classmethod
    def from_blocks(cls, blocks: np.ndarray) -> "SignalingRule":
        """Build from (|Θ|^n, G, |Ω|^n) per-type blocks."""
        return cls(np.moveaxis(np.asarray(blocks), 0, 1))

    @classmethod
    def uniform(cls, game: AugmentedGame) -> "SignalingRule":
        shape = (game.n_states, game.n_joint_types, game.n_joint_signals)
        return cls(np.full(shape, 1.0 / game.n_joint_signals))


@dataclass(frozen=True)
class SelectionRule:
    """Deterministic selection: the batch slot each agent keeps."""

    positions: np.ndarray

    def __post_init__(self):
        object.__setattr__(self, "positions", frozen_array(self.positions, dtype=np.int64))

    @classmethod
    def obedient(cls, game: AugmentedGame) -> "SelectionRule":
        """β^O: always keep slot 0, the principal's signal."""
        shape = (game.n_agents, game.n_states, game.n_types, game.n_batches)
        return cls(np.zeros(shape, dtype=np.int64))

    @property
    def is_obedient(self) -> bool:
        return not np.any(self.positions)

    def select(self, game: AugmentedGame, agent: int, state: int, own_type: int, batch: Sequence[int]) -> int:
        """Signal kept by `agent` from an explicit batch tuple."""
        flat = 0
        for signal in batch:
            flat = flat * game.n_signals + int(signal)
        return int(batch[self.positions[agent, state, own_type, flat]])

    def selected_signals(self, game: AugmentedGame) -> np.ndarray:
        """(n, G, Θ, |Ω|^m) signal kept for every batch."""
        batches = game.batches
        return np.take_along_axis(
            np.broadcast_to(batches, self.positions.shape + (game.batch_size,)),
            self.positions[..., None],
            axis=-1,
        )[..., 0]


@dataclass(frozen=True)
class Policy:
    table: np.ndarray

    def __post_init__(self):
        object.__setattr__(self, "table", frozen_array(self.table))

    def for_types(self, types: Sequence[int]) -> np.ndarray:
        """(n, G, Ω, A) rows with each agent's own type fixed."""
        return np.stack([self.table[i, :, :, types[i], :] for i in range(self.table.shape[0])])

    @classmethod
    def uniform(cls, game: AugmentedGame) -> "Policy":
        shape = (game.n_agents, game.n_states, game.n_signals, game.n_types, game.n_actions)
        return cls(np.full(shape, 1.0 / game.n_actions))


@dataclass(frozen=True)
class StrategyProfile:
    """Agents' (β, π); selection defaults to obedient when the file omits it."""

    policy: Policy
    selection: Optional[SelectionRule] = None

    def selection_or_obedient(self, game: AugmentedGame) -> SelectionRule:
        return self.selection if self.selection is not None else SelectionRule.obedient(game)


@dataclass(frozen=True)
class Goal:
    table: np.ndarray

    def __post_init__(self):
        object.__setattr__(self, "table", frozen_array(self.table))

    def block(self, type_index: int) -> np.ndarray:
        return self.table[:, type_index, :]

    @classmethod
    def from_blocks(cls, blocks: np.ndarray) -> "Goal":
        return cls(np.moveaxis(np.asarray(blocks), 0, 1))


@dataclass(frozen=True)
class PrincipalPayoff:
    table: np.ndarray

    def __post_init__(self):
        object.__setattr__(self, "table", frozen_array(self.table))


@dataclass(frozen=True)
class JointPolicy:
    table: np.ndarray

    def __post_init__(self):
        object.__setattr__(self, "table", frozen_array(self.table))
