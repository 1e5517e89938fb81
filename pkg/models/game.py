"""
Finite augmented Markov games and their canonical projections.

Table layouts (joint indices flattened in C order, agent 0 most significant):
- transition:          (G, |A|^n, G)         T[g, a⃗, g']
- rewards:             (n, |A|^n, G, Ω, Θ)   R_i[a⃗, g, ω, θ_i]
- initial_state_dist:  (G,)
- type_prior:          (|Θ|^n,)
- exogenous_source:    (|Ω|^(m-1),)           P^{-k} over the non-principal batch slots
"""

from dataclasses import dataclass, field, replace
from typing import Sequence, Tuple

import numpy as np

from utils.tables import JointIndex, joint_tuples, ravel_joint


def frozen_array(values, dtype=np.float64) -> np.ndarray:
    """Copy into a read-only ndarray."""
    array = np.array(values, dtype=dtype, copy=True)
    array.setflags(write=False)
    return array


@dataclass(frozen=True)
class AugmentedGame:
    """
    An augmented Markov game with all of its tables.

    The constructor only freezes the tables; `evaluators.validation.validate_game`
    reports invariant violations so malformed files can be diagnosed instead of
    rejected at construction.
    """

    n_agents: int
    n_states: int
    n_actions: int
    n_signals: int
    n_types: int
    batch_size: int
    discount: float
    initial_state_dist: np.ndarray
    type_prior: np.ndarray
    transition: np.ndarray
    rewards: np.ndarray
    exogenous_source: np.ndarray
    name: str = field(default="game", compare=False)

    def __post_init__(self):
        for attr in ("initial_state_dist", "type_prior", "transition", "rewards", "exogenous_source"):
            object.__setattr__(self, attr, frozen_array(getattr(self, attr)))

    @property
    def index(self) -> JointIndex:
        return JointIndex(self.n_agents, self.n_actions, self.n_signals)

    @property
    def n_joint_actions(self) -> int:
        return self.n_actions ** self.n_agents

    @property
    def n_joint_signals(self) -> int:
        return self.n_signals ** self.n_agents

    @property
    def n_joint_types(self) -> int:
        return self.n_types ** self.n_agents

    @property
    def n_batches(self) -> int:
        """Number of distinct batches one agent can receive (|Ω|^m)."""
        return self.n_signals ** self.batch_size

    @property
    def n_exogenous(self) -> int:
        return self.n_signals ** (self.batch_size - 1)

    @property
    def batches(self) -> np.ndarray:
        """(|Ω|^m, m) batch tuples; slot 0 holds the principal's signal."""
        return joint_tuples(self.batch_size, self.n_signals)

    @property
    def type_profiles(self) -> np.ndarray:
        """(|Θ|^n, n) joint type tuples."""
        return joint_tuples(self.n_agents, self.n_types)

    @property
    def reward_max(self) -> float:
        return float(np.max(np.abs(self.rewards))) if self.rewards.size else 0.0

    @property
    def value_bound(self) -> float:
        """R_max / (1 - γ)."""
        return self.reward_max / (1.0 - self.discount)

    @property
    def joint_cells(self) -> int:
        """Size of the largest exactly-enumerated table (G · |Ω|^n · |A|^n · |Θ|^n)."""
        return self.n_states * self.n_joint_signals * self.n_joint_actions * self.n_joint_types

    def type_index(self, types: Sequence[int]) -> int:
        return ravel_joint(types, self.n_types)

    def type_profile(self, types) -> Tuple[int, ...]:
        """Accept either a flat joint-type index or a tuple and return the tuple."""
        if isinstance(types, (int, np.integer)):
            return tuple(int(x) for x in self.type_profiles[int(types)])
        return tuple(int(x) for x in types)

    def rewards_for(self, types: Sequence[int]) -> np.ndarray:
        """(n, |A|^n, G, Ω) rewards with each agent's own type fixed."""
        types = self.type_profile(types)
        return np.stack([self.rewards[i, ..., types[i]] for i in range(self.n_agents)])

    def with_discount(self, discount: float) -> "AugmentedGame":
        """Copy with a different γ (the γ = 0 oracle cases use this)."""
        return replace(self, discount=discount)

    def with_rewards(self, rewards: np.ndarray) -> "AugmentedGame":
        return replace(self, rewards=rewards)

    def with_exogenous(self, exogenous_source: np.ndarray) -> "AugmentedGame":
        return replace(self, exogenous_source=exogenous_source)


@dataclass(frozen=True)
class CanonicalGame:
    """Signal-free Markov game for one joint type: rewards (n, |A|^n, G)."""

    n_agents: int
    n_states: int
    n_actions: int
    discount: float
    initial_state_dist: np.ndarray
    transition: np.ndarray
    rewards: np.ndarray

    def __post_init__(self):
        for attr in ("initial_state_dist", "transition", "rewards"):
            object.__setattr__(self, attr, frozen_array(getattr(self, attr)))

    @property
    def index(self) -> JointIndex:
        return JointIndex(self.n_agents, self.n_actions, 1)

    @property
    def n_joint_actions(self) -> int:
        return self.n_actions ** self.n_agents
