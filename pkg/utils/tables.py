"""
Table utilities shared by the dynamics, valuation and solver modules.

Handles:
- Flattened joint indices (joint actions, joint signals, joint types, batches)
- Simplex sampling, projection and lattices
- Contractions that condition a joint-signal table on one agent's signal

Every function that takes probability or value tables accepts arbitrary
leading batch dimensions, so the same code evaluates one instance, a
finite-difference stencil, or a chunk of lattice candidates.
"""

import itertools
import math
from dataclasses import dataclass
from functools import cached_property, lru_cache
from typing import Iterable, Sequence, Tuple

import numpy as np

from exceptions import EnumerationCapError

COMPENSATED_ROW_LENGTH = 10_000


@lru_cache(maxsize=None)
def joint_tuples(n: int, k: int) -> np.ndarray:
    """
    All length-n tuples over range(k) in lexicographic (C) order.

    Args:
        n: Tuple length (number of agents, batch size, ...)
        k: Alphabet size

    Returns:
        Read-only int array of shape (k**n, n)
    """
    if n == 0:
        table = np.zeros((1, 0), dtype=np.int64)
    else:
        table = np.array(list(itertools.product(range(k), repeat=n)), dtype=np.int64)
    table.setflags(write=False)
    return table


def ravel_joint(indices: Sequence[int], k: int) -> int:
    """Flatten a joint index tuple (agent 0 most significant)."""
    flat = 0
    for index in indices:
        flat = flat * k + int(index)
    return flat


def unravel_joint(flat: int, n: int, k: int) -> Tuple[int, ...]:
    """Inverse of ravel_joint."""
    return tuple(int(x) for x in joint_tuples(n, k)[flat])


@dataclass(frozen=True)
class JointIndex:
    """Joint index bookkeeping for n agents with shared action and signal sets."""

    n_agents: int
    n_actions: int
    n_signals: int

    @cached_property
    def actions(self) -> np.ndarray:
        """(|A|^n, n) joint action tuples."""
        return joint_tuples(self.n_agents, self.n_actions)

    @cached_property
    def signals(self) -> np.ndarray:
        """(|Ω|^n, n) joint signal tuples."""
        return joint_tuples(self.n_agents, self.n_signals)

    @cached_property
    def opponent_actions(self) -> np.ndarray:
        """(|A|^(n-1), n-1) opponent action tuples, opponents in increasing order."""
        return joint_tuples(self.n_agents - 1, self.n_actions)

    @property
    def n_joint_actions(self) -> int:
        return self.n_actions ** self.n_agents

    @property
    def n_joint_signals(self) -> int:
        return self.n_signals ** self.n_agents

    def opponents(self, agent: int) -> Tuple[int, ...]:
        return tuple(j for j in range(self.n_agents) if j != agent)

    def split_actions(self, table: np.ndarray, agent: int, axis: int) -> np.ndarray:
        """
        Reshape a joint-action axis into (own action, opponent joint action).

        Args:
            table: Array with a flattened joint-action axis
            agent: Agent whose action becomes the leading sub-axis
            axis: Position of the joint-action axis (negative allowed)

        Returns:
            Array with that axis replaced by (|A|, |A|^(n-1))
        """
        axis = axis % table.ndim
        shape = table.shape
        expanded = table.reshape(shape[:axis] + (self.n_actions,) * self.n_agents + shape[axis + 1:])
        expanded = np.moveaxis(expanded, axis + agent, axis)
        return expanded.reshape(
            shape[:axis] + (self.n_actions, self.n_actions ** (self.n_agents - 1)) + shape[axis + 1:]
        )


def check_cap(what: str, size: int, cap: int) -> None:
    """Refuse enumerations over the cap."""
    if size > cap:
        raise EnumerationCapError(what, size, cap)


def row_sums(table: np.ndarray) -> np.ndarray:
    """Sum along the last axis; compensated summation for long rows."""
    if table.shape[-1] <= COMPENSATED_ROW_LENGTH:
        return table.sum(axis=-1)
    flat = table.reshape(-1, table.shape[-1])
    sums = np.array([math.fsum(row) for row in flat])
    return sums.reshape(table.shape[:-1])


def uniform_simplex(rng: np.random.Generator, shape: Tuple[int, ...], k: int) -> np.ndarray:
    """Rows drawn uniformly from the (k-1)-simplex."""
    return rng.dirichlet(np.ones(k), size=shape)


def simplex_project(x: np.ndarray) -> np.ndarray:
    """
    Euclidean projection of every row (last axis) onto the probability simplex.

    Args:
        x: Array of arbitrary shape

    Returns:
        Array of the same shape whose last-axis rows are distributions
    """
    k = x.shape[-1]
    u = -np.sort(-x, axis=-1)
    cssv = np.cumsum(u, axis=-1) - 1.0
    ind = np.arange(1, k + 1)
    cond = u * ind > cssv
    rho = k - 1 - np.argmax(cond[..., ::-1], axis=-1)
    theta = np.take_along_axis(cssv, rho[..., None], axis=-1) / (rho[..., None] + 1.0)
    return np.maximum(x - theta, 0.0)


def lattice_size(k: int, resolution: int) -> int:
    """Number of points of the simplex lattice with the given resolution."""
    return math.comb(resolution + k - 1, k - 1)


@lru_cache(maxsize=None)
def simplex_lattice(k: int, resolution: int) -> np.ndarray:
    """
    Points of the k-simplex whose coordinates are multiples of 1/resolution.

    Args:
        k: Number of coordinates
        resolution: Denominator of the lattice

    Returns:
        Read-only array of shape (lattice_size(k, resolution), k), lexicographic
        in the integer numerators
    """
    points = [
        combo for combo in itertools.product(range(resolution + 1), repeat=k)
        if sum(combo) == resolution
    ]
    table = np.array(points, dtype=np.float64) / resolution
    table.setflags(write=False)
    return table


def total_variation(p: np.ndarray, q: np.ndarray) -> float:
    """Largest total variation distance between matching rows."""
    return float(np.max(0.5 * np.abs(p - q).sum(axis=-1)))


def policy_product(pis: np.ndarray, index: JointIndex, agents: Iterable[int], action_tuples: np.ndarray) -> np.ndarray:
    """
    Product of per-agent policies indexed by joint signal and joint action.

    Args:
        pis: (..., n, G, S, A) per-agent policy rows
        index: Joint index bookkeeping
        agents: Agents included in the product, increasing order
        action_tuples: (K, len(agents)) action tuples for the included agents

    Returns:
        (..., G, |Ω|^n, K) table; agent j reads its own slot of the joint signal
    """
    agents = tuple(agents)
    lead = pis.shape[:-4]
    g = pis.shape[-3]
    result = np.ones(lead + (g, index.n_joint_signals, action_tuples.shape[0]))
    for position, agent in enumerate(agents):
        rows = np.take(pis[..., agent, :, :, :], index.signals[:, agent], axis=-2)
        result = result * np.take(rows, action_tuples[:, position], axis=-1)
    return result


def joint_policy(pis: np.ndarray, index: JointIndex) -> np.ndarray:
    """(..., G, |Ω|^n, |A|^n) joint action distribution at each selected joint signal."""
    return policy_product(pis, index, range(index.n_agents), index.actions)


def opponent_policy(pis: np.ndarray, index: JointIndex, agent: int) -> np.ndarray:
    """(..., G, |Ω|^n, |A|^(n-1)) opponents' joint action distribution."""
    return policy_product(pis, index, index.opponents(agent), index.opponent_actions)


def apply_channels(
    table: np.ndarray,
    channels: np.ndarray,
    agents: Iterable[int],
    n_agents: int,
    n_signals: int,
    pull_back: bool = False,
) -> np.ndarray:
    """
    Push a joint-signal table through per-agent signal channels.

    A channel M[g, k, w] is the probability that an agent holding principal
    signal k ends up with selected signal w.

    Args:
        table: (..., G, |Ω|^n) table
        channels: (n, G, S, S) per-agent channels
        agents: Agents whose slot is transformed
        n_agents: Number of agents
        n_signals: |Ω|
        pull_back: If True compute Σ_w M[k, w] table[w] (values pulled back to
            principal signals); otherwise Σ_k table[k] M[k, w] (distributions
            pushed forward to selected signals)

    Returns:
        Table of the same shape
    """
    lead = table.shape[:-2]
    g = table.shape[-2]
    rest = n_signals ** (n_agents - 1)
    t = table.reshape(lead + (g,) + (n_signals,) * n_agents)
    for agent in agents:
        axis = len(lead) + 1 + agent
        t = np.moveaxis(t, axis, len(lead) + 1)
        moved_shape = t.shape
        t = t.reshape(lead + (g, n_signals, rest))
        if pull_back:
            t = np.einsum("...gwr,gkw->...gkr", t, channels[agent])
        else:
            t = np.einsum("...gkr,gkw->...gwr", t, channels[agent])
        t = np.moveaxis(t.reshape(moved_shape), len(lead) + 1, axis)
    return t.reshape(table.shape)


def own_signal_average(values: np.ndarray, alpha: np.ndarray, agent: int, n_agents: int, n_signals: int) -> np.ndarray:
    """
    Unnormalized conditional average over opponents' principal signals.

    U[g, w, k] = Σ_{ω_{-i}} α(g, (k, ω_{-i})) · values(g, (w, ω_{-i})).
    Dividing by the marginal α_i(k | g) gives the Bayes-conditional average.

    Args:
        values: (..., G, |Ω|^n) table over selected joint signals
        alpha: (..., G, |Ω|^n) joint signal distribution (broadcastable)
        agent: Conditioning agent
        n_agents: Number of agents
        n_signals: |Ω|

    Returns:
        (..., G, S[w], S[k]) table
    """
    def own_axis_first(table: np.ndarray) -> np.ndarray:
        lead = table.shape[:-2]
        g = table.shape[-2]
        t = table.reshape(lead + (g,) + (n_signals,) * n_agents)
        t = np.moveaxis(t, len(lead) + 1 + agent, len(lead) + 1)
        return t.reshape(lead + (g, n_signals, n_signals ** (n_agents - 1)))

    return np.einsum("...gwr,...gkr->...gwk", own_axis_first(values), own_axis_first(alpha))


def signal_marginal(alpha: np.ndarray, agent: int, n_agents: int, n_signals: int) -> np.ndarray:
    """(..., G, S) marginal α_i(k | g) of a (..., G, |Ω|^n) joint table."""
    lead = alpha.shape[:-2]
    g = alpha.shape[-2]
    t = alpha.reshape(lead + (g,) + (n_signals,) * n_agents)
    axes = tuple(len(lead) + 1 + j for j in range(n_agents) if j != agent)
    return t.sum(axis=axes) if axes else t
