"""
Projected penalty descent over products of probability simplices.

The decision vector is a flat concatenation of simplex blocks. Gradients
are central finite differences evaluated in one batched objective call;
after each step every block row is projected back onto its simplex.
"""

import logging
from dataclasses import dataclass, field
from typing import Callable, List, Sequence, Tuple

import numpy as np

from config import SolverConfig
from utils.tables import simplex_project

logger = logging.getLogger(__name__)

# objective(X, rho) with X of shape (B, D) returns (B,)
BatchObjective = Callable[[np.ndarray, float], np.ndarray]


@dataclass(frozen=True)
class SimplexBlock:
    """Contiguous slice of the decision vector holding rows of length `width`."""
    start: int
    stop: int
    width: int


@dataclass
class DescentTrace:
    """Objective value at the end of every penalty round."""
    rounds: List[Tuple[float, float]] = field(default_factory=list)
    iterations: int = 0


def project(x: np.ndarray, blocks: Sequence[SimplexBlock]) -> np.ndarray:
    """Project every block row of `x` (..., D) onto its simplex."""
    out = np.array(x, dtype=np.float64, copy=True)
    for block in blocks:
        part = out[..., block.start:block.stop]
        shape = part.shape
        rows = part.reshape(shape[:-1] + (-1, block.width))
        out[..., block.start:block.stop] = simplex_project(rows).reshape(shape)
    return out


def fd_gradient(objective: BatchObjective, x: np.ndarray, rho: float, h: float) -> np.ndarray:
    """Central differences of objective(·, rho) at x, all coordinates in one batch."""
    d = x.size
    stencil = np.concatenate([x + h * np.eye(d), x - h * np.eye(d)])
    values = objective(stencil, rho)
    return (values[:d] - values[d:]) / (2.0 * h)


class PenaltyDescent:
    """Projected gradient descent with an increasing penalty weight."""

    def __init__(self, objective: BatchObjective, blocks: Sequence[SimplexBlock], config: SolverConfig,
                 floor: float = 0.0):
        self.objective = objective
        self.floor = floor
        self.blocks = list(blocks)
        self.config = config

    def value(self, x: np.ndarray, rho: float) -> float:
        return float(self.objective(x[None, :], rho)[0])

    def run(self, x0: np.ndarray) -> Tuple[np.ndarray, DescentTrace]:
        """
        Descend from x0 through the penalty schedule.

        Each round restarts from the configured step; a step that does not
        lower the objective is halved and retried with the same gradient.

        Returns:
            (final point, trace)
        """
        config = self.config
        x = project(x0, self.blocks)
        trace = DescentTrace()
        for rho in config.penalty_schedule():
            step = config.step
            current = self.value(x, rho)
            for _ in range(config.max_iters):
                if current <= self.floor or step < config.min_step:
                    break
                gradient = fd_gradient(self.objective, x, rho, config.fd_step)
                trace.iterations += 1
                scaled = gradient / max(1.0, rho)
                while step >= config.min_step:
                    candidate = project(x - step * scaled, self.blocks)
                    value = self.value(candidate, rho)
                    if value < current:
                        x, current = candidate, value
                        break
                    step /= 2.0
            trace.rounds.append((rho, current))
            logger.debug("penalty %.0e: objective %.6e", rho, current)
        return x, trace
