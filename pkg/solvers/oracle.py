"""
Brute-force oracle over simplex lattices.

Every α row and every π row ranges over the lattice of distributions whose
entries are multiples of 1/resolution. Candidates are enumerated in mixed
radix order, first row most significant, and evaluated in chunks.
"""

import logging
from dataclasses import dataclass, field
from typing import Iterator, List, Optional, Tuple

import numpy as np
from tqdm import tqdm

from config import EnumerationConfig
from models.design import Certificate, DesignProblem
from models.game import AugmentedGame
from models.report import AdmissibilityMode
from models.strategy import Goal, Policy, PrincipalPayoff, SignalingRule
from solvers.fpalign import DesignVariables, certify_design
from solvers.principal import direct_values
from solvers.residuals import block_policy, design_terms, residual_tables
from utils.tables import check_cap, lattice_size, simplex_lattice

logger = logging.getLogger(__name__)

CHUNK = 2048


@dataclass
class OracleCandidate:
    index: int
    signaling: SignalingRule
    policy: Policy
    max_residual: float
    zfpa: float
    certificate: Optional[Certificate] = None


@dataclass
class OracleResult:
    """Minimizers of (max residual, Z^FPA) on the lattice, in enumeration order."""
    resolution: int
    evaluated: int
    best: List[OracleCandidate] = field(default_factory=list)

    @property
    def minimum(self) -> Tuple[float, float]:
        return (self.best[0].max_residual, self.best[0].zfpa)


class LatticeEnumerator:
    """Mixed-radix enumeration of (α, π) lattice candidates."""

    def __init__(self, game: AugmentedGame, resolution: int, cap: Optional[int] = None):
        if resolution < 1:
            raise ValueError("grid resolution must be at least 1")
        self.game = game
        self.resolution = resolution
        self.variables = DesignVariables(game)
        self.alpha_points = simplex_lattice(game.n_joint_signals, resolution)
        self.pi_points = simplex_lattice(game.n_actions, resolution)
        self.alpha_rows = game.n_states * game.n_joint_types
        self.pi_rows = game.n_agents * game.n_states * game.n_signals * game.n_types
        self.size = (
            lattice_size(game.n_joint_signals, resolution) ** self.alpha_rows
            * lattice_size(game.n_actions, resolution) ** self.pi_rows
        )
        check_cap("oracle lattice candidates", self.size, EnumerationConfig().cap if cap is None else cap)
        self.radices = [len(self.alpha_points)] * self.alpha_rows + [len(self.pi_points)] * self.pi_rows

    def decode(self, flat: np.ndarray) -> np.ndarray:
        """(B,) candidate numbers → (B, D) decision vectors."""
        digits = np.zeros((flat.size, len(self.radices)), dtype=np.int64)
        rest = flat.astype(np.int64)
        for position in range(len(self.radices) - 1, -1, -1):
            rest, digits[:, position] = np.divmod(rest, self.radices[position])
        alpha = self.alpha_points[digits[:, :self.alpha_rows]].reshape(flat.size, -1)
        pi = self.pi_points[digits[:, self.alpha_rows:]].reshape(flat.size, -1)
        return np.concatenate([alpha, pi], axis=1)

    def chunks(self, chunk: int = CHUNK) -> Iterator[Tuple[np.ndarray, np.ndarray]]:
        for start in range(0, self.size, chunk):
            flat = np.arange(start, min(start + chunk, self.size))
            yield flat, self.decode(flat)


def batch_scores(game: AugmentedGame, X: np.ndarray, variables: DesignVariables,
                 goal: Optional[Goal], mode: AdmissibilityMode) -> Tuple[np.ndarray, np.ndarray]:
    """(B,) max residual over every label and |Z|, and (B,) |Z^FPA|."""
    alpha, pi = variables.unpack(X)
    batch = X.shape[0]
    worst = np.zeros(batch)
    zfpa = np.zeros(batch)
    for t, types in enumerate(game.type_profiles):
        kappa = None if goal is None else goal.block(t)
        terms = design_terms(
            game.rewards_for(types), game.transition, game.discount,
            alpha[:, :, t, :], block_policy(pi, types), game.index, kappa=kappa, mode=mode,
        )
        for table in residual_tables(terms).values():
            flat = table.reshape(batch, -1)
            if flat.shape[1]:
                worst = np.maximum(worst, np.max(flat, axis=1))
        worst = np.maximum(worst, np.abs(terms.z()))
        zfpa = zfpa + terms.zfpa()
    return worst, np.abs(zfpa)


def brute_force_oracle(
    problem: DesignProblem,
    grid_resolution: int,
    cap: Optional[int] = None,
    keep: int = 8,
    progress: bool = False,
) -> OracleResult:
    """
    Exhaustive search of the (α, π) lattice.

    Args:
        problem: Game, goal and tolerances
        grid_resolution: Lattice denominator; 1 enumerates vertices only
        cap: Bound on the number of candidates
        keep: Number of tied minimizers to retain

    Raises:
        EnumerationCapError: Lattice larger than the cap
    """
    game = problem.game
    enumerator = LatticeEnumerator(game, grid_resolution, cap)
    logger.info("oracle: %d candidates at resolution %d", enumerator.size, grid_resolution)
    best_key = None
    best: List[OracleCandidate] = []
    for flat, X in tqdm(enumerator.chunks(), total=-(-enumerator.size // CHUNK), desc="oracle", disable=not progress):
        worst, zfpa = batch_scores(game, X, enumerator.variables, problem.goal, problem.admissibility_mode)
        worst, zfpa = np.round(worst, 12), np.round(zfpa, 12)
        order = np.lexsort((flat, zfpa, worst))
        for b in order:
            key = (float(worst[b]), float(zfpa[b]))
            if best_key is not None and key > best_key:
                break
            if best_key is None or key < best_key:
                best_key, best = key, []
            if len(best) < keep:
                signaling, policy = enumerator.variables.strategies(X[b])
                best.append(OracleCandidate(int(flat[b]), signaling, policy, key[0], key[1]))
    best.sort(key=lambda c: c.index)
    if problem.goal is not None:
        for candidate in best:
            candidate.certificate = certify_design(
                game, candidate.signaling, candidate.policy, problem.goal, problem.admissibility_mode,
                problem.feasibility_tol, problem.complementarity_tol, problem.alignment_tol, cap,
            )[0]
    return OracleResult(resolution=grid_resolution, evaluated=enumerator.size, best=best[:keep])


def oracle_optimal_value(
    game: AugmentedGame,
    payoff: PrincipalPayoff,
    grid_resolution: int,
    tolerance: float = 1e-7,
    cap: Optional[int] = None,
) -> Tuple[float, Optional[OracleCandidate]]:
    """
    Largest C^O over lattice points whose residuals all lie within tolerance.

    Returns:
        (value, candidate); (-inf, None) when no lattice point is feasible
    """
    enumerator = LatticeEnumerator(game, grid_resolution, cap)
    best_value, best = -np.inf, None
    for flat, X in enumerator.chunks():
        worst, _ = batch_scores(game, X, enumerator.variables, None, AdmissibilityMode.WEAK)
        alpha, pi = enumerator.variables.unpack(X)
        values = direct_values(game, payoff.table, alpha, pi) @ game.type_prior
        values = np.where(worst <= tolerance, values, -np.inf)
        b = int(np.argmax(values))
        if values[b] > best_value:
            signaling, policy = enumerator.variables.strategies(X[b])
            best_value = float(values[b])
            best = OracleCandidate(int(flat[b]), signaling, policy, float(worst[b]), 0.0)
    return best_value, best
