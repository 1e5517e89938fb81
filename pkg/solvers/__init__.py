"""Design solvers: fixed-point alignment, lattice oracle and the principal's optimal design."""

from .residuals import constraint_residuals, fpm_residuals, j_optimality_residual, z_objective, zfpa_objective
from .fpalign import FPAlignSolver, certify_design, solve_fpalign
from .oracle import brute_force_oracle, oracle_optimal_value
from .principal import principal_value, principal_value_direct, solve_optimal_design

__all__ = [
    "constraint_residuals",
    "fpm_residuals",
    "j_optimality_residual",
    "z_objective",
    "zfpa_objective",
    "FPAlignSolver",
    "certify_design",
    "solve_fpalign",
    "brute_force_oracle",
    "oracle_optimal_value",
    "principal_value",
    "principal_value_direct",
    "solve_optimal_design",
]
