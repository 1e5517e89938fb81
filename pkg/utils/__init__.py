"""Table bookkeeping and report records (`utils.records`)."""

from .tables import JointIndex, check_cap, simplex_lattice, simplex_project

__all__ = [
    "JointIndex",
    "check_cap",
    "simplex_lattice",
    "simplex_project",
]
