"""
Configuration settings for the information design laboratory.

Contains the enumeration cap, certification tolerances, solver and
simulation defaults, and runtime parallelism.
"""

import os
from dataclasses import dataclass, field, fields, replace
from typing import Any, List, Mapping

from exceptions import GameFormatError

TOOL_VERSION = "0.1.0"
SCHEMA_VERSION = 1


@dataclass
class EnumerationConfig:
    """Bound on every exactly-enumerated table."""
    cap: int = field(default_factory=lambda: int(os.getenv("INFODESIGN_CAP", "1000000")))


@dataclass
class CertificationConfig:
    """Configuration for the equilibrium certifiers."""

    tolerance: float = 1e-8

    # Iterative value solve
    max_iterations: int = 100_000
    convergence_tol: float = 1e-13


@dataclass
class SolverConfig:
    """Configuration for the penalty descent used by the design solvers."""

    restarts: int = 16
    seed: int = 0
    max_iters: int = 200

    # Penalty schedule
    penalty_start: float = 1.0
    penalty_factor: float = 10.0
    penalty_max: float = 1e6

    # Projected descent
    step: float = 1e-2
    min_step: float = 1e-12
    fd_step: float = 1e-6

    # Certificate tolerances
    feasibility_tol: float = 1e-7
    complementarity_tol: float = 1e-7
    alignment_tol: float = 1e-7

    # Candidates are snapped to nearby vertices before certification
    polish: bool = True
    support_floor: float = 1e-9

    @classmethod
    def from_mapping(cls, section: Mapping[str, Any]) -> "SolverConfig":
        """
        Build a config from a `[solver]` TOML section.

        Args:
            section: Key/value pairs; keys may use dashes or underscores

        Returns:
            SolverConfig with the given overrides
        """
        known = {f.name: f for f in fields(cls)}
        overrides = {}
        for raw_key, value in section.items():
            key = raw_key.replace("-", "_")
            if key not in known:
                raise GameFormatError(f"unknown solver option '{raw_key}'", section="solver")
            overrides[key] = type(getattr(cls(), key))(value)
        return replace(cls(), **overrides)

    def penalty_schedule(self) -> List[float]:
        """Penalty weights for each outer round, start to max inclusive."""
        schedule = [self.penalty_start]
        while schedule[-1] * self.penalty_factor <= self.penalty_max * (1 + 1e-12):
            schedule.append(schedule[-1] * self.penalty_factor)
        return schedule


@dataclass
class SimulationConfig:
    """Configuration for Monte Carlo rollouts."""
    horizon: int = 100
    runs: int = 10_000
    seed: int = 0


@dataclass
class RuntimeConfig:
    """Process-level settings."""
    threads: int = field(default_factory=lambda: int(os.getenv("INFODESIGN_THREADS", "0")))
    progress: bool = False

    def worker_count(self) -> int:
        """Resolved worker count; 0 means one per CPU."""
        if self.threads > 0:
            return self.threads
        return os.cpu_count() or 1


@dataclass
class LabConfig:
    """Aggregate of all configuration sections."""
    enumeration: EnumerationConfig = field(default_factory=EnumerationConfig)
    certification: CertificationConfig = field(default_factory=CertificationConfig)
    solver: SolverConfig = field(default_factory=SolverConfig)
    simulation: SimulationConfig = field(default_factory=SimulationConfig)
    runtime: RuntimeConfig = field(default_factory=RuntimeConfig)


# Bundled instance files
INSTANCES_DIR = os.path.join(os.path.dirname(os.path.abspath(__file__)), "dataset", "instances")
