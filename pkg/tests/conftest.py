"""Shared fixtures: bundled instance files, planted designs and fast solver settings."""

from pathlib import Path

import pytest

from config import INSTANCES_DIR, RuntimeConfig, SolverConfig
from dataset.game_loader import load_game, load_goal
from dataset.generator import planted_coordination, random_game

SMALL_DIMS = (2, 3, 2, 2, 1, 2)


@pytest.fixture
def instances() -> Path:
    return Path(INSTANCES_DIR)


@pytest.fixture
def coordination(instances):
    return load_game(instances / "coordination.toml")


@pytest.fixture
def micro(instances):
    return load_game(instances / "micro.toml")


@pytest.fixture
def micro_goal(instances):
    return load_goal(instances / "micro-goal.toml")


@pytest.fixture
def micro_nonnash_goal(instances):
    return load_goal(instances / "micro-nonnash-goal.toml")


@pytest.fixture
def planted():
    return planted_coordination(seed=0)


@pytest.fixture
def small_game():
    return random_game(7, SMALL_DIMS)


@pytest.fixture
def typed_game():
    """Two agents with two types each, so policies differ across joint-type blocks."""
    return random_game(11, (2, 2, 2, 2, 2, 2))


@pytest.fixture
def fast_solver() -> SolverConfig:
    return SolverConfig(restarts=2, max_iters=30, penalty_max=1e2)


@pytest.fixture
def serial() -> RuntimeConfig:
    return RuntimeConfig(threads=1)
