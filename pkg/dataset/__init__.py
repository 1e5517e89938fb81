"""Instance files and seeded generators."""

from .game_loader import (
    TomlDocument,
    load_game,
    load_goal,
    load_principal,
    load_signaling,
    load_solver_config,
    load_strategy,
    save_game,
    save_goal,
    save_principal,
    save_signaling,
    save_strategy,
)
from .generator import (
    PlantedInstance,
    coordination_game,
    dominated_goal_instance,
    planted_coordination,
    random_game,
    random_payoff,
    random_policy,
    random_selection,
    random_signaling,
)

__all__ = [
    "TomlDocument",
    "load_game",
    "load_goal",
    "load_principal",
    "load_signaling",
    "load_solver_config",
    "load_strategy",
    "save_game",
    "save_goal",
    "save_principal",
    "save_signaling",
    "save_strategy",
    "PlantedInstance",
    "coordination_game",
    "dominated_goal_instance",
    "planted_coordination",
    "random_game",
    "random_payoff",
    "random_policy",
    "random_selection",
    "random_signaling",
]
