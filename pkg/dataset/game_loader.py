"""
TOML reader and writer for games, strategies, signaling rules, goals,
principal payoffs and solver options.

Every file carries `schema-version = 1`. Tables are nested arrays in the
in-memory layout of the corresponding model, agent by agent where a table
is per agent:

    [transition] rows           (G, |A|^n, G)
    [rewards.agent_i] table     (|A|^n, G, Ω, Θ)
    [policy] agent_i            (G, Ω, Θ, A)
    [selection] agent_i         (G, Θ, |Ω|^m) batch slot kept
    [signaling] table           (G, |Θ|^n, |Ω|^n)
    [goal] table                (G, |Θ|^n, |A|^n)
    [principal] payoff          (|A|^n, G, |Θ|^n)
"""

import logging
import re

try:
    import tomllib
except ModuleNotFoundError:  # Python < 3.11
    import tomli as tomllib
from pathlib import Path
from typing import Any, Dict, Mapping, Optional, Union

import numpy as np
import tomli_w

from config import SCHEMA_VERSION, SolverConfig
from exceptions import GameFormatError
from models.game import AugmentedGame
from models.strategy import Goal, Policy, PrincipalPayoff, SelectionRule, SignalingRule, StrategyProfile

logger = logging.getLogger(__name__)

PathLike = Union[str, Path]

_LOCATION = re.compile(r"at line (\d+)")


class TomlDocument:
    """Parsed TOML file that can point errors at the section they came from."""

    def __init__(self, data: Dict[str, Any], text: str = "", source: str = "<memory>"):
        self.data = data
        self.text = text
        self.source = source

    @classmethod
    def read(cls, path: PathLike) -> "TomlDocument":
        """
        Parse a file and check its schema version.

        Raises:
            GameFormatError: Unreadable file, TOML syntax error or bad schema version
        """
        try:
            text = Path(path).read_text(encoding="utf-8")
        except OSError as e:
            raise GameFormatError(f"cannot read {path}: {e.strerror}") from e
        try:
            data = tomllib.loads(text)
        except tomllib.TOMLDecodeError as e:
            match = _LOCATION.search(str(e))
            raise GameFormatError(f"{path}: {e}", line=int(match.group(1)) if match else None) from e
        document = cls(data, text, str(path))
        document.check_schema()
        return document

    def check_schema(self) -> None:
        if "schema-version" not in self.data:
            raise GameFormatError(f"{self.source}: missing mandatory key 'schema-version'", line=1)
        version = self.data["schema-version"]
        if version != SCHEMA_VERSION:
            raise GameFormatError(
                f"{self.source}: unsupported schema-version {version!r} (expected {SCHEMA_VERSION})",
                line=self.key_line("schema-version"),
            )

    def key_line(self, key: str) -> Optional[int]:
        """First line mentioning a key or section header, 1-based."""
        pattern = re.compile(rf"^\s*(\[{re.escape(key)}\]|{re.escape(key)}\s*=)")
        for number, line in enumerate(self.text.splitlines(), start=1):
            if pattern.match(line):
                return number
        return None

    def has(self, section: str) -> bool:
        node: Any = self.data
        for part in section.split("."):
            if not isinstance(node, Mapping) or part not in node:
                return False
            node = node[part]
        return True

    def section(self, name: str) -> Mapping[str, Any]:
        node: Any = self.data
        for part in name.split("."):
            if not isinstance(node, Mapping) or part not in node:
                raise GameFormatError(f"{self.source}: missing section [{name}]", section=name)
            node = node[part]
        if not isinstance(node, Mapping):
            raise GameFormatError(f"{self.source}: [{name}] must be a table", section=name, line=self.key_line(name))
        return node

    def value(self, section: str, key: str) -> Any:
        table = self.section(section)
        if key not in table:
            raise GameFormatError(
                f"{self.source}: missing key '{key}'", section=section, line=self.key_line(section.split(".")[-1])
            )
        return table[key]

    def integer(self, section: str, key: str) -> int:
        raw = self.value(section, key)
        if isinstance(raw, bool) or not isinstance(raw, int):
            raise GameFormatError(f"'{key}' must be an integer, got {raw!r}", section=section, line=self.key_line(key))
        return raw

    def number(self, section: str, key: str) -> float:
        raw = self.value(section, key)
        if isinstance(raw, bool) or not isinstance(raw, (int, float)):
            raise GameFormatError(f"'{key}' must be a number, got {raw!r}", section=section, line=self.key_line(key))
        return float(raw)

    def array(self, section: str, key: str, dtype=np.float64) -> np.ndarray:
        """Nested array as an ndarray; ragged or non-numeric arrays are format errors."""
        raw = self.value(section, key)
        try:
            array = np.array(raw, dtype=dtype)
        except (TypeError, ValueError) as e:
            raise GameFormatError(
                f"'{key}' is not a rectangular numeric array", section=section, line=self.key_line(key)
            ) from e
        return array


def _dump(document: Dict[str, Any], path: PathLike) -> None:
    Path(path).parent.mkdir(parents=True, exist_ok=True)
    with open(path, "wb") as handle:
        tomli_w.dump(document, handle)


def _tolist(array: np.ndarray) -> list:
    return np.asarray(array).tolist()


# Games

def game_from_document(document: TomlDocument) -> AugmentedGame:
    """Build a game from a parsed document; values are checked later by validate_game."""
    spaces = "spaces"
    n = document.integer(spaces, "agents")
    s = document.integer(spaces, "signals")
    rewards = []
    for agent in range(n):
        section = f"rewards.agent_{agent}"
        if not document.has(section):
            raise GameFormatError(f"{document.source}: missing section [{section}]", section=section)
        rewards.append(document.array(section, "table"))
    try:
        reward_table = np.stack(rewards) if rewards else np.zeros((0,))
    except ValueError as e:
        raise GameFormatError("reward tables differ in shape between agents", section="rewards") from e
    game = AugmentedGame(
        n_agents=n,
        n_states=document.integer(spaces, "states"),
        n_actions=document.integer(spaces, "actions"),
        n_signals=s,
        n_types=document.integer(spaces, "types"),
        batch_size=document.integer(spaces, "batch-size"),
        discount=document.number("discount", "gamma"),
        initial_state_dist=document.array("initial", "distribution"),
        type_prior=document.array("type_prior", "distribution"),
        transition=document.array("transition", "rows"),
        rewards=reward_table,
        exogenous_source=document.array("exogenous", "distribution"),
        name=str(document.data.get("name", Path(document.source).stem)),
    )
    logger.debug("loaded game %s from %s", game.name, document.source)
    return game


def load_game(path: PathLike) -> AugmentedGame:
    """
    Read a game file.

    Raises:
        GameFormatError: Syntax errors, missing sections or keys, ragged arrays
    """
    return game_from_document(TomlDocument.read(path))


def game_to_document(game: AugmentedGame) -> Dict[str, Any]:
    document: Dict[str, Any] = {
        "schema-version": SCHEMA_VERSION,
        "name": game.name,
        "spaces": {
            "agents": game.n_agents, "states": game.n_states, "actions": game.n_actions,
            "signals": game.n_signals, "types": game.n_types, "batch-size": game.batch_size,
        },
        "discount": {"gamma": float(game.discount)},
        "initial": {"distribution": _tolist(game.initial_state_dist)},
        "type_prior": {"distribution": _tolist(game.type_prior)},
        "transition": {"rows": _tolist(game.transition)},
        "exogenous": {"distribution": _tolist(game.exogenous_source)},
        "rewards": {f"agent_{i}": {"table": _tolist(game.rewards[i])} for i in range(game.n_agents)},
    }
    return document


def save_game(game: AugmentedGame, path: PathLike) -> None:
    _dump(game_to_document(game), path)


# Strategies

def load_strategy(path: PathLike) -> StrategyProfile:
    """
    Read a `[policy]` section and an optional `[selection]` section.

    Without `[selection]` the profile uses the obedient selection rule.
    """
    document = TomlDocument.read(path)
    policy = _per_agent(document, "policy", np.float64)
    selection = None
    if document.has("selection"):
        selection = SelectionRule(_per_agent(document, "selection", np.int64))
    return StrategyProfile(policy=Policy(policy), selection=selection)


def _per_agent(document: TomlDocument, section: str, dtype) -> np.ndarray:
    table = document.section(section)
    agents = sorted(key for key in table if key.startswith("agent_"))
    if not agents:
        raise GameFormatError(f"{document.source}: [{section}] has no agent_i entries", section=section)
    expected = [f"agent_{i}" for i in range(len(agents))]
    if sorted(agents, key=lambda k: int(k.split("_")[1])) != expected:
        raise GameFormatError(f"agents must be numbered agent_0..agent_{len(agents) - 1}", section=section)
    arrays = [document.array(section, key, dtype) for key in expected]
    try:
        return np.stack(arrays)
    except ValueError as e:
        raise GameFormatError("per-agent tables differ in shape", section=section) from e


def save_strategy(profile: StrategyProfile, path: PathLike, signaling: Optional[SignalingRule] = None) -> None:
    document: Dict[str, Any] = {
        "schema-version": SCHEMA_VERSION,
        "policy": {f"agent_{i}": _tolist(t) for i, t in enumerate(profile.policy.table)},
    }
    if profile.selection is not None and not profile.selection.is_obedient:
        document["selection"] = {f"agent_{i}": _tolist(t) for i, t in enumerate(profile.selection.positions)}
    if signaling is not None:
        document["signaling"] = {"table": _tolist(signaling.table)}
    _dump(document, path)


def load_signaling(path: PathLike) -> SignalingRule:
    return SignalingRule(TomlDocument.read(path).array("signaling", "table"))


def save_signaling(signaling: SignalingRule, path: PathLike) -> None:
    _dump({"schema-version": SCHEMA_VERSION, "signaling": {"table": _tolist(signaling.table)}}, path)


def load_goal(path: PathLike) -> Goal:
    return Goal(TomlDocument.read(path).array("goal", "table"))


def save_goal(goal: Goal, path: PathLike) -> None:
    _dump({"schema-version": SCHEMA_VERSION, "goal": {"table": _tolist(goal.table)}}, path)


def load_principal(path: PathLike) -> PrincipalPayoff:
    return PrincipalPayoff(TomlDocument.read(path).array("principal", "payoff"))


def save_principal(payoff: PrincipalPayoff, path: PathLike) -> None:
    _dump({"schema-version": SCHEMA_VERSION, "principal": {"payoff": _tolist(payoff.table)}}, path)


def load_solver_config(path: Optional[PathLike], base: Optional[SolverConfig] = None) -> SolverConfig:
    """`[solver]` overrides from a config file; defaults when the file has none."""
    if path is None:
        return base or SolverConfig()
    document = TomlDocument.read(path)
    if not document.has("solver"):
        return base or SolverConfig()
    try:
        return SolverConfig.from_mapping(document.section("solver"))
    except (TypeError, ValueError) as e:
        if isinstance(e, GameFormatError):
            raise
        raise GameFormatError(f"bad solver option: {e}", section="solver", line=document.key_line("solver")) from e
