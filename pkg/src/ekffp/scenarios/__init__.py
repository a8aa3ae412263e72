"""Benchmark scenarios.

Every scenario draws a :class:`ScenarioInstance` from a random generator: a
sequence of stage games played one after another (one stage except for the
corridor), plus a normalized score of a joint action at each stage.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable, Optional

from ..exceptions import ConfigurationError
from ..validation import check_random_state
from .corridor import MOVES, CorridorSpec, build_corridor_checkpoint_game, is_success
from .sensor import (
    SensorNetSpec,
    SensorNetwork,
    build_sensor_game,
    random_sensor_network,
    sensor_global_reward,
    sensor_local_rewards,
    sensor_max_reward,
)
from .symmetric import build_matching_pennies, build_symmetric_game
from .tracking import TrackingSpec, tracking_schedule, tracking_strategy
from .warehouse import (
    WarehouseSpec,
    build_warehouse_game,
    random_warehouse,
    warehouse_global_reward,
    warehouse_score,
)

__all__ = [
    "CorridorScenario", "CorridorSpec", "MatchingPenniesScenario", "ScenarioInstance",
    "SensorNetSpec", "SensorNetwork", "SensorScenario", "SymmetricScenario", "TrackingSpec",
    "WarehouseScenario", "WarehouseSpec", "MOVES", "build_corridor_checkpoint_game",
    "build_matching_pennies", "build_sensor_game", "build_symmetric_game", "build_warehouse_game",
    "is_success", "make_scenario", "random_sensor_network", "random_warehouse",
    "sensor_global_reward", "sensor_local_rewards", "sensor_max_reward", "tracking_schedule",
    "tracking_strategy", "warehouse_global_reward", "warehouse_score",
]


@dataclass
class ScenarioInstance:
    stages: list
    score: Callable  # (stage, joint) -> float
    success: Optional[Callable] = None  # (stage, joint) -> bool
    meta: dict = field(default_factory=dict)

    @property
    def num_players(self) -> int:
        return self.stages[0].num_players


@dataclass(frozen=True)
class SymmetricScenario:
    n_actions: int = 2
    name: str = "symmetric"

    def instance(self, rng=None) -> ScenarioInstance:
        game = build_symmetric_game(self.n_actions)
        return ScenarioInstance([game], lambda stage, s: game.global_reward(s))


@dataclass(frozen=True)
class MatchingPenniesScenario:
    name: str = "matching_pennies"

    def instance(self, rng=None) -> ScenarioInstance:
        game = build_matching_pennies()
        return ScenarioInstance([game], lambda stage, s: game.rewards(s)[0])


@dataclass(frozen=True)
class CorridorScenario:
    spec: CorridorSpec = field(default_factory=CorridorSpec)
    name: str = "corridor"

    def instance(self, rng=None) -> ScenarioInstance:
        games = [build_corridor_checkpoint_game(self.spec, c) for c in range(self.spec.num_checkpoints)]
        return ScenarioInstance(
            games,
            lambda stage, s: games[stage].global_reward(s),
            success=lambda stage, s: is_success(self.spec, stage, s),
        )


@dataclass(frozen=True)
class WarehouseScenario:
    num_robots: int = 10
    num_areas: int = 5
    arena: float = 10.0
    value_range: tuple = (10.0, 20.0)
    name: str = "warehouse"

    def instance(self, rng=None) -> ScenarioInstance:
        spec = random_warehouse(
            self.num_robots, self.num_areas, check_random_state(rng),
            arena=self.arena, value_range=tuple(self.value_range),
        )
        game = build_warehouse_game(spec)
        return ScenarioInstance([game], lambda stage, s: warehouse_score(s, spec), meta={"spec": spec})


@dataclass(frozen=True)
class SensorScenario:
    spec: SensorNetSpec = field(default_factory=SensorNetSpec)
    name: str = "sensor"

    def instance(self, rng=None) -> ScenarioInstance:
        rng = check_random_state(rng)
        for _ in range(100):
            net = random_sensor_network(self.spec, rng)
            r_max = sensor_max_reward(net)
            if r_max > 0:
                break
        else:
            raise ConfigurationError("no event is within range of any sensor")
        game = build_sensor_game(net)
        return ScenarioInstance(
            [game], lambda stage, s: game.global_reward(s) / r_max, meta={"network": net, "r_max": r_max}
        )


_SCENARIOS = {
    "symmetric": SymmetricScenario,
    "matching_pennies": MatchingPenniesScenario,
    "corridor": CorridorScenario,
    "warehouse": WarehouseScenario,
    "sensor": SensorScenario,
}


def make_scenario(kind: str, **params):
    """Build a scenario from its kind tag and parameters (as read from a config file)."""
    if kind not in _SCENARIOS:
        raise ConfigurationError(f"unknown scenario {kind!r}; expected one of {sorted(_SCENARIOS)}")
    if kind == "corridor" and "checkpoints" in params:
        spec_params = {k: params.pop(k) for k in ("checkpoints", "step_length", "success_reward") if k in params}
        spec_params["checkpoints"] = tuple(tuple(int(m) - 1 for m in cp) for cp in spec_params["checkpoints"])
        params["spec"] = CorridorSpec(**spec_params)
    elif kind == "corridor":
        spec_params = {k: params.pop(k) for k in ("step_length", "success_reward") if k in params}
        if spec_params:
            params["spec"] = CorridorSpec(**spec_params)
    if kind == "sensor":
        fields_ = set(SensorNetSpec.__dataclass_fields__)
        spec_params = {k: params.pop(k) for k in list(params) if k in fields_}
        params["spec"] = SensorNetSpec(**spec_params)
    try:
        return _SCENARIOS[kind](**params)
    except TypeError as exc:
        raise ConfigurationError(f"bad parameters for scenario {kind}: {exc}") from None
