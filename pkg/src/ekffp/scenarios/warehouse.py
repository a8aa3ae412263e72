"""Warehouse patrol: robots with different sensors choose an area and a travel speed.

Every robot picks ``(area, speed)``; the team shares the global reward

    r_g(s) = - sum_i [c1 * dist(i, area_i) / speed_i + c2 * speed_i]
             + sum_n sum_k V[n, k] * (1 - prod_{i in area n} (1 - E[i, n, k]))

where ``E[i, n, k]`` is robot ``i``'s detection efficiency for the ``k``-th
threat of area ``n``: the battery x sensor-quality table value when the robot
carries the matching sensor, 0 otherwise.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from ..exceptions import ConfigurationError
from ..game import Game
from ..validation import check_random_state

CATEGORIES = ("flammable", "chemical", "radioactive", "security")
SENSORS = ("fire", "chemical", "geiger", "vision")  # SENSORS[c] detects CATEGORIES[c]
QUALITIES = ("low", "medium", "high")
BATTERIES = ("short", "fair", "long")
VELOCITIES = ("slow", "medium", "fast")

#: Detection efficiency indexed [quality, battery].
EFFICIENCY = np.array([
    [0.2, 0.3, 0.5],
    [0.3, 0.5, 0.7],
    [0.5, 0.7, 0.9],
])

#: Categories that may not all share one area.
FORBIDDEN_TOGETHER = frozenset({0, 1, 2})


def efficiency(quality: str, battery: str) -> float:
    return float(EFFICIENCY[QUALITIES.index(quality), BATTERIES.index(battery)])


@dataclass(frozen=True)
class WarehouseSpec:
    """A concrete warehouse instance.

    ``sensors[i]`` is a tuple of sensor indices carried by robot ``i``;
    ``area_threats[n]`` the category indices present in area ``n``; and
    ``threat_values[n][k]`` the value of detecting ``area_threats[n][k]``.
    """

    robot_positions: np.ndarray
    area_positions: np.ndarray
    sensors: tuple
    battery: tuple
    quality: tuple
    area_threats: tuple
    threat_values: tuple
    speeds: tuple = (1.0, 2.0, 3.0)
    c1: float = 1.0
    c2: float = 1.0 / 6.0

    def __post_init__(self):
        rp = np.asarray(self.robot_positions, dtype=float).reshape(-1, 2)
        ap = np.asarray(self.area_positions, dtype=float).reshape(-1, 2)
        object.__setattr__(self, "robot_positions", rp)
        object.__setattr__(self, "area_positions", ap)
        n_rob, n_area = len(rp), len(ap)
        if n_rob < 1 or n_area < 1:
            raise ConfigurationError("need at least one robot and one area")
        if not (len(self.sensors) == len(self.battery) == len(self.quality) == n_rob):
            raise ConfigurationError("per-robot attributes must match the number of robots")
        if not (len(self.area_threats) == len(self.threat_values) == n_area):
            raise ConfigurationError("per-area attributes must match the number of areas")
        for i, s in enumerate(self.sensors):
            if len(s) > 3 or len(set(s)) != len(s) or not set(s) <= set(range(len(SENSORS))):
                raise ConfigurationError(f"robot {i} has an invalid sensor set {s}")
        for b in self.battery:
            if b not in BATTERIES:
                raise ConfigurationError(f"unknown battery level {b!r}")
        for q in self.quality:
            if q not in QUALITIES:
                raise ConfigurationError(f"unknown sensor quality {q!r}")
        for n, (cats, vals) in enumerate(zip(self.area_threats, self.threat_values)):
            if len(cats) > 2 or len(set(cats)) != len(cats) or not set(cats) <= set(range(len(CATEGORIES))):
                raise ConfigurationError(f"area {n} has an invalid threat set {cats}")
            if FORBIDDEN_TOGETHER <= set(cats):
                raise ConfigurationError(f"area {n} co-locates flammable, chemical and radioactive items")
            if len(vals) != len(cats) or any(not v > 0 for v in vals):
                raise ConfigurationError(f"area {n} threat values must be positive, one per threat")
        if not self.speeds or any(not v > 0 for v in self.speeds):
            raise ConfigurationError("speeds must be positive")

    @property
    def num_robots(self) -> int:
        return len(self.robot_positions)

    @property
    def num_areas(self) -> int:
        return len(self.area_positions)

    @property
    def num_velocities(self) -> int:
        return len(self.speeds)

    def action(self, area: int, velocity: int) -> int:
        return area * self.num_velocities + velocity

    def decode(self, action: int) -> tuple:
        return divmod(int(action), self.num_velocities)

    def travel_costs(self) -> np.ndarray:
        """``(robots, areas * velocities)`` movement cost of every action."""
        d = np.linalg.norm(self.robot_positions[:, None, :] - self.area_positions[None, :, :], axis=-1)
        v = np.asarray(self.speeds, dtype=float)
        cost = self.c1 * d[:, :, None] / v + self.c2 * v
        return cost.reshape(self.num_robots, -1)

    def efficiencies(self) -> tuple:
        """``(E, V)``: ``E[i, n, k]`` detection probabilities and ``V[n, k]`` values.

        Areas with fewer than two threats are padded with zero-valued slots.
        """
        E = np.zeros((self.num_robots, self.num_areas, 2))
        V = np.zeros((self.num_areas, 2))
        for n, (cats, vals) in enumerate(zip(self.area_threats, self.threat_values)):
            for k, (c, v) in enumerate(zip(cats, vals)):
                V[n, k] = v
                for i in range(self.num_robots):
                    if c in self.sensors[i]:
                        E[i, n, k] = efficiency(self.quality[i], self.battery[i])
        return E, V

    def max_reward(self) -> float:
        """Reward of perfect detection everywhere at zero movement cost."""
        return float(sum(sum(v) for v in self.threat_values))


def random_warehouse(
    num_robots: int,
    num_areas: int,
    rng=None,
    *,
    arena: float = 10.0,
    value_range: tuple = (10.0, 20.0),
    max_tries: int = 1000,
) -> WarehouseSpec:
    """Draw a warehouse with uniform positions, sensors, battery, quality and threats.

    Every area holds two distinct threat categories. Draws are rejected until
    each category present in some area is covered by at least one robot.
    """
    rng = check_random_state(rng)
    if num_robots < 1 or num_areas < 1:
        raise ConfigurationError("need at least one robot and one area")
    allowed_pairs = [(a, b) for a in range(4) for b in range(a + 1, 4)]
    for _ in range(max_tries):
        robot_positions = rng.uniform(0.0, arena, size=(num_robots, 2))
        area_positions = rng.uniform(0.0, arena, size=(num_areas, 2))
        sensors = []
        for _ in range(num_robots):
            size = int(rng.integers(1, 4))
            sensors.append(tuple(sorted(int(x) for x in rng.choice(4, size=size, replace=False))))
        battery = tuple(BATTERIES[int(x)] for x in rng.integers(0, 3, size=num_robots))
        quality = tuple(QUALITIES[int(x)] for x in rng.integers(0, 3, size=num_robots))
        area_threats = tuple(allowed_pairs[int(x)] for x in rng.integers(0, len(allowed_pairs), size=num_areas))
        values = tuple(tuple(float(v) for v in rng.uniform(*value_range, size=2)) for _ in range(num_areas))
        present = {c for cats in area_threats for c in cats}
        carried = {s for ss in sensors for s in ss}
        if present <= carried:
            return WarehouseSpec(
                robot_positions, area_positions, tuple(sensors), battery, quality, area_threats, values
            )
    raise ConfigurationError("could not draw a warehouse where every threat is detectable")


def warehouse_global_reward(spec: WarehouseSpec, joint, _cache=None) -> float:
    cost, E, V = _cache if _cache is not None else (spec.travel_costs(), *spec.efficiencies())
    a = np.asarray(joint, dtype=int)
    robots = np.arange(spec.num_robots)
    areas = a // spec.num_velocities
    miss = np.ones_like(V)
    np.multiply.at(miss, areas, 1.0 - E[robots, areas])
    return float(-cost[robots, a].sum() + (V * (1.0 - miss)).sum())


def build_warehouse_game(spec: WarehouseSpec) -> Game:
    """Identical-interest game over ``(area, speed)`` actions sharing the global reward."""
    cost, (E, V) = spec.travel_costs(), spec.efficiencies()
    cache = (cost, E, V)
    n = spec.num_robots
    nv = spec.num_velocities

    def global_reward(s):
        return warehouse_global_reward(spec, s, cache)

    def reward(s):
        return np.full(n, global_reward(s))

    def expected_reward(player, profile):
        others = [j for j in range(n) if j != player]
        if others:
            sig = np.stack([profile[j] for j in others])               # (m, N*nv)
            area_prob = sig.reshape(len(others), -1, nv).sum(axis=2)     # (m, N)
            other_cost = float(np.einsum("ma,ma->", sig, cost[others]))
            miss = np.prod(1.0 - E[others] * area_prob[:, :, None], axis=0)  # (N, 2)
        else:
            other_cost = 0.0
            miss = np.ones_like(V)
        base = float((V * (1.0 - miss)).sum()) - other_cost
        gain = (V * miss * E[player]).sum(axis=1)                      # (N,)
        return base + np.repeat(gain, nv) - cost[player]

    labels = tuple(f"area{a}-{v}" for a in range(spec.num_areas) for v in VELOCITIES[:nv]) if nv == 3 else None
    return Game(
        [spec.num_areas * nv] * n,
        reward,
        potential=global_reward,
        expected_reward=expected_reward,
        action_labels=[labels] * n if labels else None,
        name=f"warehouse-{n}x{spec.num_areas}",
    )


def warehouse_score(joint, spec: WarehouseSpec) -> float:
    """Normalized score ``100 * r_g(s) / r_max``; at most 100."""
    r_max = spec.max_reward()
    if not r_max > 0:
        raise ConfigurationError("warehouse has no threat value to detect")
    a = np.asarray(joint, dtype=int)
    n_actions = spec.num_areas * spec.num_velocities
    if a.shape != (spec.num_robots,) or np.any(a < 0) or np.any(a >= n_actions):
        raise ConfigurationError(f"joint action {joint!r} does not fit this warehouse")
    return 100.0 * warehouse_global_reward(spec, a) / r_max
