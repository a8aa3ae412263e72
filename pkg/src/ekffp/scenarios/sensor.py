"""Energy-harvesting sensor network: each sensor picks the time slot it stays awake.

An event ``e`` is worth ``V_e * (1 - prod_i (1 - p_ie))`` over the sensors that
are awake while it happens and have it within sensing range, with detection
probability ``p_ie = min(1, 1 / d_ie)``. Sensor ``i`` is paid the worth of the
events in its own sensing range, evaluated with itself and the sensors inside
its communication range.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from ..exceptions import ConfigurationError
from ..game import Game
from ..validation import check_random_state


@dataclass(frozen=True)
class SensorNetSpec:
    """Layout parameters; a concrete network is drawn with :func:`random_sensor_network`."""

    num_sensors: int = 40
    num_events: int = 20
    num_slots: int = 4
    comm_range: float = 0.6
    sense_range: float = 0.3
    day_hours: float = 24.0
    max_duration: float = 6.0

    def __post_init__(self):
        if self.num_sensors < 1 or self.num_slots < 1 or self.num_events < 0:
            raise ConfigurationError("need at least one sensor and one slot")
        if not (self.comm_range > 0 and self.sense_range > 0):
            raise ConfigurationError("ranges must be positive")
        if not (self.day_hours > 0 and 0 < self.max_duration <= self.day_hours):
            raise ConfigurationError("durations must satisfy 0 < max_duration <= day_hours")


@dataclass(frozen=True)
class SensorNetwork:
    """A drawn network: positions, events, and the derived coverage matrices."""

    spec: SensorNetSpec
    sensor_positions: np.ndarray
    event_positions: np.ndarray
    event_start: np.ndarray
    event_duration: np.ndarray
    event_value: np.ndarray

    def slot_overlap(self) -> np.ndarray:
        """``(events, slots)`` bool: event is ongoing during the slot (daily wrap-around)."""
        spec = self.spec
        width = spec.day_hours / spec.num_slots
        starts = np.arange(spec.num_slots) * width
        out = np.zeros((len(self.event_value), spec.num_slots), dtype=bool)
        for e, (s, d) in enumerate(zip(self.event_start, self.event_duration)):
            # Split a wrapping interval into at most two pieces inside [0, day).
            pieces = [(s, min(s + d, spec.day_hours))]
            if s + d > spec.day_hours:
                pieces.append((0.0, s + d - spec.day_hours))
            for lo, hi in pieces:
                out[e] |= (starts < hi) & (starts + width > lo)
        return out

    def detection(self) -> np.ndarray:
        """``(sensors, events)`` detection probability; 0 outside sensing range."""
        d = np.linalg.norm(self.sensor_positions[:, None, :] - self.event_positions[None, :, :], axis=-1)
        with np.errstate(divide="ignore"):
            p = np.minimum(1.0, 1.0 / d)
        return np.where(d <= self.spec.sense_range, p, 0.0)

    def neighbours(self) -> np.ndarray:
        """``(sensors, sensors)`` bool communication graph, self-loops included."""
        d = np.linalg.norm(self.sensor_positions[:, None, :] - self.sensor_positions[None, :, :], axis=-1)
        return d <= self.spec.comm_range


def random_sensor_network(spec: SensorNetSpec = SensorNetSpec(), rng=None) -> SensorNetwork:
    """Sensors and events uniform on the unit square; start times uniform over the day,
    durations uniform on (0, max_duration], values uniform on (0, 1]."""
    rng = check_random_state(rng)
    sensors = rng.random((spec.num_sensors, 2))
    events = rng.random((spec.num_events, 2))
    start = rng.uniform(0.0, spec.day_hours, size=spec.num_events)
    duration = spec.max_duration * (1.0 - rng.random(spec.num_events))
    value = 1.0 - rng.random(spec.num_events)
    return SensorNetwork(spec, sensors, events, start, duration, value)


def _coverage_terms(net: SensorNetwork):
    return net.detection(), net.slot_overlap(), net.neighbours(), net.event_value


def event_utilities(net: SensorNetwork, joint, _terms=None) -> np.ndarray:
    """Expected worth of every event under the slot assignment ``joint``."""
    p, overlap, _, value = _terms if _terms is not None else _coverage_terms(net)
    s = np.asarray(joint, dtype=int)
    awake = overlap[:, s].T                                  # (sensors, events)
    miss = np.prod(1.0 - p * awake, axis=0)
    return value * (1.0 - miss)


def sensor_global_reward(net: SensorNetwork, joint, _terms=None) -> float:
    return float(event_utilities(net, joint, _terms).sum())


def sensor_max_reward(net: SensorNetwork) -> float:
    """Global reward if every sensor could stay awake the whole day."""
    p, _, _, value = _coverage_terms(net)
    return float((value * (1.0 - np.prod(1.0 - p, axis=0))).sum())


def sensor_local_rewards(net: SensorNetwork, joint, _terms=None) -> np.ndarray:
    """Per-sensor utility: worth of in-range events computed over itself and its neighbours."""
    p, overlap, nbr, value = _terms if _terms is not None else _coverage_terms(net)
    s = np.asarray(joint, dtype=int)
    factor = 1.0 - p * overlap[:, s].T                       # (sensors, events)
    out = np.empty(len(s))
    for i in range(len(s)):
        events = p[i] > 0
        miss = np.prod(factor[nbr[i]][:, events], axis=0)
        out[i] = float((value[events] * (1.0 - miss)).sum())
    return out


def build_sensor_game(net: SensorNetwork) -> Game:
    """Game where each sensor's action is its awake slot and its reward the local utility."""
    terms = _coverage_terms(net)
    p, overlap, nbr, value = terms
    n = net.spec.num_sensors
    in_range = [np.flatnonzero(p[i] > 0) for i in range(n)]
    others = [np.flatnonzero(nbr[i] & (np.arange(n) != i)) for i in range(n)]

    def expected_reward(player, profile):
        ev = in_range[player]
        if ev.size == 0:
            return np.zeros(net.spec.num_slots)
        nb = others[player]
        if nb.size:
            sig = np.stack([profile[j] for j in nb])         # (m, slots)
            awake_prob = sig @ overlap[ev].T                  # (m, events)
            miss = np.prod(1.0 - p[np.ix_(nb, ev)] * awake_prob, axis=0)
        else:
            miss = np.ones(ev.size)
        own = 1.0 - p[player, ev][None, :] * overlap[ev].T    # (slots, events)
        return (value[ev] * (1.0 - miss * own)).sum(axis=1)

    return Game(
        [net.spec.num_slots] * n,
        lambda s: sensor_local_rewards(net, s, terms),
        potential=lambda s: sensor_global_reward(net, s, terms),
        expected_reward=expected_reward,
        name=f"sensor-{n}x{net.spec.num_events}",
    )
