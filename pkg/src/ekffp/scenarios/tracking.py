"""Single-opponent strategy schedules used to tune the propensity filter."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from ..exceptions import ConfigurationError

TRACKING_KINDS = ("sinusoid", "abrupt")


@dataclass(frozen=True)
class TrackingSpec:
    """``sinusoid``: P(action 0) = (cos(2 pi t / period) + 1) / 2.
    ``abrupt``: action 0 for t <= switch_points[0] and t > switch_points[1], else action 1."""

    kind: str = "sinusoid"
    horizon: int = 5000
    period: int = 100
    switch_points: tuple = (1250, 3750)

    def __post_init__(self):
        if self.kind not in TRACKING_KINDS:
            raise ConfigurationError(f"unknown tracking kind {self.kind!r}")
        if self.horizon < 1 or self.period < 1:
            raise ConfigurationError("horizon and period must be positive")
        lo, hi = self.switch_points
        if not 0 <= lo <= hi:
            raise ConfigurationError("switch points must be ordered")


def tracking_strategy(spec: TrackingSpec, t: int) -> np.ndarray:
    """Opponent's true two-action mixed strategy at iteration ``t`` (1-based)."""
    if not 1 <= t <= spec.horizon:
        raise ConfigurationError(f"t={t} outside [1, {spec.horizon}]")
    if spec.kind == "sinusoid":
        p = (np.cos(2.0 * np.pi * t / spec.period) + 1.0) / 2.0
    else:
        lo, hi = spec.switch_points
        p = 1.0 if (t <= lo or t > hi) else 0.0
    return np.array([p, 1.0 - p])


def tracking_schedule(spec: TrackingSpec) -> np.ndarray:
    """``(horizon, 2)`` array of the true strategy for t = 1..horizon."""
    return np.stack([tracking_strategy(spec, t) for t in range(1, spec.horizon + 1)])
