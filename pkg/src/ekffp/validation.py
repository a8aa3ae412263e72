"""Input validation helpers shared by games, filters and learners."""

from __future__ import annotations

import numbers

import numpy as np
from sklearn.utils import check_random_state as _sk_check_random_state

from .exceptions import ConfigurationError

PROB_ATOL = 1e-9


def check_random_state(seed) -> np.random.Generator:
    """Turn ``seed`` into a ``numpy.random.Generator``.

    Accepts ``None``, an int, a ``SeedSequence``, a ``Generator`` (returned
    as is) or a legacy ``RandomState`` (wrapped through sklearn's helper so a
    fresh generator is seeded from it).
    """
    if isinstance(seed, np.random.Generator):
        return seed
    if seed is None or isinstance(seed, (numbers.Integral, np.random.SeedSequence)):
        return np.random.default_rng(seed)
    rs = _sk_check_random_state(seed)
    return np.random.default_rng(rs.randint(0, 2**31 - 1))


def check_strategy(probs, n_actions: int | None = None, *, name: str = "strategy") -> np.ndarray:
    """Validate a mixed strategy and return it as a float array."""
    p = np.asarray(probs, dtype=float)
    if p.ndim != 1 or p.size == 0:
        raise ConfigurationError(f"{name} must be a non-empty 1-d vector, got shape {p.shape}")
    if n_actions is not None and p.size != n_actions:
        raise ConfigurationError(f"{name} has {p.size} entries, expected {n_actions}")
    if not np.all(np.isfinite(p)) or np.any(p < -PROB_ATOL):
        raise ConfigurationError(f"{name} has negative or non-finite entries")
    if abs(p.sum() - 1.0) > PROB_ATOL:
        raise ConfigurationError(f"{name} sums to {p.sum()!r}, not 1")
    return p


def check_profile(game, profile, *, skip: int | None = None) -> list:
    """Validate a joint mixed profile against ``game``.

    ``profile`` holds one strategy per player. The entry at index ``skip``
    (usually the player whose reply is being computed) may be ``None`` and
    is not checked.
    """
    if len(profile) != game.num_players:
        raise ConfigurationError(
            f"profile has {len(profile)} strategies for a {game.num_players}-player game"
        )
    out = []
    for j, sigma in enumerate(profile):
        if j == skip and sigma is None:
            out.append(None)
            continue
        out.append(check_strategy(sigma, game.action_counts[j], name=f"strategy of player {j}"))
    return out


def check_joint(game, joint) -> tuple:
    """Validate a pure joint action and return it as a tuple of ints."""
    s = tuple(int(a) for a in joint)
    if len(s) != game.num_players:
        raise ConfigurationError(f"joint action {s} has wrong length for {game.num_players} players")
    for i, (a, k) in enumerate(zip(s, game.action_counts)):
        if not 0 <= a < k:
            raise ConfigurationError(f"action {a} of player {i} outside [0, {k})")
    return s


def check_player(game, player) -> int:
    if not 0 <= int(player) < game.num_players:
        raise ConfigurationError(f"player {player} outside [0, {game.num_players})")
    return int(player)
