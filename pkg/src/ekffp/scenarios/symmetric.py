"""Two-player matrix games: pure coordination and matching pennies."""

from __future__ import annotations

import numpy as np

from ..exceptions import ConfigurationError
from ..game import Game

LABELS = {
    2: (("U", "D"), ("L", "R")),
    3: (("Weak", "Fair", "Strong"), ("Weak", "Fair", "Strong")),
}


def coordination_table(n_actions: int, payoff: float = 1.0) -> np.ndarray:
    """Identical-interest payoff tensor with ``payoff`` on the diagonal, 0 elsewhere."""
    diag = payoff * np.eye(n_actions)
    return np.stack([diag, diag], axis=-1)


def build_symmetric_game(n_actions: int = 2) -> Game:
    """Pure coordination game on ``n_actions`` actions (2: U/D vs L/R; 3: Weak/Fair/Strong)."""
    if n_actions < 1:
        raise ConfigurationError("need at least one action")
    table = coordination_table(n_actions)
    labels = LABELS.get(n_actions)
    return Game.from_table(
        table,
        potential=lambda s: table[s[0], s[1], 0],
        action_labels=labels,
        name=f"symmetric-{n_actions}",
    )


def build_matching_pennies() -> Game:
    """Zero-sum Head/Tails game; the row player wins on a match."""
    row = np.array([[1.0, -1.0], [-1.0, 1.0]])
    table = np.stack([row, -row], axis=-1)
    return Game.from_table(table, action_labels=(("Head", "Tails"), ("Head", "Tails")), name="matching-pennies")
