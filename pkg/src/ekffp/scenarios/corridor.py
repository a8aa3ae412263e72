"""Two robots carrying an object through a corridor, one coordination game per checkpoint.

Moves: 0 forward, 1 forward-then-right, 2 diagonal right, 3 forward-then-left,
4 diagonal left. A checkpoint declares which coordinated moves let the pair
continue; reward is ``success_reward`` when both robots pick the same feasible
move and 0 otherwise.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from ..exceptions import ConfigurationError
from ..game import Game

MOVES = ("forward", "forward-right", "diagonal-right", "forward-left", "diagonal-left")

_TURN_RIGHT = frozenset({1, 2})
_TURN_LEFT = frozenset({3, 4})
_STRAIGHT = frozenset({0})


def _default_checkpoints():
    right_turns = {4, 17, 21}
    left_turns = {12}
    out = []
    for c in range(1, 28):
        if c in right_turns:
            out.append(_TURN_RIGHT)
        elif c in left_turns:
            out.append(_TURN_LEFT)
        else:
            out.append(_STRAIGHT)
    return tuple(out)


@dataclass(frozen=True)
class CorridorSpec:
    """Checkpoint sequence; each entry is the set of moves that succeed when both robots choose them."""

    checkpoints: tuple = field(default_factory=_default_checkpoints)
    step_length: float = 5.0
    success_reward: float = 1.0

    def __post_init__(self):
        cps = tuple(frozenset(int(a) for a in cp) for cp in self.checkpoints)
        if not cps:
            raise ConfigurationError("corridor needs at least one checkpoint")
        for i, cp in enumerate(cps):
            if not cp:
                raise ConfigurationError(f"checkpoint {i} has no feasible coordinated move")
            if not cp <= set(range(len(MOVES))):
                raise ConfigurationError(f"checkpoint {i} names an unknown move: {sorted(cp)}")
        if not self.success_reward > 0:
            raise ConfigurationError("success_reward must be > 0")
        if not self.step_length > 0:
            raise ConfigurationError("step_length must be > 0")
        object.__setattr__(self, "checkpoints", cps)

    @property
    def num_checkpoints(self) -> int:
        return len(self.checkpoints)


def build_corridor_checkpoint_game(spec: CorridorSpec, checkpoint: int) -> Game:
    """Identical-interest 2-player, 5-move game of one checkpoint."""
    if not 0 <= checkpoint < spec.num_checkpoints:
        raise ConfigurationError(f"checkpoint {checkpoint} outside [0, {spec.num_checkpoints})")
    k = len(MOVES)
    diag = np.zeros((k, k))
    for a in spec.checkpoints[checkpoint]:
        diag[a, a] = spec.success_reward
    table = np.stack([diag, diag], axis=-1)
    return Game.from_table(
        table,
        potential=lambda s: table[s[0], s[1], 0],
        action_labels=(MOVES, MOVES),
        name=f"corridor-checkpoint-{checkpoint + 1}",
    )


def is_success(spec: CorridorSpec, checkpoint: int, joint) -> bool:
    a, b = (int(x) for x in joint)
    return a == b and a in spec.checkpoints[checkpoint]
