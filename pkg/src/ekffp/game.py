"""Finite n-player games: rewards, best replies, pure Nash equilibria, potentials."""

from __future__ import annotations

import itertools
import math
from typing import Callable, Iterable, Sequence

import numpy as np

from .exceptions import ConfigurationError
from .validation import check_joint, check_player, check_profile, check_random_state

#: Absolute tolerance for reward ties and potential differences.
ATOL = 1e-9
#: Largest joint action space that is tabulated or brute-forced.
MAX_JOINT = 10**6

TIE_BREAK_RULES = ("stay", "lowest", "random")


class Game:
    """A finite game in strategic form.

    Parameters
    ----------
    action_counts : sequence of int
        Number of actions of each player.
    reward : callable
        Maps a joint action (tuple of ints, one per player) to a length
        ``num_players`` vector of rewards.
    potential : callable, optional
        Candidate potential over joint actions. Scenario games pass their
        global reward here.
    expected_reward : callable, optional
        ``expected_reward(player, profile) -> ndarray`` returning the exact
        expected reward of each of ``player``'s actions when the opponents
        play the independent mixed strategies in ``profile``. Games whose
        joint space is too large to tabulate must supply it.
    action_labels : sequence of sequence of str, optional
    name : str
    """

    def __init__(
        self,
        action_counts: Sequence[int],
        reward: Callable,
        *,
        potential: Callable | None = None,
        expected_reward: Callable | None = None,
        action_labels=None,
        name: str = "game",
    ):
        counts = tuple(int(k) for k in action_counts)
        if not counts:
            raise ConfigurationError("a game needs at least one player")
        if any(k < 1 for k in counts):
            raise ConfigurationError(f"every player needs at least one action, got {counts}")
        self.action_counts = counts
        self.num_players = len(counts)
        self._reward = reward
        self.potential = potential
        self._expected_reward = expected_reward
        self.name = name
        if action_labels is not None:
            action_labels = tuple(tuple(str(x) for x in labels) for labels in action_labels)
            if tuple(len(x) for x in action_labels) != counts:
                raise ConfigurationError("action_labels do not match action_counts")
        self.action_labels = action_labels
        self._table = None

    @classmethod
    def from_table(cls, table, **kwargs) -> "Game":
        """Build a game from a dense payoff tensor of shape ``(*counts, n)``."""
        t = np.array(table, dtype=float)
        if t.ndim < 2 or t.shape[-1] != t.ndim - 1:
            raise ConfigurationError(f"payoff table of shape {t.shape} is not (*counts, n_players)")
        if not np.all(np.isfinite(t)):
            raise ConfigurationError("payoff table has non-finite entries")
        t.setflags(write=False)
        game = cls(t.shape[:-1], lambda s: t[tuple(s)], **kwargs)
        game._table = t
        return game

    @property
    def joint_space_size(self) -> int:
        return math.prod(self.action_counts)

    def rewards(self, joint) -> np.ndarray:
        """Reward vector of all players at a pure joint action."""
        r = np.asarray(self._reward(tuple(int(a) for a in joint)), dtype=float)
        if r.shape != (self.num_players,) or not np.all(np.isfinite(r)):
            raise ConfigurationError(
                f"reward at {tuple(joint)} must be {self.num_players} finite values, got {r!r}"
            )
        return r

    def global_reward(self, joint) -> float:
        """The potential at ``joint`` when one is attached, else the summed reward."""
        if self.potential is not None:
            return float(self.potential(tuple(int(a) for a in joint)))
        return float(self.rewards(joint).sum())

    def joint_actions(self) -> Iterable[tuple]:
        return itertools.product(*(range(k) for k in self.action_counts))

    def reward_table(self, cap: int = MAX_JOINT) -> np.ndarray:
        """Dense ``(*counts, n)`` payoff tensor, built once and cached."""
        if self._table is None:
            if self.joint_space_size > cap:
                raise ConfigurationError(
                    f"joint action space of {self.joint_space_size} exceeds the cap of {cap}"
                )
            t = np.empty(self.action_counts + (self.num_players,))
            for s in self.joint_actions():
                t[s] = self.rewards(s)
            t.setflags(write=False)
            self._table = t
        return self._table

    def expected_rewards(self, player: int, profile) -> np.ndarray:
        """Expected reward of every action of ``player`` against ``profile``.

        No validation: callers in hot loops pass well-formed arrays. Use the
        module-level :func:`expected_reward` for checked access.
        """
        if self._expected_reward is not None:
            return np.asarray(self._expected_reward(player, profile), dtype=float)
        r = np.moveaxis(self.reward_table()[..., player], player, 0)
        for j in reversed(range(self.num_players)):
            if j != player:
                r = r @ profile[j]
        return r

    def __repr__(self):
        return f"Game(name={self.name!r}, action_counts={self.action_counts})"


def expected_reward(game: Game, player: int, action: int, opponents) -> float:
    """Expected reward of ``player`` choosing ``action`` against independent opponents.

    ``opponents`` has one mixed strategy per player; the entry of ``player``
    itself is ignored and may be ``None``.
    """
    player = check_player(game, player)
    if not 0 <= action < game.action_counts[player]:
        raise ConfigurationError(f"action {action} outside [0, {game.action_counts[player]})")
    profile = check_profile(game, opponents, skip=player)
    return float(game.expected_rewards(player, profile)[action])


def pure_profile(game: Game, joint) -> list:
    """Degenerate mixed profile concentrated on ``joint``."""
    out = []
    for a, k in zip(joint, game.action_counts):
        e = np.zeros(k)
        e[a] = 1.0
        out.append(e)
    return out


def select_maximizer(values, tie_break: str = "stay", previous: int | None = None, rng=None) -> int:
    """Index of the largest entry of ``values`` with ties broken per ``tie_break``.

    ``"stay"`` keeps ``previous`` when it is among the maximizers and falls
    back to the lowest index; ``"lowest"`` always takes the lowest index;
    ``"random"`` draws uniformly among the maximizers using ``rng``.
    """
    v = np.asarray(values, dtype=float)
    best = v.max()
    ties = np.flatnonzero(v >= best - ATOL)
    if ties.size == 1:
        return int(ties[0])
    if tie_break == "stay":
        if previous is not None and previous in ties:
            return int(previous)
        return int(ties[0])
    if tie_break == "lowest":
        return int(ties[0])
    if tie_break == "random":
        return int(check_random_state(rng).choice(ties))
    raise ConfigurationError(f"unknown tie_break {tie_break!r}; expected one of {TIE_BREAK_RULES}")


def best_response(
    game: Game,
    player: int,
    opponents,
    tie_break: str = "stay",
    previous: int | None = None,
    rng=None,
) -> int:
    """Action of ``player`` that maximizes expected reward against ``opponents``."""
    player = check_player(game, player)
    profile = check_profile(game, opponents, skip=player)
    return select_maximizer(game.expected_rewards(player, profile), tie_break, previous, rng)


def deviation_gains(game: Game, joint) -> list:
    """For each player, reward of every unilateral deviation minus the current reward."""
    s = check_joint(game, joint)
    base = game.rewards(s)
    gains = []
    for i, k in enumerate(game.action_counts):
        g = np.empty(k)
        for a in range(k):
            if a == s[i]:
                g[a] = 0.0
                continue
            dev = s[:i] + (a,) + s[i + 1:]
            g[a] = game.rewards(dev)[i] - base[i]
        gains.append(g)
    return gains


def is_pure_nash(game: Game, joint) -> bool:
    """True iff no player gains more than ``ATOL`` by a unilateral deviation."""
    return all(g.max() <= ATOL for g in deviation_gains(game, joint))


def enumerate_pure_nash(game: Game, cap: int = MAX_JOINT) -> list:
    """All pure Nash equilibria by brute force, in lexicographic order."""
    if game.joint_space_size > cap:
        raise ConfigurationError(
            f"refusing to enumerate {game.joint_space_size} joint actions (cap {cap})"
        )
    table = game.reward_table(cap)
    # s is Nash iff each player's reward equals the max along its own axis.
    ok = np.ones(game.action_counts, dtype=bool)
    for i in range(game.num_players):
        r = table[..., i]
        ok &= r >= r.max(axis=i, keepdims=True) - ATOL
    return [tuple(int(a) for a in s) for s in np.argwhere(ok)]


def verify_exact_potential(game: Game, phi: Callable, cap: int = MAX_JOINT, atol: float = ATOL) -> bool:
    """Check ``r_i(s) - r_i(s') == phi(s) - phi(s')`` over all unilateral deviations."""
    if game.joint_space_size > cap:
        raise ConfigurationError(
            f"refusing to check {game.joint_space_size} joint actions (cap {cap})"
        )
    table = game.reward_table(cap)
    pot = np.empty(game.action_counts)
    for s in game.joint_actions():
        pot[s] = float(phi(s))
    # r_i - phi must not depend on player i's own action.
    for i in range(game.num_players):
        d = table[..., i] - pot
        if np.any(np.abs(d - d.take([0], axis=i)) > atol):
            return False
    return True


def wonderful_life_utility(global_reward: Callable, player: int, reference_action: int) -> Callable:
    """Per-player utility ``r_g(s) - r_g(s with player's action set to reference)``."""
    player = int(player)
    reference_action = int(reference_action)

    def utility(joint) -> float:
        s = tuple(int(a) for a in joint)
        ref = s[:player] + (reference_action,) + s[player + 1:]
        return float(global_reward(s)) - float(global_reward(ref))

    return utility


def wonderful_life_game(
    global_reward: Callable, action_counts: Sequence[int], reference_actions: Sequence[int], **kwargs
) -> Game:
    """Game whose players each receive their wonderful-life utility of ``global_reward``."""
    counts = tuple(int(k) for k in action_counts)
    if len(reference_actions) != len(counts):
        raise ConfigurationError("need one reference action per player")
    for i, (a, k) in enumerate(zip(reference_actions, counts)):
        if not 0 <= a < k:
            raise ConfigurationError(f"reference action {a} of player {i} outside [0, {k})")
    utils = [wonderful_life_utility(global_reward, i, a) for i, a in enumerate(reference_actions)]
    kwargs.setdefault("potential", global_reward)
    return Game(counts, lambda s: [u(s) for u in utils], **kwargs)
