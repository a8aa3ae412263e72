import itertools

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from ekffp import ConfigurationError, Game
from ekffp.game import (
    best_response,
    deviation_gains,
    enumerate_pure_nash,
    expected_reward,
    is_pure_nash,
    pure_profile,
    select_maximizer,
    verify_exact_potential,
    wonderful_life_game,
    wonderful_life_utility,
)
from ekffp.scenarios import build_matching_pennies, build_symmetric_game

U, D = 0, 1
L, R = 0, 1


@pytest.fixture
def coord():
    return build_symmetric_game(2)


@pytest.fixture
def pennies():
    return build_matching_pennies()


def brute_expected(game, player, action, profile):
    total = 0.0
    for s in game.joint_actions():
        if s[player] != action:
            continue
        w = np.prod([profile[j][s[j]] for j in range(game.num_players) if j != player])
        total += w * game.rewards(s)[player]
    return total


def random_table_game(rng, counts):
    table = rng.integers(-3, 4, size=tuple(counts) + (len(counts),)).astype(float)
    return Game.from_table(table)


def random_potential_game(rng, counts):
    phi = rng.normal(size=counts)
    n = len(counts)
    table = np.empty(tuple(counts) + (n,))
    for i in range(n):
        # r_i = phi + a term that ignores player i's own action.
        other = rng.normal(size=counts).take([0], axis=i)
        table[..., i] = phi + other
    return Game.from_table(table), lambda s: phi[tuple(s)]


def test_matching_pennies_uniform_opponent_is_zero(pennies):
    assert expected_reward(pennies, 0, 0, [None, np.array([0.5, 0.5])]) == pytest.approx(0.0, abs=1e-12)


def test_coordination_pure_opponent(coord):
    assert expected_reward(coord, 0, U, [None, np.array([1.0, 0.0])]) == 1.0


def test_expected_reward_matches_enumeration_on_random_games():
    rng = np.random.default_rng(3)
    for counts in [(2, 3), (3, 2, 2), (2, 2, 2, 2)]:
        game = random_table_game(rng, counts)
        profile = [rng.dirichlet(np.ones(k)) for k in counts]
        for i, k in enumerate(counts):
            values = game.expected_rewards(i, profile)
            for a in range(k):
                assert values[a] == pytest.approx(brute_expected(game, i, a, profile), abs=1e-12)


def test_degenerate_profile_gives_pure_reward():
    rng = np.random.default_rng(4)
    game = random_table_game(rng, (3, 2, 4))
    for s in game.joint_actions():
        prof = pure_profile(game, s)
        for i in range(3):
            assert expected_reward(game, i, s[i], prof) == game.rewards(s)[i]


def test_expected_reward_rejects_bad_profile(coord):
    with pytest.raises(ConfigurationError):
        expected_reward(coord, 0, 0, [None, np.array([0.2, 0.2, 0.6])])
    with pytest.raises(ConfigurationError):
        expected_reward(coord, 0, 0, [None, np.array([0.7, 0.7])])
    with pytest.raises(ConfigurationError):
        expected_reward(coord, 0, 2, [None, np.array([0.5, 0.5])])


def test_best_response_examples(coord):
    assert best_response(coord, 0, [None, np.array([0.9, 0.1])]) == U
    assert best_response(coord, 0, [None, np.array([0.5, 0.5])], previous=D) == D
    assert best_response(coord, 0, [None, np.array([0.5, 0.5])], tie_break="lowest", previous=D) == U
    three = build_symmetric_game(3)
    assert best_response(three, 1, [np.array([0.0, 0.0, 1.0]), None]) == 2


def test_tie_break_rules():
    v = [1.0, 3.0, 3.0 - 1e-12, 0.0]
    assert select_maximizer(v, "stay", previous=2) == 2
    assert select_maximizer(v, "stay", previous=0) == 1
    assert select_maximizer(v, "lowest") == 1
    draws = {select_maximizer(v, "random", rng=np.random.default_rng(s)) for s in range(40)}
    assert draws == {1, 2}
    with pytest.raises(ConfigurationError):
        select_maximizer(v, "coin")


def test_best_response_is_maximal_on_random_games():
    rng = np.random.default_rng(5)
    for _ in range(50):
        counts = tuple(rng.integers(1, 4, size=rng.integers(1, 4)))
        game = random_table_game(rng, counts)
        profile = [rng.dirichlet(np.ones(k)) for k in counts]
        for i in range(len(counts)):
            a = best_response(game, i, profile)
            values = [brute_expected(game, i, b, profile) for b in range(counts[i])]
            assert values[a] >= max(values) - 1e-9


def test_nash_examples(coord, pennies):
    assert is_pure_nash(coord, (U, L))
    assert not is_pure_nash(coord, (U, R))
    assert enumerate_pure_nash(coord) == [(0, 0), (1, 1)]
    assert enumerate_pure_nash(build_symmetric_game(3)) == [(0, 0), (1, 1), (2, 2)]
    assert enumerate_pure_nash(pennies) == []
    for s in pennies.joint_actions():
        assert not is_pure_nash(pennies, s)


def test_single_player_nash():
    game = Game([3], lambda s: [(1.0, 4.0, 2.0)[s[0]]])
    assert is_pure_nash(game, (1,))
    assert not is_pure_nash(game, (0,))
    assert enumerate_pure_nash(game) == [(1,)]


def test_enumeration_agrees_with_is_pure_nash_and_best_responses():
    rng = np.random.default_rng(6)
    for _ in range(30):
        counts = tuple(rng.integers(1, 4, size=rng.integers(2, 4)))
        game = random_table_game(rng, counts)
        found = set(enumerate_pure_nash(game))
        for s in game.joint_actions():
            assert (s in found) == is_pure_nash(game, s)
            prof = pure_profile(game, s)
            best = all(
                game.expected_rewards(i, prof)[s[i]] >= game.expected_rewards(i, prof).max() - 1e-9
                for i in range(len(counts))
            )
            assert best == (s in found)


def test_enumeration_cap():
    game = Game([10] * 7, lambda s: np.zeros(7))
    with pytest.raises(ConfigurationError, match="refusing"):
        enumerate_pure_nash(game)
    with pytest.raises(ConfigurationError, match="refusing"):
        verify_exact_potential(game, lambda s: 0.0)


def test_potential_examples(coord):
    assert verify_exact_potential(coord, lambda s: coord.rewards(s)[0])
    assert not verify_exact_potential(coord, lambda s: 0.0)


def test_rewards_validated():
    bad = Game([2, 2], lambda s: [1.0])
    with pytest.raises(ConfigurationError):
        bad.rewards((0, 0))
    nan = Game([2], lambda s: [float("nan")])
    with pytest.raises(ConfigurationError):
        nan.rewards((0,))
    with pytest.raises(ConfigurationError):
        Game([2, 0], lambda s: [0.0, 0.0])


@settings(max_examples=40, deadline=None)
@given(st.lists(st.integers(2, 4), min_size=2, max_size=4), st.integers(0, 2**31 - 1))
def test_better_replies_terminate_in_potential_games(counts, seed):
    rng = np.random.default_rng(seed)
    game, phi = random_potential_game(rng, tuple(counts))
    assert verify_exact_potential(game, phi)
    s = tuple(int(rng.integers(k)) for k in counts)
    for _ in range(int(np.prod(counts)) + 1):
        gains = deviation_gains(game, s)
        movers = [(i, int(np.argmax(g))) for i, g in enumerate(gains) if g.max() > 1e-9]
        if not movers:
            break
        i, a = movers[int(rng.integers(len(movers)))]
        nxt = s[:i] + (a,) + s[i + 1:]
        assert phi(nxt) > phi(s)
        s = nxt
    assert is_pure_nash(game, s)


def test_wonderful_life_examples(coord):
    shared = lambda s: coord.rewards(s)[0]
    u = wonderful_life_utility(shared, 0, U)
    assert u((D, L)) == -1.0
    for b in (L, R):
        assert u((U, b)) == 0.0
    assert wonderful_life_utility(lambda s: 7.0, 1, 0)((1, 1)) == 0.0


def test_wonderful_life_preserves_deviation_differences():
    rng = np.random.default_rng(8)
    counts = (3, 2, 3)
    g = rng.normal(size=counts)
    glob = lambda s: g[tuple(s)]
    game = wonderful_life_game(glob, counts, (1, 0, 2))
    assert verify_exact_potential(game, glob)
    for s in itertools.product(*map(range, counts)):
        for i in range(3):
            for a in range(counts[i]):
                t = s[:i] + (a,) + s[i + 1:]
                lhs = game.rewards(s)[i] - game.rewards(t)[i]
                assert lhs == pytest.approx(glob(s) - glob(t), abs=1e-12)
    with pytest.raises(ConfigurationError):
        wonderful_life_game(glob, counts, (0, 5, 0))
