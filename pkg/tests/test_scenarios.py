import itertools
import math

import numpy as np
import pytest

from ekffp import ConfigurationError, enumerate_pure_nash, verify_exact_potential
from ekffp.scenarios import (
    CorridorScenario,
    CorridorSpec,
    SensorNetSpec,
    SensorNetwork,
    SensorScenario,
    TrackingSpec,
    WarehouseScenario,
    WarehouseSpec,
    build_corridor_checkpoint_game,
    build_sensor_game,
    build_symmetric_game,
    build_warehouse_game,
    is_success,
    make_scenario,
    random_sensor_network,
    random_warehouse,
    sensor_global_reward,
    sensor_local_rewards,
    tracking_schedule,
    tracking_strategy,
    warehouse_global_reward,
    warehouse_score,
)
from ekffp.scenarios.warehouse import EFFICIENCY, efficiency

TABLE4 = {
    ("low", "short"): 0.2, ("low", "fair"): 0.3, ("low", "long"): 0.5,
    ("medium", "short"): 0.3, ("medium", "fair"): 0.5, ("medium", "long"): 0.7,
    ("high", "short"): 0.5, ("high", "fair"): 0.7, ("high", "long"): 0.9,
}


def micro_warehouse():
    return WarehouseSpec(
        robot_positions=[[0.0, 0.0], [3.0, 4.0], [6.0, 0.0]],
        area_positions=[[0.0, 4.0], [6.0, 8.0]],
        sensors=((0, 3), (2,), (0, 1, 2)),
        battery=("long", "short", "fair"),
        quality=("high", "low", "medium"),
        area_threats=((0, 2), (1, 3)),
        threat_values=((12.0, 15.0), (10.0, 18.0)),
    )


def oracle_warehouse_reward(spec, joint):
    """Loop-by-loop global reward."""
    total = 0.0
    for i, a in enumerate(joint):
        area, vel = divmod(a, 3)
        speed = spec.speeds[vel]
        dx = spec.robot_positions[i] - spec.area_positions[area]
        total -= spec.c1 * math.hypot(*dx) / speed + spec.c2 * speed
    for n, (cats, vals) in enumerate(zip(spec.area_threats, spec.threat_values)):
        for c, v in zip(cats, vals):
            miss = 1.0
            for i, a in enumerate(joint):
                if a // 3 == n and c in spec.sensors[i]:
                    miss *= 1.0 - TABLE4[(spec.quality[i], spec.battery[i])]
            total += v * (1.0 - miss)
    return total


def test_symmetric_rewards():
    g2, g3 = build_symmetric_game(2), build_symmetric_game(3)
    assert g2.rewards((0, 0)).tolist() == [1, 1]
    assert g3.rewards((1, 1)).tolist() == [1, 1]
    assert g3.rewards((0, 2)).tolist() == [0, 0]
    assert verify_exact_potential(g3, g3.potential)


def test_efficiency_table():
    for (q, b), e in TABLE4.items():
        assert efficiency(q, b) == e
    assert EFFICIENCY.max() == 0.9 and EFFICIENCY.min() == 0.2


def test_warehouse_reward_matches_oracle_and_score():
    spec = micro_warehouse()
    game = build_warehouse_game(spec)
    r_max = 12.0 + 15.0 + 10.0 + 18.0
    for s in game.joint_actions():
        expect = oracle_warehouse_reward(spec, s)
        assert abs(warehouse_global_reward(spec, s) - expect) <= 1e-9
        assert abs(warehouse_score(s, spec) - 100.0 * expect / r_max) <= 1e-9
        assert np.allclose(game.rewards(s), expect, atol=1e-12)


def test_warehouse_is_exact_potential_game():
    game = build_warehouse_game(micro_warehouse())
    assert verify_exact_potential(game, game.potential)
    assert enumerate_pure_nash(game)


def test_warehouse_closed_form_expected_reward():
    rng = np.random.default_rng(0)
    spec = micro_warehouse()
    game = build_warehouse_game(spec)
    table = np.empty(game.action_counts)
    for s in game.joint_actions():
        table[s] = oracle_warehouse_reward(spec, s)
    for _ in range(10):
        profile = [rng.dirichlet(np.ones(6)) for _ in range(3)]
        for i in range(3):
            fast = game.expected_rewards(i, profile)
            t = np.moveaxis(table, i, 0)
            others = [profile[j] for j in range(3) if j != i]
            slow = np.einsum("abc,b,c->a", t, *others)
            assert np.allclose(fast, slow, atol=1e-9)


def test_warehouse_detection_examples():
    spec = WarehouseSpec(
        robot_positions=[[0.0, 0.0], [0.0, 0.0]],
        area_positions=[[0.0, 0.0], [5.0, 5.0]],
        sensors=((1,), (1,)),
        battery=("fair", "fair"),
        quality=("medium", "medium"),
        area_threats=((1,), (2,)),
        threat_values=((10.0,), (10.0,)),
    )
    both = (spec.action(0, 0), spec.action(0, 0))
    cost = 2 * (1.0 / 6.0)
    assert warehouse_global_reward(spec, both) == pytest.approx(10.0 * 0.75 - cost)
    # no geiger counter: the radioactive area gives nothing
    away = (spec.action(1, 0), spec.action(0, 0))
    assert warehouse_global_reward(spec, away) == pytest.approx(10 * 0.5 - math.hypot(5, 5) - cost)
    assert warehouse_score((spec.action(1, 2), spec.action(1, 2)), spec) < 0


def test_warehouse_full_detection_scores_100():
    spec = WarehouseSpec(
        robot_positions=[[0.0, 0.0]], area_positions=[[0.0, 0.0]], sensors=((0,),),
        battery=("long",), quality=("high",), area_threats=((0,),), threat_values=((5.0,),),
        c2=0.0,
    )
    # one robot cannot reach certainty; the score stays below the detection ceiling
    assert warehouse_score((0,), spec) == pytest.approx(90.0)


def test_warehouse_detection_monotone_in_capable_robots():
    rng = np.random.default_rng(2)
    spec = random_warehouse(6, 2, rng)
    E, V = spec.efficiencies()
    for n in range(2):
        prev = -1.0
        for m in range(7):
            miss = np.prod(1.0 - E[:m, n], axis=0)
            value = float((V[n] * (1 - miss)).sum())
            assert value >= prev - 1e-12
            prev = value


def test_warehouse_validation():
    base = micro_warehouse()
    kw = dict(
        robot_positions=base.robot_positions, area_positions=base.area_positions, sensors=base.sensors,
        battery=base.battery, quality=base.quality, area_threats=base.area_threats,
        threat_values=base.threat_values,
    )
    with pytest.raises(ConfigurationError):
        WarehouseSpec(**{**kw, "area_threats": ((0, 1, 2), (1,)), "threat_values": ((1.0, 1.0, 1.0), (1.0,))})
    with pytest.raises(ConfigurationError):
        WarehouseSpec(**{**kw, "battery": ("long", "short", "huge")})
    with pytest.raises(ConfigurationError):
        WarehouseSpec(**{**kw, "sensors": ((0, 1, 2, 3), (2,), (0,))})
    with pytest.raises(ConfigurationError):
        warehouse_score((0, 0), base)


def test_random_warehouse_covers_every_threat():
    rng = np.random.default_rng(3)
    for _ in range(20):
        spec = random_warehouse(5, 5, rng)
        carried = {s for ss in spec.sensors for s in ss}
        assert {c for cats in spec.area_threats for c in cats} <= carried
        assert spec.robot_positions.min() >= 0 and spec.robot_positions.max() <= 10


def test_corridor_games():
    spec = CorridorSpec()
    assert spec.num_checkpoints == 27
    g4 = build_corridor_checkpoint_game(spec, 3)
    assert enumerate_pure_nash(g4)  # includes the feasible pairs
    wins = {s for s in g4.joint_actions() if g4.rewards(s)[0] > 0}
    assert wins == {(1, 1), (2, 2)}
    g12 = build_corridor_checkpoint_game(spec, 11)
    assert {s for s in g12.joint_actions() if g12.rewards(s)[0] > 0} == {(3, 3), (4, 4)}
    g1 = build_corridor_checkpoint_game(spec, 0)
    assert {s for s in g1.joint_actions() if g1.rewards(s)[0] > 0} == {(0, 0)}
    for c in range(27):
        g = build_corridor_checkpoint_game(spec, c)
        assert g.rewards((1, 2)).tolist() == [0, 0]
        assert verify_exact_potential(g, g.potential)
    assert is_success(spec, 3, (2, 2)) and not is_success(spec, 3, (0, 0))
    with pytest.raises(ConfigurationError):
        build_corridor_checkpoint_game(spec, 27)
    with pytest.raises(ConfigurationError):
        CorridorSpec(checkpoints=((),))


def test_corridor_config_uses_one_based_moves():
    scen = make_scenario("corridor", checkpoints=[[1], [2, 3]])
    assert scen.spec.checkpoints == (frozenset({0}), frozenset({1, 2}))


def one_sensor_net(distance, sense_range=3.0):
    spec = SensorNetSpec(num_sensors=1, num_events=1, num_slots=4, sense_range=sense_range, comm_range=5.0)
    return SensorNetwork(
        spec, np.array([[0.0, 0.0]]), np.array([[distance, 0.0]]),
        np.array([1.0]), np.array([2.0]), np.array([0.8]),
    )


def test_sensor_single_term_examples():
    net = one_sensor_net(2.0)
    assert sensor_global_reward(net, [0]) == pytest.approx(0.5 * 0.8)
    assert sensor_global_reward(net, [2]) == 0.0  # asleep during the event
    assert sensor_global_reward(one_sensor_net(0.1), [0]) == pytest.approx(0.8)  # p clamped to 1
    assert sensor_global_reward(one_sensor_net(2.0, sense_range=0.3), [0]) == 0.0


def test_sensor_wraparound_event():
    spec = SensorNetSpec(num_sensors=1, num_events=1, num_slots=4)
    net = SensorNetwork(spec, np.zeros((1, 2)), np.zeros((1, 2)), np.array([22.0]), np.array([4.0]), np.array([1.0]))
    assert net.slot_overlap()[0].tolist() == [True, False, False, True]


def brute_sensor_global(net, joint):
    width = net.spec.day_hours / net.spec.num_slots
    total = 0.0
    for e in range(len(net.event_value)):
        miss = 1.0
        for i, slot in enumerate(joint):
            d = float(np.linalg.norm(net.sensor_positions[i] - net.event_positions[e]))
            if d > net.spec.sense_range:
                continue
            lo, hi = slot * width, (slot + 1) * width
            s, t = net.event_start[e], net.event_start[e] + net.event_duration[e]
            awake = (lo < t and hi > s) or (lo < t - net.spec.day_hours and hi > s - net.spec.day_hours)
            if awake:
                miss *= 1.0 - min(1.0, 1.0 / d) if d > 0 else 0.0
        total += net.event_value[e] * (1.0 - miss)
    return total


def test_sensor_micro_instance_brute_force():
    # local utilities form an exact potential game when comm_range >= 2 * sense_range
    spec = SensorNetSpec(num_sensors=5, num_events=3, num_slots=4, sense_range=0.3, comm_range=0.6)
    net = random_sensor_network(spec, np.random.default_rng(5))
    game = build_sensor_game(net)
    values = []
    for s in game.joint_actions():
        values.append(brute_sensor_global(net, s))
        assert sensor_global_reward(net, s) == pytest.approx(values[-1], abs=1e-12)
    assert max(values) > 0
    assert verify_exact_potential(game, game.potential)


def test_sensor_local_equals_global_with_full_ranges():
    spec = SensorNetSpec(num_sensors=4, num_events=5, num_slots=3, sense_range=2.0, comm_range=2.0)
    net = random_sensor_network(spec, np.random.default_rng(6))
    for s in itertools.product(range(3), repeat=4):
        assert np.allclose(sensor_local_rewards(net, s), sensor_global_reward(net, s), atol=1e-12)


def test_sensor_closed_form_expected_reward():
    rng = np.random.default_rng(7)
    spec = SensorNetSpec(num_sensors=4, num_events=4, num_slots=3, sense_range=0.5, comm_range=1.0)
    net = random_sensor_network(spec, rng)
    game = build_sensor_game(net)
    for _ in range(5):
        profile = [rng.dirichlet(np.ones(3)) for _ in range(4)]
        for i in range(4):
            fast = game.expected_rewards(i, profile)
            slow = []
            for a in range(3):
                total = 0.0
                for s in game.joint_actions():
                    if s[i] != a:
                        continue
                    w = np.prod([profile[j][s[j]] for j in range(4) if j != i])
                    total += w * game.rewards(s)[i]
                slow.append(total)
            assert np.allclose(fast, slow, atol=1e-12)


def test_sensor_scenario_score_normalized():
    inst = SensorScenario(SensorNetSpec(num_sensors=6, num_events=4)).instance(np.random.default_rng(0))
    game = inst.stages[0]
    for s in [(0,) * 6, (1, 2, 3, 0, 1, 2)]:
        assert 0.0 <= inst.score(0, s) <= 1.0 + 1e-12


def test_tracking_examples():
    sin = TrackingSpec("sinusoid")
    assert tracking_strategy(sin, 100)[0] == pytest.approx(1.0)
    assert tracking_strategy(sin, 50)[0] == pytest.approx(0.0, abs=1e-15)
    ab = TrackingSpec("abrupt")
    assert tracking_strategy(ab, 1250).tolist() == [1.0, 0.0]
    assert tracking_strategy(ab, 1251).tolist() == [0.0, 1.0]
    assert tracking_strategy(ab, 3751).tolist() == [1.0, 0.0]
    for spec in (sin, ab):
        sched = tracking_schedule(spec)
        assert sched.shape == (5000, 2)
        assert np.all(sched >= 0) and np.allclose(sched.sum(axis=1), 1.0)
        assert np.allclose(sched[1249], tracking_strategy(spec, 1250))
    with pytest.raises(ConfigurationError):
        tracking_strategy(sin, 0)


def test_scenario_instances_are_pure_functions_of_the_seed():
    for scen in (WarehouseScenario(num_robots=4, num_areas=3), SensorScenario(SensorNetSpec(num_sensors=5, num_events=3))):
        a = scen.instance(np.random.default_rng(11))
        b = scen.instance(np.random.default_rng(11))
        s = (0,) * a.num_players
        assert a.score(0, s) == b.score(0, s)
    inst = CorridorScenario().instance()
    assert len(inst.stages) == 27 and inst.success(3, (1, 1))


def test_make_scenario_rejects_unknown():
    with pytest.raises(ConfigurationError):
        make_scenario("maze")
    with pytest.raises(ConfigurationError):
        make_scenario("warehouse", robots=3)
