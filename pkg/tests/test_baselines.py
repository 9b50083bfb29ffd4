import math

import numpy as np
import pytest

from clonedetect.baselines import (
    LocationClaim,
    birthday_collision_oracle,
    broadcast_round,
    collision_probability,
    default_witness_count,
    hop_estimate,
    randomized_multicast_claim,
    ring_distance,
)

L = 10_000.0


def path3():
    return [[1], [0, 2], [1]]


def test_ring_distance_wraps():
    assert ring_distance(100, 9_900, L) == 200
    assert ring_distance(0, 5_000, L) == 5_000
    assert hop_estimate(0, 250, 100, L) == 3
    assert hop_estimate(42, 42, 100, L) == 0


def test_broadcast_path_counts():
    tables = [{} for _ in range(3)]
    msgs, alerts = broadcast_round(
        path3(), [1, 2, 3], np.array([0.0, 10.0, 20.0]), 0, tables, road_length=L, r_conflict=50
    )
    assert len(msgs) == 4
    assert alerts == []
    # the middle node learned both ends and itself
    assert set(tables[1]) == {1, 2, 3}


def test_broadcast_far_clone_flagged():
    # slots 0 and 3 both claim id 1, far apart; slot 2 hears both through neighbours
    adjacency = [[1], [0, 2], [1, 3], [2]]
    positions = np.array([0.0, 10.0, 20.0, 3_000.0])
    tables = [{} for _ in range(4)]
    _, alerts = broadcast_round(
        adjacency, [1, 2, 3, 1], positions, 0, tables, road_length=L, r_conflict=50
    )
    assert alerts and {a.suspect for a in alerts} == {1}


def test_broadcast_near_clone_missed():
    adjacency = [[1], [0, 2], [1, 3], [2]]
    positions = np.array([0.0, 10.0, 20.0, 30.0])
    tables = [{} for _ in range(4)]
    _, alerts = broadcast_round(
        adjacency, [1, 2, 3, 1], positions, 0, tables, road_length=L, r_conflict=50
    )
    assert alerts == []


def test_broadcast_motion_allowance():
    adjacency = [[1], [0]]
    tables = [{}, {}]
    broadcast_round(adjacency, [1, 2], np.array([0.0, 10.0]), 0, tables, road_length=L, r_conflict=50)
    # id 1 moved 250 m in 10 ticks at v_max 30: within 50 + 300
    _, alerts = broadcast_round(
        adjacency, [1, 2], np.array([250.0, 260.0]), 10, tables, road_length=L, r_conflict=50, v_max=30
    )
    assert alerts == []


def test_broadcast_drops_suppress_claims():
    tables = [{} for _ in range(3)]
    broadcast_round(
        path3(), [1, 2, 3], np.array([0.0, 10.0, 20.0]), 0, tables,
        road_length=L, r_conflict=50, deliver=lambda c, k: np.zeros(c, dtype=bool),
    )
    assert tables[1] == {2: (10.0, 0)}


def _claim(subject, pos, slot):
    return LocationClaim(subject, pos, 0, slot)


def test_multicast_forward_count_small():
    # complete graph on 4 slots, g = 2: each of the 3 neighbours forwards to both witnesses
    adjacency = [[j for j in range(4) if j != i] for i in range(4)]
    positions = np.array([0.0, 10.0, 20.0, 30.0])
    tables = [{} for _ in range(4)]
    out = randomized_multicast_claim(
        _claim(7, 0.0, 0), 0, adjacency, positions, 2, np.random.default_rng(0), tables,
        radius=100, road_length=L, r_conflict=50,
    )
    assert out.claims == 3
    assert out.forwards == 2 * 3
    assert out.witnesses.size == 2
    for w in out.witnesses.witnesses:
        assert tables[w][7] == [(0.0, 0)]


def test_multicast_overlap_detects():
    n = 6
    adjacency = [[(i - 1) % n, (i + 1) % n] for i in range(n)]
    positions = np.array([0.0, 100.0, 200.0, 5_000.0, 5_100.0, 5_200.0])
    tables = [{} for _ in range(n)]
    kw = dict(radius=150, road_length=L, r_conflict=200)
    # g = n forces both witness sets to be the whole population
    randomized_multicast_claim(_claim(1, 0.0, 0), 0, adjacency, positions, n, np.random.default_rng(1), tables, **kw)
    out = randomized_multicast_claim(
        _claim(1, 5_000.0, 3), 3, adjacency, positions, n, np.random.default_rng(2), tables, **kw
    )
    assert out.alert is not None and out.alert.suspect == 1


def test_multicast_disjoint_witnesses_miss():
    n = 6
    adjacency = [[(i - 1) % n, (i + 1) % n] for i in range(n)]
    positions = np.linspace(0, 5_000, n)
    tables = [{} for _ in range(n)]
    kw = dict(radius=1_000, road_length=L, r_conflict=200)

    class Fixed:
        def __init__(self, picks):
            self.picks = picks

        def choice(self, population, size, replace):
            return np.array(self.picks[:size])

    randomized_multicast_claim(_claim(1, 0.0, 0), 0, adjacency, positions, 2, Fixed([0, 1]), tables, **kw)
    out = randomized_multicast_claim(
        _claim(1, 5_000.0, 5), 5, adjacency, positions, 2, Fixed([3, 4]), tables, **kw
    )
    assert out.alert is None


def test_multicast_rejects_zero_witnesses():
    with pytest.raises(ValueError):
        randomized_multicast_claim(
            _claim(1, 0.0, 0), 0, [[1], [0]], np.zeros(2), 0, np.random.default_rng(0), [{}, {}],
            radius=1, road_length=L, r_conflict=1,
        )


def test_default_witness_count():
    assert default_witness_count(100) == 10
    assert default_witness_count(101) == 11
    assert default_witness_count(1) == 1


@pytest.mark.parametrize("n", [2, 5, 40])
def test_oracle_full_witness_set(n):
    assert birthday_collision_oracle(n, n, trials=200) == 1.0
    assert collision_probability(n, n) == 1.0


def test_oracle_half_chance():
    assert abs(birthday_collision_oracle(2, 1, trials=10_000, seed=3) - 0.5) <= 0.05
    assert collision_probability(2, 1) == 0.5


def test_oracle_zero_witnesses():
    assert birthday_collision_oracle(10, 0, trials=100) == 0.0
    assert collision_probability(10, 0) == 0.0


@pytest.mark.parametrize("n, g", [(100, 10), (50, 3), (400, 20)])
def test_exact_matches_monte_carlo(n, g):
    mc = birthday_collision_oracle(n, g, trials=4_000, seed=n + g)
    exact = collision_probability(n, g)
    assert abs(mc - exact) < 4 * math.sqrt(exact * (1 - exact) / 4_000) + 1e-9
