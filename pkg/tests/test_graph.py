import json
import random
from fractions import Fraction

import pytest

from hkbounds import (
    Configuration,
    Profile,
    ScalarMode,
    build_profile,
    connected_components,
    is_connected,
    is_delta_trivial,
    neighbors,
    order_statistics,
    satisfies_star,
    satisfies_star_star,
    update_step,
)

from conftest import rational_config

FIVE_CHAIN = Configuration(((-1,), (0,), (1,), (2,), (2,)), 1, ScalarMode.EXACT_RATIONAL)


def bfs_connected(profile: Profile) -> bool:
    # independent of the union-find route
    adj = {i: set() for i in range(1, profile.n + 1)}
    for i, j in profile.edges:
        adj[i].add(j)
        adj[j].add(i)
    seen = {1}
    frontier = [1]
    while frontier:
        v = frontier.pop()
        for w in adj[v]:
            if w not in seen:
                seen.add(w)
                frontier.append(w)
    return len(seen) == profile.n


class TestProfile:
    def test_five_agent_chain_edges(self):
        profile = build_profile(FIVE_CHAIN)
        assert profile.edges == frozenset({(1, 2), (2, 3), (3, 4), (3, 5), (4, 5)})
        assert is_connected(profile)

    def test_five_agent_chain_splits_after_step(self):
        profile = build_profile(update_step(FIVE_CHAIN))
        assert (2, 3) not in profile.edges
        assert not is_connected(profile)
        assert connected_components(profile) == ((1, 2), (3, 4, 5))

    def test_single_agent(self):
        profile = build_profile(Configuration(((0.0,),), 1.0))
        assert profile.edges == frozenset()
        assert is_connected(profile)

    def test_degree_matches_neighbor_count(self):
        rng = random.Random(3)
        for _ in range(200):
            cfg = rational_config(rng, rng.randint(1, 8), rng.randint(1, 3))
            profile = build_profile(cfg)
            for i in range(1, cfg.n + 1):
                assert profile.degree(i) == len(neighbors(cfg, i).members) - 1

    def test_connectivity_matches_bfs_oracle(self):
        rng = random.Random(5)
        for _ in range(300):
            n = rng.randint(1, 9)
            edges = frozenset(
                (i, j)
                for i in range(1, n + 1)
                for j in range(i + 1, n + 1)
                if rng.random() < 0.25
            )
            profile = Profile(n, edges)
            assert is_connected(profile) == bfs_connected(profile)

    def test_json_round_trip_sorted_lexicographically(self):
        profile = build_profile(FIVE_CHAIN)
        obj = profile.as_json()
        assert obj == {"n": 5, "edges": [[1, 2], [2, 3], [3, 4], [3, 5], [4, 5]]}
        assert Profile.from_json(json.loads(json.dumps(obj))) == profile

    def test_edge_validation(self):
        with pytest.raises(ValueError):
            Profile(3, frozenset({(1, 4)}))
        with pytest.raises(ValueError):
            Profile(3, frozenset({(2, 2)}))


class TestDeltaTrivial:
    def test_equal_opinions_zero_delta(self):
        assert is_delta_trivial(Configuration(((1.0,), (1.0,)), 1.0), 0.0)

    def test_unit_gap_not_half_trivial(self):
        assert not is_delta_trivial(Configuration(((0.0,), (1.0,)), 1.0), 0.5)

    def test_five_agent_chain_inclusive_at_diameter(self):
        assert is_delta_trivial(FIVE_CHAIN, 3)
        assert not is_delta_trivial(FIVE_CHAIN, Fraction(3) - Fraction(1, 10**9))

    def test_negative_delta_rejected(self):
        with pytest.raises(ValueError):
            is_delta_trivial(FIVE_CHAIN, -1)

    def test_empirical_frequency_monotone_in_delta(self):
        from hkbounds import sample_initial

        samples = [sample_initial(6, 2, t, 61, eps=0.5) for t in range(400)]
        deltas = [0.1, 0.3, 0.5, 0.8, 1.2, 2.0]
        counts = [sum(is_delta_trivial(c, d) for c in samples) for d in deltas]
        assert counts == sorted(counts)
        assert counts[-1] == len(samples)  # delta beyond the cube diagonal

    def test_trivial_at_epsilon_implies_connected(self):
        rng = random.Random(7)
        hits = 0
        for _ in range(500):
            cfg = rational_config(rng, rng.randint(1, 7), rng.randint(1, 3), span=2)
            if is_delta_trivial(cfg, cfg.epsilon):
                hits += 1
                assert is_connected(build_profile(cfg))
        assert hits > 10


class TestOrderStatistics:
    def test_stable_tie_breaking(self):
        cfg = Configuration(((5.0,), (3.0,), (5.0,), (1.0,)), 1.0)
        stats = order_statistics(cfg)
        assert stats.permutation == (4, 2, 1, 3)
        assert stats.values == (1.0, 3.0, 5.0, 5.0)

    def test_permutation_is_valid_and_values_sorted(self):
        rng = random.Random(9)
        for _ in range(200):
            cfg = rational_config(rng, rng.randint(1, 10), 1)
            stats = order_statistics(cfg)
            assert sorted(stats.permutation) == list(range(1, cfg.n + 1))
            assert all(a <= b for a, b in zip(stats.values, stats.values[1:]))
            for rank, agent in enumerate(stats.permutation, start=1):
                assert cfg.opinions[agent - 1][0] == stats.values[rank - 1]

    def test_multidimensional_rejected(self):
        with pytest.raises(ValueError):
            order_statistics(Configuration(((0.0, 0.0),), 1.0))


class TestStarCondition:
    def test_five_agents_spread(self):
        cfg = Configuration(((0,), (0.3,), (0.5,), (0.8,), (1.5,)), 1.0)
        # hand evaluation on the sorted values: inner 0.8-0.3=0.5 <= 1,
        # outer (1.5-0.8)+(0.3-0) = 1.0 <= 1 inclusive
        assert satisfies_star(cfg) is True

    def test_trivial_configurations_satisfy_it(self):
        rng = random.Random(13)
        checked = 0
        for _ in range(500):
            n = rng.randint(4, 9)
            cfg = rational_config(rng, n, 1, span=2)
            if is_delta_trivial(cfg, cfg.epsilon):
                checked += 1
                assert satisfies_star(cfg)
        assert checked > 10

    def test_outlier_fails(self):
        cfg = Configuration(((0,), (0,), (0,), (0,), (2,)), 1.0)
        assert satisfies_star(cfg) is False

    def test_domain_errors(self):
        with pytest.raises(ValueError):
            satisfies_star(Configuration(((0.0,), (0.1,), (0.2,)), 1.0))
        with pytest.raises(ValueError):
            satisfies_star(Configuration(((0.0, 0.0),) * 5, 1.0))


class TestStarStarCondition:
    def test_equal_opinions(self):
        cfg = Configuration(tuple(((0.4,),) * 10), 1.0)
        assert satisfies_star_star(cfg) == (True, 0)

    def test_four_agents_tight(self):
        cfg = Configuration(((0,), (0.2,), (0.4,), (0.6,)), 1.3)
        assert satisfies_star_star(cfg) == (True, 0)

    def test_four_agents_spread(self):
        cfg = Configuration(((0,), (1,), (2,), (3,)), 1.0)
        assert satisfies_star_star(cfg) == (False, None)

    def test_smallest_witness_reported(self):
        values = (0, 0.01, 0.2, 0.3, 0.4, 0.5, 0.6, 0.65, 0.66, 0.7)
        cfg = Configuration(tuple((v,) for v in values), 1.0)
        # i=0 fails on the middle band (0.66 - 0.01 = 0.65 > 0.5); i=1 fits
        assert satisfies_star_star(cfg) == (True, 1)

    def test_domain_errors(self):
        with pytest.raises(ValueError):
            satisfies_star_star(Configuration(((0.0,),) * 3, 1.0))

    def test_implies_connected(self):
        rng = random.Random(17)
        hits = 0
        for _ in range(2000):
            n = rng.randint(4, 10)
            cfg = rational_config(rng, n, 1, denom=8, span=1)
            holds, witness = satisfies_star_star(cfg)
            if holds:
                hits += 1
                assert witness is not None
                assert is_connected(build_profile(cfg))
        assert hits > 20
