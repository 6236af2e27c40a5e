from __future__ import annotations

import random

import pytest
from hypothesis import given, strategies as st

from approx_mwm import oracle_verify as O
from approx_mwm.cli_io import generate
from approx_mwm.graph_model import WeightedGraph


def brute_mwm(g: WeightedGraph) -> int:
    """Best matching weight by include/exclude over edges; no memo, no shared code."""
    best = 0

    def go(i, used, total):
        nonlocal best
        best = max(best, total)
        for j in range(i, g.m):
            u, v, w = g.edges[j]
            if u not in used and v not in used:
                go(j + 1, used | {u, v}, total + w)

    go(0, frozenset(), 0)
    return best


def alt(g, matched, removed=()):
    adj = {v: [u for u, _ in g.adj[v]] for v in range(g.n)}
    mate = {}
    for e in matched:
        u, v = g.endpoints(e)
        mate[u], mate[v] = v, u
    return O.altgraph_from_unweighted(adj, mate, removed)


class TestExactMWM:
    def test_examples(self):
        assert O.exact_mwm(WeightedGraph(0, [])).weight == 0
        assert O.exact_mwm(WeightedGraph(2, [(0, 1, 7)])).weight == 7
        path = WeightedGraph(4, [(0, 1, 2), (1, 2, 3), (2, 3, 2)])
        r = O.exact_mwm(path)
        assert r.weight == 4 and r.matching == [0, 2]
        tri = WeightedGraph(3, [(0, 1, 5), (1, 2, 6), (0, 2, 4)])
        assert O.exact_mwm(tri).weight == 6

    def test_matching_is_valid_and_weighs_right(self):
        rng = random.Random(5)
        for _ in range(20):
            n = rng.randint(2, 12)
            g = WeightedGraph(n, [(u, v, rng.randint(1, 9)) for u in range(n) for v in range(u + 1, n)
                                  if rng.random() < 0.5])
            r = O.exact_mwm(g)
            ends = [x for e in r.matching for x in g.endpoints(e)]
            assert len(ends) == len(set(ends))
            assert sum(g.edges[e][2] for e in r.matching) == r.weight

    def test_agrees_with_brute_force(self):
        rng = random.Random(17)
        for _ in range(50):
            g = WeightedGraph(10, [(u, v, rng.randint(1, 32)) for u in range(10) for v in range(u + 1, 10)
                                   if rng.random() < rng.choice([0.2, 0.4])])
            assert O.exact_mwm(g).weight == brute_mwm(g)

    def test_capability_limit(self):
        with pytest.raises(O.CapabilityError):
            O.exact_mwm(WeightedGraph(23, []))
        assert O.exact_mwm(WeightedGraph(23, [(0, 1, 1)]), limit=30).weight == 1


class TestPathChecks:
    def test_no_free_vertex(self):
        g = WeightedGraph(2, [(0, 1, 1)])
        assert not O.short_aug_path_exists(alt(g, [0]), None)

    def test_single_free_edge(self):
        g = WeightedGraph(2, [(0, 1, 1)])
        ag = alt(g, [])
        assert O.short_aug_path_exists(ag, 0)
        assert O.find_short_aug_path(ag, 0) == [0, 1]

    def test_bound_counts_matched_edges(self):
        g = WeightedGraph(6, [(i, i + 1, 1) for i in range(5)])
        ag = alt(g, [1, 3])
        assert not O.short_aug_path_exists(ag, 1)
        assert O.short_aug_path_exists(ag, 2)
        assert O.find_short_aug_path(ag, 2) == [0, 1, 2, 3, 4, 5]

    def test_fig3_chain_needs_twelve(self):
        gen = generate("fig3-chain", 26)
        ag = alt(gen.graph, gen.matching)
        assert not O.short_aug_path_exists(ag, 11)
        assert O.short_aug_path_exists(ag, 12)

    def test_removed_vertices_block(self):
        g = WeightedGraph(4, [(0, 1, 1), (1, 2, 1), (2, 3, 1)])
        assert not O.short_aug_path_exists(alt(g, [1], removed=[2]), None)

    def test_weighted_start_cost(self):
        ag = O.AltGraph([0, 1], {0: [1], 1: [0]}, {0: -1, 1: -1}, {0, 1}, {0: 5, 1: 3})
        assert not O.short_aug_path_exists(ag, 2)
        assert O.short_aug_path_exists(ag, 3)

    def test_arc_distances(self):
        g = WeightedGraph(5, [(0, 1, 1), (1, 2, 1), (2, 3, 1), (3, 4, 1)])
        assert O.arc_distances(alt(g, [1, 3]), None) == {(1, 2): 1, (3, 4): 2}
        assert O.arc_distances(alt(g, [1, 3]), 1) == {(1, 2): 1}


class TestBlossomChecks:
    @given(st.integers(0, 10 ** 6), st.integers(2, 12))
    def test_bipartite_never(self, seed, n):
        rng = random.Random(seed)
        edges = [(u, v, 1) for u in range(0, n, 2) for v in range(1, n, 2) if rng.random() < 0.5]
        g = WeightedGraph(n, edges)
        used, matched = set(), []
        for e in range(g.m):
            u, v = g.endpoints(e)
            if u not in used and v not in used and rng.random() < 0.6:
                matched.append(e)
                used |= {u, v}
        ag = alt(g, matched)
        # in a bipartite graph an outer-outer edge is always an augmenting path
        assert O.reachable_full_blossom_exists(ag) == O.short_aug_path_exists(ag, None)

    def test_triangle_off_free_vertex(self):
        # 0 free, 0-1=2, triangle 2-3=4-2 with base 2
        g = WeightedGraph(5, [(0, 1, 1), (1, 2, 1), (2, 3, 1), (3, 4, 1), (4, 2, 1)])
        ag = alt(g, [1, 3])
        assert O.reachable_full_blossom_exists(ag)
        assert not O.short_aug_path_exists(ag, None)
        assert not O.blocking_conditions_hold(ag)

    def test_unreachable_triangle(self):
        # 0 is free and isolated; the triangle 1=2-3-1 has its base 3 matched to 4
        g = WeightedGraph(5, [(1, 2, 1), (2, 3, 1), (3, 1, 1), (3, 4, 1)])
        ag = alt(g, [0, 3])
        assert not O.reachable_full_blossom_exists(ag)
        assert O.blocking_conditions_hold(ag)

    def test_inner_outer_chain(self):
        g = WeightedGraph(3, [(0, 1, 1), (1, 2, 1)])
        assert O.inner_outer(alt(g, [1])) == ({1}, {0, 2}, False)
