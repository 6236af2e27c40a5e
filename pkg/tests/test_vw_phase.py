from __future__ import annotations

import random
from fractions import Fraction

import pytest
from hypothesis import given, strategies as st

from approx_mwm import oracle_verify as O
from approx_mwm.fmu_search import PhaseParams, alg_phase
from approx_mwm.graph_model import BlossomForest, Matching, WeightedGraph, contract, matching_length
from approx_mwm.vw_phase import PreconditionError, expand, recover, vertex_weighted_alg_phase, weighted_size
from audits import LAMBDAS, random_unweighted, vw_violations
from helpers import random_view

HALF = PhaseParams.from_lambda(Fraction(1, 2))


def unit_view(g, M):
    return contract(g, M, BlossomForest(g.n))


def blossom_path():
    """Super-vertex path f - B - x = y - g where B = {1,2,3} has base 1 matched to x."""
    # 0 free; blossom 1,2,3 (2=3 matched, base 1); 1=4 matched; 4-5 unmatched; 5=6; 6-7 free
    edges = [(1, 2, 1), (2, 3, 1), (3, 1, 1), (0, 2, 1), (1, 4, 1), (4, 5, 1), (5, 6, 1), (6, 7, 1)]
    g = WeightedGraph(8, edges)
    M = Matching(g, [g.edge_between(2, 3), g.edge_between(1, 4), g.edge_between(5, 6)])
    f = BlossomForest(8)
    f.add_blossom([1, 2, 3], [(0, 1, 2), (1, 2, 3), (2, 3, 1)], 1)
    return g, M, f


class TestExpand:
    def test_unit_view_is_identity(self):
        g, M = random_unweighted(random.Random(1), 9, 0.4)
        view = unit_view(g, M)
        g2, M2, emap = expand(view, HALF)
        kept = [s for s in range(view.size) if s not in emap.dropped_vertices]
        assert g2.n == len(kept)
        back = {(min(emap.origin[u], emap.origin[v]), max(emap.origin[u], emap.origin[v])) for u, v, _ in g2.edges}
        expect = {k for k, se in view.edges.items() if k[0] in emap.vid and k[1] in emap.vid}
        assert back == expect
        assert {frozenset(emap.origin[x] for x in g2.endpoints(e)) for e in M2.matched} == \
               {frozenset(p) for p in view.matched_pairs() if p[0] in emap.vid and p[1] in emap.vid}

    def test_heavy_matched_edge(self):
        # ‖u‖ = 3 matched to a unit vertex: ‖e‖_M = 2 matched edges, starting and ending matched
        g, M, f = blossom_path()
        view = contract(g, M, f, check=True)
        b, x = view.super_of_vertex[1], view.super_of_vertex[4]
        assert view.edge_ml(b, x) == 2
        g2, M2, emap = expand(view, HALF)
        seq = emap.paths[(min(b, x), max(b, x))]
        edges = [g2.edge_between(seq[i], seq[i + 1]) for i in range(len(seq) - 1)]
        assert [e in M2 for e in edges] == [True, False, True]
        assert len(seq) - 2 == 2
        assert all(emap.role[v][0] == "p" for v in seq[1:-1])

    def test_heavy_free_vertex_dropped(self):
        g = WeightedGraph(6, [(0, 1, 1), (1, 2, 1), (2, 3, 1), (3, 4, 1), (4, 0, 1), (0, 5, 1)])
        M = Matching(g, [1, 3])
        f = BlossomForest(6)
        f.add_blossom([0, 1, 2, 3, 4], [(e, *g.endpoints(e)) for e in range(5)], 0)
        view = contract(g, M, f, check=True)
        params = PhaseParams(Fraction(1), 1, 10, 10, Fraction(0))
        _, _, emap = expand(view, params)
        b = view.super_of_vertex[0]
        assert (view.weight(b) - 1) // 2 == 2 > params.l_max
        assert b in emap.dropped_vertices

    def test_heavy_free_vertex_gets_tail(self):
        g = WeightedGraph(4, [(0, 1, 1), (1, 2, 1), (2, 0, 1), (2, 3, 1)])
        M = Matching(g, [1])
        f = BlossomForest(4)
        f.add_blossom([0, 1, 2], [(0, 0, 1), (1, 1, 2), (2, 2, 0)], 0)
        view = contract(g, M, f, check=True)
        g2, M2, emap = expand(view, HALF)
        b = view.super_of_vertex[0]
        tail = emap.tails[b]
        assert len(tail) == 3 and tail[-1] == emap.vid[b]
        assert M2.is_free(tail[0]) and not M2.is_free(emap.vid[b])

    def test_oversized_super_vertex_rejected(self):
        g, M, f = blossom_path()
        view = contract(g, M, f, check=True)
        with pytest.raises(PreconditionError):
            expand(view, PhaseParams(Fraction(1), 1, 1, 1, Fraction(0)))


class TestPhase:
    def test_empty_forest_matches_unweighted_phase(self):
        rng = random.Random(5)
        for _ in range(40):
            g, M = random_unweighted(rng, rng.randint(2, 11), 0.4)
            view = unit_view(g, M)
            r = vertex_weighted_alg_phase(view, HALF)
            g2, M2, emap = expand(view, HALF)
            direct = alg_phase(g2, M2, HALF)
            assert r.paths == [[emap.origin[x] for x in p] for p in direct.paths]
            assert r.removed == {emap.origin[x] for x in direct.removed}
            assert r.active == {emap.origin[x] for x in direct.active_vertices}

    def test_path_through_blossom(self):
        g, M, f = blossom_path()
        view = contract(g, M, f, check=True)
        assert view.size == 6
        bad, r = vw_violations(view, M, HALF)
        assert bad == []
        b = view.super_of_vertex[1]
        assert any(b in p for p in r.paths)

    @given(st.integers(0, 10 ** 6), st.integers(1, 12), st.sampled_from(LAMBDAS))
    def test_weighted_contract_audit(self, seed, k, lam):
        rng = random.Random(seed)
        g, M, f, view = random_view(rng, k, p_edge=rng.choice([0.2, 0.4, 0.6]),
                                    max_weight=rng.choice([1, 3, 5]), free_share=rng.choice([0.2, 0.5]))
        bad, _ = vw_violations(view, M, PhaseParams.from_lambda(lam))
        assert bad == []

    @given(st.integers(0, 10 ** 6), st.integers(1, 12))
    def test_structure_weight_at_most_expanded_size(self, seed, k):
        g, M, f, view = random_view(random.Random(seed), k, max_weight=5)
        r = vertex_weighted_alg_phase(view, HALF)
        expanded = {s.root: len(s.vertices) for s in r.inner.structures}
        for s, inner in zip(r.structures, r.inner.structures):
            assert weighted_size(view, s.vertices) <= expanded[inner.root] <= HALF.c_max

    @given(st.integers(0, 10 ** 6), st.integers(2, 12))
    def test_recovered_paths_keep_matching_length(self, seed, k):
        g, M, f, view = random_view(random.Random(seed), k, max_weight=5, free_share=0.6)
        g2, M2, emap = expand(view, HALF)
        res = alg_phase(g2, M2, HALF)
        paths, _, _, _ = recover(view, emap, res)
        for p, pre in zip(paths, res.paths):
            matched = sum(1 for a, b in zip(pre, pre[1:]) if M2.mate(a) == b)
            assert matching_length(view, p) == matched

    @given(st.integers(0, 10 ** 6), st.integers(1, 10), st.sampled_from(LAMBDAS))
    def test_dropped_parts_carry_no_short_path(self, seed, k, lam):
        params = PhaseParams.from_lambda(lam)
        g, M, f, view = random_view(random.Random(seed), k, max_weight=5, free_share=0.5)
        _, _, emap = expand(view, params)
        ag = O.altgraph_from_view(view)
        for path, _, aug in O._paths_from(ag, params.l_max):
            if not aug:
                continue
            assert not set(path) & emap.dropped_vertices

    @given(st.integers(0, 10 ** 6), st.integers(1, 9), st.integers(0, 4))
    def test_expanded_and_weighted_checks_agree(self, seed, k, bound):
        g, M, f, view = random_view(random.Random(seed), k, max_weight=5, free_share=0.5)
        params = PhaseParams(Fraction(1, 10), 10, 10 ** 6, 10 ** 6, Fraction(0))
        g2, M2, emap = expand(view, params)
        adj = {v: [u for u, _ in g2.adj[v]] for v in range(g2.n)}
        mate = {v: M2.mate(v) for v in range(g2.n) if not M2.is_free(v)}
        lo = O.altgraph_from_unweighted(adj, mate)
        hi = O.altgraph_from_view(view)
        assert O.short_aug_path_exists(lo, bound) == O.short_aug_path_exists(hi, bound)
