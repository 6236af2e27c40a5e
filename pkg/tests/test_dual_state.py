from __future__ import annotations

import random
from fractions import Fraction

import pytest
from hypothesis import given, settings, strategies as st

from approx_mwm.approx_primal import Residual, compute_inner_outer
from approx_mwm.dual_state import DualState, PreconditionViolation
from approx_mwm.graph_model import BlossomForest, Matching, StructuralError, WeightedGraph
from approx_mwm.oracle_verify import exact_mwm
from approx_mwm.scaling_driver import RunConfig, _Run, run
from helpers import random_blossom_instance


def rand_graph(rng: random.Random, n: int, p: float, wmax: int) -> WeightedGraph:
    return WeightedGraph(n, [(u, v, rng.randint(1, wmax)) for u in range(n) for v in range(u + 1, n)
                             if rng.random() < p])


def fresh(edges, n, W=8, eps=Fraction(1, 2)):
    g = WeightedGraph(n, edges)
    return g, DualState(g, W, eps)


class TestWeights:
    def test_quanta_layout(self):
        g, s = fresh([(0, 1, 7)], 2)
        assert s.unit == 4 and s.L == 3
        assert [s.delta_of(i) for i in range(4)] == [16, 8, 4, 2]
        # δ_i = ε′W/2^i in weight units
        assert [s.to_weight(s.delta_of(i)) for i in range(4)] == [Fraction(1, 2) * 8 / 2 ** i for i in range(4)]

    def test_effective_weight_plain(self):
        g, s = fresh([(0, 1, 7)], 2)
        assert s.to_weight(s.effective_weight(0)) == 7

    def test_effective_weight_after_removal(self):
        g, s = fresh([(0, 1, 8)], 2)
        s.dw[0] += s.delta
        assert s.effective_weight(0) == 8 * s.unit + s.delta

    def test_accumulated_removals_replay(self):
        g = WeightedGraph(2, [(0, 1, 8)])
        s = DualState(g, 8, Fraction(1, 2))
        M = Matching(g, [0])
        f = BlossomForest(2)
        s.tags[0] = 0
        log = []
        for _ in range(3):
            s.remove_matched_edge(0, M, f, check=False)
            log.append(s.delta)
        assert s.effective_weight(0) == 8 * s.unit + sum(log) == 8 * s.unit + 3 * s.delta

    def test_truncated_weight_example(self):
        g, s = fresh([(0, 1, 7)], 2)
        assert s.to_weight(s.truncated_weight(0, 0)) == 4

    def test_truncated_multiple_unchanged(self):
        g, s = fresh([(0, 1, 4)], 2)
        assert s.to_weight(s.truncated_weight(0, 0)) == 4

    @given(st.integers(1, 1000), st.sampled_from([8, 64, 1024]), st.integers(1, 6), st.integers(0, 200))
    def test_truncated_vs_rational_floor(self, w, W, k, extra):
        eps = Fraction(1, 2 ** k)
        g = WeightedGraph(2, [(0, 1, w)])
        s = DualState(g, W, eps)
        s.dw[0] = extra * s.delta_of(s.L)
        for i in range(s.L + 1):
            delta = eps * W / 2 ** i
            weight = w + s.to_weight(s.dw[0])
            expected = (weight / delta).__floor__() * delta
            assert s.to_weight(s.truncated_weight(0, i)) == expected


def nested_instance():
    """Blossom {0,1,2} nested in a 5-node blossom with vertices 0..6."""
    edges = [(0, 1, 1), (1, 2, 1), (2, 0, 1), (0, 3, 1), (3, 4, 1), (4, 5, 1), (5, 6, 1), (6, 0, 1),
             (1, 5, 1), (3, 6, 1), (2, 7, 1)]
    g = WeightedGraph(8, edges)
    M = Matching(g, [g.edge_between(1, 2), g.edge_between(3, 4), g.edge_between(5, 6)])
    f = BlossomForest(8)
    inner = f.add_blossom([0, 1, 2], [(0, 0, 1), (1, 1, 2), (2, 2, 0)], 0)
    outer = f.add_blossom([inner, 3, 4, 5, 6], [(3, 0, 3), (4, 3, 4), (5, 4, 5), (6, 5, 6), (7, 6, 0)], 0)
    return g, M, f, inner, outer


class TestYZ:
    def test_no_blossoms(self):
        g, s = fresh([(0, 1, 3)], 2)
        s.y = [5, 9]
        assert s.yz(0, BlossomForest(2)) == 14

    def test_inside_one_blossom(self):
        g = WeightedGraph(3, [(0, 1, 1), (1, 2, 1), (2, 0, 1)])
        s = DualState(g, 8, Fraction(1, 2))
        f = BlossomForest(3)
        b = f.add_blossom([0, 1, 2], [(0, 0, 1), (1, 1, 2), (2, 2, 0)], 0)
        s.z[b] = s.delta
        assert s.yz(1, f) == s.y[1] + s.y[2] + s.delta

    def test_nested_brute_force(self):
        g, M, f, inner, outer = nested_instance()
        s = DualState(g, 8, Fraction(1, 2))
        rng = random.Random(3)
        s.y = [rng.randrange(0, 50) for _ in range(g.n)]
        s.z = {inner: 16, outer: 48}
        for e, (u, v, _) in enumerate(g.edges):
            brute = s.y[u] + s.y[v] + sum(z for b, z in s.z.items()
                                          if u in f.blossoms[b].vertices and v in f.blossoms[b].vertices)
            assert s.yz(e, f) == brute


class TestEligibility:
    def test_blossom_edge_always_eligible(self):
        g, M, f, inner, outer = nested_instance()
        s = DualState(g, 8, Fraction(1, 2))
        s.y = [0] * g.n
        for e in f.cycle_owner:
            s.tags[e] = 0
            assert s.is_eligible(e, M, f)

    def test_unmatched_tight_threshold(self):
        g, s = fresh([(0, 1, 8)], 2)
        f = BlossomForest(2)
        M = Matching(g)
        wi = s.truncated_weight(0)
        s.y = [wi - s.delta, 0]
        assert s.is_eligible(0, M, f)
        s.y = [wi, 0]
        assert not s.is_eligible(0, M, f)

    def test_matched_without_tag_raises(self):
        g, s = fresh([(0, 1, 8)], 2)
        with pytest.raises(StructuralError):
            s.is_eligible(0, Matching(g, [0]), BlossomForest(2))

    def test_initial_eligible_subgraph(self):
        rng = random.Random(11)
        g = rand_graph(rng, 10, 0.6, 8)
        W, eps = 8, Fraction(1, 8)
        s = DualState(g, W, eps)
        M, f = Matching(g), BlossomForest(g.n)
        delta0 = eps * W
        tau0 = Fraction(W, 2) - delta0 / 2
        direct = [e for e, (_, _, w) in enumerate(g.edges)
                  if 2 * tau0 == (Fraction(w) / delta0).__floor__() * delta0 - delta0]
        assert s.eligible_subgraph(M, f) == direct
        assert direct == [e for e, (_, _, w) in enumerate(g.edges) if w == W]

    def test_empty_matching_only_unmatched_clause(self):
        rng = random.Random(2)
        g = rand_graph(rng, 8, 0.5, 8)
        s = DualState(g, 8, Fraction(1, 4))
        M, f = Matching(g), BlossomForest(g.n)
        assert s.eligible_subgraph(M, f) == [e for e in range(g.m) if s.yz(e, f) == s.truncated_weight(e) - s.delta]

    @pytest.mark.parametrize("seed", range(6))
    def test_augmented_paths_leave_eligible_graph(self, seed):
        g = rand_graph(random.Random(seed), 10, 0.5, 16)
        seen = []

        def hook(ev):
            for p in ev["primal"].paths:
                for e in p.edges:
                    if e not in ev["forest"].cycle_owner:
                        seen.append(e in ev["eligible"])

        run(g, RunConfig(epsilon=Fraction(1, 2), audit=hook))
        assert seen and not any(seen)


def matched_state(yz_offset: int):
    """One matched type-0 edge sitting at the upper near-tightness bound (plus an offset)."""
    g = WeightedGraph(2, [(0, 1, 8)])
    s = DualState(g, 8, Fraction(1, 2))
    M, f = Matching(g, [0]), BlossomForest(2)
    s.tags[0] = 0
    wi = s.truncated_weight(0)
    s.y = [wi // 2 + yz_offset, wi // 2]
    return g, s, M, f


class TestRemovals:
    @pytest.mark.parametrize("scale", [0, 1, 2])
    def test_remove_matched_edge(self, scale):
        g, s, M, f = matched_state(0)
        s.scale = scale
        j = 0
        wi = s.truncated_weight(0)
        s.y = [wi + 2 * (s.delta_of(j) - s.delta), 0]
        assert s.is_eligible(0, M, f)
        before = s.dw[0]
        s.remove_matched_edge(0, M, f)
        assert s.dw[0] == before + s.delta
        assert not s.is_eligible(0, M, f)
        assert s.yz(0, f) >= s.truncated_weight(0) - s.delta

    def test_remove_matched_edge_precondition(self):
        g, s, M, f = matched_state(1)
        with pytest.raises(PreconditionViolation):
            s.remove_matched_edge(0, M, f)

    def test_trivial_free_vertex(self):
        g, s = fresh([(0, 1, 8)], 2)
        M, f = Matching(g), BlossomForest(2)
        y0 = list(s.y)
        s.remove_free_vertex(0, M, f)
        assert s.y == [y0[0] + s.delta, y0[1]] and s.z == {}

    def test_blossom_free_vertex_keeps_internal_yz(self):
        g = WeightedGraph(4, [(0, 1, 8), (1, 2, 8), (2, 0, 8), (2, 3, 8)])
        s = DualState(g, 8, Fraction(1, 2))
        M, f = Matching(g, [1]), BlossomForest(4)
        b = f.add_blossom([0, 1, 2], [(0, 0, 1), (1, 1, 2), (2, 2, 0)], 0)
        s.z[b] = 2 * s.delta
        inside = [e for e in range(g.m) if e in f.edges_of(b)]
        before = {e: s.yz(e, f) for e in inside}
        y0 = list(s.y)
        s.remove_free_vertex(0, M, f)
        assert [s.y[v] - y0[v] for v in range(4)] == [s.delta] * 3 + [0]
        assert s.z[b] == 0
        assert {e: s.yz(e, f) for e in inside} == before

    def test_removed_free_vertex_isolated(self):
        g = WeightedGraph(4, [(0, 1, 8), (0, 2, 8), (0, 3, 8)])
        s = DualState(g, 8, Fraction(1, 2))
        M, f = Matching(g), BlossomForest(4)
        assert all(s.is_eligible(e, M, f) for e in range(3))
        s.remove_free_vertex(0, M, f)
        assert not any(s.is_eligible(e, M, f) for e in range(3))

    def test_remove_matched_vertex_rejected(self):
        g, s = fresh([(0, 1, 8)], 2)
        with pytest.raises(PreconditionViolation):
            s.remove_free_vertex(0, Matching(g, [0]), BlossomForest(2))


class TestDualAdjust:
    def test_single_outer_vertex(self):
        g, s = fresh([(0, 1, 8)], 2)
        y0, tau0 = list(s.y), s.tau
        s.dual_adjust(set(), {0}, BlossomForest(2))
        assert s.y == [y0[0] - s.delta // 2, y0[1]] and s.tau == tau0 - s.delta // 2

    def test_inner_outer_matched_edge_unchanged(self):
        g, s = fresh([(0, 1, 8)], 2)
        f = BlossomForest(2)
        before = s.yz(0, f)
        s.dual_adjust({0}, {1}, f)
        assert s.yz(0, f) == before

    def test_blossom_z_moves(self):
        g = WeightedGraph(3, [(0, 1, 8), (1, 2, 8), (2, 0, 8)])
        s = DualState(g, 8, Fraction(1, 2))
        f = BlossomForest(3)
        b = f.add_blossom([0, 1, 2], [(0, 0, 1), (1, 1, 2), (2, 2, 0)], 0)
        s.dual_adjust(set(), {0, 1, 2}, f)
        assert s.z[b] == s.delta
        s.dual_adjust({0, 1, 2}, set(), f)
        assert s.z[b] == 0

    def test_overlap_and_straddle_rejected(self):
        g = WeightedGraph(3, [(0, 1, 8), (1, 2, 8), (2, 0, 8)])
        s = DualState(g, 8, Fraction(1, 2))
        f = BlossomForest(3)
        with pytest.raises(PreconditionViolation):
            s.dual_adjust({0}, {0}, f)
        f.add_blossom([0, 1, 2], [(0, 0, 1), (1, 1, 2), (2, 2, 0)], 0)
        with pytest.raises(PreconditionViolation):
            s.dual_adjust({0}, {1, 2}, f)

    def test_full_iteration_six_vertices(self):
        # hand trace: 0-1-2 weigh W, 3-4-5 weigh 1 and are never eligible.
        W = 8
        g = WeightedGraph(6, [(0, 1, W), (1, 2, W), (3, 4, 1), (4, 5, 1)])
        r = _Run(g, RunConfig(epsilon=Fraction(1, 2)))
        s = r.state
        tau0, h = s.tau, s.delta // 2
        assert tau0 == W * s.unit // 2 - s.delta // 2
        r.iteration("0")
        (e,) = r.M.matched
        a = g.other(e, 1)
        b = 2 if a == 0 else 0
        expect = {a: tau0, 1: tau0 + h, b: tau0 - h, 3: tau0 - h, 4: tau0 - h, 5: tau0 - h}
        assert s.y == [expect[v] for v in range(6)]
        assert s.tau == tau0 - h and s.tags == {e: 0}


class TestScaleTransition:
    def test_delta_halving(self):
        g, s = fresh([(0, 1, 8)], 2, W=16, eps=Fraction(1, 4))
        seen = [s.to_weight(s.delta)]
        while s.scale < s.L:
            s.end_of_scale()
            seen.append(s.to_weight(s.delta))
        assert seen == [Fraction(1, 4) * 16 / 2 ** i for i in range(5)]
        assert seen[-1] >= Fraction(1, 4)
        with pytest.raises(PreconditionViolation):
            s.end_of_scale()

    def test_parity_preserved(self):
        g, s = fresh([(0, 1, 8), (1, 2, 8)], 3)
        s.y = [s.tau, s.tau + s.delta // 2, s.tau + s.delta]
        s.end_of_scale()
        half = s.delta // 2
        # shared parity survives; the finer grid makes every old difference even
        assert all(y % half == 0 for y in s.y)
        assert len({(y // half) % 2 for y in s.y}) == 1

    @pytest.mark.parametrize("seed", range(5))
    def test_rcs_after_transitions(self, seed):
        g = rand_graph(random.Random(seed), 9, 0.5, 32)
        opt = exact_mwm(g).weight
        _, rep = run(g, RunConfig(epsilon=Fraction(1, 2), opt_weight=opt))
        assert rep.rcs_violations == [] and rep.validations >= rep.total_iterations + rep.L


class TestValidator:
    def test_fresh_state_passes(self):
        g = rand_graph(random.Random(1), 8, 0.5, 8)
        s = DualState(g, 8, Fraction(1, 4))
        rep = s.validate_rcs(Matching(g), BlossomForest(g.n), opt_weight=exact_mwm(g).weight)
        assert rep.ok and not rep.skipped

    def test_skips_sums_without_optimum(self):
        g = rand_graph(random.Random(1), 6, 0.5, 8)
        rep = DualState(g, 8, Fraction(1, 4)).validate_rcs(Matching(g), BlossomForest(g.n))
        assert rep.ok and rep.skipped

    def test_granularity_violation(self):
        g = rand_graph(random.Random(1), 6, 0.9, 8)
        s = DualState(g, 8, Fraction(1, 4))
        s.y[3] += s.delta // 4
        assert 1 in s.validate_rcs(Matching(g), BlossomForest(g.n)).items_failed()

    def test_sum_bound_violation(self):
        g = WeightedGraph(2, [(0, 1, 1)])
        s = DualState(g, 8, Fraction(1, 4))
        s.dw[0] = 100 * s.delta
        assert 6 in s.validate_rcs(Matching(g), BlossomForest(2), opt_weight=1).items_failed()

    def test_every_boundary_on_n12(self):
        g = rand_graph(random.Random(12), 12, 0.5, 32)
        opt = exact_mwm(g).weight
        reports = []
        r = _Run(g, RunConfig(epsilon=Fraction(1, 5), opt_weight=opt, batch_stable=False))
        orig = r.state.validate_rcs

        def spy(M, f, o):
            out = orig(M, f, o)
            reports.append(out)
            return out

        r.state.validate_rcs = spy
        _, rep = r.run()
        assert len(reports) == 1 + rep.total_iterations + rep.L
        assert all(x.ok and not x.skipped for x in reports)


class TestBoundaryLemmas:
    @pytest.mark.parametrize("seed", range(8))
    def test_reachable_duals_share_parity(self, seed):
        g = rand_graph(random.Random(100 + seed), 10, 0.5, 32)
        bad = []

        def hook(ev):
            r = ev["_run"]
            s = r.state
            view = ev["view"]
            inner, outer, _ = compute_inner_outer(Residual(view))
            reach = view.lift(inner | outer)
            outer_v = view.lift(outer)
            half = s.delta // 2
            # outer duals share one parity, inner duals the other
            par_out = {(s.y[v] // half) % 2 for v in outer_v}
            par_in = {(s.y[v] // half) % 2 for v in reach - outer_v}
            if len(par_out) > 1 or len(par_in) > 1:
                bad.append(ev["iteration"])

        cfg = RunConfig(epsilon=Fraction(1, 2), batch_stable=False)
        r = _Run(g, cfg)
        cfg.audit = lambda ev: hook({**ev, "_run": r})
        r.run()
        assert bad == []

    @pytest.mark.parametrize("seed", range(8))
    def test_type_weight_lower_bound(self, seed):
        g = rand_graph(random.Random(200 + seed), 10, 0.5, 32)
        _, rep = run(g, RunConfig(epsilon=Fraction(1, 2), validate="paranoid"))
        assert rep.rcs_violations == []

    @pytest.mark.parametrize("seed", range(8))
    def test_matching_size_bound(self, seed):
        g = rand_graph(random.Random(300 + seed), 11, 0.5, 32)
        opt = exact_mwm(g).weight
        seen = []
        cfg = RunConfig(epsilon=Fraction(1, 2), trace=seen.append, batch_stable=False)
        _, rep = run(g, cfg)
        W = rep.W_rounded
        for ev in seen:
            assert ev["matching"] * Fraction(W, 2 ** (ev["scale"] + 2)) <= opt


def run_pair(g: WeightedGraph, eps: Fraction, lam, validate: str):
    out = []
    for batch in (False, True):
        r = _Run(g, RunConfig(epsilon=eps, batch_stable=batch, lam=lam, validate=validate))
        _, rep = r.run()
        out.append((rep.as_dict(), r.state.snapshot(), sorted(r.forest.blossoms), r.ledger.snapshot()))
    return out


class TestStableBatching:
    @settings(max_examples=40)
    @given(st.integers(0, 10 ** 6), st.integers(2, 12), st.sampled_from([0.3, 0.5, 0.8]),
           st.sampled_from([1, 5, 32, 1000]), st.sampled_from([Fraction(1, 2), Fraction(1, 5)]),
           st.sampled_from([None, Fraction(1, 2), Fraction(1, 3)]))
    def test_batched_run_equals_stepwise_run(self, seed, n, p, wmax, eps, lam):
        g = rand_graph(random.Random(seed), n, p, wmax)
        if g.m == 0:
            return
        plain, batched = run_pair(g, eps, lam, "boundaries")
        assert plain == batched

    def test_stable_steps_zero_for_eligible_moving_edge(self):
        g, s = fresh([(0, 1, 8)], 2)
        M, f = Matching(g), BlossomForest(2)
        elig = set(s.eligible_subgraph(M, f))
        assert elig == {0}
        assert s.stable_steps(M, f, set(), {0, 1}, elig, 10) == 0

    def test_stable_steps_counts_gap(self):
        g, s = fresh([(0, 1, 8)], 2)
        M, f = Matching(g), BlossomForest(2)
        s.y = [s.y[0] + 3 * s.delta, s.y[1]]
        assert s.eligible_subgraph(M, f) == []
        # yz drops by δ/2 per outer endpoint per step; the gap is 3δ
        assert s.stable_steps(M, f, set(), {0, 1}, set(), 100) == 3
        assert s.stable_steps(M, f, set(), {0, 1}, set(), 2) == 2

    def test_stable_steps_respects_inner_blossom(self):
        g, M, f = random_blossom_instance(random.Random(4), 3, max_weight=3, free_share=1.0)
        s = DualState(g, 16, Fraction(1, 4))
        roots = [r for r in f.roots() if r >= g.n]
        if not roots:
            pytest.skip("instance has no blossom")
        b = roots[0]
        s.z[b] = 3 * s.delta
        inner = set(f.node_vertices(b))
        for e in f.cycle_owner:
            s.tags[e] = 0
        for e in M.matched:
            s.tags[e] = 0
        elig = set(e for e in range(g.m) if e in f.cycle_owner or s.is_eligible(e, M, f))
        steps = s.stable_steps(M, f, inner, set(), elig, 100)
        assert steps <= 2
