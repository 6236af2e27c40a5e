"""The scaling loop: scales, iterations, augmentation, removals, dual moves."""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Callable

from .approx_primal import PrimalResult, Residual, approx_primal, compute_inner_outer
from .cost_model import CostConfig, CostLedger, round_budget
from .dual_state import DualState
from .fmu_search import PhaseParams
from .graph_model import BlossomForest, Matching, WeightedGraph, augment, contract, validate_laminar_full

VALIDATE_MODES = ("off", "boundaries", "paranoid")


class InvariantViolation(RuntimeError):
    """Raised when a certificate fails; the message names scale and iteration."""


def eps_prime_for(epsilon: Fraction, divisor: int = 16) -> Fraction:
    """Largest power of two that is at most ε/divisor."""
    target = Fraction(epsilon) / divisor
    if target <= 0:
        raise ValueError("ε must be positive")
    k = 0
    while Fraction(1, 1 << k) > target:
        k += 1
    return Fraction(1, 1 << k)


def round_up_pow2(w: int) -> int:
    return 1 << max(0, (w - 1).bit_length())


@dataclass
class RunConfig:
    epsilon: Fraction = Fraction(1, 5)
    eps_divisor: int = 16
    validate: str = "boundaries"
    opt_weight: int | None = None
    removal_constant: int = 16
    rescale: bool = True
    lam: Fraction | None = None
    prune_threshold: Fraction | None = None
    seed: int = 0
    audit: Callable[[dict], None] | None = None
    trace: Callable[[dict], None] | None = None
    batch_stable: bool = True

    def __post_init__(self) -> None:
        self.epsilon = Fraction(self.epsilon)
        if not 0 < self.epsilon < 1:
            raise ValueError("ε must lie in (0, 1)")
        if self.validate not in VALIDATE_MODES:
            raise ValueError(f"validator mode must be one of {VALIDATE_MODES}")

    @property
    def eps_prime(self) -> Fraction:
        return eps_prime_for(self.epsilon, self.eps_divisor)


@dataclass
class RunReport:
    weight: int = 0
    matching: list[int] = field(default_factory=list)
    W: int = 0
    W_rounded: int = 0
    L: int = 0
    eps_prime: Fraction = Fraction(0)
    lam: Fraction = Fraction(0)
    rescaled: bool = False
    iterations: list[int] = field(default_factory=list)
    sum_dw: int = 0
    removed_edges: int = 0
    removed_free: int = 0
    phase_calls: int = 0
    blossoms_made: int = 0
    blossoms_dissolved: int = 0
    validations: int = 0
    rcs_violations: list[str] = field(default_factory=list)
    bound_violations: list[str] = field(default_factory=list)
    removal_constant: int = 16
    max_step2_m: int = 0
    max_step2_f: int = 0
    cost: dict = field(default_factory=dict)
    round_budget: int = 0
    unwound: int = 0
    peak_words: int = 0
    batched: int = 0

    @property
    def total_iterations(self) -> int:
        return sum(self.iterations)

    def as_dict(self) -> dict:
        return {
            "weight": self.weight,
            "matching": list(self.matching),
            "W": self.W,
            "W_rounded": self.W_rounded,
            "L": self.L,
            "eps_prime": str(self.eps_prime),
            "lambda": str(self.lam),
            "rescaled": self.rescaled,
            "iterations_per_scale": list(self.iterations),
            "sum_delta_w_quanta": self.sum_dw,
            "removed_matched_edges": self.removed_edges,
            "removed_free_vertices": self.removed_free,
            "phase_calls": self.phase_calls,
            "blossoms_made": self.blossoms_made,
            "blossoms_dissolved": self.blossoms_dissolved,
            "validations": self.validations,
            "rcs_violations": list(self.rcs_violations),
            "bound_violations": list(self.bound_violations),
            "removal_constant": self.removal_constant,
            "max_step2_removed_edges": self.max_step2_m,
            "max_step2_removed_free": self.max_step2_f,
            "cost": self.cost,
            "round_budget": self.round_budget,
            "peak_words": self.peak_words,
        }


def iterations_per_scale(i: int, W: int, eps_prime: Fraction) -> int:
    """(start τ − target τ)/(δ_i/2) for scale ``i`` of a run with power-of-two W."""
    L = W.bit_length() - 1
    delta = eps_prime * W / (1 << i)
    if i == 0:
        start = Fraction(W, 2) - delta / 2
    else:
        start = Fraction(W, 1 << (i + 1))
    target = Fraction(0) if i == L else Fraction(W, 1 << (i + 2)) - delta / 2
    steps = (start - target) / (delta / 2)
    if steps.denominator != 1:
        raise ValueError("iteration count is not integral")
    return int(steps)


def rescale_weights(graph: WeightedGraph, epsilon: Fraction) -> WeightedGraph:
    """⌈ŵ·n/(εW)⌉, used only when W > n³."""
    n, W = graph.n, graph.W
    factor = Fraction(n) / (Fraction(epsilon) * W)
    edges = [(u, v, max(1, math.ceil(w * factor))) for u, v, w in graph.edges]
    return WeightedGraph(n, edges)


class _Run:
    def __init__(self, graph: WeightedGraph, config: RunConfig):
        self.orig = graph
        self.cfg = config
        self.report = RunReport(removal_constant=config.removal_constant)
        g = graph
        if config.rescale and graph.n > 0 and graph.W > graph.n ** 3:
            g = rescale_weights(graph, config.epsilon)
            self.report.rescaled = True
        self.g = g
        self.Wr = round_up_pow2(max(1, g.W))
        self.eps_prime = config.eps_prime
        self.state = DualState(g, self.Wr, self.eps_prime)
        self.L = self.state.L
        self.lam = config.lam if config.lam is not None else self.eps_prime / (12 * (self.L + 1))
        self.params = PhaseParams.from_lambda(self.lam, config.prune_threshold)
        self.M = Matching(g)
        self.forest = BlossomForest(g.n)
        self.dw_touched: set[int] = set()
        self.ledger = CostLedger(CostConfig.for_run(g.n, config.epsilon, self.params.l_max,
                                                    self.params.c_max, self.params.tau_max))
        r = self.report
        r.W, r.W_rounded, r.L = graph.W, self.Wr, self.L
        r.eps_prime, r.lam = self.eps_prime, self.lam

    def fail(self, where: str, msg: str) -> None:
        raise InvariantViolation(f"scale {self.state.scale}, iteration {where}: {msg}")

    def validate(self, where: str) -> None:
        if self.cfg.validate == "off":
            return
        rep = self.state.validate_rcs(self.M, self.forest, self.cfg.opt_weight)
        self.report.validations += 1
        if not rep.ok:
            msgs = [f"item {v.item}: {v.message}" for v in rep.violations[:5]]
            self.report.rcs_violations.extend(f"[{self.state.scale}:{where}] {m}" for m in msgs)
            self.fail(where, "; ".join(msgs))

    def paranoid(self, where: str) -> None:
        if self.cfg.validate != "paranoid":
            return
        bad = validate_laminar_full(self.forest, self.M)
        if bad:
            self.fail(where, "; ".join(bad[:5]))

    def check_bounds(self, where: str, pr: PrimalResult) -> None:
        r = self.report
        m = pr.matching_size
        c_lam = self.cfg.removal_constant * self.params.lam * m
        r.max_step2_m = max(r.max_step2_m, pr.step2_m)
        r.max_step2_f = max(r.max_step2_f, pr.step2_f)
        if pr.step2_m > c_lam or pr.step2_f > c_lam:
            r.bound_violations.append(f"[{self.state.scale}:{where}] step-2 removals "
                                      f"{pr.step2_m}/{pr.step2_f} exceed c·λ|M|={c_lam}")
        if pr.layers is not None and pr.layers.total() > 2 * m:
            r.bound_violations.append(f"[{self.state.scale}:{where}] layer total "
                                      f"{pr.layers.total()} > 2|M|={2 * m}")

    def iteration(self, where: str) -> PrimalResult:
        st, g, M = self.state, self.g, self.M
        led = self.ledger
        elig = st.eligible_subgraph(M, self.forest)
        led.charge("aggregate")
        pr = approx_primal(g, M, self.forest, elig, self.params)
        led.charge("phase", pr.phase_calls)
        led.charge("aggregate", pr.phase_calls)
        led.charge("blossom_op")
        led.charge("bf")
        led.charge("aggregate")
        if pr.conflict:
            self.fail(where, "inner/outer conflict in the residual graph")
        self.check_bounds(where, pr)
        rep = self.report
        rep.phase_calls += pr.phase_calls
        rep.blossoms_made += len(pr.new_blossoms)
        rep.unwound += pr.unwound
        self.forest = pr.forest
        for p in pr.paths:
            augment(M, p, self.forest)
            st.retag(p.edges, M, self.forest)
            if self.cfg.validate == "paranoid":
                for e in p.edges:
                    if e in M:
                        self.check_type_weight(where, e)
        for b in pr.new_blossoms:
            st.retag([e for e, _, _ in self.forest.blossoms[b].cycle_edges], M, self.forest)
        self.paranoid(where + "/augment")
        for e in sorted(pr.m_prime):
            st.remove_matched_edge(e, M, self.forest)
            self.dw_touched.add(e)
        for f in sorted(pr.f_prime):
            st.remove_free_vertex(f, M, self.forest)
        rep.removed_edges += len(pr.m_prime)
        rep.removed_free += len(pr.f_prime)
        elig2 = st.eligible_subgraph(M, self.forest)
        view = contract(g, M, self.forest, elig2)
        res = Residual(view)
        inner, outer, conflict = compute_inner_outer(res)
        led.charge("aggregate")
        if self.cfg.audit is not None:
            self.cfg.audit({"scale": st.scale, "iteration": where, "graph": g, "matching": M,
                            "forest": self.forest, "eligible": elig2, "view": view,
                            "primal": pr, "eligible_before": elig})
        if conflict:
            self.fail(where, "primal blocking conditions fail on the updated eligible graph")
        v_in, v_out = view.lift(inner), view.lift(outer)
        self.last_adjust = (v_in, v_out, set(elig))
        st.dual_adjust(v_in, v_out, self.forest)
        led.charge("dual_adjust")
        gone = st.dissolve_zero_roots(M, self.forest)
        self.last_dissolved = len(gone)
        rep.blossoms_dissolved += len(gone)
        self.paranoid(where + "/dissolve")
        self.validate(where)
        self.track_words()
        if self.cfg.trace is not None:
            self.cfg.trace({"scale": st.scale, "iteration": where, "tau": st.tau,
                            "paths": len(pr.paths), "new_blossoms": len(pr.new_blossoms),
                            "removed_edges": len(pr.m_prime), "removed_free": len(pr.f_prime),
                            "phase_calls": pr.phase_calls, "dissolved": len(gone),
                            "inner": len(v_in), "outer": len(v_out), "matching": len(M)})
        return pr

    def track_words(self) -> None:
        """Retained words: y, z, tags, M, non-zero Δw and blossom cycles."""
        st = self.state
        words = (len(st.y) + len(st.z) + len(st.tags) + len(self.M) + len(self.dw_touched)
                 + sum(len(b.cycle_edges) for b in self.forest.blossoms.values()))
        self.report.peak_words = max(self.report.peak_words, words)

    def repeat_trivial(self, where: str, steps: int, pr: PrimalResult, before: dict[str, int]) -> None:
        """Replay ``steps`` copies of the trivial iteration just executed.

        The eligible set, matching and forest stay fixed over the stretch, so
        each skipped iteration finds the same empty primal result and the
        same inner and outer sets. Every certificate item is linear in the
        number of steps, so checking the end state covers the stretch.
        """
        st, led, rep = self.state, self.ledger, self.report
        for prim, cnt in list(led.counts.items()):
            delta = cnt - before.get(prim, 0)
            if delta:
                led.charge(prim, delta * steps)
        rep.phase_calls += pr.phase_calls * steps
        v_in, v_out, _ = self.last_adjust
        st.dual_adjust(v_in, v_out, self.forest, steps)
        rep.batched += steps
        if self.cfg.trace is not None:
            self.cfg.trace({"scale": st.scale, "iteration": where, "tau": st.tau, "repeated": steps})
        if self.cfg.validate != "off":
            rep.validations += steps - 1
        self.validate(where)

    @staticmethod
    def trivial(pr: PrimalResult) -> bool:
        return not (pr.paths or pr.new_blossoms or pr.m_prime or pr.f_prime or pr.unwound)

    def repeatable(self, pr: PrimalResult) -> bool:
        return self.trivial(pr) and not self.last_dissolved

    def check_type_weight(self, where: str, e: int) -> None:
        st = self.state
        j = st.tags.get(e)
        if j is None:
            return
        need = (self.Wr * st.unit >> (j + 1)) + st.delta_of(j)
        if st.effective_weight(e) < need:
            self.fail(where, f"type-{j} edge {e} has w(e) below W/2^(j+1)+δ_j")

    def run(self) -> tuple[Matching, RunReport]:
        st = self.state
        self.validate("init")
        self.track_words()
        for i in range(self.L + 1):
            count = 0
            target = st.target_tau(i)
            half = st.delta // 2
            while st.tau > target:
                before = dict(self.ledger.counts)
                flagged = len(self.report.bound_violations)
                pr = self.iteration(str(count))
                count += 1
                if (self.cfg.batch_stable and st.tau > target and self.repeatable(pr)
                        and len(self.report.bound_violations) == flagged):
                    v_in, v_out, elig = self.last_adjust
                    steps = st.stable_steps(self.M, self.forest, v_in, v_out, elig, (st.tau - target) // half)
                    if steps > 0:
                        self.repeat_trivial(str(count), steps, pr, before)
                        count += steps
            if st.tau != target:
                self.fail(str(count), f"τ overshot its target ({st.tau} vs {target})")
            self.report.iterations.append(count)
            if i < self.L:
                st.end_of_scale()
                self.validate("scale-start")
        rep = self.report
        rep.matching = sorted(self.M.matched)
        rep.weight = sum(self.orig.edges[e][2] for e in rep.matching)
        rep.sum_dw = sum(st.dw)
        rep.cost = self.ledger.snapshot()
        rep.round_budget = round_budget(self.ledger.config, rep.total_iterations or 1, self.lam,
                                        self.params.c_max, self.params.l_max)
        return self.M, rep


def run(graph: WeightedGraph, config: RunConfig | None = None) -> tuple[Matching, RunReport]:
    """Approximate maximum weight matching of ``graph``."""
    config = config or RunConfig()
    if graph.m == 0:
        rep = RunReport(removal_constant=config.removal_constant)
        return Matching(graph), rep
    return _Run(graph, config).run()
