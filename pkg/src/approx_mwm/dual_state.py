"""Dual variables of the scaling framework in exact integer quanta.

One quantum is δ_L/2 = ε′/2 (W is a power of two, L = log₂W), so a weight
ŵ is ``ŵ·2/ε′`` quanta and δ_i is ``2^(L+1-i)`` quanta. Every comparison
below is an integer comparison.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from fractions import Fraction
from typing import Iterable

from .graph_model import BlossomForest, Matching, StructuralError, WeightedGraph, validate_laminar_full


class PreconditionViolation(StructuralError):
    pass


def _log2_exact(x: int) -> int:
    if x < 1 or x & (x - 1):
        raise ValueError(f"{x} is not a power of two")
    return x.bit_length() - 1


@dataclass
class Violation:
    item: int
    message: str


@dataclass
class RCSReport:
    violations: list[Violation] = field(default_factory=list)
    skipped: list[str] = field(default_factory=list)

    @property
    def ok(self) -> bool:
        return not self.violations

    def add(self, item: int, message: str) -> None:
        self.violations.append(Violation(item, message))

    def items_failed(self) -> set[int]:
        return {v.item for v in self.violations}


class DualState:
    """y, z, Δw, τ, the scale index and edge type tags.

    ``W`` must be a power of two and ``eps_prime`` a power of two at most 1.
    """

    def __init__(self, graph: WeightedGraph, W: int, eps_prime: Fraction):
        eps_prime = Fraction(eps_prime)
        if eps_prime <= 0 or eps_prime > 1 or eps_prime.numerator != 1:
            raise ValueError("ε′ must be 1/2^k")
        self.graph = graph
        self.W = W
        self.L = _log2_exact(W)
        self.eps_prime = eps_prime
        self.unit = 2 * eps_prime.denominator
        _log2_exact(self.unit)
        self.what = [w * self.unit for _, _, w in graph.edges]
        self.scale = 0
        self.tau = W * self.unit // 2 - self.delta_of(0) // 2
        self.y = [self.tau] * graph.n
        self.z: dict[int, int] = {}
        self.dw = [0] * graph.m
        self.tags: dict[int, int] = {}

    # scale bookkeeping

    def delta_of(self, j: int) -> int:
        return 1 << (self.L + 1 - j)

    @property
    def delta(self) -> int:
        return self.delta_of(self.scale)

    def to_weight(self, quanta: int) -> Fraction:
        return Fraction(quanta, self.unit)

    def target_tau(self, i: int | None = None) -> int:
        i = self.scale if i is None else i
        if i == self.L:
            return 0
        return (self.W * self.unit >> (i + 2)) - self.delta_of(i) // 2

    # weights

    def effective_weight(self, e: int) -> int:
        return self.what[e] + self.dw[e]

    def truncated_weight(self, e: int, i: int | None = None) -> int:
        d = self.delta_of(self.scale if i is None else i)
        return self.effective_weight(e) // d * d

    def yz(self, e: int, forest: BlossomForest) -> int:
        u, v, _ = self.graph.edges[e]
        total = self.y[u] + self.y[v]
        if forest.vertex_root[u] == forest.vertex_root[v] and forest.vertex_root[u] >= forest.n:
            z = self.z
            for b in forest.common_blossoms(u, v):
                total += z.get(b, 0)
        return total

    # eligibility

    def is_eligible(self, e: int, matching: Matching, forest: BlossomForest) -> bool:
        if e in forest.cycle_owner:
            return True
        d = self.delta
        wi = self.truncated_weight(e)
        if e in matching:
            j = self.tags.get(e)
            if j is None:
                raise StructuralError(f"matched edge {e} carries no type tag")
            return self.yz(e, forest) == wi + 2 * (self.delta_of(j) - d)
        return self.yz(e, forest) == wi - d

    def eligible_subgraph(self, matching: Matching, forest: BlossomForest) -> list[int]:
        graph = self.graph
        d = self.delta
        y = self.y
        root = forest.vertex_root
        n = forest.n
        mate_edge = matching.mate_edge
        owner = forest.cycle_owner
        out = []
        for e, (u, v, _) in enumerate(graph.edges):
            if e in owner:
                out.append(e)
                continue
            wi = (self.what[e] + self.dw[e]) // d * d
            s = y[u] + y[v]
            if root[u] == root[v] and root[u] >= n:
                s = self.yz(e, forest)
            if mate_edge[u] == e:
                j = self.tags.get(e)
                if j is None:
                    raise StructuralError(f"matched edge {e} carries no type tag")
                if s == wi + 2 * (self.delta_of(j) - d):
                    out.append(e)
            elif s == wi - d:
                out.append(e)
        return out

    # type tags

    def retag(self, edges: Iterable[int], matching: Matching, forest: BlossomForest) -> None:
        """A tag is set when an edge joins M ∪ E_Ω and dropped when it leaves both."""
        for e in edges:
            member = e in matching or e in forest.cycle_owner
            if member:
                if e not in self.tags:
                    self.tags[e] = self.scale
            else:
                self.tags.pop(e, None)

    # primal-side removals

    def remove_matched_edge(self, e: int, matching: Matching, forest: BlossomForest, check: bool = True) -> None:
        if check:
            if e not in matching or e in forest.cycle_owner or not self.is_eligible(e, matching, forest):
                raise PreconditionViolation(f"edge {e} is not an eligible matched non-blossom edge")
        self.dw[e] += self.delta

    def remove_free_vertex(self, f: int, matching: Matching, forest: BlossomForest) -> None:
        if not matching.is_free(f):
            raise PreconditionViolation(f"vertex {f} is not free")
        r = forest.vertex_root[f]
        d = self.delta
        for u in forest.node_vertices(r):
            self.y[u] += d
        if r >= forest.n:
            self.z[r] = self.z.get(r, 0) - 2 * d

    # dual side

    def dual_adjust(self, v_in: set[int], v_out: set[int], forest: BlossomForest, times: int = 1) -> None:
        """``times`` consecutive adjustments by the same inner and outer sets."""
        if v_in & v_out:
            raise PreconditionViolation(f"inner and outer sets overlap on {sorted(v_in & v_out)[:5]}")
        half = self.delta // 2 * times
        d = self.delta * times
        roots = {forest.vertex_root[u] for u in v_in | v_out}
        for r in roots:
            if r < forest.n:
                continue
            vs = forest.node_vertices(r)
            if vs <= v_out:
                self.z[r] = self.z.get(r, 0) + d
            elif vs <= v_in:
                self.z[r] = self.z.get(r, 0) - d
            else:
                raise PreconditionViolation(f"root blossom {r} straddles the inner/outer sets")
        self.tau -= half
        for u in v_out:
            self.y[u] -= half
        for u in v_in:
            self.y[u] += half

    def dissolve_zero_roots(self, matching: Matching, forest: BlossomForest) -> list[int]:
        gone: list[int] = []
        while True:
            zero = sorted(r for r in set(forest.vertex_root) if r >= forest.n and self.z.get(r, 0) == 0)
            if not zero:
                break
            for r in zero:
                cyc = [e for e, _, _ in forest.blossoms[r].cycle_edges]
                forest.dissolve_root(r)
                self.z.pop(r, None)
                self.retag(cyc, matching, forest)
                gone.append(r)
        return gone

    # repeated adjustments

    def stable_steps(self, matching: Matching, forest: BlossomForest, v_in: set[int], v_out: set[int],
                     eligible: set[int], limit: int) -> int:
        """How many further adjustments by (V_in, V_out) keep the eligible set equal to ``eligible``.

        Under a fixed adjustment yz(e) moves linearly: an edge between two
        root nodes changes by δ_i/2 per inner end minus δ_i/2 per outer end,
        and an edge inside one root does not change. The count is also capped
        so that no inner root blossom reaches z = 0, and by ``limit``.
        """
        root = forest.vertex_root
        n = forest.n
        d = self.delta
        half = d // 2
        best = limit
        for r in {root[u] for u in v_in}:
            if r >= n:
                best = min(best, self.z.get(r, 0) // d - 1)
        if best <= 0:
            return 0
        owner = forest.cycle_owner
        for e, (u, v, _) in enumerate(self.graph.edges):
            if e in owner:
                continue
            elig = self.is_eligible(e, matching, forest)
            if elig != (e in eligible):
                return 0
            if root[u] == root[v]:
                continue
            rate = half * ((u in v_in) + (v in v_in) - (u in v_out) - (v in v_out))
            if rate == 0:
                continue
            if elig:
                return 0
            wi = self.truncated_weight(e)
            if e in matching:
                target = wi + 2 * (self.delta_of(self.tags[e]) - d)
            else:
                target = wi - d
            gap = target - self.yz(e, forest)
            if gap * rate > 0:
                best = min(best, -(-gap // rate))
                if best <= 0:
                    return 0
        return best

    def end_of_scale(self) -> None:
        if self.scale >= self.L:
            raise PreconditionViolation("no scale after L")
        self.scale += 1
        d = self.delta
        self.tau += d
        for u in range(len(self.y)):
            self.y[u] += d

    # certificates

    def validate_rcs(self, matching: Matching, forest: BlossomForest,
                     opt_weight: int | None = None) -> RCSReport:
        rep = RCSReport()
        d = self.delta
        half = d // 2
        g = self.graph
        # 1 granularity
        for u, yu in enumerate(self.y):
            if yu < 0 or yu % half:
                rep.add(1, f"y({u})={yu} is not a non-negative multiple of δ_i/2={half}")
        for b, zb in self.z.items():
            if zb < 0 or zb % d:
                rep.add(1, f"z({b})={zb} is not a non-negative multiple of δ_i={d}")
        for e in range(g.m):
            if self.dw[e] < 0:
                rep.add(6, f"Δw({e})={self.dw[e]} is negative")
        # 2 active blossoms
        for msg in validate_laminar_full(forest, matching):
            rep.add(2, msg)
        for b in self.z:
            if b not in forest.blossoms and self.z[b] != 0:
                rep.add(2, f"z({b}) non-zero outside Ω")
        for r in set(forest.vertex_root):
            if r >= forest.n and self.z.get(r, 0) <= 0:
                rep.add(2, f"root blossom {r} has z={self.z.get(r, 0)}")
        # 3 near domination, 4 near tightness
        for e in range(g.m):
            wi = self.truncated_weight(e)
            s = self.yz(e, forest)
            if s < wi - d:
                rep.add(3, f"edge {e}: yz={s} < w_i-δ_i={wi - d}")
            member = e in matching or e in forest.cycle_owner
            j = self.tags.get(e)
            if member and j is None:
                rep.add(4, f"edge {e} is matched or a blossom edge without a type tag")
            if j is not None:
                if not member:
                    rep.add(4, f"edge {e} keeps a stale type tag")
                elif s > wi + 2 * (self.delta_of(j) - d):
                    rep.add(4, f"edge {e} (type {j}): yz={s} > {wi + 2 * (self.delta_of(j) - d)}")
        # 5 free vertex duals
        free = [u for u in range(g.n) if matching.is_free(u)]
        if any(self.y[u] < self.tau for u in range(g.n)):
            rep.add(5, "some y(v) < τ")
        if self.tau < 0:
            rep.add(5, f"τ={self.tau} is negative")
        parities = {(self.y[u] // half) % 2 for u in free}
        if len(parities) > 1:
            rep.add(5, "free vertex duals have mixed parity")
        if opt_weight is None:
            rep.skipped.append("items 5-6 sums: no optimum supplied")
        else:
            budget = 2 * opt_weight  # ε′·ŵ(M*) in quanta
            excess = sum(self.y[u] for u in free) - self.tau * len(free)
            if excess > budget:
                rep.add(5, f"Σ_F y - τ|F| = {excess} > ε′·OPT = {budget}")
            total = sum(self.dw)
            if total > budget:
                rep.add(6, f"ΣΔw = {total} > ε′·OPT = {budget}")
        return rep

    def snapshot(self) -> dict:
        return {
            "scale": self.scale,
            "tau": self.tau,
            "y": list(self.y),
            "z": dict(sorted(self.z.items())),
            "dw": list(self.dw),
            "tags": dict(sorted(self.tags.items())),
        }
