"""Augment-and-shrink on the eligible graph.

Repeats the vertex-weighted phase until few paths come back, then removes
the matter left behind by the last phase, shrinks the blossoms found inside
each surviving structure, and cuts the thinnest matching-distance layer so
that no alternating path from a free vertex can close an outer-outer edge.
"""

from __future__ import annotations

import heapq
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Iterable

from .fmu_search import PhaseParams
from .graph_model import (AlternatingPath, BlossomForest, ContractedView, Matching, WeightedGraph, contract,
                          lift_augmenting_path)
from .vw_phase import PreconditionError, vertex_weighted_alg_phase


class Residual:
    """G/Ω over a fixed edge set with some super-vertices and matched pairs taken out."""

    def __init__(self, view: ContractedView, gone: Iterable[int] = (), dropped: Iterable[int] = ()):
        k = view.size
        gone = set(gone)
        cut = set(dropped)
        self.view = view
        self.present = [s not in gone for s in range(k)]
        self.mate = [-1] * k
        self.adj: list[list[int]] = [[] for _ in range(k)]
        for (a, b), se in sorted(view.edges.items()):
            if a in gone or b in gone:
                continue
            if se.is_matched:
                if se.matched_rep not in cut:
                    self.mate[a], self.mate[b] = b, a
            elif se.unmatched_rep is not None:
                self.adj[a].append(b)
                self.adj[b].append(a)
        self.free = [view.free[s] and self.present[s] for s in range(k)]
        self.weight = [view.weight(s) for s in range(k)]

    def ml(self, a: int, b: int) -> int:
        return (self.weight[a] + self.weight[b]) // 2

    def free_supers(self) -> list[int]:
        return [s for s, f in enumerate(self.free) if f]


@dataclass
class LayerSets:
    """E_i and F_i for i = 1..count; only non-empty layers are stored."""

    count: int
    E: dict[int, set[int]] = field(default_factory=dict)
    F: dict[int, set[int]] = field(default_factory=dict)

    def edges(self, i: int) -> set[int]:
        return self.E.get(i, set())

    def frees(self, i: int) -> set[int]:
        return self.F.get(i, set())

    def size(self, i: int) -> int:
        return len(self.E.get(i, ())) + len(self.F.get(i, ()))

    def total(self) -> int:
        return sum(len(v) for v in self.E.values()) + sum(len(v) for v in self.F.values())

    def argmin(self) -> int | None:
        """Smallest index of minimum size."""
        if self.count == 0:
            return None
        used = set(self.E) | set(self.F)
        if len(used) < self.count:
            i = 1
            while i in used:
                i += 1
            return i
        return min(range(1, self.count + 1), key=lambda i: (self.size(i), i))


@dataclass
class PrimalResult:
    paths: list[AlternatingPath]
    view_paths: list[list[int]]
    forest: BlossomForest
    new_blossoms: list[int]
    m_prime: set[int]
    f_prime: set[int]
    v_in: set[int]
    v_out: set[int]
    conflict: bool
    phase_calls: int = 0
    step2_m: int = 0
    step2_f: int = 0
    layers: LayerSets | None = None
    i_star: int | None = None
    labels: dict[tuple[int, int], int] = field(default_factory=dict)
    matching_size: int = 0
    unwound: int = 0
    notes: list[str] = field(default_factory=list)


def exit_reached(num_paths: int, m_size: int, params: PhaseParams) -> bool:
    """|𝒫| ≤ λ|M| / (C_max(ℓ_max+1)), compared exactly."""
    return num_paths * params.c_max * (params.l_max + 1) <= params.lam * m_size


def step2_bound(params: PhaseParams, m_size: int) -> tuple[Fraction, Fraction]:
    """Worst-case |M′| and |F′| after Step 2 implied by the phase guarantees."""
    cm = params.c_max * (params.l_max + 1)
    allowance = params.lam * m_size / cm + params.lam ** 32 * params.tau_max * m_size
    weighted_vp = cm * 2 * allowance
    va = params.h * 2 * params.l_max * m_size
    return weighted_vp / 2 + va / 2, weighted_vp + va


# blossom shrinking inside one structure

def detect_blossoms_in_structure(res: Residual, root: int, vertices: Iterable[int],
                                 forest: BlossomForest, graph: WeightedGraph) -> list[int]:
    """Shrink every blossom reachable from ``root`` inside the induced subgraph.

    Each round runs an alternating BFS over the current nodes (super-vertices
    or blossoms made earlier in this call) and closes the first outer-outer
    edge it meets. Blossoms are added to ``forest``; their ids are returned in
    creation order.
    """
    view = res.view
    inside = {s for s in vertices if res.present[s]}
    if root not in inside:
        return []
    top = {s: s for s in inside}          # super-vertex -> node key
    members: dict[int, list[int]] = {s: [s] for s in inside}
    base: dict[int, int] = {s: s for s in inside}  # node key -> base super-vertex
    fid: dict[int, int] = {s: view.nodes[s] for s in inside}
    made: list[int] = []
    next_key = view.size

    def g_edge(sa: int, sb: int) -> tuple[int, int, int]:
        se = view.edge(sa, sb)
        eid = se.matched_rep if res.mate[sa] == sb else se.unmatched_rep
        u, v, _ = graph.edges[eid]
        if view.super_of_vertex[u] != sa:
            u, v = v, u
        return eid, u, v

    while True:
        r = top[root]
        label = {r: 0}
        parent: dict[int, tuple[int, int, int]] = {}  # node -> (parent node, own super, parent super)
        queue = [r]
        hit = None
        qi = 0
        while qi < len(queue) and hit is None:
            x = queue[qi]
            qi += 1
            for s in sorted(members[x]):
                for t in res.adj[s]:
                    if t not in inside:
                        continue
                    tn = top[t]
                    if tn == x:
                        continue
                    lab = label.get(tn)
                    if lab == 0:
                        hit = (x, s, tn, t)
                        break
                    if lab == 1:
                        continue
                    label[tn] = 1
                    parent[tn] = (x, t, s)
                    b = base[tn]
                    m = res.mate[b]
                    if m < 0 or m not in inside:
                        continue
                    mn = top[m]
                    if mn in label:
                        continue
                    label[mn] = 0
                    parent[mn] = (tn, m, b)
                    queue.append(mn)
                if hit is not None:
                    break
        if hit is None:
            return made
        x, sx, tn, st = hit

        def up(node: int) -> list[int]:
            out = [node]
            while node != r:
                node = parent[node][0]
                out.append(node)
            return out

        px, pt = up(x), up(tn)
        on_t = set(pt)
        lca = next(v for v in px if v in on_t)
        a_side = px[:px.index(lca) + 1][::-1]      # lca ... x
        b_side = pt[:pt.index(lca)]               # tn ... (child of lca)
        children = a_side + b_side
        cyc: list[tuple[int, int, int]] = []
        for i in range(len(a_side) - 1):
            child = a_side[i + 1]
            _, own, par = parent[child]
            cyc.append(g_edge(par, own))
        cyc.append(g_edge(sx, st))
        for i in range(len(b_side)):
            node = b_side[i]
            _, own, par = parent[node]
            cyc.append(g_edge(own, par))
        key = next_key
        next_key += 1
        bid = forest.add_blossom([fid[c] for c in children], cyc, view.bases[base[lca]])
        fid[key] = bid
        base[key] = base[lca]
        members[key] = [s for c in children for s in members[c]]
        for c in children:
            for s in members[c]:
                top[s] = key
            del members[c]
        made.append(bid)


# matching-distance labels and layers

def bf_labels(res: Residual, l_max: int) -> dict[tuple[int, int], int]:
    """ℓ(x→x′) for matched arcs: matching distance from a free super-vertex.

    Arcs labelled t ≤ ℓ_max relax their successors to t + ‖e‖_M. Labels above
    ℓ_max + ‖e‖_M are reported as absent (∞).
    """
    best: dict[tuple[int, int], int] = {}
    buckets: dict[int, list[tuple[int, int]]] = {}
    keys: list[int] = []

    def offer(x: int, c: int) -> None:
        xm = res.mate[x]
        arc = (x, xm)
        if c > l_max + res.ml(x, xm):
            return
        if c < best.get(arc, c + 1):
            best[arc] = c
            if c not in buckets:
                buckets[c] = []
                heapq.heappush(keys, c)
            buckets[c].append(arc)

    for f in res.free_supers():
        start = (res.weight[f] - 1) // 2
        for x in res.adj[f]:
            if res.mate[x] >= 0:
                offer(x, start + res.ml(x, res.mate[x]))
    while keys and keys[0] <= l_max:
        t = heapq.heappop(keys)
        for arc in buckets.pop(t):
            if best[arc] != t:
                continue
            for yv in res.adj[arc[1]]:
                if res.mate[yv] >= 0:
                    offer(yv, t + res.ml(yv, res.mate[yv]))
    return best


def build_layers(res: Residual, labels: dict[tuple[int, int], int], l_max: int) -> tuple[LayerSets, int | None]:
    k = l_max // 2
    layers = LayerSets(k)
    view = res.view
    for (x, xm), lab in labels.items():
        eid = view.edge(x, xm).matched_rep
        for i in range(max(1, lab - res.ml(x, xm)), min(k, lab) + 1):
            layers.E.setdefault(i, set()).add(eid)
    for f in res.free_supers():
        for i in range(1, min(k, (res.weight[f] - 1) // 2) + 1):
            layers.F.setdefault(i, set()).add(view.bases[f])
    return layers, layers.argmin()


def compute_inner_outer(res: Residual) -> tuple[set[int], set[int], bool]:
    """Alternating BFS from the free super-vertices of ``res``."""
    outer = set(res.free_supers())
    inner: set[int] = set()
    queue = sorted(outer)
    conflict = False
    qi = 0
    while qi < len(queue):
        u = queue[qi]
        qi += 1
        for v in res.adj[u]:
            if v in outer:
                conflict = True
                continue
            if v in inner:
                continue
            inner.add(v)
            m = res.mate[v]
            if m < 0:
                continue
            if m in inner:
                conflict = True
            elif m not in outer:
                outer.add(m)
                queue.append(m)
    return inner, outer, conflict


def lift_sets(view: ContractedView, inner: set[int], outer: set[int]) -> tuple[set[int], set[int]]:
    return view.lift(inner), view.lift(outer)


def _has_cycle(res: Residual, vertices: Iterable[int]) -> bool:
    inside = {s for s in vertices if res.present[s]}
    edges = sum(1 for s in inside for t in res.adj[s] if t in inside and s < t)
    edges += sum(1 for s in inside if res.mate[s] in inside and s < res.mate[s])
    return edges >= len(inside)


def _gone_in(view: ContractedView, removed_vertices: set[int]) -> set[int]:
    return {view.super_of_vertex[v] for v in removed_vertices}


def _unwind(forest: BlossomForest, node: int, first_new: int, matching: Matching) -> list[int]:
    """Dissolve the freshly made blossoms at and below ``node``; return their matched cycle edges."""
    out: list[int] = []
    stack = [node]
    while stack:
        b = stack.pop()
        if b < first_new or b not in forest.blossoms:
            continue
        bl = forest.blossoms[b]
        out.extend(e for e, _, _ in bl.cycle_edges if e in matching)
        kids = list(bl.children)
        forest.dissolve_root(b)
        stack.extend(kids)
    return out


def approx_primal(graph: WeightedGraph, matching: Matching, forest: BlossomForest,
                  eligible: Iterable[int], params: PhaseParams) -> PrimalResult:
    """One augment-and-shrink round on G_elig/Ω. Neither ``matching`` nor ``forest`` is modified."""
    for bid, b in forest.blossoms.items():
        if len(b.vertices) > params.c_max:
            raise PreconditionError(f"blossom {bid} has {len(b.vertices)} > C_max vertices")
    elig = sorted(eligible)
    view = contract(graph, matching, forest, elig)
    m_size = len(matching)
    alive = set(range(view.size))
    view_paths: list[list[int]] = []
    calls = 0
    while True:
        r = vertex_weighted_alg_phase(view, params, alive)
        calls += 1
        for p in r.paths:
            view_paths.append(p)
            alive.difference_update(p)
        if exit_reached(len(r.paths), m_size, params):
            break
    paths = [lift_augmenting_path(view, graph, forest, p) for p in view_paths]
    taken: set[int] = set()
    for p in paths:
        taken.update(p.vertices)

    # Step 2
    m_prime: set[int] = set()
    f_prime: set[int] = set()
    for s in sorted(r.removed | r.active):
        if s not in alive:
            continue
        if view.free[s]:
            f_prime.add(view.bases[s])
        t = view.mate[s]
        if t >= 0 and t in alive:
            m_prime.add(view.edge(s, t).matched_rep)
    step2_m, step2_f = len(m_prime), len(f_prime)

    # Step 3
    gone_view = {s for s in range(view.size) if s not in alive}
    gone_view |= {view.super_of_vertex[f] for f in f_prime}
    res3 = Residual(view, gone_view, m_prime)
    work = forest
    first_new = forest.next_id
    made: list[int] = []
    for st in sorted(r.structures, key=lambda s: s.root):
        if not res3.present[st.root] or not _has_cycle(res3, st.vertices):
            continue
        if work is forest:
            work = forest.copy()
        made.extend(detect_blossoms_in_structure(res3, st.root, st.vertices, work, graph))

    # Step 4
    removed_v = set(taken)
    for f in f_prime:
        removed_v |= view.lift([view.super_of_vertex[f]])
    view2 = contract(graph, matching, work, elig) if made else view
    res4 = Residual(view2, _gone_in(view2, removed_v), m_prime)
    labels = bf_labels(res4, params.l_max)
    layers, i_star = build_layers(res4, labels, params.l_max)
    unwound = 0
    notes: list[str] = []
    if i_star is not None:
        m_prime |= layers.edges(i_star)
        for f in sorted(layers.frees(i_star)):
            f_prime.add(f)
            node = work.vertex_root[f]
            if node >= first_new:
                # a fresh blossom cannot absorb the 2δ_i charge of a removal;
                # undo it and cut its internal matched edges instead
                m_prime.update(_unwind(work, node, first_new, matching))
                unwound += 1
        if unwound:
            notes.append(f"unwound {unwound} new blossom(s) holding removed free vertices")
    made = [b for b in made if b in work.blossoms]
    for f in f_prime:
        removed_v |= work.node_vertices(work.vertex_root[f])
    view3 = contract(graph, matching, work, elig) if (made or unwound) else view
    res_final = Residual(view3, _gone_in(view3, removed_v), m_prime)
    inner, outer, conflict = compute_inner_outer(res_final)
    v_in, v_out = lift_sets(view3, inner, outer)
    return PrimalResult(paths, view_paths, work, made, m_prime, f_prime, v_in, v_out, conflict,
                        calls, step2_m, step2_f, layers, i_star, labels, m_size, unwound, notes)


def residual_view(graph: WeightedGraph, matching: Matching, result: PrimalResult,
                  eligible: Iterable[int]) -> Residual:
    """G̃ = (G_elig − Ψ − M′ − F′)/(Ω ∪ Ω′) for a finished call, before augmenting."""
    forest = result.forest
    view = contract(graph, matching, forest, sorted(eligible))
    removed = set()
    for p in result.paths:
        removed.update(p.vertices)
    for f in result.f_prime:
        removed |= forest.node_vertices(forest.vertex_root[f])
    return Residual(view, _gone_in(view, removed), result.m_prime)
