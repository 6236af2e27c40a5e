"""Independent ground truth for small instances.

Nothing here shares code with the search engine: the exact optimum comes
from a subset dynamic program, and the path checks enumerate simple
alternating paths exhaustively.
"""

from __future__ import annotations

import sys
from dataclasses import dataclass, field
from typing import Iterable, Mapping

from .graph_model import ContractedView, WeightedGraph


class CapabilityError(Exception):
    pass


@dataclass
class OracleResult:
    weight: int
    matching: list[int]
    method: str = "subset-dp"


def exact_mwm(graph: WeightedGraph, limit: int = 22) -> OracleResult:
    """Maximum weight matching by DP over vertex subsets.

    best(S) = max(best(S - v), max_u w(vu) + best(S - v - u)) where v is the
    lowest vertex of S and u ranges over neighbours of v inside S.
    """
    n = graph.n
    if n > limit:
        raise CapabilityError(f"exact oracle limited to n <= {limit}, got {n}")
    nbr: list[list[tuple[int, int, int]]] = [[] for _ in range(n)]
    for eid, (u, v, w) in enumerate(graph.edges):
        nbr[u].append((v, w, eid))
        nbr[v].append((u, w, eid))
    memo: dict[int, tuple[int, int, int]] = {0: (0, -1, 0)}
    old = sys.getrecursionlimit()
    sys.setrecursionlimit(max(old, 10 * n + 100))

    def best(s: int) -> int:
        hit = memo.get(s)
        if hit is not None:
            return hit[0]
        v = (s & -s).bit_length() - 1
        rest = s & ~(1 << v)
        choice = (best(rest), -1, rest)
        for u, w, eid in nbr[v]:
            if rest >> u & 1:
                nxt = rest & ~(1 << u)
                cand = w + best(nxt)
                if cand > choice[0]:
                    choice = (cand, eid, nxt)
        memo[s] = choice
        return choice[0]

    try:
        full = (1 << n) - 1
        total = best(full)
    finally:
        sys.setrecursionlimit(old)
    picked = []
    s = (1 << n) - 1
    while s:
        _, eid, nxt = memo[s]
        if eid >= 0:
            picked.append(eid)
        s = nxt
    return OracleResult(total, sorted(picked))


@dataclass
class AltGraph:
    """Minimal alternating-path view used by the exhaustive checks.

    ``adj`` lists unmatched neighbours, ``mate`` gives the partner through a
    usable matched edge (``-1`` if none), ``free`` marks exposed vertices and
    ``weight`` gives ‖v‖ (1 when unweighted). A vertex that is neither free
    nor has a mate is a dead end.
    """

    vertices: list[int]
    adj: dict[int, list[int]]
    mate: dict[int, int]
    free: set[int]
    weight: dict[int, int] = field(default_factory=dict)

    def w(self, v: int) -> int:
        return self.weight.get(v, 1)


def altgraph_from_view(view: ContractedView, removed: Iterable[int] = (),
                       drop_matched: Iterable[tuple[int, int]] = ()) -> AltGraph:
    gone = set(removed)
    cut = {(min(a, b), max(a, b)) for a, b in drop_matched}
    verts = [s for s in range(view.size) if s not in gone]
    adj: dict[int, list[int]] = {s: [] for s in verts}
    mate = {s: -1 for s in verts}
    for (a, b), se in view.edges.items():
        if a in gone or b in gone:
            continue
        if se.is_matched:
            if (a, b) not in cut:
                mate[a], mate[b] = b, a
        elif se.unmatched_rep is not None:
            adj[a].append(b)
            adj[b].append(a)
    for s in verts:
        adj[s].sort()
    free = {s for s in verts if view.free[s]}
    return AltGraph(verts, adj, mate, free, {s: view.weight(s) for s in verts})


def altgraph_from_unweighted(adj: Mapping[int, Iterable[int]], mate: Mapping[int, int],
                             removed: Iterable[int] = ()) -> AltGraph:
    """``mate`` maps every matched vertex to its partner; absent means free."""
    gone = set(removed)
    verts = sorted(v for v in adj if v not in gone)
    out_adj = {v: sorted(u for u in adj[v] if u not in gone and mate.get(v, -1) != u) for v in verts}
    out_mate = {}
    free = set()
    for v in verts:
        m = mate.get(v, -1)
        if m < 0:
            free.add(v)
            out_mate[v] = -1
        else:
            out_mate[v] = m if m not in gone else -1
    return AltGraph(verts, out_adj, out_mate, free)


def _paths_from(g: AltGraph, bound: int | None):
    """Yield (path, length) for every simple alternating path from a free vertex
    that ends right after a matched edge, plus augmenting paths (flag True)."""
    for f in sorted(g.free):
        start_cost = (g.w(f) - 1) // 2
        if bound is not None and start_cost > bound:
            continue
        on = {f}
        path = [f]
        stack = [(f, start_cost, iter(g.adj[f]))]
        while stack:
            x, cost, it = stack[-1]
            advanced = False
            for y in it:
                if y in on:
                    continue
                if y in g.free:
                    c = cost + (g.w(y) - 1) // 2
                    if bound is None or c <= bound:
                        yield path + [y], c, True
                    continue
                z = g.mate[y]
                if z < 0 or z in on:
                    continue
                c = cost + 1 + (g.w(y) - 1) // 2 + (g.w(z) - 1) // 2
                if bound is not None and c > bound:
                    continue
                path.extend((y, z))
                on.update((y, z))
                yield list(path), c, False
                stack.append((z, c, iter(g.adj[z])))
                advanced = True
                break
            if not advanced:
                stack.pop()
                if len(path) > 1:
                    on.discard(path.pop())
                    on.discard(path.pop())


def short_aug_path_exists(g: AltGraph, bound: int | None) -> bool:
    """True iff some augmenting path has ‖P‖_M <= bound (None: unbounded)."""
    for _, _, aug in _paths_from(g, bound):
        if aug:
            return True
    return False


def find_short_aug_path(g: AltGraph, bound: int | None) -> list[int] | None:
    for p, _, aug in _paths_from(g, bound):
        if aug:
            return p
    return None


def arc_distances(g: AltGraph, bound: int | None) -> dict[tuple[int, int], int]:
    """Matching distance d(F, x->x') for every matched arc within ``bound``."""
    best: dict[tuple[int, int], int] = {}
    for p, c, aug in _paths_from(g, bound):
        if aug:
            continue
        arc = (p[-2], p[-1])
        if c < best.get(arc, c + 1):
            best[arc] = c
    return best


def inner_outer(g: AltGraph) -> tuple[set[int], set[int], bool]:
    """Alternating BFS from all free vertices.

    Returns (inner, outer, conflict). ``conflict`` is True when an unmatched
    edge joins two outer vertices, which happens iff an augmenting path or a
    free-reachable blossom exists.
    """
    outer: set[int] = set(g.free)
    inner: set[int] = set()
    queue = sorted(g.free)
    conflict = False
    i = 0
    while i < len(queue):
        u = queue[i]
        i += 1
        for v in g.adj[u]:
            if v in outer:
                conflict = True
                continue
            if v in inner:
                continue
            inner.add(v)
            m = g.mate[v]
            if m >= 0 and m not in outer and m not in inner:
                outer.add(m)
                queue.append(m)
            elif m >= 0 and m in inner:
                conflict = True
    return inner, outer, conflict


def reachable_full_blossom_exists(g: AltGraph) -> bool:
    """True iff some outer-outer edge is reachable (blossom or augmenting path)."""
    return inner_outer(g)[2]


def blocking_conditions_hold(g: AltGraph) -> bool:
    return not reachable_full_blossom_exists(g) and not short_aug_path_exists(g, None)
