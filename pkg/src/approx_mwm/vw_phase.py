"""Vertex-weighted phase on G/Ω, reduced to the unweighted phase.

A contracted view carries super-vertex weights ‖s‖ (odd blossom sizes).
``expand`` replaces every usable matched super-edge ``e`` by an alternating
path with ‖e‖_M matched edges, and hangs a tail of (‖α‖-1)/2 matched edges
off every heavy free super-vertex α. The unweighted search runs on the
result, and its output is folded back onto super-vertices.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable, Iterable

from .fmu_search import PhaseParams, PhaseResult, alg_phase
from .graph_model import ContractedView, Matching, WeightedGraph


class PreconditionError(ValueError):
    pass


@dataclass
class ExpansionMap:
    """Bookkeeping between the expanded graph G″ and the view.

    ``origin[x]`` is the super-vertex an expanded vertex stands for (for
    internal path vertices, the lower endpoint of its super-edge), and
    ``role[x]`` is one of ``("v",)``, ``("p", a, b)`` or ``("t", α)``.
    """

    origin: list[int]
    role: list[tuple[int, ...]]
    vid: dict[int, int]
    paths: dict[tuple[int, int], list[int]]
    tails: dict[int, list[int]]
    dropped_vertices: set[int] = field(default_factory=set)
    dropped_edges: set[tuple[int, int]] = field(default_factory=set)

    def supers_of(self, x: int) -> tuple[int, ...]:
        """Super-vertices charged when expanded vertex ``x`` is removed."""
        r = self.role[x]
        if r[0] == "p":
            return (r[1], r[2])
        if r[0] == "t":
            return (r[1],)
        return (self.origin[x],)


@dataclass
class VWStructure:
    root: int
    vertices: frozenset[int]
    arcs: frozenset[tuple[int, int]]
    unmatched: frozenset[tuple[int, int]]
    active: bool


@dataclass
class VWResult:
    paths: list[list[int]]
    removed: set[int]
    active: set[int]
    structures: list[VWStructure]
    inner: PhaseResult
    expansion: ExpansionMap
    expanded_size: int = 0


def expand(view: ContractedView, params: PhaseParams,
           alive: Iterable[int] | None = None) -> tuple[WeightedGraph, Matching, ExpansionMap]:
    """Build the unweighted graph G″ and its matching from the live part of ``view``."""
    live = set(range(view.size)) if alive is None else set(alive)
    for s in live:
        if view.weight(s) > params.c_max:
            raise PreconditionError(f"super-vertex {s} has weight {view.weight(s)} > C_max={params.c_max}")
    dropped: set[int] = set()
    cut: set[tuple[int, int]] = set()
    for s in sorted(live):
        if view.free[s]:
            if (view.weight(s) - 1) // 2 > params.l_max:
                dropped.add(s)
            continue
        t = view.mate[s]
        if t < 0 or t not in live:
            dropped.add(s)
        elif view.edge_ml(s, t) > params.l_max:
            dropped.add(s)
            cut.add((min(s, t), max(s, t)))
    keep = sorted(live - dropped)
    vid = {s: i for i, s in enumerate(keep)}
    origin = list(keep)
    role: list[tuple[int, ...]] = [("v",)] * len(keep)
    edges: list[tuple[int, int, int]] = []
    matched: list[int] = []

    def new(o: int, r: tuple[int, ...]) -> int:
        origin.append(o)
        role.append(r)
        return len(origin) - 1

    def link(x: int, y: int, is_matched: bool) -> None:
        if is_matched:
            matched.append(len(edges))
        edges.append((x, y, 1))

    paths: dict[tuple[int, int], list[int]] = {}
    for a, b in view.matched_pairs():
        if a not in vid or b not in vid:
            continue
        m = view.edge_ml(a, b)
        seq = [vid[a]] + [new(a, ("p", a, b)) for _ in range(2 * m - 2)] + [vid[b]]
        for i in range(len(seq) - 1):
            link(seq[i], seq[i + 1], i % 2 == 0)
        paths[(a, b)] = seq
    tails: dict[int, list[int]] = {}
    for s in keep:
        if not view.free[s]:
            continue
        t = (view.weight(s) - 1) // 2
        if t == 0:
            continue
        seq = [new(s, ("t", s)) for _ in range(2 * t)] + [vid[s]]
        for i in range(len(seq) - 1):
            link(seq[i], seq[i + 1], i % 2 == 1)
        tails[s] = seq
    for (a, b), se in sorted(view.edges.items()):
        if a in vid and b in vid and se.unmatched_rep is not None and view.mate[a] != b:
            link(vid[a], vid[b], False)
    g = WeightedGraph(len(origin), edges)
    M = Matching(g, matched)
    emap = ExpansionMap(origin, role, vid, paths, tails, dropped, cut)
    return g, M, emap


def _arc_runs(seq: list[int]) -> list[tuple[int, int]]:
    return [(seq[i], seq[i + 1]) for i in range(0, len(seq) - 1, 2)]


def recover(view: ContractedView, emap: ExpansionMap, res: PhaseResult) -> tuple[list[list[int]], set[int], set[int], list[VWStructure]]:
    role = emap.role
    paths: list[list[int]] = []
    for p in res.paths:
        paths.append([emap.origin[x] for x in p if role[x][0] == "v"])

    def charge(xs: Iterable[int]) -> set[int]:
        out: set[int] = set()
        for x in xs:
            out.update(emap.supers_of(x))
        return out

    removed = charge(res.removed)
    active = charge(res.active_vertices)
    structures: list[VWStructure] = []
    for sv in res.structures:
        root = emap.supers_of(sv.root)[0]
        arcs: set[tuple[int, int]] = set()
        for (a, b), seq in emap.paths.items():
            if all(arc in sv.arcs for arc in _arc_runs(seq)):
                arcs.add((a, b))
            if all(arc in sv.arcs for arc in _arc_runs(seq[::-1])):
                arcs.add((b, a))
        # a root whose tail was only partly explored is not inside the structure
        verts = {root} if emap.vid.get(root) in sv.vertices else set()
        for a, b in arcs:
            verts.update((a, b))
        unmatched = set()
        for x, y in sv.unmatched:
            if role[x][0] == "v" and role[y][0] == "v":
                a, b = emap.origin[x], emap.origin[y]
                if a in verts and b in verts:
                    unmatched.add((min(a, b), max(a, b)))
        structures.append(VWStructure(root, frozenset(verts), frozenset(arcs), frozenset(unmatched), sv.active))
    return paths, removed, active, structures


def vertex_weighted_alg_phase(view: ContractedView, params: PhaseParams,
                              alive: Iterable[int] | None = None,
                              trace: Callable[[str], None] | None = None) -> VWResult:
    """One phase on the live part of ``view``; results are in super-vertex ids."""
    g, M, emap = expand(view, params, alive)
    res = alg_phase(g, M, params, trace)
    paths, removed, active, structures = recover(view, emap, res)
    return VWResult(paths, removed, active, structures, res, emap, g.n)


def weighted_size(view: ContractedView, supers: Iterable[int]) -> int:
    return sum(view.weight(s) for s in supers)
