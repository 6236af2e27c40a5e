"""Unweighted Alg-Phase: bounded parallel depth-first search from all free vertices.

Each structure is an alternating tree rooted at a free vertex and explored
depth first. Vertices of a structure are *outer* (even alternating distance
from the root) or *inner*. Two outer vertices of one structure joined by an
edge close an odd cycle; that cycle is contracted into a local blossom so the
search stays exact in non-bipartite graphs. An outer vertex meeting an outer
vertex of another structure closes an augmenting path.

The label of the matched arc ``i -> mate(i)`` for an inner vertex ``i`` is
the number of matched edges on the tree path ending with that arc. A head
that reaches an inner vertex with a strictly larger label than it could offer
takes over that inner vertex and everything hanging below it (overtake), and
re-scans the moved outer vertices at their reduced depth (fast-forward).

Structures advance in round-robin passes, one step each, in ascending root
order. Depth, size and pass limits follow :class:`PhaseParams`.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Callable

from .graph_model import BlossomForest, Matching, WeightedGraph

EXTEND = "EXTEND"
RETREAT = "RETREAT"
AUGMENT = "AUGMENT"
OVERTAKE = "OVERTAKE"
BLOCKED_SKIP = "BLOCKED-SKIP"
EXHAUSTED = "EXHAUSTED"
BLOSSOM = "BLOSSOM"
RELABEL = "RELABEL"
HOLD = "HOLD"

_NONE, _OUTER, _INNER = 0, 1, 2


@dataclass(frozen=True)
class PhaseParams:
    """Search limits derived from λ.

    All limits are integers; ``inv`` is ⌈1/λ⌉ and every limit is a power of
    it, clamped to at least 1.
    """

    lam: Fraction
    l_max: int
    limit: int
    tau_max: int
    prune_threshold: Fraction

    @classmethod
    def from_lambda(cls, lam: Fraction | float | str, prune_threshold: Fraction | None = None) -> PhaseParams:
        lam = Fraction(lam)
        if lam <= 0:
            raise ValueError("λ must be positive")
        inv = max(1, math.ceil(1 / lam))
        thr = lam ** 32 / 2 if prune_threshold is None else Fraction(prune_threshold)
        return cls(lam, max(1, inv), max(1, inv ** 2), max(1, inv ** 4), thr)

    @property
    def c_max(self) -> int:
        return self.tau_max * (self.l_max + 1) * self.limit

    @property
    def h(self) -> Fraction:
        lam = self.lam
        return (4 + 2 / lam) / (lam * self.tau_max) + Fraction(2, self.limit)


@dataclass
class Structure:
    """Search territory of one free vertex."""

    root: int
    vertices: set[int] = field(default_factory=set)
    stack: list[list[int]] = field(default_factory=list)
    parked: list[list[int]] = field(default_factory=list)
    active: bool = True
    on_hold: bool = False
    steps: int = 0

    @property
    def size(self) -> int:
        return len(self.vertices)


@dataclass
class StructureView:
    """Frozen copy of a surviving structure handed to callers."""

    root: int
    vertices: frozenset[int]
    arcs: frozenset[tuple[int, int]]
    unmatched: frozenset[tuple[int, int]]
    active: bool


@dataclass
class PhaseResult:
    paths: list[list[int]]
    removed: set[int]
    active_vertices: set[int]
    structures: list[StructureView]
    passes: int = 0
    events: dict[str, int] = field(default_factory=dict)
    labels: dict[tuple[int, int], int] = field(default_factory=dict)
    active_paths: list[list[int]] = field(default_factory=list)


class _Phase:
    def __init__(self, graph: WeightedGraph, matching: Matching, params: PhaseParams,
                 trace: Callable[[str], None] | None = None):
        self.g = graph
        self.M = matching
        self.p = params
        n = graph.n
        self.forest = BlossomForest(n)
        self.tree = [-1] * n
        self.kind = [_NONE] * n
        self.ip: dict[int, tuple[int, int]] = {}
        # best known simple even alternating path root -> x for outer x
        self.dp: dict[int, tuple[int, ...]] = {}
        self.removed = [False] * n
        self.structures: dict[int, Structure] = {}
        self.paths: list[list[int]] = []
        self.v_prime: set[int] = set()
        self.labels: dict[tuple[int, int], int] = {}
        self.events: dict[str, int] = {}
        self.collisions: set[tuple[int, int]] = set()
        self.trace = trace
        self.pass_no = 0
        for v in range(n):
            if matching.is_free(v):
                s = Structure(v, {v}, [[v, 0]])
                self.structures[v] = s
                self.tree[v] = v
                self.kind[v] = _OUTER
                self.dp[v] = (v,)

    # -- bookkeeping -------------------------------------------------------

    def _log(self, s: Structure, event: str, detail: str = "") -> None:
        self.events[event] = self.events.get(event, 0) + 1
        if self.trace is not None:
            self.trace(f"pass={self.pass_no} root={s.root} {event}{' ' + detail if detail else ''}")

    def top(self, v: int) -> int:
        return self.forest.vertex_root[v]

    def even_path(self, v: int) -> list[int]:
        """Vertices of the alternating tree path from outer ``v`` back to its root."""
        out: list[int] = []
        x = v
        while True:
            seg = self.forest.route_to_base(self.top(x), x)
            out.extend(seg)
            b = seg[-1]
            if self.M.is_free(b):
                return out
            i = self.M.mate(b)
            out.append(i)
            x = self.ip[i][0]

    def depth(self, v: int) -> int:
        return (len(self.dp[v]) - 1) // 2

    def label_of(self, i: int) -> int:
        return self.depth(self.ip[i][0]) + 1

    def _set_label(self, arc: tuple[int, int], value: int) -> None:
        old = self.labels.get(arc)
        if old is not None and value > old:
            # an arc re-entering a structure keeps its best-known label
            return
        self.labels[arc] = value

    # -- tree surgery ------------------------------------------------------

    def _node_chain(self, v: int) -> list[int]:
        """[node, inner, node, inner, ..., root node] upward from ``top(v)``."""
        out = []
        x = v
        while True:
            node = self.top(x)
            out.append(node)
            b = self.forest.node_base(node)
            if self.M.is_free(b):
                return out
            i = self.M.mate(b)
            out.append(i)
            x = self.ip[i][0]

    def _subtree(self, structure: int, w: int) -> list[int]:
        """Vertices hanging from inner vertex ``w`` (inclusive)."""
        s = self.structures[structure]
        kids: dict[int, list[int]] = {}
        for i in s.vertices:
            if self.kind[i] == _INNER:
                kids.setdefault(self.top(self.ip[i][0]), []).append(i)
        out: list[int] = []
        todo = [w]
        while todo:
            i = todo.pop()
            out.append(i)
            node = self.top(self.M.mate(i))
            verts = self.forest.node_vertices(node)
            out.extend(verts)
            todo.extend(kids.get(node, ()))
        return out

    def _contract(self, s: Structure, u: int, w: int, eid: int) -> list[int]:
        cu = self._node_chain(u)
        cw = self._node_chain(w)
        onw = set(cw[::2])
        k = next(t for t in range(0, len(cu), 2) if cu[t] in onw)
        lca = cu[k]
        up = cu[: k + 1]
        kw = cw.index(lca)
        down = cw[:kw]
        children = list(reversed(up)) + down
        edges: list[tuple[int, int, int]] = []
        m = len(children)
        for t in range(m):
            a_node, b_node = children[t], children[(t + 1) % m]
            if t == len(up) - 1:
                edges.append((eid, u, w))
            elif t < len(up) - 1:
                if t % 2 == 0:
                    # node -> its inner child on the u side
                    i = b_node
                    x, e = self.ip[i]
                    edges.append((e, x, i))
                else:
                    i = a_node
                    b = self.forest.node_base(b_node)
                    edges.append((self.M.mate_edge[i], i, b))
            else:
                if t % 2 == 1:
                    # node -> inner parent on the w side (matched)
                    b = self.forest.node_base(a_node)
                    i = b_node
                    edges.append((self.M.mate_edge[b], b, i))
                else:
                    i = a_node
                    x, e = self.ip[i]
                    edges.append((e, i, x))
        base = self.forest.node_base(lca)
        bid = self.forest.add_blossom(children, edges, base)
        newly = sorted(c for c in children if c < self.g.n and self.kind[c] == _INNER)
        stem = self.dp[base]
        for i in newly:
            self.kind[i] = _OUTER
            del self.ip[i]
            route = self.forest.route_to_base(bid, i)
            route.reverse()
            self.dp[i] = stem + tuple(route[1:])
            self._set_label((self.M.mate(i), i), self.depth(i))
        return newly

    def _remove_structure(self, s: Structure) -> None:
        for v in s.vertices:
            self.removed[v] = True
            self.tree[v] = -1
            self.kind[v] = _NONE
            self.ip.pop(v, None)
            self.dp.pop(v, None)
        s.active = False
        s.stack.clear()

    def augment_and_clean(self, sa: Structure, sb: Structure, path: list[int]) -> None:
        self.paths.append(path)
        on_path = set(path)
        for s in (sa, sb):
            self.v_prime.update(v for v in s.vertices if v not in on_path)
        self._remove_structure(sa)
        self._remove_structure(sb)
        del self.structures[sa.root]
        del self.structures[sb.root]

    # -- search ------------------------------------------------------------

    def dfs_step(self, s: Structure) -> str:
        g, M, p = self.g, self.M, self.p
        while s.stack:
            task = s.stack[-1]
            v = task[0]
            if not self._valid(s, v):
                s.stack.pop()
                continue
            nbrs = g.adj[v]
            while task[1] < len(nbrs):
                w, eid = nbrs[task[1]]
                task[1] += 1
                if self.removed[w] or M.mate_edge[v] == eid:
                    continue
                tv = self.top(v)
                if self.top(w) == tv:
                    # chord inside a local blossom: maybe a shorter route to mate(w)
                    x = M.mate(w)
                    if x < 0 or self.top(x) != tv:
                        continue
                    base_path = self.dp[v]
                    if len(base_path) + 2 >= len(self.dp[x]) or w in base_path or x in base_path:
                        continue
                    self.dp[x] = base_path + (w, x)
                    self._set_label((w, x), self.depth(x))
                    s.stack.append([x, 0])
                    self._log(s, RELABEL, f"{v}-{w}={x} depth={self.depth(x)}")
                    return RELABEL
                owner = self.tree[w]
                if owner < 0:
                    if M.is_free(w):
                        continue
                    dv = self.depth(v)
                    if dv + 1 > p.l_max:
                        continue
                    if s.size >= p.limit:
                        # park this scan; the rest of the structure keeps going
                        task[1] -= 1
                        s.parked.append(s.stack.pop())
                        self._log(s, HOLD, f"{v}-{w} size={s.size}")
                        return HOLD
                    w2 = M.mate(w)
                    self.tree[w] = self.tree[w2] = s.root
                    self.kind[w] = _INNER
                    self.kind[w2] = _OUTER
                    self.ip[w] = (v, eid)
                    s.vertices.update((w, w2))
                    self.dp[w2] = self.dp[v] + (w, w2)
                    self._set_label((w, w2), dv + 1)
                    s.stack.append([w2, 0])
                    self._log(s, EXTEND, f"{v}-{w}={w2} label={dv + 1}")
                    return EXTEND
                if self.kind[w] == _OUTER:
                    if owner == s.root:
                        newly = self._contract(s, v, w, eid)
                        task[1] -= 1
                        fresh = set(newly)
                        members = sorted(self.forest.node_vertices(self.top(v)))
                        for i in reversed([x for x in members if x not in fresh]):
                            s.stack.append([i, 0])
                        for i in reversed(newly):
                            s.stack.append([i, 0])
                        self._log(s, BLOSSOM, f"{v}-{w} size={len(self.forest.node_vertices(self.top(v)))}")
                        return BLOSSOM
                    other = self.structures[owner]
                    path = list(self.dp[v]) + list(reversed(self.dp[w]))
                    self._log(s, AUGMENT, f"with={owner} length={len(path) - 1}")
                    self.augment_and_clean(s, other, path)
                    return AUGMENT
                # w is inner
                offer = self.depth(v) + 1
                current = self.label_of(w)
                movable = offer < current and offer <= p.l_max
                if movable and owner == s.root and w in self.even_path(v):
                    movable = False
                if not movable:
                    if owner != s.root:
                        self.collisions.add((min(owner, s.root), max(owner, s.root)))
                    self._log(s, BLOCKED_SKIP, f"{v}-{w} label={current} offer={offer}")
                    continue
                moved = self._subtree(owner, w)
                src = self.structures[owner]
                if owner != s.root:
                    self.collisions.add((min(owner, s.root), max(owner, s.root)))
                    for x in moved:
                        src.vertices.discard(x)
                        self.tree[x] = s.root
                    s.vertices.update(moved)
                self.ip[w] = (v, eid)
                prefix = self.dp[v]
                for x in moved:
                    if self.kind[x] == _OUTER:
                        old = self.dp[x]
                        self.dp[x] = prefix + old[old.index(w):]
                for x in moved:
                    if self.kind[x] == _INNER:
                        self._set_label((x, M.mate(x)), self.label_of(x))
                outers = sorted(x for x in moved if self.kind[x] == _OUTER)
                for x in reversed(outers):
                    s.stack.append([x, 0])
                self._log(s, OVERTAKE, f"{v}-{w} from={owner} label={current}->{offer} moved={len(moved)}")
                return OVERTAKE
            s.stack.pop()
            if s.stack:
                self._log(s, RETREAT, f"{v}")
                return RETREAT
        if any(self._valid(s, t[0]) for t in s.parked):
            s.on_hold = True
            self._log(s, HOLD, "parked")
            return HOLD
        s.active = False
        self._log(s, EXHAUSTED)
        return EXHAUSTED

    def pass_bundle_prune(self) -> None:
        live = {r for r, s in self.structures.items() if s.active}
        chosen: list[tuple[int, int]] = []
        used: set[int] = set()
        for a, b in sorted(self.collisions):
            if a in live and b in live and a not in used and b not in used:
                chosen.append((a, b))
                used.update((a, b))
        self.collisions.clear()
        if not chosen or len(chosen) >= self.p.prune_threshold * len(self.M):
            return
        for r in sorted(used):
            s = self.structures.pop(r)
            self.v_prime.update(s.vertices)
            self._remove_structure(s)
            self._log(s, "PRUNE")

    def run(self) -> None:
        bundle = self.p.tau_max
        while self.pass_no < self.p.tau_max:
            live = [r for r in sorted(self.structures) if self.structures[r].active and not self.structures[r].on_hold]
            if not live:
                break
            self.pass_no += 1
            for r in live:
                s = self.structures.get(r)
                if s is None or not s.active or s.on_hold:
                    continue
                s.steps += 1
                self.dfs_step(s)
            if self.pass_no % bundle == 0:
                self.pass_bundle_prune()

    def _valid(self, s: Structure, v: int) -> bool:
        return not self.removed[v] and self.tree[v] == s.root and self.kind[v] == _OUTER

    def head(self, s: Structure) -> int | None:
        while s.stack:
            v = s.stack[-1][0]
            if not self._valid(s, v):
                s.stack.pop()
                continue
            return v
        return None

    def pending(self, s: Structure) -> list[int]:
        """Outer vertices whose scan is unfinished: open and parked tasks."""
        out = []
        for t in s.stack + s.parked:
            v = t[0]
            if self._valid(s, v) and t[1] < len(self.g.adj[v]) and v not in out:
                out.append(v)
        return out

    def finalize(self) -> PhaseResult:
        active_vertices: set[int] = set()
        active_paths: list[list[int]] = []
        views: list[StructureView] = []
        M = self.M
        for r in sorted(self.structures):
            s = self.structures[r]
            if s.active:
                open_ = self.pending(s)
                if not open_:
                    s.active = False
                for v in open_:
                    active_vertices.update(self.dp[v])
                    active_paths.append(list(self.dp[v]))
            arcs: set[tuple[int, int]] = set()
            unmatched: set[tuple[int, int]] = set()
            for x in s.vertices:
                if self.kind[x] == _INNER:
                    arcs.add((x, M.mate(x)))
                    u = self.ip[x][0]
                    unmatched.add((min(u, x), max(u, x)))
            for node in {self.top(x) for x in s.vertices}:
                if node < self.g.n:
                    continue
                verts = self.forest.node_vertices(node)
                for x in verts:
                    mx = M.mate(x)
                    if mx >= 0 and mx in verts:
                        arcs.add((x, mx))
                for e in self.forest.edges_of(node):
                    if e not in M:
                        a, b = self.g.endpoints(e)
                        unmatched.add((min(a, b), max(a, b)))
            views.append(StructureView(r, frozenset(s.vertices), frozenset(arcs), frozenset(unmatched), s.active))
        return PhaseResult(self.paths, set(self.v_prime), active_vertices, views, self.pass_no,
                           dict(self.events), dict(self.labels), active_paths)


def alg_phase(graph: WeightedGraph, matching: Matching, params: PhaseParams,
              trace: Callable[[str], None] | None = None) -> PhaseResult:
    """Run one phase on an unweighted graph (edge weights are ignored).

    Returns the augmenting paths found (as vertex lists), the removed
    vertices V′ (structures cleaned after an augmentation, minus the path
    vertices themselves), the active-path vertices V_A, and the surviving
    structures. The matching is not modified.
    """
    ph = _Phase(graph, matching, params, trace)
    ph.run()
    return ph.finalize()


def finalize(phase: _Phase) -> PhaseResult:
    return phase.finalize()


def dfs_step(structure: Structure, phase: _Phase) -> str:
    return phase.dfs_step(structure)


def augment_and_clean(sa: Structure, sb: Structure, path: list[int], phase: _Phase) -> None:
    phase.augment_and_clean(sa, sb, path)


def pass_bundle_prune(phase: _Phase) -> None:
    phase.pass_bundle_prune()
