"""Graphs, matchings, laminar blossom forests and contracted views.

Vertices are integers ``0..n-1``. Non-trivial blossoms get integer ids
starting at ``n``, so a *node* id below ``n`` is a vertex (a trivial blossom)
and anything at or above ``n`` is a stored blossom.
"""

from __future__ import annotations

import copy
from dataclasses import dataclass, field
from typing import Iterable, Sequence


class StructuralError(Exception):
    """Raised when a structural invariant (matching, laminarity, fullness) breaks."""


class WeightedGraph:
    """Simple undirected graph with positive integer edge weights."""

    def __init__(self, n: int, edges: Iterable[tuple[int, int, int]]):
        if n < 0:
            raise ValueError("negative vertex count")
        self.n = n
        self.edges: list[tuple[int, int, int]] = []
        self.edge_index: dict[tuple[int, int], int] = {}
        self.adj: list[list[tuple[int, int]]] = [[] for _ in range(n)]
        for u, v, w in edges:
            if not (0 <= u < n and 0 <= v < n):
                raise ValueError(f"edge ({u},{v}) out of range")
            if u == v:
                raise ValueError(f"self-loop at {u}")
            if int(w) != w or w < 1:
                raise ValueError(f"edge ({u},{v}) has non-positive or non-integer weight {w}")
            key = (min(u, v), max(u, v))
            if key in self.edge_index:
                raise ValueError(f"parallel edge ({u},{v})")
            eid = len(self.edges)
            self.edge_index[key] = eid
            self.edges.append((u, v, int(w)))
            self.adj[u].append((v, eid))
            self.adj[v].append((u, eid))
        for lst in self.adj:
            lst.sort()
        self.W = max((w for _, _, w in self.edges), default=0)

    @property
    def m(self) -> int:
        return len(self.edges)

    def weight(self, eid: int) -> int:
        return self.edges[eid][2]

    def endpoints(self, eid: int) -> tuple[int, int]:
        u, v, _ = self.edges[eid]
        return u, v

    def other(self, eid: int, x: int) -> int:
        u, v, _ = self.edges[eid]
        if x == u:
            return v
        if x == v:
            return u
        raise ValueError(f"vertex {x} is not an endpoint of edge {eid}")

    def edge_between(self, u: int, v: int) -> int | None:
        return self.edge_index.get((min(u, v), max(u, v)))

    def __repr__(self) -> str:
        return f"WeightedGraph(n={self.n}, m={self.m}, W={self.W})"


class Matching:
    """A matching stored as a per-vertex array of matched edge ids."""

    def __init__(self, graph: WeightedGraph, edge_ids: Iterable[int] = ()):
        self.graph = graph
        self.mate_edge: list[int] = [-1] * graph.n
        for eid in edge_ids:
            self.add(eid)

    @property
    def matched(self) -> frozenset[int]:
        return frozenset(e for v, e in enumerate(self.mate_edge) if e >= 0 and self.graph.edges[e][0] == v)

    def __len__(self) -> int:
        return sum(1 for v, e in enumerate(self.mate_edge) if e >= 0 and self.graph.edges[e][0] == v)

    def __contains__(self, eid: int) -> bool:
        u, _, _ = self.graph.edges[eid]
        return self.mate_edge[u] == eid

    def is_free(self, v: int) -> bool:
        return self.mate_edge[v] < 0

    def mate(self, v: int) -> int:
        e = self.mate_edge[v]
        return -1 if e < 0 else self.graph.other(e, v)

    def add(self, eid: int) -> None:
        u, v, _ = self.graph.edges[eid]
        if self.mate_edge[u] >= 0 or self.mate_edge[v] >= 0:
            raise StructuralError(f"edge {eid} shares an endpoint with the matching")
        self.mate_edge[u] = eid
        self.mate_edge[v] = eid

    def remove(self, eid: int) -> None:
        u, v, _ = self.graph.edges[eid]
        if self.mate_edge[u] != eid:
            raise StructuralError(f"edge {eid} is not matched")
        self.mate_edge[u] = -1
        self.mate_edge[v] = -1

    def weight(self) -> int:
        return sum(self.graph.edges[e][2] for e in self.matched)

    def copy(self) -> Matching:
        other = Matching.__new__(Matching)
        other.graph = self.graph
        other.mate_edge = list(self.mate_edge)
        return other


@dataclass
class Blossom:
    """A non-trivial blossom.

    ``children[0]`` holds the base. ``cycle_edges[i] = (eid, a, b)`` joins
    vertex ``a`` in ``children[i]`` to vertex ``b`` in ``children[i+1]``
    (indices mod ``len(children)``); edge ``i`` is matched iff ``i`` is odd.
    """

    id: int
    children: list[int]
    cycle_edges: list[tuple[int, int, int]]
    base: int
    vertices: frozenset[int]
    parent: int | None = None

    @property
    def is_root(self) -> bool:
        return self.parent is None


class BlossomForest:
    """Laminar family of full blossoms; trivial blossoms are implicit."""

    def __init__(self, n: int):
        self.n = n
        self.blossoms: dict[int, Blossom] = {}
        self.vertex_root: list[int] = list(range(n))
        self.vertex_parent: list[int | None] = [None] * n
        self.cycle_owner: dict[int, int] = {}
        self.next_id = n

    def copy(self) -> BlossomForest:
        return copy.deepcopy(self)

    def is_blossom(self, node: int) -> bool:
        return node >= self.n

    def parent_of(self, node: int) -> int | None:
        if node < self.n:
            return self.vertex_parent[node]
        return self.blossoms[node].parent

    def node_vertices(self, node: int) -> frozenset[int]:
        if node < self.n:
            return frozenset((node,))
        return self.blossoms[node].vertices

    def node_base(self, node: int) -> int:
        return node if node < self.n else self.blossoms[node].base

    def roots(self) -> list[int]:
        seen: dict[int, None] = {}
        for v in range(self.n):
            seen.setdefault(self.vertex_root[v], None)
        return list(seen)

    def chain(self, v: int) -> list[int]:
        """Blossom ids containing vertex ``v``, innermost first."""
        out = []
        b = self.vertex_parent[v]
        while b is not None:
            out.append(b)
            b = self.blossoms[b].parent
        return out

    def common_blossoms(self, u: int, v: int) -> list[int]:
        """Blossoms containing both ``u`` and ``v``, innermost first."""
        if self.vertex_root[u] != self.vertex_root[v] or u == v:
            return [] if u != v else self.chain(u)
        cu = self.chain(u)
        cv = set(self.chain(v))
        return [b for b in cu if b in cv]

    def edges_of(self, bid: int) -> set[int]:
        """E_B: cycle edges of ``bid`` and of every blossom nested inside it."""
        out: set[int] = set()
        stack = [bid]
        while stack:
            b = self.blossoms[stack.pop()]
            out.update(e for e, _, _ in b.cycle_edges)
            stack.extend(c for c in b.children if c >= self.n)
        return out

    def is_blossom_edge(self, eid: int) -> bool:
        return eid in self.cycle_owner

    def add_blossom(self, children: Sequence[int], cycle_edges: Sequence[tuple[int, int, int]], base: int) -> int:
        """Create a new root blossom over current root nodes ``children``."""
        if len(children) < 3 or len(children) % 2 == 0:
            raise StructuralError("a blossom needs an odd number (>= 3) of children")
        if len(cycle_edges) != len(children):
            raise StructuralError("cycle edge count must equal child count")
        verts: set[int] = set()
        for c in children:
            if self.parent_of(c) is not None:
                raise StructuralError(f"child {c} is not a root")
            cv = self.node_vertices(c)
            if verts & cv:
                raise StructuralError("children overlap")
            verts |= cv
        bid = self.next_id
        self.next_id += 1
        b = Blossom(bid, list(children), list(cycle_edges), base, frozenset(verts))
        self.blossoms[bid] = b
        for c in children:
            if c < self.n:
                self.vertex_parent[c] = bid
            else:
                self.blossoms[c].parent = bid
        for v in verts:
            self.vertex_root[v] = bid
        for e, _, _ in cycle_edges:
            if e in self.cycle_owner:
                raise StructuralError(f"edge {e} already a cycle edge")
            self.cycle_owner[e] = bid
        return bid

    def route_to_base(self, node: int, x: int) -> list[int]:
        """Vertices of the even alternating route inside ``node`` from ``x`` to its base.

        The route starts with a matched edge (unless ``x`` is the base) and
        finishes at the base. Recursion follows the cycle structure.
        """
        if node < self.n:
            if node != x:
                raise StructuralError(f"vertex {x} not in trivial blossom {node}")
            return [x]
        b = self.blossoms[node]
        if x not in b.vertices:
            raise StructuralError(f"vertex {x} not in blossom {node}")
        k = len(b.children)
        j = next(i for i, c in enumerate(b.children) if x in self.node_vertices(c))
        if j == 0:
            return self.route_to_base(b.children[0], x)
        out = self.route_to_base(b.children[j], x)
        if j % 2 == 1:
            # forward around the cycle over e_j (matched), e_{j+1}, ..., e_{k-1}
            for t in list(range(j + 1, k)) + [0]:
                entry = b.cycle_edges[t - 1][2]
                if t == 0 or (t - 1) % 2 == 0:
                    out.extend(self.route_to_base(b.children[t], entry))
                else:
                    seg = self.route_to_base(b.children[t], b.cycle_edges[t][1])
                    seg.reverse()
                    out.extend(seg)
        else:
            # backward over e_{j-1} (matched), e_{j-2}, ..., e_0
            for t in range(j - 1, -1, -1):
                entry = b.cycle_edges[t][1]
                if t == 0 or t % 2 == 0:
                    out.extend(self.route_to_base(b.children[t], entry))
                else:
                    seg = self.route_to_base(b.children[t], b.cycle_edges[t - 1][2])
                    seg.reverse()
                    out.extend(seg)
        return out

    def rebase(self, bid: int, matching: Matching) -> None:
        """Recompute the base of ``bid`` and its sub-blossoms after a flip."""
        b = self.blossoms[bid]
        for c in b.children:
            if c >= self.n:
                self.rebase(c, matching)
        base = None
        for v in b.vertices:
            m = matching.mate(v)
            if m < 0 or m not in b.vertices:
                if base is not None:
                    raise StructuralError(f"blossom {bid} has two exposed vertices")
                base = v
        if base is None:
            raise StructuralError(f"blossom {bid} has no base")
        b.base = base
        j = next(i for i, c in enumerate(b.children) if base in self.node_vertices(c))
        if j:
            b.children = b.children[j:] + b.children[:j]
            b.cycle_edges = b.cycle_edges[j:] + b.cycle_edges[:j]

    def dissolve_root(self, bid: int) -> None:
        """Remove root blossom ``bid``; its children become roots."""
        b = self.blossoms.get(bid)
        if b is None:
            raise StructuralError(f"unknown blossom {bid}")
        if b.parent is not None:
            raise StructuralError(f"blossom {bid} is not a root")
        for e, _, _ in b.cycle_edges:
            del self.cycle_owner[e]
        for c in b.children:
            if c < self.n:
                self.vertex_parent[c] = None
                self.vertex_root[c] = c
            else:
                self.blossoms[c].parent = None
                for v in self.blossoms[c].vertices:
                    self.vertex_root[v] = c
        del self.blossoms[bid]


def dissolve_root(forest: BlossomForest, blossom_id: int) -> BlossomForest:
    forest.dissolve_root(blossom_id)
    return forest


def validate_laminar_full(forest: BlossomForest, matching: Matching) -> list[str]:
    """Report laminarity, structure and fullness violations; empty means sound."""
    bad: list[str] = []
    g = matching.graph
    n = forest.n
    seen_in_root: dict[int, int] = {}
    for bid, b in forest.blossoms.items():
        k = len(b.children)
        if k < 3 or k % 2 == 0:
            bad.append(f"blossom {bid}: {k} children")
            continue
        union: set[int] = set()
        for c in b.children:
            if c >= n and c not in forest.blossoms:
                bad.append(f"blossom {bid}: unknown child {c}")
                continue
            if forest.parent_of(c) != bid:
                bad.append(f"blossom {bid}: child {c} has wrong parent")
            cv = forest.node_vertices(c)
            if union & cv:
                bad.append(f"blossom {bid}: overlapping children")
            union |= cv
        if union != set(b.vertices):
            bad.append(f"blossom {bid}: vertex set is not the union of its children")
        if len(b.vertices) % 2 == 0:
            bad.append(f"blossom {bid}: even size")
        if len(b.cycle_edges) != k:
            bad.append(f"blossom {bid}: cycle length mismatch")
            continue
        for i, (e, a, c) in enumerate(b.cycle_edges):
            if {a, c} != set(g.endpoints(e)):
                bad.append(f"blossom {bid}: cycle edge {e} endpoints mismatch")
                continue
            if a not in forest.node_vertices(b.children[i]) or c not in forest.node_vertices(b.children[(i + 1) % k]):
                bad.append(f"blossom {bid}: cycle edge {e} does not join consecutive children")
            if (e in matching) != (i % 2 == 1):
                bad.append(f"blossom {bid}: cycle edge {i} has wrong matched status")
        eb = forest.edges_of(bid)
        inside = sum(1 for e in eb if e in matching)
        if inside != (len(b.vertices) - 1) // 2:
            bad.append(f"blossom {bid}: not full ({inside} matched of {(len(b.vertices) - 1) // 2})")
        exposed = [v for v in b.vertices if matching.mate(v) < 0 or matching.mate(v) not in b.vertices]
        if exposed != [b.base]:
            bad.append(f"blossom {bid}: base {b.base} but exposed {sorted(exposed)}")
        elif b.base not in forest.node_vertices(b.children[0]):
            bad.append(f"blossom {bid}: base not in first child")
        if b.parent is None:
            for v in b.vertices:
                if v in seen_in_root:
                    bad.append(f"roots {seen_in_root[v]} and {bid} overlap")
                seen_in_root[v] = bid
    for v in range(n):
        r = forest.vertex_root[v]
        top = v
        while forest.parent_of(top) is not None:
            top = forest.parent_of(top)
        if top != r:
            bad.append(f"vertex {v}: recorded root {r} but actual root {top}")
    return bad


@dataclass
class AlternatingPath:
    """Alternating path given by its vertex sequence and edge ids."""

    vertices: list[int]
    edges: list[int]
    matched: list[bool]

    @property
    def start(self) -> int:
        return self.vertices[0]

    @property
    def augmenting(self) -> bool:
        return bool(self.edges) and not self.matched[0] and not self.matched[-1]

    def __len__(self) -> int:
        return len(self.edges)


@dataclass
class SuperEdge:
    a: int
    b: int
    matched_rep: int | None = None
    unmatched_rep: int | None = None

    @property
    def is_matched(self) -> bool:
        return self.matched_rep is not None

    @property
    def rep(self) -> int:
        return self.matched_rep if self.matched_rep is not None else self.unmatched_rep  # type: ignore[return-value]


@dataclass
class ContractedView:
    """G/Ω restricted to a chosen edge subset.

    Super-vertices are numbered ``0..k-1`` in order of their smallest member.
    ``mate[s]`` is the partner through a matched super-edge present in the
    view (``-1`` if none); ``free[s]`` says whether ``s`` holds a free vertex
    of G. A super-vertex can be non-free and still have ``mate[s] == -1`` when
    its matched edge was left out of the view.
    """

    nodes: list[int]
    members: list[tuple[int, ...]]
    free: list[bool]
    bases: list[int]
    edges: dict[tuple[int, int], SuperEdge]
    adj: list[list[int]]
    mate: list[int]
    index_of_node: dict[int, int] = field(default_factory=dict)
    super_of_vertex: list[int] = field(default_factory=list)

    @property
    def size(self) -> int:
        return len(self.nodes)

    def weight(self, s: int) -> int:
        return len(self.members[s])

    def edge(self, a: int, b: int) -> SuperEdge:
        return self.edges[(a, b) if a < b else (b, a)]

    def has_edge(self, a: int, b: int) -> bool:
        return ((a, b) if a < b else (b, a)) in self.edges

    def edge_ml(self, a: int, b: int) -> int:
        """‖e‖_M for a matched super-edge (integer since weights are odd)."""
        return (self.weight(a) + self.weight(b)) // 2

    def unmatched_neighbors(self, s: int) -> list[int]:
        return [t for t in self.adj[s] if t != self.mate[s] and self.edge(s, t).unmatched_rep is not None]

    def matched_pairs(self) -> list[tuple[int, int]]:
        return [(a, b) for a, b in sorted(self.edges) if self.edges[(a, b)].is_matched]

    def lift(self, supers: Iterable[int]) -> set[int]:
        out: set[int] = set()
        for s in supers:
            out.update(self.members[s])
        return out


def contract(graph: WeightedGraph, matching: Matching, forest: BlossomForest,
             edge_ids: Iterable[int] | None = None, check: bool = False) -> ContractedView:
    """Build G/Ω over ``edge_ids`` (all edges by default)."""
    if check:
        bad = validate_laminar_full(forest, matching)
        if bad:
            raise StructuralError("; ".join(bad))
    roots = forest.roots()
    mem = [tuple(sorted(forest.node_vertices(r))) for r in roots]
    order = sorted(range(len(roots)), key=lambda i: mem[i][0])
    nodes = [roots[i] for i in order]
    members = [mem[i] for i in order]
    index_of_node = {r: s for s, r in enumerate(nodes)}
    sov = [0] * graph.n
    for s, ms in enumerate(members):
        for v in ms:
            sov[v] = s
    bases = [forest.node_base(r) for r in nodes]
    free = [matching.is_free(b) for b in bases]
    edges: dict[tuple[int, int], SuperEdge] = {}
    ids = range(graph.m) if edge_ids is None else edge_ids
    for eid in ids:
        u, v, _ = graph.edges[eid]
        a, b = sov[u], sov[v]
        if a == b:
            continue
        key = (a, b) if a < b else (b, a)
        se = edges.get(key)
        if se is None:
            se = edges[key] = SuperEdge(key[0], key[1])
        if eid in matching:
            se.matched_rep = eid
        else:
            cand = (min(u, v), max(u, v), eid)
            cur = se.unmatched_rep
            if cur is None:
                se.unmatched_rep = eid
            else:
                cu, cv, _ = graph.edges[cur]
                if cand < (min(cu, cv), max(cu, cv), cur):
                    se.unmatched_rep = eid
    k = len(nodes)
    adj: list[list[int]] = [[] for _ in range(k)]
    mate = [-1] * k
    for (a, b), se in sorted(edges.items()):
        adj[a].append(b)
        adj[b].append(a)
        if se.is_matched:
            if mate[a] >= 0 or mate[b] >= 0:
                raise StructuralError("contracted matching is not a matching")
            mate[a], mate[b] = b, a
    for lst in adj:
        lst.sort()
    return ContractedView(nodes, members, free, bases, edges, adj, mate, index_of_node, sov)


def matching_length(view: ContractedView, path: Sequence[int]) -> int:
    """‖P‖_M of a view path given as a super-vertex sequence.

    Counts matched super-edges plus ``(‖u‖-1)/2`` for every vertex on the
    path. Paths here always have odd-weight vertices, so the result is an
    integer.
    """
    total = sum((view.weight(s) - 1) // 2 for s in path)
    for a, b in zip(path, path[1:]):
        if view.mate[a] == b:
            total += 1
    return total


def lift_augmenting_path(view: ContractedView, graph: WeightedGraph, forest: BlossomForest,
                         path: Sequence[int]) -> AlternatingPath:
    """Lift an augmenting path of super-vertices to an augmenting path in G."""
    if len(path) < 2 or len(path) % 2 == 1:
        raise StructuralError("augmenting path must have an odd number of edges")
    if not (view.free[path[0]] and view.free[path[-1]]):
        raise StructuralError("augmenting path endpoints must be free")
    # concrete G-edges and their attachment points
    hops: list[tuple[int, int, int]] = []
    for i, (a, b) in enumerate(zip(path, path[1:])):
        se = view.edge(a, b)
        want_matched = i % 2 == 1
        if want_matched:
            if view.mate[a] != b:
                raise StructuralError("expected a matched super-edge")
            eid = se.matched_rep
        else:
            if view.mate[a] == b or se.unmatched_rep is None:
                raise StructuralError("expected an unmatched super-edge")
            eid = se.unmatched_rep
        u, v, _ = graph.edges[eid]
        if view.super_of_vertex[u] != a:
            u, v = v, u
        hops.append((eid, u, v))
    verts: list[int] = []
    for i, s in enumerate(path):
        node = view.nodes[s]
        if i == 0:
            seg = forest.route_to_base(node, hops[0][1])
            seg.reverse()
        elif i == len(path) - 1:
            seg = forest.route_to_base(node, hops[-1][2])
        elif i % 2 == 1:
            # entered by unmatched hop, leave by matched hop at the base
            seg = forest.route_to_base(node, hops[i - 1][2])
            if seg[-1] != hops[i][1]:
                raise StructuralError("matched hop does not leave at the base")
        else:
            # entered at the base by the matched hop, leave by an unmatched hop
            seg = forest.route_to_base(node, hops[i][1])
            seg.reverse()
            if seg[0] != hops[i - 1][2]:
                raise StructuralError("matched hop does not enter at the base")
        verts.extend(seg)
    edges: list[int] = []
    for x, y in zip(verts, verts[1:]):
        e = graph.edge_between(x, y)
        if e is None:
            raise StructuralError(f"lifted route uses a non-edge ({x},{y})")
        edges.append(e)
    return AlternatingPath(verts, edges, [False] * len(edges))


def _tag_path(path: AlternatingPath, matching: Matching) -> None:
    path.matched = [e in matching for e in path.edges]


def check_augmenting(matching: Matching, path: AlternatingPath) -> None:
    g = matching.graph
    vs = path.vertices
    if len(vs) != len(path.edges) + 1 or len(set(vs)) != len(vs):
        raise StructuralError("path is not simple")
    if not matching.is_free(vs[0]) or not matching.is_free(vs[-1]):
        raise StructuralError("path endpoints are not free")
    for i, e in enumerate(path.edges):
        if set(g.endpoints(e)) != {vs[i], vs[i + 1]}:
            raise StructuralError("edge does not join consecutive path vertices")
        if (e in matching) != (i % 2 == 1):
            raise StructuralError("path does not alternate")


def augment(matching: Matching, path: AlternatingPath, forest: BlossomForest | None = None) -> Matching:
    """Flip ``path`` in place; rebases every root blossom it touches."""
    check_augmenting(matching, path)
    for i, e in enumerate(path.edges):
        if i % 2 == 1:
            matching.remove(e)
    for i, e in enumerate(path.edges):
        if i % 2 == 0:
            matching.add(e)
    _tag_path(path, matching)
    if forest is not None:
        for r in {forest.vertex_root[v] for v in path.vertices}:
            if r >= forest.n:
                forest.rebase(r, matching)
    return matching
