"""Instance builders shared by the test modules."""

from __future__ import annotations

import random

from approx_mwm.graph_model import BlossomForest, Matching, WeightedGraph, contract


def random_blossom_instance(rng: random.Random, n_supers: int, p_edge: float = 0.4,
                            max_weight: int = 3, free_share: float = 0.3):
    """Graph, matching and full-blossom forest whose contraction has ``n_supers`` nodes.

    Each super-vertex gets an odd number of members. Members of a blossom are
    wired into an odd cycle (recursively, so blossoms nest) and matched in
    pairs around it, leaving the first member exposed as the base.
    """
    sizes = [rng.choice([s for s in range(1, max_weight + 1, 2)]) for _ in range(n_supers)]
    n = sum(sizes)
    edges: dict[tuple[int, int], int] = {}

    def add(u: int, v: int) -> int:
        key = (min(u, v), max(u, v))
        if key not in edges:
            edges[key] = rng.randint(1, 9)
        return key

    groups: list[list[int]] = []
    nxt = 0
    for s in sizes:
        groups.append(list(range(nxt, nxt + s)))
        nxt += s
    matched_pairs: list[tuple[int, int]] = []

    def build(vs: list[int]):
        """Returns a nested shape for vertices ``vs`` (odd count) with base vs[0]."""
        if len(vs) == 1:
            return vs[0]
        k = len(vs)
        if k >= 5 and rng.random() < 0.5:
            inner = build(vs[:3])
            rest = vs[3:]
            kids = [inner] + [build([v]) for v in rest]
            reps = [vs[rng.randrange(3)]] + rest
            basev = vs[0]
        else:
            kids = [build([v]) for v in vs]
            reps = list(vs)
            basev = vs[0]
        return ("B", kids, reps, basev)

    shapes = [build(gr) for gr in groups]

    def wire(shape):
        if isinstance(shape, int):
            return
        _, kids, reps, basev = shape
        for c in kids:
            wire(c)
        m = len(kids)
        bases = [_base(c) for c in kids]
        for i in range(1, m, 2):
            matched_pairs.append((bases[i], bases[i + 1]))
        for i in range(m):
            j = (i + 1) % m
            if i % 2 == 1:
                continue
            add(reps[i] if i else _any(kids[i]), _any(kids[j]))

    def _base(shape):
        return shape if isinstance(shape, int) else shape[3]

    def _any(shape):
        if isinstance(shape, int):
            return shape
        return sorted(_members(shape))[0]

    def _members(shape):
        if isinstance(shape, int):
            return {shape}
        out = set()
        for c in shape[1]:
            out |= _members(c)
        return out

    for sp in shapes:
        wire(sp)
    for a, b in matched_pairs:
        add(a, b)
    # top level: random matching among bases, random extra edges
    order = list(range(n_supers))
    rng.shuffle(order)
    top_pairs = []
    for i in range(0, len(order) - 1, 2):
        if rng.random() > free_share:
            a, b = order[i], order[i + 1]
            top_pairs.append((_base(shapes[a]), _base(shapes[b])))
    for a, b in top_pairs:
        add(a, b)
    for a in range(n_supers):
        for b in range(a + 1, n_supers):
            if rng.random() < p_edge:
                add(rng.choice(groups[a]), rng.choice(groups[b]))
    elist = sorted(edges)
    g = WeightedGraph(n, [(u, v, edges[(u, v)]) for u, v in elist])
    M = Matching(g, [g.edge_between(a, b) for a, b in matched_pairs + top_pairs])
    forest = BlossomForest(n)

    def realize(shape) -> int:
        if isinstance(shape, int):
            return shape
        _, kids, reps, basev = shape
        nodes = [realize(c) for c in kids]
        m = len(nodes)
        cyc = []
        for i in range(m):
            j = (i + 1) % m
            if i % 2 == 1:
                a, b = _base(kids[i]), _base(kids[j])
            else:
                a, b = (reps[i] if i else _any(kids[i])), _any(kids[j])
            cyc.append((g.edge_between(a, b), a, b))
        return forest.add_blossom(nodes, cyc, basev)

    for sp in shapes:
        realize(sp)
    return g, M, forest


def random_view(rng: random.Random, n_supers: int, **kw):
    g, M, forest = random_blossom_instance(rng, n_supers, **kw)
    return g, M, forest, contract(g, M, forest, check=True)
