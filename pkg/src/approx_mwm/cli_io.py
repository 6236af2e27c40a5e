"""Graph files, instance generators, reports and the command line."""

from __future__ import annotations

import argparse
import datetime as _dt
import json
import random
import sys
from dataclasses import dataclass, field
from fractions import Fraction
from pathlib import Path
from typing import Sequence

from .graph_model import StructuralError, WeightedGraph
from .oracle_verify import exact_mwm
from .scaling_driver import InvariantViolation, RunConfig, run
from .streaming_driver import run_streaming

SCHEMA = 1
ORACLE_LIMIT = 22
GENERATORS = ("random", "long-path", "fig3-chain", "large-blossom")


class GraphFormatError(ValueError):
    def __init__(self, line: int, reason: str):
        super().__init__(f"line {line}: {reason}")
        self.line = line
        self.reason = reason


# files

def parse_text(text: str) -> WeightedGraph:
    n = m = None
    edges: list[tuple[int, int, int]] = []
    seen: set[tuple[int, int]] = set()
    for lineno, raw in enumerate(text.splitlines(), 1):
        parts = raw.split()
        if not parts or parts[0] == "c":
            continue
        if parts[0] == "p":
            if n is not None:
                raise GraphFormatError(lineno, "second header line")
            if len(parts) != 4 or parts[1] != "edge":
                raise GraphFormatError(lineno, "header must read 'p edge <n> <m>'")
            try:
                n, m = int(parts[2]), int(parts[3])
            except ValueError:
                raise GraphFormatError(lineno, "n and m must be integers") from None
            if n < 0 or m < 0:
                raise GraphFormatError(lineno, "n and m must be non-negative")
            continue
        if parts[0] != "e":
            raise GraphFormatError(lineno, f"unknown line type {parts[0]!r}")
        if n is None:
            raise GraphFormatError(lineno, "edge line before the header")
        if len(parts) != 4:
            raise GraphFormatError(lineno, "edge line must read 'e <u> <v> <w>'")
        try:
            u, v, w = (int(x) for x in parts[1:])
        except ValueError:
            raise GraphFormatError(lineno, "edge fields must be integers") from None
        if not (1 <= u <= n and 1 <= v <= n):
            raise GraphFormatError(lineno, f"vertex id out of range [1,{n}]")
        if u == v:
            raise GraphFormatError(lineno, "self-loop")
        if w < 1:
            raise GraphFormatError(lineno, "weight must be a positive integer")
        key = (min(u, v), max(u, v))
        if key in seen:
            raise GraphFormatError(lineno, f"duplicate edge {u}-{v}")
        seen.add(key)
        edges.append((u - 1, v - 1, w))
    if n is None:
        raise GraphFormatError(0, "missing header line")
    if len(edges) != m:
        raise GraphFormatError(0, f"header announces {m} edges, found {len(edges)}")
    return WeightedGraph(n, edges)


def parse(path: str | Path) -> WeightedGraph:
    try:
        text = Path(path).read_text()
    except OSError as exc:
        raise GraphFormatError(0, f"cannot read {path}: {exc.strerror}") from None
    return parse_text(text)


def format_graph(graph: WeightedGraph) -> str:
    lines = [f"p edge {graph.n} {graph.m}"]
    lines += [f"e {u + 1} {v + 1} {w}" for u, v, w in graph.edges]
    return "\n".join(lines) + "\n"


def write(graph: WeightedGraph, path: str | Path) -> None:
    Path(path).write_text(format_graph(graph))


# generators

@dataclass
class Generated:
    """A generated graph with the reference matching its shape is built around."""

    graph: WeightedGraph
    matching: list[int] = field(default_factory=list)
    meta: dict = field(default_factory=dict)


def gen_random(n: int, p: float, wmax: int, seed: int) -> Generated:
    rng = random.Random(seed)
    edges = [(u, v, rng.randint(1, wmax)) for u in range(n) for v in range(u + 1, n) if rng.random() < p]
    return Generated(WeightedGraph(n, edges), [], {"kind": "random"})


def gen_long_path(n: int, wmax: int) -> Generated:
    """A path whose odd edges form the reference matching.

    The whole path is the only augmenting path; it has ⌊n/2⌋−1 matched edges.
    Matched edges weigh ``wmax`` and the others ``wmax−1``; flipping the
    path gains ``wmax−k−1``, so for ``wmax > ⌊n/2⌋`` the optimum needs that
    augmentation.
    """
    if n < 2:
        raise ValueError("long-path needs n ≥ 2")
    k = n // 2 - 1
    lo = max(1, wmax - 1)
    edges = [(t, t + 1, wmax if t % 2 else lo) for t in range(2 * k + 1)]
    g = WeightedGraph(n, edges)
    return Generated(g, [t for t in range(2 * k + 1) if t % 2],
                     {"kind": "long-path", "path_matched_edges": k, "free": [0, 2 * k + 1]})


def gen_fig3_chain(n: int, wmax: int) -> Generated:
    """A nested chain of blossoms hanging off one free vertex α.

    α = 0 and β = 2k+1 are free, u_i = 2i−1 and v_i = 2i are matched, and
    α–u_1–v_1–u_2–…–v_k–β is the unique augmenting path, with k = ⌊n/2⌋−1
    matched edges. Chords α–v_i for odd i and for i = k close odd cycles
    α…v_i, and put every matched edge within two matched edges of α.
    """
    if n < 4:
        raise ValueError("fig3-chain needs n ≥ 4")
    k = n // 2 - 1
    hi, mid, lo = wmax, max(1, wmax - 1), max(1, wmax // 2)
    edges: list[tuple[int, int, int]] = [(0, 1, hi)]
    matched: list[int] = []
    for i in range(1, k + 1):
        u, v = 2 * i - 1, 2 * i
        matched.append(len(edges))
        edges.append((u, v, mid))
        edges.append((v, v + 1, hi))
    for i in range(1, k + 1):
        if i % 2 or i == k:
            edges.append((0, 2 * i, lo))
    g = WeightedGraph(n, edges)
    return Generated(g, matched, {"kind": "fig3-chain", "path_matched_edges": k, "free": [0, 2 * k + 1]})


def gen_large_blossom(n: int, wmax: int) -> Generated:
    """A free vertex f, a stem s and an odd cycle of 2k+1 ≤ n−2 vertices.

    With the reference matching the cycle is a full blossom with base c₀,
    reachable from f along f–s=c₀.
    """
    if n < 5:
        raise ValueError("large-blossom needs n ≥ 5")
    k = (n - 3) // 2
    size = 2 * k + 1
    c = [2 + j for j in range(size)]
    edges = [(0, 1, max(1, wmax - 1)), (1, c[0], wmax)]
    matched = [1]
    for j in range(size):
        a, b = c[j], c[(j + 1) % size]
        if j % 2 == 1:
            matched.append(len(edges))
        edges.append((a, b, wmax))
    g = WeightedGraph(n, edges)
    return Generated(g, matched, {"kind": "large-blossom", "blossom_size": size, "free": [0]})


def generate(kind: str, n: int, p: float = 0.5, wmax: int = 32, seed: int = 0) -> Generated:
    """``random`` uses the seed; the figure shapes are fixed by n and wmax."""
    if wmax < 1:
        raise ValueError("wmax must be at least 1")
    if n < 0:
        raise ValueError("n must be non-negative")
    if kind == "random":
        if not 0 <= p <= 1:
            raise ValueError("p must lie in [0, 1]")
        return gen_random(n, p, wmax, seed)
    if kind == "long-path":
        return gen_long_path(n, wmax)
    if kind == "fig3-chain":
        return gen_fig3_chain(n, wmax)
    if kind == "large-blossom":
        return gen_large_blossom(n, wmax)
    raise ValueError(f"unknown generator {kind!r}; choose from {', '.join(GENERATORS)}")


# reports

def _exact(x: Fraction | int) -> str:
    return str(Fraction(x))


def build_report(graph: WeightedGraph, args: argparse.Namespace, source: dict, result: dict) -> dict:
    rep = {
        "schema": SCHEMA,
        "timestamp": _dt.datetime.now(_dt.timezone.utc).isoformat(timespec="seconds"),
        "mode": args.mode,
        "seed": args.seed,
        "source": source,
        "n": graph.n,
        "m": graph.m,
        "W": graph.W,
        "epsilon": _exact(args.epsilon),
    }
    rep.update(result)
    return rep


def dump_report(report: dict) -> str:
    return json.dumps(report, indent=2, sort_keys=True) + "\n"


def strip_timestamp(report: dict) -> dict:
    return {k: v for k, v in report.items() if k != "timestamp"}


def _batch_result(graph: WeightedGraph, cfg: RunConfig) -> tuple[list[int], dict]:
    _, rep = run(graph, cfg)
    eps_prime = rep.eps_prime or cfg.eps_prime
    unit = 2 * eps_prime.denominator
    cost = rep.cost or {"rounds": 0, "passes": 0}
    res = {
        "eps_prime": _exact(eps_prime),
        "lambda": _exact(rep.lam),
        "W_rounded": rep.W_rounded,
        "rescaled": rep.rescaled,
        "iterations_per_scale": rep.iterations,
        "sum_delta_w": _exact(Fraction(rep.sum_dw, unit)),
        "removed_matched_edges": rep.removed_edges,
        "removed_free_vertices": rep.removed_free,
        "phase_calls": rep.phase_calls,
        "blossoms_made": rep.blossoms_made,
        "blossoms_dissolved": rep.blossoms_dissolved,
        "rounds": cost.get("rounds", 0),
        "round_budget": rep.round_budget,
        "passes": cost.get("passes", 0),
        "peak_words": rep.peak_words,
        "cost": cost,
        "removal_constant": rep.removal_constant,
        "max_step2_removed": [rep.max_step2_m, rep.max_step2_f],
        "validator": {
            "mode": cfg.validate,
            "checks": rep.validations,
            "rcs_violations": rep.rcs_violations,
            "bound_violations": rep.bound_violations,
        },
    }
    return rep.matching, res


def _streaming_result(graph: WeightedGraph, cfg: RunConfig) -> tuple[list[int], dict]:
    _, rep = run_streaming(graph, cfg)
    res = {
        "eps0": _exact(rep.eps0),
        "k": rep.k,
        "instances": rep.instances,
        "distinct_instances": rep.distinct_instances,
        "copy_weights": rep.copy_weights,
        "best_copy": rep.best_copy,
        "passes": rep.passes,
        "peak_words": rep.peak_words,
        "word_budget": rep.word_budget,
        "validator": {
            "mode": cfg.validate,
            "rcs_violations": rep.rcs_violations,
            "bound_violations": rep.bound_violations,
        },
    }
    return rep.matching, res


def solve(graph: WeightedGraph, args: argparse.Namespace, trace=None) -> dict:
    oracle = args.oracle == "on" or (args.oracle == "auto" and graph.n <= ORACLE_LIMIT)
    opt = None
    if oracle:
        if graph.n > ORACLE_LIMIT:
            raise GraphFormatError(0, f"oracle needs n ≤ {ORACLE_LIMIT}, got {graph.n}")
        opt = exact_mwm(graph).weight
    cfg = RunConfig(epsilon=args.epsilon, validate=args.validate,
                    opt_weight=opt if args.mode == "batch" else None, seed=args.seed, trace=trace)
    if args.mode == "batch":
        matching, res = _batch_result(graph, cfg)
    else:
        matching, res = _streaming_result(graph, cfg)
    weight = sum(graph.edges[e][2] for e in matching)
    res["weight"] = weight
    res["matching"] = [[graph.edges[e][0] + 1, graph.edges[e][1] + 1] for e in matching]
    res["oracle_weight"] = opt
    if opt is not None:
        ratio = Fraction(weight, opt) if opt else Fraction(1)
        res["ratio"] = _exact(ratio)
        res["ratio_ok"] = ratio >= 1 - args.epsilon
    return res


def _fraction(text: str) -> Fraction:
    try:
        f = Fraction(text)
    except (ValueError, ZeroDivisionError):
        raise argparse.ArgumentTypeError(f"not a number: {text!r}") from None
    if not 0 < f < 1:
        raise argparse.ArgumentTypeError("ε must lie in (0, 1)")
    return f


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="approx-mwm", description="Approximate maximum weight matching.")
    src = ap.add_mutually_exclusive_group(required=True)
    src.add_argument("--input", metavar="PATH")
    src.add_argument("--generate", metavar="KIND", choices=GENERATORS)
    ap.add_argument("--n", type=int, default=12)
    ap.add_argument("--p", type=float, default=0.5)
    ap.add_argument("--wmax", type=int, default=32)
    ap.add_argument("--seed", type=int, default=0)
    ap.add_argument("--epsilon", type=_fraction, default=Fraction(1, 5))
    ap.add_argument("--mode", choices=("batch", "streaming"), default="batch")
    ap.add_argument("--oracle", choices=("on", "off", "auto"), default="auto")
    ap.add_argument("--validate", choices=("off", "boundaries", "paranoid"), default="boundaries")
    ap.add_argument("--report", metavar="PATH")
    ap.add_argument("--trace", metavar="PATH")
    ap.add_argument("--write-graph", metavar="PATH", help="also save the input graph")
    return ap


def main(argv: Sequence[str] | None = None) -> int:
    ap = build_parser()
    try:
        args = ap.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code or 0)
    try:
        if args.input:
            graph = parse(args.input)
            source = {"input": str(args.input)}
        else:
            graph = generate(args.generate, args.n, args.p, args.wmax, args.seed).graph
            source = {"generate": args.generate, "n": args.n, "p": args.p, "wmax": args.wmax}
        if args.write_graph:
            write(graph, args.write_graph)
    except (GraphFormatError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2

    events: list[dict] = []
    trace = events.append if args.trace else None
    code = 0
    try:
        result = solve(graph, args, trace)
    except GraphFormatError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except (InvariantViolation, StructuralError) as exc:
        print(f"invariant violation: {exc}", file=sys.stderr)
        result = {"error": str(exc)}
        code = 1
    else:
        v = result["validator"]
        if v["rcs_violations"] or v["bound_violations"] or result.get("ratio_ok") is False:
            code = 1
    result["exit_code"] = code
    report = build_report(graph, args, source, result)
    text = dump_report(report)
    if args.report:
        Path(args.report).write_text(text)
    else:
        sys.stdout.write(text)
    if args.trace:
        Path(args.trace).write_text("".join(json.dumps(ev, sort_keys=True) + "\n" for ev in events))
    if args.report:
        summary = f"weight {result.get('weight')}"
        if result.get("ratio") is not None:
            summary += f", ratio {result['ratio']}"
        print(summary)
    return code
