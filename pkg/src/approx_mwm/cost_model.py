"""Round and pass accounting.

Costs are charged per semantic primitive (one broadcast, one phase, one
Bellman-Ford labelling, ...), never per message.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from fractions import Fraction


def weak_diameter(n: int, epsilon: Fraction) -> int:
    """⌈(1/ε)·log₂³n⌉, at least 1."""
    lg = max(1, math.ceil(math.log2(max(n, 2))))
    return max(1, math.ceil(Fraction(lg ** 3) / Fraction(epsilon)))


@dataclass
class CostConfig:
    d_weak: int = 1
    blossom_op: int = 1
    bf: int = 1
    phase: int = 1
    dual_adjust: int = 1
    scan: int = 1

    @classmethod
    def for_run(cls, n: int, epsilon: Fraction, l_max: int, c_max: int, tau_max: int) -> CostConfig:
        return cls(
            d_weak=weak_diameter(n, epsilon),
            blossom_op=c_max * c_max,
            bf=l_max * l_max,
            phase=tau_max * l_max,
        )

    def cost_of(self, primitive: str) -> int:
        if primitive == "aggregate" or primitive == "broadcast":
            return self.d_weak
        try:
            return getattr(self, primitive)
        except AttributeError:
            raise KeyError(f"unknown primitive {primitive!r}") from None


@dataclass
class CostLedger:
    config: CostConfig = field(default_factory=CostConfig)
    rounds: int = 0
    passes: int = 0
    breakdown: dict[str, int] = field(default_factory=dict)
    counts: dict[str, int] = field(default_factory=dict)

    def charge(self, primitive: str, multiplier: int = 1) -> int:
        if multiplier < 0:
            raise ValueError("negative multiplier")
        if primitive == "scan":
            self.passes += self.config.scan * multiplier
            amount = self.config.scan * multiplier
        else:
            amount = self.config.cost_of(primitive) * multiplier
            self.rounds += amount
        self.breakdown[primitive] = self.breakdown.get(primitive, 0) + amount
        self.counts[primitive] = self.counts.get(primitive, 0) + multiplier
        return amount

    def merge(self, other: CostLedger) -> None:
        self.rounds += other.rounds
        self.passes += other.passes
        for k, v in other.breakdown.items():
            self.breakdown[k] = self.breakdown.get(k, 0) + v
        for k, v in other.counts.items():
            self.counts[k] = self.counts.get(k, 0) + v

    def snapshot(self) -> dict:
        return {
            "rounds": self.rounds,
            "passes": self.passes,
            "breakdown": dict(sorted(self.breakdown.items())),
            "counts": dict(sorted(self.counts.items())),
        }

    def consistent(self) -> bool:
        rounds = sum(v for k, v in self.breakdown.items() if k != "scan")
        return rounds == self.rounds and self.breakdown.get("scan", 0) == self.passes


def round_budget(config: CostConfig, iterations: int, lam: Fraction, c_max: int, l_max: int, c: int = 1) -> int:
    """c times the worst-case charge of a run with ``iterations`` iterations.

    Each iteration pays for at most 2 + C_max(ℓ_max+1)/λ phase calls (each a
    phase plus one aggregation), one blossom round, one labelling, four
    aggregations and one dual adjustment. With the prices of ``for_run``
    this is poly(1/ε, log W)·polylog(n).
    """
    calls = 2 + math.ceil(c_max * (l_max + 1) / Fraction(lam))
    per_iter = (calls * (config.phase + config.d_weak) + config.blossom_op + config.bf
                + 4 * config.d_weak + config.dual_adjust)
    return c * iterations * per_iter
