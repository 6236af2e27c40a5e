"""Approximate maximum weight matching by primal-dual scaling with short augmenting-path search."""

from __future__ import annotations

from .graph_model import BlossomForest, Matching, StructuralError, WeightedGraph
from .scaling_driver import InvariantViolation, RunConfig, RunReport, run
from .streaming_driver import run_streaming

__all__ = [
    "BlossomForest",
    "InvariantViolation",
    "Matching",
    "RunConfig",
    "RunReport",
    "StructuralError",
    "WeightedGraph",
    "run",
    "run_streaming",
]
