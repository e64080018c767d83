"""Load imbalance, per-process loads and the simulated makespan proxy."""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .distribution import as_weights
from .grid import Assignment, BlockGrid, require_valid


@dataclass(frozen=True)
class IntervalReport:
    """One rebalancing interval; ``loads`` is empty when read back from CSV."""

    step: int
    strategy: str
    n_procs: int
    LI: float
    edge_cut: int
    max_load: float
    total_load: float
    loads: tuple[float, ...] = ()

    @classmethod
    def from_loads(cls, step: int, strategy: str, loads: Sequence[float], edge_cut: int) -> "IntervalReport":
        loads = tuple(float(x) for x in loads)
        return cls(
            step=int(step),
            strategy=strategy,
            n_procs=len(loads),
            LI=load_imbalance(loads),
            edge_cut=int(edge_cut),
            max_load=max(loads),
            total_load=math.fsum(loads),
            loads=loads,
        )


def process_loads(grid: BlockGrid, assignment: Assignment, weights) -> list[float]:
    require_valid(grid, assignment)
    w = as_weights(grid, weights)
    buckets: list[list[float]] = [[] for _ in range(assignment.n_procs)]
    for b, p in enumerate(assignment.owner):
        buckets[p].append(w[b])
    return [math.fsum(bucket) for bucket in buckets]


def load_imbalance(loads: Sequence[float]) -> float:
    """Maximum over mean load, minus one."""
    arr = np.asarray(loads, dtype=float)
    if arr.size == 0:
        raise ValueError("need at least one process load")
    if np.any(arr < 0):
        raise ValueError("loads must be non-negative")
    total = math.fsum(arr)
    if total <= 0:
        raise ValueError("total load must be positive")
    return float(arr.max() / (total / arr.size) - 1.0)


def simulated_makespan(reports: Sequence[IntervalReport]) -> float:
    """Sum of the slowest process's load over all intervals."""
    return math.fsum(r.max_load for r in reports)
