"""Replaying a settling scenario under a rebalancing strategy.

The scenario runs once; at every rebalancing step its block quantities are
turned into predicted weights, the strategy assigns blocks to simulated
processes, and the resulting per-process loads go into an IntervalReport.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field, replace
from typing import Sequence

import numpy as np

from .curves import CurveKind
from .distribution import DEFAULT_TOLERANCE, diffusive_balance, edge_cut, refine_partition, sfc_partition
from .estimator import BUILTIN_COEFFICIENTS, EstimatorCoefficients, block_weights
from .grid import Assignment, BlockGrid, BlockQuantities
from .metrics import IntervalReport, process_loads, simulated_makespan
from .scenario import ScenarioConfig, extract_block_quantities, init_scene, make_preset, run_scene, synthesize_timings

STRATEGIES = ("none", "morton", "hilbert", "diffusive", "refine")
LOAD_SOURCES = ("predicted", "synthesized")


@dataclass(frozen=True)
class RunConfig:
    preset: str = "settling-box"
    scale: float = 0.5
    seed: int = 0
    strategy: str = "hilbert"
    n_procs: int = 8
    interval: int = 100
    # None keeps the preset's duration
    steps: int | None = None
    coefficients: EstimatorCoefficients = field(default=BUILTIN_COEFFICIENTS)
    tolerance: float = DEFAULT_TOLERANCE
    # "synthesized" scores the assignment with noisy stand-in timings instead of the estimate
    load_source: str = "predicted"
    timing_noise: float = 0.05

    def __post_init__(self):
        if self.strategy not in STRATEGIES:
            raise ValueError(f"unknown strategy {self.strategy!r}; choose from {', '.join(STRATEGIES)}")
        if self.interval < 1:
            raise ValueError(f"rebalance interval must be >= 1, got {self.interval}")
        if self.n_procs < 1:
            raise ValueError(f"process count must be >= 1, got {self.n_procs}")
        if self.steps is not None and self.steps < 0:
            raise ValueError(f"steps must be >= 0, got {self.steps}")
        if self.load_source not in LOAD_SOURCES:
            raise ValueError(f"unknown load source {self.load_source!r}")
        if self.timing_noise < 0:
            raise ValueError("timing noise must be non-negative")

    def scenario(self) -> ScenarioConfig:
        config = make_preset(self.preset, self.scale, seed=self.seed)
        if self.steps is not None:
            config = replace(config, duration=self.steps)
        return config


def rebalance_steps(duration: int, interval: int) -> list[int]:
    """0, interval, 2*interval, ... up to and including ``duration`` when it is a multiple."""
    return list(range(0, duration + 1, interval))


def quantity_trace(run: RunConfig) -> list[tuple[int, list[BlockQuantities]]]:
    """Block quantities at every rebalancing step; independent of the strategy."""
    config = run.scenario()
    grid = config.grid
    scene = init_scene(config)
    update = config.update_steps()
    trace = []
    done = 0
    for step in rebalance_steps(config.duration, run.interval):
        scene = run_scene(scene, step - done, update)
        done = step
        trace.append((step, extract_block_quantities(scene, grid, config)))
    return trace


def _assign(strategy: str, grid: BlockGrid, w: np.ndarray, n_procs: int, previous: Assignment | None, tolerance: float):
    if strategy == "none":
        return previous if previous is not None else sfc_partition(grid, w, n_procs, CurveKind.HILBERT)
    if strategy == "morton":
        return sfc_partition(grid, w, n_procs, CurveKind.MORTON)
    if strategy == "hilbert":
        return sfc_partition(grid, w, n_procs, CurveKind.HILBERT)
    if strategy == "diffusive":
        if previous is None:
            previous = sfc_partition(grid, w, n_procs, CurveKind.HILBERT)
        return diffusive_balance(grid, w, previous)[0]
    start = sfc_partition(grid, w, n_procs, CurveKind.HILBERT)
    return refine_partition(grid, w, start, tolerance)


def run_replay(
    run: RunConfig, trace: Sequence[tuple[int, Sequence[BlockQuantities]]] | None = None
) -> list[IntervalReport]:
    """One report per rebalancing step.

    ``trace`` may be passed in to compare strategies on the same scenario run.
    The "none" strategy keeps the Hilbert partition of step 0 for the whole run.
    Loads are always those of the current interval's weights.
    """
    config = run.scenario()
    grid = config.grid
    if run.n_procs > grid.n_blocks:
        raise ValueError(f"{run.n_procs} processes but only {grid.n_blocks} blocks")
    if trace is None:
        trace = quantity_trace(run)
    reports = []
    assignment = None
    for step, quantities in trace:
        w = block_weights(quantities, run.coefficients)
        assignment = _assign(run.strategy, grid, w, run.n_procs, assignment, run.tolerance)
        if run.load_source == "synthesized":
            samples = synthesize_timings(
                quantities, run.coefficients, run.timing_noise, seed=run.seed * 100003 + step, step=step
            )
            scored = np.maximum([s.m_tot for s in samples], 0.0)
            # an idle block still costs something, keep every weight positive
            scored = np.maximum(scored, w.min())
        else:
            scored = w
        loads = process_loads(grid, assignment, scored)
        reports.append(IntervalReport.from_loads(step, run.strategy, loads, edge_cut(grid, assignment)))
    return reports


@dataclass(frozen=True)
class ReplaySummary:
    strategy: str
    mean_LI: float
    median_LI: float
    makespan: float
    mean_edge_cut: float

    @classmethod
    def of(cls, reports: Sequence[IntervalReport]) -> "ReplaySummary":
        if not reports:
            raise ValueError("cannot summarise an empty report")
        li = [r.LI for r in reports]
        return cls(
            strategy=reports[0].strategy,
            mean_LI=math.fsum(li) / len(li),
            median_LI=float(np.median(li)),
            makespan=simulated_makespan(reports),
            mean_edge_cut=math.fsum(r.edge_cut for r in reports) / len(reports),
        )
