"""Per-block workload estimation and block-to-process load distribution."""

from .curves import CurveKind, curve_order, hilbert_index, morton_index
from .distribution import diffusive_balance, diffusive_step, edge_cut, edge_weight, refine_partition, sfc_partition
from .estimator import (
    BUILTIN_COEFFICIENTS,
    EstimatorCoefficients,
    TimingSample,
    block_weights,
    fit_coefficients,
    relative_errors,
    summary_stats,
    wl_bh,
    wl_coup1,
    wl_coup2,
    wl_lbm,
    wl_rb,
    wl_total,
)
from .grid import AdjacencyClass, Assignment, BlockGrid, BlockQuantities, build_grid, neighbors, validate_assignment
from .metrics import IntervalReport, load_imbalance, process_loads, simulated_makespan
from .replay import ReplaySummary, RunConfig, run_replay

__version__ = "0.1.0"
