"""Per-block workload functions, least-squares calibration and error statistics.

All five part functions are linear in their coefficients, so each is
written as ``features(q) @ coefficients``. Timings are in milliseconds.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Iterable, Sequence

import numpy as np

from .grid import BlockQuantities

PARTS = ("lbm", "bh", "coup1", "coup2", "rb")
N_COEFFS = {"lbm": 3, "bh": 3, "coup1": 5, "coup2": 5, "rb": 5}

DEFAULT_WEIGHT_FLOOR = 1e-6


@dataclass(frozen=True)
class EstimatorCoefficients:
    lbm: tuple[float, float, float]
    bh: tuple[float, float, float]
    coup1: tuple[float, float, float, float, float]
    coup2: tuple[float, float, float, float, float]
    rb: tuple[float, float, float, float, float]

    def __post_init__(self):
        for part in PARTS:
            values = getattr(self, part)
            if len(values) != N_COEFFS[part]:
                raise ValueError(f"{part} needs {N_COEFFS[part]} coefficients, got {len(values)}")

    def part(self, name: str) -> np.ndarray:
        return np.asarray(getattr(self, name), dtype=float)

    def as_dict(self) -> dict[str, list[float]]:
        return {part: [float(v) for v in getattr(self, part)] for part in PARTS}

    @classmethod
    def from_dict(cls, data) -> "EstimatorCoefficients":
        return cls(**{part: tuple(float(v) for v in data[part]) for part in PARTS})

    @classmethod
    def zeros(cls) -> "EstimatorCoefficients":
        return cls(**{part: (0.0,) * N_COEFFS[part] for part in PARTS})

    def __add__(self, other: "EstimatorCoefficients") -> "EstimatorCoefficients":
        return EstimatorCoefficients(
            **{part: tuple(a + b for a, b in zip(getattr(self, part), getattr(other, part))) for part in PARTS}
        )


# Measured on Haswell nodes; hardware specific, shipped as the default profile.
BUILTIN_COEFFICIENTS = EstimatorCoefficients(
    lbm=(9.99e-06, 1.57e-04, -8.23e-02),
    bh=(6.65e-06, 7.06e-04, -1.09e-01),
    coup1=(3.08e-06, 2.42e-07, 1.41e-02, 2.78e-02, -1.40e-01),
    coup2=(5.99e-06, 3.90e-06, -8.80e-03, 2.51e-02, -1.30e-01),
    rb=(1.16e-06, 9.62e-04, 2.75e-04, 1.48e-03, 1.88e-02),
)


@dataclass(frozen=True)
class TimingSample:
    quantities: BlockQuantities
    m_lbm: float
    m_bh: float
    m_coup1: float
    m_coup2: float
    m_rb: float
    block_id: int = 0
    step: int = 0

    @property
    def m_tot(self) -> float:
        return self.m_lbm + self.m_bh + self.m_coup1 + self.m_coup2 + self.m_rb

    def measured(self, part: str) -> float:
        return getattr(self, "m_" + part)


def quantity_matrix(quantities: Iterable[BlockQuantities]) -> np.ndarray:
    """(n, 7) float array with columns C, F, B, P_L, P_S, K, S."""
    rows = [(q.C, q.F, q.B, q.P_L, q.P_S, q.K, q.S) for q in quantities]
    return np.asarray(rows, dtype=float).reshape(-1, 7)


def part_features(part: str, Q: np.ndarray) -> np.ndarray:
    """Design-matrix rows for one part, from a ``quantity_matrix``."""
    C, F, B, PL, PS, K, S = Q.T
    one = np.ones_like(C)
    if part == "lbm":
        cols = (C, F, one)
    elif part == "bh":
        cols = (C, B, one)
    elif part in ("coup1", "coup2"):
        cols = (C, F, PL, PS, one)
    elif part == "rb":
        # the intercept sits inside the sub-cycle bracket, so its feature is S
        cols = (S * (PL + PS) ** 2, S * PL, S * PS, S * K, S)
    else:
        raise ValueError(f"unknown part {part!r}")
    return np.stack(cols, axis=1)


def predict_parts(Q: np.ndarray, coeffs: EstimatorCoefficients) -> dict[str, np.ndarray]:
    """Vectorised predictions of every part for a ``quantity_matrix``."""
    return {part: part_features(part, Q) @ coeffs.part(part) for part in PARTS}


def wl_lbm(q: BlockQuantities, c: EstimatorCoefficients) -> float:
    a1, a2, a3 = c.lbm
    return a1 * q.C + a2 * q.F + a3


def wl_bh(q: BlockQuantities, c: EstimatorCoefficients) -> float:
    a1, a2, a3 = c.bh
    return a1 * q.C + a2 * q.B + a3


def wl_coup1(q: BlockQuantities, c: EstimatorCoefficients) -> float:
    a1, a2, a3, a4, a5 = c.coup1
    return a1 * q.C + a2 * q.F + a3 * q.P_L + a4 * q.P_S + a5


def wl_coup2(q: BlockQuantities, c: EstimatorCoefficients) -> float:
    a1, a2, a3, a4, a5 = c.coup2
    return a1 * q.C + a2 * q.F + a3 * q.P_L + a4 * q.P_S + a5


def wl_rb(q: BlockQuantities, c: EstimatorCoefficients) -> float:
    a1, a2, a3, a4, a5 = c.rb
    n = q.P_L + q.P_S
    return q.S * (a1 * n * n + a2 * q.P_L + a3 * q.P_S + a4 * q.K + a5)


WORKLOAD_FUNCTIONS = {
    "lbm": wl_lbm,
    "bh": wl_bh,
    "coup1": wl_coup1,
    "coup2": wl_coup2,
    "rb": wl_rb,
}


def wl_total(q: BlockQuantities, c: EstimatorCoefficients) -> float:
    return wl_lbm(q, c) + wl_bh(q, c) + wl_coup1(q, c) + wl_coup2(q, c) + wl_rb(q, c)


def block_weights(
    quantities: Sequence[BlockQuantities],
    c: EstimatorCoefficients,
    floor: float = DEFAULT_WEIGHT_FLOOR,
) -> np.ndarray:
    """Total predicted workload per block, clamped to ``floor`` for partitioning."""
    if floor <= 0:
        raise ValueError("weight floor must be positive")
    w = np.array([wl_total(q, c) for q in quantities], dtype=float)
    return np.maximum(w, floor)


def _lstsq_scaled(X: np.ndarray, y: np.ndarray) -> np.ndarray:
    # column scaling keeps the SVD well conditioned for raw cell counts
    scale = np.abs(X).max(axis=0)
    scale[scale == 0] = 1.0
    sol, *_ = np.linalg.lstsq(X / scale, y, rcond=None)
    return sol / scale


def fit_coefficients(samples: Sequence[TimingSample]) -> EstimatorCoefficients:
    """Five independent ordinary least-squares fits, one per algorithm part.

    Rank-deficient designs (e.g. a single block size, which makes C
    collinear with the intercept) yield the minimal-norm solution of the
    scaled problem instead of an error.
    """
    samples = list(samples)
    for part in PARTS:
        if len(samples) < N_COEFFS[part]:
            raise ValueError(
                f"part {part!r} needs at least {N_COEFFS[part]} samples, got {len(samples)}"
            )
    Q = quantity_matrix(s.quantities for s in samples)
    fitted = {}
    for part in PARTS:
        y = np.array([s.measured(part) for s in samples], dtype=float)
        if not np.all(np.isfinite(y)):
            bad = int(np.flatnonzero(~np.isfinite(y))[0])
            raise ValueError(f"non-finite timing m_{part} in sample {bad}")
        fitted[part] = tuple(float(v) for v in _lstsq_scaled(part_features(part, Q), y))
    return EstimatorCoefficients(**fitted)


@dataclass
class RelativeErrors:
    """E_X = (WL_X - m_X) / m_tot per sample, for each part and the total."""

    parts: dict[str, np.ndarray] = field(default_factory=dict)
    total: np.ndarray = field(default_factory=lambda: np.zeros(0))

    def __getitem__(self, key: str) -> np.ndarray:
        return self.total if key == "tot" else self.parts[key]


def relative_errors(samples: Sequence[TimingSample], c: EstimatorCoefficients) -> RelativeErrors:
    samples = list(samples)
    Q = quantity_matrix(s.quantities for s in samples)
    m = {part: np.array([s.measured(part) for s in samples], dtype=float) for part in PARTS}
    m_tot = sum(m[part] for part in PARTS) if samples else np.zeros(0)
    if np.any(m_tot == 0):
        raise ValueError(f"sample {int(np.flatnonzero(m_tot == 0)[0])} has zero total runtime")
    pred = predict_parts(Q, c)
    parts = {part: (pred[part] - m[part]) / m_tot for part in PARTS}
    total = (sum(pred[part] for part in PARTS) - m_tot) / m_tot if samples else np.zeros(0)
    return RelativeErrors(parts=parts, total=total)


def summary_stats(values: Sequence[float]) -> tuple[float, float]:
    """Median and median absolute deviation."""
    v = np.asarray(values, dtype=float)
    if v.size == 0:
        raise ValueError("summary statistics need at least one value")
    med = float(np.median(v))
    return med, float(np.median(np.abs(v - med)))


def is_finite(c: EstimatorCoefficients) -> bool:
    return all(math.isfinite(v) for part in PARTS for v in getattr(c, part))
