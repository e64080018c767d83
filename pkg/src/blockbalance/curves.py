"""Morton and Hilbert indices for 3D integer coordinates, and curve orderings of a grid."""

from __future__ import annotations

import enum
import functools

import numpy as np

from .grid import BlockGrid


class CurveKind(str, enum.Enum):
    MORTON = "morton"
    HILBERT = "hilbert"


def _check_coord(coord, order: int) -> tuple[int, int, int]:
    if order < 0:
        raise ValueError(f"curve order must be >= 0, got {order}")
    x, y, z = (int(c) for c in coord)
    side = 1 << order
    for c in (x, y, z):
        if not (0 <= c < side):
            raise ValueError(f"coordinate {tuple(coord)} outside [0, {side}) for order {order}")
    return x, y, z


def morton_index(coord, order: int) -> int:
    """Interleave bits with x least significant: bit i of x, y, z lands at 3i, 3i+1, 3i+2."""
    x, y, z = _check_coord(coord, order)
    index = 0
    for bit in range(order):
        index |= ((x >> bit) & 1) << (3 * bit)
        index |= ((y >> bit) & 1) << (3 * bit + 1)
        index |= ((z >> bit) & 1) << (3 * bit + 2)
    return index


def _axes_to_transpose(X: list[int], order: int) -> list[int]:
    # Skilling, "Programming the Hilbert curve" (AIP Conf. Proc. 707, 2004)
    n = len(X)
    M = 1 << (order - 1)
    Q = M
    while Q > 1:
        P = Q - 1
        for i in range(n):
            if X[i] & Q:
                X[0] ^= P
            else:
                t = (X[0] ^ X[i]) & P
                X[0] ^= t
                X[i] ^= t
        Q >>= 1
    for i in range(1, n):
        X[i] ^= X[i - 1]
    t = 0
    Q = M
    while Q > 1:
        if X[n - 1] & Q:
            t ^= Q - 1
        Q >>= 1
    for i in range(n):
        X[i] ^= t
    return X


def hilbert_index(coord, order: int) -> int:
    """Position of ``coord`` along the order-``order`` 3D Hilbert curve.

    The curve starts at the origin and ends at ``(2**order - 1, 0, 0)``;
    consecutive indices are face neighbours.
    """
    x, y, z = _check_coord(coord, order)
    if order == 0:
        return 0
    X = _axes_to_transpose([x, y, z], order)
    index = 0
    for bit in range(order - 1, -1, -1):
        for component in X:
            index = (index << 1) | ((component >> bit) & 1)
    return index


def curve_index(kind: CurveKind | str, coord, order: int) -> int:
    kind = CurveKind(kind)
    return morton_index(coord, order) if kind is CurveKind.MORTON else hilbert_index(coord, order)


def enclosing_order(dims) -> int:
    """Smallest n such that a 2**n cube covers ``dims``."""
    return max(int(d) - 1 for d in dims).bit_length()


@functools.lru_cache(maxsize=32)
def _curve_order(grid: BlockGrid, kind: CurveKind) -> tuple[int, ...]:
    order = enclosing_order(grid.dims)
    keys = [curve_index(kind, grid.coord(b), order) for b in grid.ids()]
    return tuple(int(b) for b in np.argsort(np.asarray(keys, dtype=np.int64), kind="stable"))


def curve_order(grid: BlockGrid, kind: CurveKind | str) -> list[int]:
    """Block ids sorted along the curve of the smallest enclosing power-of-two cube.

    Cells of the cube outside the grid are simply skipped.
    """
    return list(_curve_order(grid, CurveKind(kind)))
