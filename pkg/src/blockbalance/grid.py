"""Block lattice, block adjacency and block-to-process assignments."""

from __future__ import annotations

import enum
import functools
from dataclasses import dataclass
from typing import Iterable, Mapping, Sequence

import numpy as np


class AdjacencyClass(enum.IntEnum):
    """How two distinct blocks of the 26-neighbourhood touch.

    The value is the number of coordinates in which the two blocks differ.
    """

    FACE = 1
    EDGE = 2
    CORNER = 3


@dataclass(frozen=True)
class BlockGrid:
    """Uniform lattice of cubic blocks with ``block_size**3`` cells each.

    Block ids run k-major, then j, then i: ``id = i + nx * (j + ny * k)``.
    """

    dims: tuple[int, int, int]
    block_size: int

    @property
    def n_blocks(self) -> int:
        nx, ny, nz = self.dims
        return nx * ny * nz

    @property
    def cells_per_block(self) -> int:
        return self.block_size**3

    @property
    def extent(self) -> tuple[int, int, int]:
        """Domain size in cells along each axis."""
        b = self.block_size
        return (self.dims[0] * b, self.dims[1] * b, self.dims[2] * b)

    def block_id(self, i: int, j: int, k: int) -> int:
        nx, ny, nz = self.dims
        if not (0 <= i < nx and 0 <= j < ny and 0 <= k < nz):
            raise ValueError(f"block coordinate {(i, j, k)} outside grid {self.dims}")
        return i + nx * (j + ny * k)

    def coord(self, block: int) -> tuple[int, int, int]:
        self._check_id(block)
        nx, ny, _ = self.dims
        return (block % nx, (block // nx) % ny, block // (nx * ny))

    def ids(self) -> range:
        return range(self.n_blocks)

    def coords(self) -> np.ndarray:
        """(n_blocks, 3) integer array of block coordinates in id order."""
        nx, ny, nz = self.dims
        k, j, i = np.meshgrid(np.arange(nz), np.arange(ny), np.arange(nx), indexing="ij")
        return np.stack([i.ravel(), j.ravel(), k.ravel()], axis=1)

    def _check_id(self, block: int) -> None:
        if not (0 <= block < self.n_blocks):
            raise ValueError(f"block id {block} outside [0, {self.n_blocks})")


def build_grid(dims: Sequence[int], block_size: int) -> BlockGrid:
    dims = tuple(int(d) for d in dims)
    if len(dims) != 3:
        raise ValueError(f"expected three dimensions, got {dims}")
    if any(d < 1 for d in dims):
        raise ValueError(f"grid dimensions must be >= 1, got {dims}")
    if block_size < 1:
        raise ValueError(f"block size must be >= 1, got {block_size}")
    return BlockGrid(dims=dims, block_size=int(block_size))


_OFFSETS = [
    (di, dj, dk)
    for dk in (-1, 0, 1)
    for dj in (-1, 0, 1)
    for di in (-1, 0, 1)
    if (di, dj, dk) != (0, 0, 0)
]


@functools.lru_cache(maxsize=32)
def _neighbor_table(grid: BlockGrid) -> tuple[tuple[tuple[int, AdjacencyClass], ...], ...]:
    nx, ny, nz = grid.dims
    table = []
    for block in grid.ids():
        i, j, k = grid.coord(block)
        row = []
        for di, dj, dk in _OFFSETS:
            a, b, c = i + di, j + dj, k + dk
            if 0 <= a < nx and 0 <= b < ny and 0 <= c < nz:
                cls = AdjacencyClass(abs(di) + abs(dj) + abs(dk))
                row.append((a + nx * (b + ny * c), cls))
        table.append(tuple(row))
    return tuple(table)


def neighbors(grid: BlockGrid, block: int) -> list[tuple[int, AdjacencyClass]]:
    """All in-bounds blocks sharing a face, edge or corner with ``block``.

    Boundaries are not periodic. Order follows the offsets (dk, dj, di)
    in lexicographic order, so ids come out ascending.
    """
    grid._check_id(block)
    return list(_neighbor_table(grid)[block])


def adjacent_pairs(grid: BlockGrid) -> list[tuple[int, int, AdjacencyClass]]:
    """Every unordered pair of touching blocks, once, as (lower id, higher id, class)."""
    table = _neighbor_table(grid)
    return [(b, n, cls) for b in grid.ids() for n, cls in table[b] if n > b]


@dataclass(frozen=True)
class BlockQuantities:
    """Block-local state feeding the workload estimator.

    C total cells, F fluid cells, B near-boundary cells, P_L local particles,
    P_S shadow particles, K rigid-body contacts, S rigid-body sub-cycles.
    """

    C: int
    F: int
    B: int
    P_L: int = 0
    P_S: int = 0
    K: int = 0
    S: int = 1

    def __post_init__(self):
        for name in ("C", "F", "B", "P_L", "P_S", "K", "S"):
            if getattr(self, name) < 0:
                raise ValueError(f"{name} must be non-negative")
        if self.F > self.C:
            raise ValueError(f"fluid cells F={self.F} exceed cells C={self.C}")
        if self.B > self.F:
            raise ValueError(f"near-boundary cells B={self.B} exceed fluid cells F={self.F}")


@dataclass(frozen=True)
class Assignment:
    """Block-to-process map; ``owner[b]`` is the process of block ``b``."""

    owner: tuple[int, ...]
    n_procs: int

    @classmethod
    def from_owners(cls, owners: Iterable[int], n_procs: int) -> "Assignment":
        return cls(owner=tuple(int(p) for p in owners), n_procs=int(n_procs))

    def as_array(self) -> np.ndarray:
        return np.asarray(self.owner, dtype=np.int64)

    def blocks_of(self, proc: int) -> list[int]:
        return [b for b, p in enumerate(self.owner) if p == proc]


def validate_owner_pairs(
    grid: BlockGrid, pairs: Iterable[tuple[int, int]], n_procs: int
) -> list[str]:
    """Violations of a raw (block, owner) listing; empty when it is a valid assignment."""
    violations = []
    if n_procs < 1:
        violations.append(f"process count {n_procs} must be >= 1")
    seen: dict[int, int] = {}
    for block, proc in pairs:
        if not (0 <= block < grid.n_blocks):
            violations.append(f"unknown block {block}")
            continue
        if block in seen:
            violations.append(f"duplicate entry for block {block}")
            continue
        seen[block] = proc
        if not (0 <= proc < n_procs):
            violations.append(f"owner out of range: block {block} owned by {proc} with N_p={n_procs}")
    for block in grid.ids():
        if block not in seen:
            violations.append(f"unassigned block {block}")
    return violations


def validate_assignment(grid: BlockGrid, assignment: Assignment | Mapping[int, int], n_procs: int | None = None) -> list[str]:
    """Return the list of violations; an empty list means the assignment is valid.

    Accepts an :class:`Assignment` or a plain ``{block: owner}`` mapping
    together with ``n_procs``.
    """
    if isinstance(assignment, Assignment):
        return validate_owner_pairs(grid, enumerate(assignment.owner), assignment.n_procs)
    if n_procs is None:
        raise ValueError("n_procs is required when validating a mapping")
    return validate_owner_pairs(grid, assignment.items(), n_procs)


def require_valid(grid: BlockGrid, assignment: Assignment) -> None:
    violations = validate_assignment(grid, assignment)
    if violations:
        raise ValueError("invalid assignment: " + "; ".join(violations[:5]))
