"""Turning block weights into block-to-process assignments.

Three families: greedy segmentation of a space-filling curve, diffusive
exchange between neighbouring processes, and an edge-cut refiner that
respects a load-imbalance tolerance.
"""

from __future__ import annotations

import math
from collections import defaultdict
from typing import Mapping, Sequence

import numpy as np

from .curves import CurveKind, curve_order
from .grid import AdjacencyClass, Assignment, BlockGrid, adjacent_pairs, neighbors, require_valid

DEFAULT_TOLERANCE = 1.05


def as_weights(grid: BlockGrid, weights: Mapping[int, float] | Sequence[float] | np.ndarray) -> np.ndarray:
    """Dense float array of block weights; every block present and positive."""
    if isinstance(weights, Mapping):
        missing = [b for b in grid.ids() if b not in weights]
        if missing:
            raise ValueError(f"missing weight for block {missing[0]}")
        w = np.array([weights[b] for b in grid.ids()], dtype=float)
    else:
        w = np.asarray(weights, dtype=float)
        if w.shape != (grid.n_blocks,):
            raise ValueError(f"expected {grid.n_blocks} weights, got shape {w.shape}")
    bad = np.flatnonzero(~(np.isfinite(w) & (w > 0)))
    if bad.size:
        raise ValueError(f"weight of block {int(bad[0])} must be positive, got {w[bad[0]]}")
    return w


def _loads(owner: np.ndarray, w: np.ndarray, n_procs: int) -> np.ndarray:
    return np.bincount(owner, weights=w, minlength=n_procs)


def sfc_partition(
    grid: BlockGrid,
    weights,
    n_procs: int,
    kind: CurveKind | str = CurveKind.HILBERT,
) -> Assignment:
    """Cut the curve into ``n_procs`` contiguous segments of roughly equal weight.

    A block stays with the current process while the running total up to
    the block's midpoint does not pass that process's cumulative target
    ``(p + 1) * total / n_procs``. Every process gets at least one block.
    """
    if n_procs < 1:
        raise ValueError(f"process count must be >= 1, got {n_procs}")
    if n_procs > grid.n_blocks:
        raise ValueError(f"{n_procs} processes but only {grid.n_blocks} blocks")
    w = as_weights(grid, weights)
    order = curve_order(grid, kind)
    target = math.fsum(w) / n_procs

    owner = [0] * grid.n_blocks
    proc, cum, taken = 0, 0.0, 0
    for idx, b in enumerate(order):
        if taken and proc < n_procs - 1:
            starving = len(order) - idx <= n_procs - 1 - proc
            if starving or cum + w[b] / 2 > (proc + 1) * target:
                proc, taken = proc + 1, 0
        owner[b] = proc
        cum += w[b]
        taken += 1
    return Assignment.from_owners(owner, n_procs)


def edge_weight(cls: AdjacencyClass, b_s: int) -> int:
    """Communication volume between two touching blocks of ``b_s**3`` cells."""
    if b_s < 1:
        raise ValueError(f"block size must be >= 1, got {b_s}")
    cls = AdjacencyClass(cls)
    if cls is AdjacencyClass.FACE:
        return b_s * b_s
    if cls is AdjacencyClass.EDGE:
        return b_s
    return 1


def edge_cut(grid: BlockGrid, assignment: Assignment, b_s: int | None = None) -> int:
    """Sum of edge weights over touching block pairs owned by different processes."""
    require_valid(grid, assignment)
    b_s = grid.block_size if b_s is None else b_s
    owner = assignment.owner
    return sum(
        edge_weight(cls, b_s) for b, n, cls in adjacent_pairs(grid) if owner[b] != owner[n]
    )


def _process_graph(grid: BlockGrid, owner) -> dict[int, set[int]]:
    adj: dict[int, set[int]] = defaultdict(set)
    for b, n, _ in adjacent_pairs(grid):
        p, q = owner[b], owner[n]
        if p != q:
            adj[p].add(q)
            adj[q].add(p)
    return adj


def diffusive_step(grid: BlockGrid, weights, assignment: Assignment) -> Assignment:
    """One round of pairwise block exchange between neighbouring processes.

    Processes are visited by index. A process hands one block to its
    least-loaded neighbour that it out-weighs by ``delta``; the block must
    touch the neighbour's region and weigh strictly less than ``delta``,
    and the one closest to ``delta / 2`` wins (ties go to the lower id).
    Each process takes part in at most one exchange per round, which makes
    the maximum load non-increasing. Senders never give away their last block.
    """
    require_valid(grid, assignment)
    w = as_weights(grid, weights)
    owner = list(assignment.owner)
    n_procs = assignment.n_procs
    loads = _loads(np.asarray(owner), w, n_procs)
    counts = np.bincount(np.asarray(owner), minlength=n_procs)
    adj = _process_graph(grid, owner)

    engaged: set[int] = set()
    for p in range(n_procs):
        if p in engaged or counts[p] <= 1:
            continue
        partners = sorted(
            (loads[q], q) for q in adj.get(p, ()) if q not in engaged and loads[p] > loads[q]
        )
        for load_q, q in partners:
            delta = loads[p] - load_q
            candidates = [
                b
                for b in range(grid.n_blocks)
                if owner[b] == p
                and 0 < w[b] < delta
                and any(owner[n] == q for n, _ in neighbors(grid, b))
            ]
            if not candidates:
                continue
            b = min(candidates, key=lambda c: (abs(w[c] - delta / 2), c))
            owner[b] = q
            loads[p] -= w[b]
            loads[q] += w[b]
            counts[p] -= 1
            counts[q] += 1
            engaged.update((p, q))
            break
    return Assignment.from_owners(owner, n_procs)


def diffusive_balance(
    grid: BlockGrid, weights, assignment: Assignment, max_iters: int = 100
) -> tuple[Assignment, int]:
    """Repeat :func:`diffusive_step` until nothing moves or ``max_iters`` rounds ran.

    Returns the final assignment and the number of rounds that moved a block.
    """
    if max_iters < 0:
        raise ValueError(f"max_iters must be >= 0, got {max_iters}")
    require_valid(grid, assignment)
    current = assignment
    for it in range(max_iters):
        nxt = diffusive_step(grid, weights, current)
        if nxt == current:
            return current, it
        current = nxt
    return current, max_iters


def _connections(grid: BlockGrid, owner, b: int, b_s: int) -> dict[int, int]:
    conn: dict[int, int] = defaultdict(int)
    for n, cls in neighbors(grid, b):
        conn[owner[n]] += edge_weight(cls, b_s)
    return conn


def refine_partition(
    grid: BlockGrid,
    weights,
    assignment: Assignment,
    tolerance: float = DEFAULT_TOLERANCE,
    b_s: int | None = None,
    history: list | None = None,
) -> Assignment:
    """Greedy edge-cut descent under a load bound of ``tolerance * total / n_procs``.

    Each round applies the single boundary-block move with the largest cut
    reduction whose receiver stays within the bound. When no single move
    helps, the best improving swap of two boundary blocks between a pair of
    processes is tried instead (both sides must end within the bound).
    Processes are never emptied. Stops when neither kind of move reduces
    the cut, so the cut strictly decreases with every accepted change.
    If ``history`` is given, the owner tuple after each accepted change is
    appended to it.
    """
    if tolerance < 1:
        raise ValueError(f"tolerance must be >= 1, got {tolerance}")
    require_valid(grid, assignment)
    w = as_weights(grid, weights)
    b_s = grid.block_size if b_s is None else b_s
    n_procs = assignment.n_procs
    owner = list(assignment.owner)
    loads = _loads(np.asarray(owner), w, n_procs)
    counts = np.bincount(np.asarray(owner), minlength=n_procs)
    bound = tolerance * math.fsum(w) / n_procs

    while True:
        # gains[b][q]: cut reduction of moving b from its owner to q
        gains: dict[int, dict[int, int]] = {}
        for b in range(grid.n_blocks):
            conn = _connections(grid, owner, b, b_s)
            p = owner[b]
            others = {q: conn[q] - conn.get(p, 0) for q in conn if q != p}
            if others:
                gains[b] = others

        best = None
        for b, per_q in gains.items():
            p = owner[b]
            if counts[p] <= 1:
                continue
            for q in sorted(per_q):
                g = per_q[q]
                if g > 0 and loads[q] + w[b] <= bound and (best is None or g > best[0]):
                    best = (g, b, q)
        if best is not None:
            _, b, q = best
            p = owner[b]
            owner[b] = q
            loads[p] -= w[b]
            loads[q] += w[b]
            counts[p] -= 1
            counts[q] += 1
            if history is not None:
                history.append(tuple(owner))
            continue

        swap = _best_swap(grid, owner, gains, w, loads, bound, b_s)
        if swap is None:
            break
        b1, b2 = swap
        p, q = owner[b1], owner[b2]
        owner[b1], owner[b2] = q, p
        delta = w[b2] - w[b1]
        loads[p] += delta
        loads[q] -= delta
        if history is not None:
            history.append(tuple(owner))
    return Assignment.from_owners(owner, n_procs)


def _best_swap(grid, owner, gains, w, loads, bound, b_s):
    moves: dict[tuple[int, int], list[tuple[int, int]]] = defaultdict(list)
    for b, per_q in gains.items():
        for q, g in per_q.items():
            moves[(owner[b], q)].append((g, b))
    for key in moves:
        moves[key].sort(key=lambda t: (-t[0], t[1]))

    adjacent = {}
    best = None
    for (p, q), forward in sorted(moves.items()):
        if p > q:
            continue
        backward = moves.get((q, p), [])
        for g1, b1 in forward:
            if not backward or g1 + backward[0][0] <= (best[0] if best else 0):
                break
            for g2, b2 in backward:
                if g1 + g2 <= (best[0] if best else 0):
                    break
                if b1 not in adjacent:
                    adjacent[b1] = {n: edge_weight(cls, b_s) for n, cls in neighbors(grid, b1)}
                # a swapped pair that touches stays cut, counted once in each gain
                g = g1 + g2 - 2 * adjacent[b1].get(b2, 0)
                if g <= 0 or (best is not None and g <= best[0]):
                    continue
                shift = w[b2] - w[b1]
                if loads[p] + shift <= bound and loads[q] - shift <= bound:
                    best = (g, b1, b2)
    return None if best is None else best[1:]
