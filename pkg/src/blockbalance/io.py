"""CSV and JSON files exchanged by the command-line tools.

Floats are written with ``repr`` so a rerun with the same inputs produces
byte-identical files. Parse errors carry the 1-based line number.
"""

from __future__ import annotations

import csv
import json
import math
from pathlib import Path
from typing import Iterable, Sequence

from .estimator import EstimatorCoefficients, TimingSample
from .grid import Assignment, BlockGrid, BlockQuantities, validate_owner_pairs
from .metrics import IntervalReport

TIMING_FIELDS = ("block_id", "step", "C", "F", "B", "P_L", "P_S", "K", "S",
                 "m_lbm", "m_bh", "m_coup1", "m_coup2", "m_rb")
REPORT_FIELDS = ("step", "strategy", "n_procs", "LI", "edge_cut", "max_load", "total_load")
ASSIGNMENT_FIELDS = ("block_id", "i", "j", "k", "owner")
WEIGHT_FIELDS = ("block_id", "weight")


class SchemaError(ValueError):
    """Malformed or inconsistent input file."""


def _rows(path, fields: Sequence[str]):
    """Yield (line_number, row dict) after checking the header; '#' lines are skipped."""
    with open(path, newline="") as fh:
        lines = list(fh)
    header_seen = False
    for lineno, line in enumerate(lines, start=1):
        if not line.strip() or line.startswith("#"):
            continue
        cells = next(csv.reader([line]))
        cells = [c.strip() for c in cells]
        if not header_seen:
            if tuple(cells) != tuple(fields):
                raise SchemaError(f"{path}:{lineno}: expected header {','.join(fields)}, got {','.join(cells)}")
            header_seen = True
            continue
        if len(cells) != len(fields):
            raise SchemaError(f"{path}:{lineno}: expected {len(fields)} columns, got {len(cells)}")
        yield lineno, dict(zip(fields, cells))
    if not header_seen:
        raise SchemaError(f"{path}: empty file, expected header {','.join(fields)}")


def _int(value: str, name: str, where: str) -> int:
    try:
        return int(value)
    except ValueError:
        raise SchemaError(f"{where}: {name} must be an integer, got {value!r}") from None


def _float(value: str, name: str, where: str) -> float:
    try:
        x = float(value)
    except ValueError:
        raise SchemaError(f"{where}: {name} must be a number, got {value!r}") from None
    if not math.isfinite(x):
        raise SchemaError(f"{where}: {name} is not finite ({value})")
    return x


def _fmt(x) -> str:
    return repr(float(x)) if isinstance(x, float) else str(x)


def _metadata(path) -> dict[str, str]:
    meta = {}
    with open(path) as fh:
        for line in fh:
            if not line.startswith("#"):
                break
            for item in line[1:].strip().split(","):
                if "=" in item:
                    key, value = item.split("=", 1)
                    meta[key.strip()] = value.strip()
    return meta


def write_timing_csv(path, samples: Iterable[TimingSample]) -> None:
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(TIMING_FIELDS)
        for s in samples:
            q = s.quantities
            w.writerow([_fmt(v) for v in (s.block_id, s.step, q.C, q.F, q.B, q.P_L, q.P_S, q.K, q.S,
                                          s.m_lbm, s.m_bh, s.m_coup1, s.m_coup2, s.m_rb)])


def read_timing_csv(path) -> list[TimingSample]:
    samples = []
    for lineno, row in _rows(path, TIMING_FIELDS):
        where = f"{path}:{lineno}"
        ints = {k: _int(row[k], k, where) for k in TIMING_FIELDS[:9]}
        timings = [_float(row[k], k, where) for k in TIMING_FIELDS[9:]]
        try:
            q = BlockQuantities(**{k: ints[k] for k in ("C", "F", "B", "P_L", "P_S", "K", "S")})
        except ValueError as exc:
            raise SchemaError(f"{where}: {exc}") from None
        samples.append(TimingSample(q, *timings, block_id=ints["block_id"], step=ints["step"]))
    if not samples:
        raise SchemaError(f"{path}: no timing samples")
    return samples


def write_report_csv(path, reports: Iterable[IntervalReport], dims: Sequence[int], block_size: int) -> None:
    with open(path, "w", newline="") as fh:
        # grid metadata lets the report command refuse to compare different domains
        fh.write(f"# grid={'x'.join(str(d) for d in dims)},block_size={block_size}\n")
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(REPORT_FIELDS)
        for r in reports:
            w.writerow([_fmt(v) for v in (r.step, r.strategy, r.n_procs, float(r.LI), r.edge_cut,
                                          float(r.max_load), float(r.total_load))])


def read_report_csv(path) -> tuple[dict[str, str], list[IntervalReport]]:
    reports = []
    for lineno, row in _rows(path, REPORT_FIELDS):
        where = f"{path}:{lineno}"
        reports.append(
            IntervalReport(
                step=_int(row["step"], "step", where),
                strategy=row["strategy"],
                n_procs=_int(row["n_procs"], "n_procs", where),
                LI=_float(row["LI"], "LI", where),
                edge_cut=_int(row["edge_cut"], "edge_cut", where),
                max_load=_float(row["max_load"], "max_load", where),
                total_load=_float(row["total_load"], "total_load", where),
            )
        )
    if not reports:
        raise SchemaError(f"{path}: no report rows")
    return _metadata(path), reports


def write_assignment_csv(path, grid: BlockGrid, assignment: Assignment) -> None:
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(ASSIGNMENT_FIELDS)
        for b in grid.ids():
            i, j, k = grid.coord(b)
            w.writerow([b, i, j, k, assignment.owner[b]])


def read_assignment_csv(path, grid: BlockGrid, n_procs: int) -> Assignment:
    pairs = []
    for lineno, row in _rows(path, ASSIGNMENT_FIELDS):
        where = f"{path}:{lineno}"
        b = _int(row["block_id"], "block_id", where)
        ijk = tuple(_int(row[k], k, where) for k in ("i", "j", "k"))
        if 0 <= b < grid.n_blocks and grid.coord(b) != ijk:
            raise SchemaError(f"{where}: block {b} sits at {grid.coord(b)}, not {ijk}")
        pairs.append((b, _int(row["owner"], "owner", where)))
    problems = validate_owner_pairs(grid, pairs, n_procs)
    if problems:
        raise SchemaError(f"{path}: {problems[0]}")
    owner = dict(pairs)
    return Assignment.from_owners([owner[b] for b in grid.ids()], n_procs)


def write_weights_csv(path, weights: Sequence[float]) -> None:
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(WEIGHT_FIELDS)
        for b, x in enumerate(weights):
            w.writerow([b, _fmt(float(x))])


def read_weights_csv(path, grid: BlockGrid) -> list[float]:
    weights: dict[int, float] = {}
    for lineno, row in _rows(path, WEIGHT_FIELDS):
        where = f"{path}:{lineno}"
        b = _int(row["block_id"], "block_id", where)
        if not 0 <= b < grid.n_blocks:
            raise SchemaError(f"{where}: unknown block {b}")
        if b in weights:
            raise SchemaError(f"{where}: duplicate entry for block {b}")
        x = _float(row["weight"], "weight", where)
        if x <= 0:
            raise SchemaError(f"{where}: weight of block {b} must be positive, got {x}")
        weights[b] = x
    for b in grid.ids():
        if b not in weights:
            raise SchemaError(f"{path}: missing weight for block {b}")
    return [weights[b] for b in grid.ids()]


def write_coefficients_json(path, coeffs: EstimatorCoefficients, **extra) -> None:
    payload = {"coefficients": coeffs.as_dict(), **extra}
    Path(path).write_text(json.dumps(payload, indent=2, sort_keys=True) + "\n")


def read_coefficients_json(path) -> EstimatorCoefficients:
    try:
        data = json.loads(Path(path).read_text())
        return EstimatorCoefficients.from_dict(data.get("coefficients", data))
    except (OSError, json.JSONDecodeError, KeyError, TypeError, ValueError) as exc:
        raise SchemaError(f"{path}: cannot read coefficients ({exc})") from None

