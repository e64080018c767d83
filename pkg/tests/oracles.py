"""Brute-force reference implementations used only by the tests."""

import itertools


def morton_by_strings(x, y, z, order):
    # interleave binary strings, most significant bit first: z y x per level
    bx, by, bz = (format(v, f"0{order}b") if order else "" for v in (x, y, z))
    bits = "".join(cz + cy + cx for cx, cy, cz in zip(bx, by, bz))
    return int(bits, 2) if bits else 0


def edge_weight_by_geometry(a, b, b_s):
    # shared cells across the common face/edge/corner of two cubes
    shared = 1
    for u, v in zip(a, b):
        if u == v:
            shared *= b_s
        elif abs(u - v) != 1:
            return 0
    return shared


def edge_cut_brute(grid, owner, b_s):
    total = 0
    for a, b in itertools.combinations(grid.ids(), 2):
        if owner[a] != owner[b]:
            total += edge_weight_by_geometry(grid.coord(a), grid.coord(b), b_s)
    return total
