import itertools
from collections import Counter

import pytest
from hypothesis import given, strategies as st

from blockbalance.grid import (
    AdjacencyClass,
    Assignment,
    BlockQuantities,
    adjacent_pairs,
    build_grid,
    neighbors,
    validate_assignment,
)


def census(grid, block):
    return Counter(cls for _, cls in neighbors(grid, block))


def test_interior_block_has_full_neighbourhood():
    g = build_grid((3, 3, 3), 4)
    c = census(g, g.block_id(1, 1, 1))
    assert c == {AdjacencyClass.FACE: 6, AdjacencyClass.EDGE: 12, AdjacencyClass.CORNER: 8}


def test_corner_block_of_2x2x2():
    g = build_grid((2, 2, 2), 4)
    c = census(g, 0)
    assert c == {AdjacencyClass.FACE: 3, AdjacencyClass.EDGE: 3, AdjacencyClass.CORNER: 1}


def test_single_block_has_no_neighbours():
    assert neighbors(build_grid((1, 1, 1), 8), 0) == []


def test_neighbours_reject_bad_id():
    g = build_grid((2, 2, 2), 4)
    with pytest.raises(ValueError):
        neighbors(g, 8)
    with pytest.raises(ValueError):
        neighbors(g, -1)


@pytest.mark.parametrize("dims", [(0, 1, 1), (1, 2), (2, -1, 3)])
def test_build_grid_rejects_bad_dims(dims):
    with pytest.raises(ValueError):
        build_grid(dims, 4)


def test_build_grid_rejects_bad_block_size():
    with pytest.raises(ValueError):
        build_grid((2, 2, 2), 0)


@given(st.tuples(*[st.integers(1, 4)] * 3))
def test_id_coordinate_round_trip(dims):
    g = build_grid(dims, 2)
    seen = set()
    for b in g.ids():
        ijk = g.coord(b)
        assert g.block_id(*ijk) == b
        seen.add(ijk)
    assert len(seen) == g.n_blocks
    assert [tuple(c) for c in g.coords()] == [g.coord(b) for b in g.ids()]


@given(st.tuples(*[st.integers(1, 4)] * 3))
def test_adjacency_is_symmetric_and_matches_geometry(dims):
    g = build_grid(dims, 2)
    for b in g.ids():
        for n, cls in neighbors(g, b):
            diff = [abs(x - y) for x, y in zip(g.coord(b), g.coord(n))]
            assert max(diff) == 1
            assert int(cls) == sum(diff)
            assert (b, cls) in neighbors(g, n)
    # brute force over all pairs
    expected = {
        (a, b)
        for a, b in itertools.combinations(g.ids(), 2)
        if max(abs(x - y) for x, y in zip(g.coord(a), g.coord(b))) == 1
    }
    assert {(a, b) for a, b, _ in adjacent_pairs(g)} == expected


def test_valid_assignment_single_process():
    g = build_grid((2, 2, 2), 4)
    assert validate_assignment(g, Assignment.from_owners([0] * 8, 1)) == []


def test_missing_block_is_reported():
    g = build_grid((2, 2, 2), 4)
    problems = validate_assignment(g, {b: 0 for b in range(7)}, n_procs=1)
    assert any("unassigned block" in p for p in problems)


def test_owner_out_of_range_is_reported():
    g = build_grid((2, 2, 2), 4)
    owners = [0] * 8
    owners[3] = 5
    problems = validate_assignment(g, Assignment.from_owners(owners, 4))
    assert any("owner out of range" in p for p in problems)


def test_mapping_validation_needs_process_count():
    with pytest.raises(ValueError):
        validate_assignment(build_grid((1, 1, 1), 2), {0: 0})


@pytest.mark.parametrize(
    "kwargs",
    [dict(C=8, F=9, B=0), dict(C=8, F=4, B=5), dict(C=8, F=4, B=0, K=-1)],
)
def test_quantities_reject_inconsistent_counts(kwargs):
    with pytest.raises(ValueError):
        BlockQuantities(**kwargs)
