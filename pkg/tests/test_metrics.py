import math

import pytest
from hypothesis import given, strategies as st

from blockbalance.grid import Assignment, build_grid
from blockbalance.metrics import IntervalReport, load_imbalance, process_loads, simulated_makespan


def test_process_loads_uniform():
    g = build_grid((2, 2, 2), 2)
    a = Assignment.from_owners([0, 0, 0, 0, 1, 1, 1, 1], 2)
    assert process_loads(g, a, [1.0] * 8) == [4, 4]


def test_process_loads_reject_invalid_assignment():
    g = build_grid((2, 1, 1), 2)
    with pytest.raises(ValueError):
        process_loads(g, Assignment.from_owners([0], 1), [1.0, 1.0])


def test_load_imbalance_examples():
    assert load_imbalance([4, 2, 2, 2]) == pytest.approx(0.6)
    assert load_imbalance([3, 3, 3]) == 0.0


@pytest.mark.parametrize("loads", [[], [0, 0], [1, -1]])
def test_load_imbalance_errors(loads):
    with pytest.raises(ValueError):
        load_imbalance(loads)


loads = st.lists(st.floats(0.01, 1e4), min_size=1, max_size=20)


@given(loads, st.floats(1e-3, 1e3))
def test_load_imbalance_scale_invariant(values, c):
    assert load_imbalance([c * v for v in values]) == pytest.approx(load_imbalance(values), abs=1e-9)


@given(loads)
def test_load_imbalance_non_negative_and_zero_iff_equal(values):
    li = load_imbalance(values)
    assert li >= -1e-12
    if max(values) - min(values) > 1e-9 * max(values):
        assert li > 0
    assert load_imbalance([values[0]] * len(values)) == pytest.approx(0, abs=1e-12)


def test_makespan_examples():
    one = IntervalReport.from_loads(0, "hilbert", [4, 4], 0)
    assert simulated_makespan([one]) == 4
    two = [IntervalReport.from_loads(0, "x", [4, 1], 0), IntervalReport.from_loads(100, "x", [6, 2], 0)]
    assert simulated_makespan(two) == 10


@given(st.lists(loads, min_size=1, max_size=5))
def test_makespan_lower_bound(intervals):
    reports = [IntervalReport.from_loads(i, "x", ls, 0) for i, ls in enumerate(intervals)]
    bound = math.fsum(math.fsum(ls) / len(ls) for ls in intervals)
    assert simulated_makespan(reports) >= bound * (1 - 1e-12)
    balanced = [IntervalReport.from_loads(i, "x", [ls[0]] * len(ls), 0) for i, ls in enumerate(intervals)]
    assert simulated_makespan(balanced) == pytest.approx(
        math.fsum(ls[0] for ls in intervals), rel=1e-12
    )


def test_report_fields():
    r = IntervalReport.from_loads(200, "refine", [1.0, 3.0], 17)
    assert (r.step, r.strategy, r.n_procs, r.edge_cut, r.max_load, r.total_load) == (200, "refine", 2, 17, 3.0, 4.0)
    assert r.LI == pytest.approx(0.5)
    assert r.max_load >= r.total_load / r.n_procs
