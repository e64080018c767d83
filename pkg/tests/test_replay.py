from dataclasses import replace

import pytest

from blockbalance.distribution import sfc_partition
from blockbalance.estimator import block_weights
from blockbalance.replay import ReplaySummary, RunConfig, quantity_trace, rebalance_steps, run_replay


@pytest.fixture(scope="module")
def short():
    run = RunConfig(steps=1000, interval=250)
    return run, quantity_trace(run)


def test_rebalance_steps():
    assert rebalance_steps(0, 100) == [0]
    assert rebalance_steps(250, 100) == [0, 100, 200]
    assert rebalance_steps(300, 100) == [0, 100, 200, 300]


def test_zero_duration_gives_one_interval():
    reports = run_replay(RunConfig(steps=0))
    assert [r.step for r in reports] == [0]


@pytest.mark.parametrize("strategy", ["none", "morton", "hilbert", "diffusive", "refine"])
def test_reports_are_consistent(short, strategy):
    run, trace = short
    reports = run_replay(replace(run, strategy=strategy), trace)
    assert [r.step for r in reports] == [0, 250, 500, 750, 1000]
    for r, (_, qs) in zip(reports, trace):
        assert r.strategy == strategy and r.n_procs == 8
        assert r.total_load == pytest.approx(sum(block_weights(qs, run.coefficients)), rel=1e-12)
        assert r.LI >= 0 and r.max_load == max(r.loads)


def test_static_strategy_keeps_first_partition(short):
    run, trace = short
    reports = run_replay(replace(run, strategy="none"), trace)
    grid = run.scenario().grid
    first = sfc_partition(grid, block_weights(trace[0][1], run.coefficients), run.n_procs, "hilbert")
    for r, (_, qs) in zip(reports, trace):
        w = block_weights(qs, run.coefficients)
        expected = [sum(w[b] for b in first.blocks_of(p)) for p in range(run.n_procs)]
        assert list(r.loads) == pytest.approx(expected, rel=1e-12)


def test_rebalancing_never_worse_than_static_at_step_zero(short):
    run, trace = short
    static = run_replay(replace(run, strategy="none"), trace)
    hilbert = run_replay(run, trace)
    assert static[0] == hilbert[0].__class__(**{**hilbert[0].__dict__, "strategy": "none"})


def test_replay_is_deterministic(short):
    run, trace = short
    assert run_replay(run) == run_replay(run, trace)


def test_synthesized_loads(short):
    run, trace = short
    noisy = run_replay(replace(run, load_source="synthesized"), trace)
    again = run_replay(replace(run, load_source="synthesized"), trace)
    plain = run_replay(run, trace)
    assert noisy == again
    assert [r.LI for r in noisy] != [r.LI for r in plain]


@pytest.mark.parametrize("kw", [
    dict(strategy="metis"), dict(interval=0), dict(n_procs=0), dict(steps=-1),
    dict(load_source="measured"), dict(timing_noise=-0.1),
])
def test_run_config_validation(kw):
    with pytest.raises(ValueError):
        RunConfig(**kw)


def test_too_many_processes():
    with pytest.raises(ValueError):
        run_replay(RunConfig(steps=0, n_procs=13))


def test_summary(short):
    run, trace = short
    reports = run_replay(run, trace)
    s = ReplaySummary.of(reports)
    assert s.strategy == "hilbert"
    assert s.makespan == pytest.approx(sum(r.max_load for r in reports))
    with pytest.raises(ValueError):
        ReplaySummary.of([])
