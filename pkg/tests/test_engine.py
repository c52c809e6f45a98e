"""Simulation loop: restart schedule, regret accounting, trace export."""

import numpy as np
import pytest

from competing_bandits import (
    ChangeEvent,
    InputError,
    MarketInstance,
    MeanRewardTimeline,
    SimulationConfig,
    blocking_pairs,
    compute_restart_period,
    regret_report,
    run_rcb,
    write_trace_csv,
)


def conflict_setup(horizon, events=()):
    """Both players prefer a0; both arms prefer p0. Unique stable matching
    (0, 1)."""
    market = MarketInstance(2, 2, ((2.0, 1.0), (2.0, 1.0)))
    timeline = MeanRewardTimeline(horizon, ((0.9, 0.4), (0.8, 0.3)), events)
    return market, timeline


def single_player_setup(horizon):
    market = MarketInstance(1, 2, ((1.0,), (1.0,)))
    timeline = MeanRewardTimeline(horizon, ((0.3, 0.7),))
    return market, timeline


# --- restart period -----------------------------------------------------------

def test_restart_period_square_root_rule():
    assert compute_restart_period(10_000, 4) == 50
    assert compute_restart_period(10_000, 1) == 100
    assert compute_restart_period(100, 4) == 5


def test_restart_period_stationary_single_block():
    assert compute_restart_period(5_000, 0) == 5_000


def test_restart_period_clamped_to_unit():
    assert compute_restart_period(10, 1_000) == 1


def test_restart_period_rejects_bad_inputs():
    with pytest.raises(InputError):
        compute_restart_period(0, 1)
    with pytest.raises(InputError):
        compute_restart_period(10, -1)


def test_explicit_period_clamped_to_horizon():
    market, timeline = single_player_setup(5)
    trace = run_rcb(SimulationConfig(5, restart_period=10**9), market, timeline)
    assert trace.restart_period == 5


def test_auto_period_uses_timeline_change_count():
    market = MarketInstance(1, 2, ((1.0,), (1.0,)))
    events = tuple(ChangeEvent(1_000 * (i + 1), 0, 0, 0.1 + 0.05 * i) for i in range(4))
    timeline = MeanRewardTimeline(10_000, ((0.3, 0.7),), events)
    trace = run_rcb(SimulationConfig(10_000, noise="none"), market, timeline)
    assert trace.restart_period == 50


# --- config and dimension validation --------------------------------------------

def test_config_rejects_bad_values():
    with pytest.raises(InputError):
        SimulationConfig(0)
    with pytest.raises(InputError):
        SimulationConfig(10, restart_period=0)
    with pytest.raises(InputError):
        SimulationConfig(10, baseline="median")


def test_run_rejects_horizon_mismatch():
    market, timeline = single_player_setup(10)
    with pytest.raises(InputError):
        run_rcb(SimulationConfig(20), market, timeline)


def test_run_rejects_shape_mismatch():
    market = MarketInstance(2, 2, ((2.0, 1.0), (1.0, 2.0)))
    _, timeline = single_player_setup(10)
    with pytest.raises(InputError):
        run_rcb(SimulationConfig(10), market, timeline)


# --- loop mechanics ---------------------------------------------------------------

def test_restart_flags_follow_the_block_grid():
    market, timeline = single_player_setup(30)
    trace = run_rcb(SimulationConfig(30, restart_period=7, noise="none"), market, timeline)
    flagged = [t + 1 for t, f in enumerate(trace.restart_flags) if f]
    assert flagged == [1, 8, 15, 22, 29]
    assert trace.block_index == [1 + (t // 7) for t in range(30)]


def test_single_player_explores_then_commits():
    market, timeline = single_player_setup(200)
    trace = run_rcb(SimulationConfig(200, noise="none"), market, timeline)
    # Unexplored arms rank first, index ties ascending: arm 0 then arm 1.
    assert trace.matchings[0] == (0,)
    assert trace.matchings[1] == (1,)
    # Equal counts at t=3, so the true means decide: arm 1 wins.
    assert trace.matchings[2] == (1,)
    # The worse arm is only re-pulled when its confidence bonus catches up,
    # which happens logarithmically often.
    bad_pulls = sum(1 for m in trace.matchings if m[0] == 0)
    assert bad_pulls <= 30


def test_conflict_market_first_rounds_hand_simulated():
    market, timeline = conflict_setup(50)
    trace = run_rcb(SimulationConfig(50, noise="none"), market, timeline)
    # t=1: everyone unexplored, both propose a0, a0 keeps p0.
    # t=2: each player's unexplored arm ranks first, so they swap.
    # t=3: true means take over; both want a0 again and p0 wins.
    assert trace.matchings[:3] == [(0, 1), (1, 0), (0, 1)]


def test_conflict_market_converges_to_unique_stable_matching():
    market, timeline = conflict_setup(300)
    trace = run_rcb(SimulationConfig(300, noise="none"), market, timeline)
    stable_rounds = sum(1 for m in trace.matchings if m == (0, 1))
    assert stable_rounds >= 0.9 * 300
    assert trace.matchings[-1] == (0, 1)


def test_every_round_is_stable_for_submitted_orderings():
    market, timeline = conflict_setup(120)
    trace = run_rcb(SimulationConfig(120, seed=5), market, timeline)
    assert trace.orderings is not None
    for m, orderings in zip(trace.matchings, trace.orderings):
        from competing_bandits import Matching

        assert blocking_pairs(Matching(m), list(orderings), market) == []


def test_ordering_recording_toggle():
    market, timeline = single_player_setup(10)
    on = run_rcb(SimulationConfig(10, record_orderings=True), market, timeline)
    off = run_rcb(SimulationConfig(10, record_orderings=False), market, timeline)
    assert on.orderings is not None and len(on.orderings) == 10
    assert off.orderings is None


def test_same_seed_gives_identical_traces():
    market, timeline = conflict_setup(100)
    a = run_rcb(SimulationConfig(100, seed=3), market, timeline)
    b = run_rcb(SimulationConfig(100, seed=3), market, timeline)
    assert a.matchings == b.matchings
    assert a.rewards == b.rewards
    c = run_rcb(SimulationConfig(100, seed=4), market, timeline)
    assert a.rewards != c.rewards


# --- regret accounting ---------------------------------------------------------------

def test_benchmarks_recorded_from_true_means():
    market, timeline = conflict_setup(20)
    trace = run_rcb(SimulationConfig(20, noise="none"), market, timeline)
    # Unique stable matching, so both benchmarks coincide every round.
    assert set(trace.optimal_arms) == {(0, 1)}
    assert trace.optimal_arms == trace.pessimal_arms
    assert set(trace.optimal_means) == {(0.9, 0.3)}


def test_regret_uses_true_means_not_samples():
    market, timeline = conflict_setup(40)
    trace = run_rcb(SimulationConfig(40, seed=1, noise="gaussian"), market, timeline)
    report = regret_report(trace, "pessimal")
    expected = np.asarray(trace.pessimal_means) - np.asarray(trace.true_means)
    assert np.allclose(report.increments, expected)
    assert np.allclose(report.cumulative, np.cumsum(expected, axis=0))
    assert np.allclose(report.final(), report.cumulative[-1])


def test_optimal_regret_dominates_pessimal_regret():
    rng = np.random.default_rng(6)
    market = MarketInstance(3, 3, tuple(tuple(float(v) for v in rng.permutation(3)) for _ in range(3)))
    means = tuple(tuple(float(v) for v in (rng.permutation(3) + 1) / 4) for _ in range(3))
    timeline = MeanRewardTimeline(150, means)
    trace = run_rcb(SimulationConfig(150, seed=2), market, timeline)
    opt = regret_report(trace, "optimal")
    pess = regret_report(trace, "pessimal")
    assert np.all(opt.increments >= pess.increments - 1e-12)


def test_block_sums_partition_the_increments():
    market, timeline = conflict_setup(50)
    trace = run_rcb(SimulationConfig(50, restart_period=12, seed=0), market, timeline)
    report = regret_report(trace)
    assert report.block_bounds == ((1, 12), (13, 24), (25, 36), (37, 48), (49, 50))
    assert np.allclose(report.block_sums.sum(axis=0), report.final())


def test_zero_regret_when_matched_to_benchmark():
    market, timeline = single_player_setup(30)
    trace = run_rcb(SimulationConfig(30, noise="none"), market, timeline)
    report = regret_report(trace, "pessimal")
    matched_bench = [m == b for m, b in zip(trace.matchings, trace.pessimal_arms)]
    for t, same in enumerate(matched_bench):
        if same:
            assert report.increments[t][0] == 0.0


# --- trace export -----------------------------------------------------------------------

def test_trace_csv_round_trips(tmp_path):
    market, timeline = conflict_setup(25)
    trace = run_rcb(SimulationConfig(25, seed=8), market, timeline)
    path = tmp_path / "trace.csv"
    write_trace_csv(trace, path, extra_metadata=(("label", "unit-test"),))
    lines = path.read_text().splitlines()
    comments = [l for l in lines if l.startswith("# ")]
    assert "# seed = 8" in comments
    assert "# restart_period = 25" in comments
    assert "# label = unit-test" in comments
    header = lines[len(comments)]
    assert header.split(",") == [
        "t", "block_index", "restart_flag", "player", "matched_arm",
        "sampled_reward", "true_mean", "benchmark_arm", "regret_increment",
        "cumulative_regret",
    ]
    rows = lines[len(comments) + 1:]
    assert len(rows) == 25 * 2
    # The last row's cumulative regret equals the report's final value.
    final = regret_report(trace).final()
    assert float(rows[-1].split(",")[-1]) == pytest.approx(final[1])


def test_trace_csv_bytes_reproducible(tmp_path):
    market, timeline = conflict_setup(40)
    payloads = []
    for run in range(2):
        trace = run_rcb(SimulationConfig(40, seed=11), market, timeline)
        path = tmp_path / f"trace_{run}.csv"
        write_trace_csv(trace, path)
        payloads.append(path.read_bytes())
    assert payloads[0] == payloads[1]
