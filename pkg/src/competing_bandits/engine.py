"""Simulation loop: synchronized UCB restarts, platform clearing through
player-proposing deferred acceptance, reward dispatch, and regret
accounting against the per-round stable benchmarks.

A run is strictly sequential; independent runs (seeds, configs) share no
state and can be driven in parallel by a sweep caller.
"""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass, field
from typing import Optional, Sequence

import numpy as np

from .environment import (
    MeanRewardTimeline,
    sample_reward,
    stable_benchmarks,
    total_changes,
)
from .errors import InputError
from .learner import UcbState
from .market import MarketInstance, Matching, RankOrdering, deferred_acceptance

BASELINES = ("pessimal", "optimal")

# Trace CSV column schema; stable, documented in the README.
TRACE_COLUMNS = (
    "t",
    "block_index",
    "restart_flag",
    "player",
    "matched_arm",
    "sampled_reward",
    "true_mean",
    "benchmark_arm",
    "regret_increment",
    "cumulative_regret",
)
META_TRACE_COLUMNS = TRACE_COLUMNS + ("epoch_index", "chosen_H")


@dataclass(frozen=True)
class SimulationConfig:
    """Knobs of a single simulation run.

    ``restart_period=None`` means "auto": derive the block length from the
    horizon and the timeline's total change count.
    """

    horizon: int
    restart_period: Optional[int] = None
    seed: int = 0
    noise: str = "gaussian"
    baseline: str = "pessimal"
    record_orderings: Optional[bool] = None

    def __post_init__(self):
        if self.horizon < 1:
            raise InputError("horizon must be at least 1")
        if self.restart_period is not None and self.restart_period < 1:
            raise InputError("explicit restart period must be at least 1")
        if self.baseline not in BASELINES:
            raise InputError(f"baseline must be one of {BASELINES}")


@dataclass
class SimulationTrace:
    """Per-round record of a run plus the resolved run parameters."""

    n_players: int
    horizon: int
    restart_period: int
    seed: int
    noise: str
    baseline: str
    matchings: list[tuple[int, ...]] = field(default_factory=list)
    rewards: list[tuple[float, ...]] = field(default_factory=list)
    true_means: list[tuple[float, ...]] = field(default_factory=list)
    optimal_arms: list[tuple[int, ...]] = field(default_factory=list)
    pessimal_arms: list[tuple[int, ...]] = field(default_factory=list)
    optimal_means: list[tuple[float, ...]] = field(default_factory=list)
    pessimal_means: list[tuple[float, ...]] = field(default_factory=list)
    restart_flags: list[int] = field(default_factory=list)
    block_index: list[int] = field(default_factory=list)
    orderings: Optional[list[tuple[RankOrdering, ...]]] = None
    # Meta-mode extras; None for plain runs.
    epoch_index: Optional[list[int]] = None
    chosen_h: Optional[list[int]] = None
    epoch_summaries: Optional[list] = None

    def benchmark_arms(self, baseline: Optional[str] = None) -> list[tuple[int, ...]]:
        baseline = baseline or self.baseline
        if baseline == "optimal":
            return self.optimal_arms
        if baseline == "pessimal":
            return self.pessimal_arms
        raise InputError(f"baseline must be one of {BASELINES}")

    def benchmark_means(self, baseline: Optional[str] = None) -> list[tuple[float, ...]]:
        baseline = baseline or self.baseline
        return self.optimal_means if baseline == "optimal" else self.pessimal_means


@dataclass(frozen=True)
class RegretReport:
    """Regret curves derived from a trace with true (not sampled) means."""

    baseline: str
    increments: np.ndarray  # (T, N)
    cumulative: np.ndarray  # (T, N)
    block_sums: np.ndarray  # (blocks, N)
    block_bounds: tuple[tuple[int, int], ...]  # 1-based inclusive round ranges

    def final(self) -> np.ndarray:
        """Cumulative regret per player at the horizon."""
        return self.cumulative[-1]


def compute_restart_period(horizon: int, change_count: int) -> int:
    """Block length sqrt(T / L), rounded and clamped to [1, T]; a
    stationary timeline (L = 0) gets a single block."""
    if horizon < 1:
        raise InputError("horizon must be at least 1")
    if change_count < 0:
        raise InputError("change count cannot be negative")
    if change_count == 0:
        return horizon
    h = int(round(math.sqrt(horizon / change_count)))
    return max(1, min(horizon, h))


def _check_dimensions(config: SimulationConfig, market: MarketInstance,
                      timeline: MeanRewardTimeline) -> None:
    if market.n_players != timeline.n_players or market.n_arms != timeline.n_arms:
        raise InputError("market and timeline dimensions disagree")
    if config.horizon != timeline.horizon:
        raise InputError(
            f"config horizon {config.horizon} != timeline horizon {timeline.horizon}"
        )


def run_rcb(
    config: SimulationConfig,
    market: MarketInstance,
    timeline: MeanRewardTimeline,
    rng: Optional[np.random.Generator] = None,
) -> SimulationTrace:
    """Run the restart-UCB matching loop for the full horizon.

    Every round: restart all learners when a new block begins, collect each
    player's UCB rank ordering, clear the market with player-proposing
    deferred acceptance, then sample and feed back rewards. Identical
    config and seed give bit-identical traces.
    """
    _check_dimensions(config, market, timeline)
    if rng is None:
        rng = np.random.default_rng(config.seed)
    horizon = config.horizon
    if config.restart_period is not None:
        period = min(config.restart_period, horizon)
    else:
        period = compute_restart_period(horizon, total_changes(timeline))

    trace = SimulationTrace(
        n_players=market.n_players,
        horizon=horizon,
        restart_period=period,
        seed=config.seed,
        noise=config.noise,
        baseline=config.baseline,
    )
    record_orderings = config.record_orderings
    if record_orderings is None:
        record_orderings = horizon <= 5000
    if record_orderings:
        trace.orderings = []

    states = [UcbState(i, market.n_arms) for i in range(market.n_players)]
    benchmarks = stable_benchmarks(timeline, market)
    segments = timeline.segments()

    seg_idx = 0
    block = 0
    for t in range(1, horizon + 1):
        while segments[seg_idx][1] < t:
            seg_idx += 1
        means = segments[seg_idx][2]
        restart = (t - 1) % period == 0
        if restart:
            block += 1
            for s in states:
                s.restart()
        _play_round(states, market, timeline, means, t, rng, config.noise,
                    trace, benchmarks[t - 1], restart, block)
    return trace


def _play_round(
    states: Sequence[UcbState],
    market: MarketInstance,
    timeline: MeanRewardTimeline,
    means: Sequence[Sequence[float]],
    t: int,
    rng: np.random.Generator,
    noise: str,
    trace: SimulationTrace,
    benchmark: tuple[Matching, Matching],
    restart: bool,
    block: int,
) -> None:
    """One interaction round shared by the plain and meta loops."""
    orderings = []
    for s in states:
        s.begin_round()
        orderings.append(s.rank_ordering())
    matching = deferred_acceptance(orderings, market, "players")

    n = market.n_players
    rewards = []
    true_row = []
    for i in range(n):
        arm = matching.assignment[i]
        value = sample_reward(timeline, i, arm, t, rng, noise).value
        states[i].observe(arm, value)
        rewards.append(value)
        true_row.append(means[i][arm])

    opt, pess = benchmark
    trace.matchings.append(matching.assignment)
    trace.rewards.append(tuple(rewards))
    trace.true_means.append(tuple(true_row))
    trace.optimal_arms.append(opt.assignment)
    trace.pessimal_arms.append(pess.assignment)
    trace.optimal_means.append(tuple(means[i][opt.assignment[i]] for i in range(n)))
    trace.pessimal_means.append(tuple(means[i][pess.assignment[i]] for i in range(n)))
    trace.restart_flags.append(1 if restart else 0)
    trace.block_index.append(block)
    if trace.orderings is not None:
        trace.orderings.append(tuple(orderings))


def regret_report(trace: SimulationTrace, baseline: Optional[str] = None) -> RegretReport:
    """Cumulative and per-block regret against the chosen benchmark,
    computed from true means recorded in the trace."""
    baseline = baseline or trace.baseline
    bench = np.asarray(trace.benchmark_means(baseline))
    matched = np.asarray(trace.true_means)
    increments = bench - matched
    cumulative = np.cumsum(increments, axis=0)

    bounds = []
    start = 0
    for t in range(1, len(trace.restart_flags)):
        if trace.restart_flags[t]:
            bounds.append((start + 1, t))
            start = t
    bounds.append((start + 1, len(trace.restart_flags)))
    block_sums = np.array([increments[s - 1:e].sum(axis=0) for s, e in bounds])
    return RegretReport(
        baseline=baseline,
        increments=increments,
        cumulative=cumulative,
        block_sums=block_sums,
        block_bounds=tuple(bounds),
    )


def _format(value) -> str:
    return repr(value) if isinstance(value, float) else str(value)


def trace_metadata(trace: SimulationTrace) -> list[tuple[str, str]]:
    """Resolved run parameters embedded in every exported artifact."""
    meta = [
        ("horizon", str(trace.horizon)),
        ("restart_period", str(trace.restart_period)),
        ("seed", str(trace.seed)),
        ("noise", trace.noise),
        ("baseline", trace.baseline),
        ("n_players", str(trace.n_players)),
    ]
    if trace.chosen_h is not None:
        meta.append(("mode", "meta"))
    else:
        meta.append(("mode", "rcb"))
    return meta


def write_trace_csv(trace: SimulationTrace, path, extra_metadata: Sequence[tuple[str, str]] = ()) -> None:
    """Write one row per (round, player); resolved parameters go into
    leading '#' comment lines so the file alone reproduces the run."""
    report = regret_report(trace)
    bench_arms = trace.benchmark_arms()
    is_meta = trace.chosen_h is not None
    columns = META_TRACE_COLUMNS if is_meta else TRACE_COLUMNS
    with open(path, "w", newline="") as fh:
        for key, value in list(trace_metadata(trace)) + list(extra_metadata):
            fh.write(f"# {key} = {value}\n")
        writer = csv.writer(fh)
        writer.writerow(columns)
        for t in range(trace.horizon):
            for i in range(trace.n_players):
                row = [
                    t + 1,
                    trace.block_index[t],
                    trace.restart_flags[t],
                    i,
                    trace.matchings[t][i],
                    _format(trace.rewards[t][i]),
                    _format(trace.true_means[t][i]),
                    bench_arms[t][i],
                    _format(float(report.increments[t][i])),
                    _format(float(report.cumulative[t][i])),
                ]
                if is_meta:
                    row.extend([trace.epoch_index[t], trace.chosen_h[t]])
                writer.writerow(row)
