"""Ground-truth time-varying mean rewards and stochastic reward sampling.

A timeline holds the piecewise-constant mean reward mu[i][k] of every
player/arm pair over a horizon of T rounds. Changes enter as explicit
events; the materialized means are validated against the boundedness and
minimum-gap assumptions at construction. Timelines are immutable after
validation; reward sampling keeps all its state in the caller's generator.
"""

from __future__ import annotations

import bisect
import math
from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .errors import AssumptionError, InputError
from .market import MarketInstance, Matching, RankOrdering, optimal_pessimal

NOISE_FAMILIES = ("gaussian", "uniform", "none")

# Half-width of the zero-mean uniform noise; chosen so its variance is 1,
# matching the gaussian family's scale.
_UNIFORM_HALF_WIDTH = math.sqrt(3.0)


@dataclass(frozen=True)
class ChangeEvent:
    """One cell of the mean matrix taking a new value from round ``time`` on."""

    time: int
    player: int
    arm: int
    new_mean: float


@dataclass(frozen=True)
class RewardSample:
    player: int
    arm: int
    time: int
    value: float


class MeanRewardTimeline:
    """Piecewise-constant mean rewards over a horizon.

    Validation enforces: means within [0, mu_bar]; every event lands in
    [2, T] and actually changes its cell; and within every maximal constant
    segment each player's K means are pairwise distinct (so the global
    minimum gap is positive).
    """

    def __init__(
        self,
        horizon: int,
        initial_means: Sequence[Sequence[float]],
        events: Sequence[ChangeEvent] = (),
        mu_bar: float = 1.0,
    ):
        if horizon < 1:
            raise InputError("horizon must be at least 1")
        if mu_bar <= 0:
            raise InputError("mu_bar must be positive")
        means = tuple(tuple(float(v) for v in row) for row in initial_means)
        n = len(means)
        if n == 0:
            raise InputError("initial_means must have at least one player row")
        k = len(means[0])
        if any(len(row) != k for row in means):
            raise InputError("initial_means rows must all have the same length")

        self.horizon = int(horizon)
        self.mu_bar = float(mu_bar)
        self.n_players = n
        self.n_arms = k
        self.initial_means = means
        self.events = tuple(sorted(events, key=lambda e: (e.time, e.player, e.arm)))

        self._validate_and_build_segments()

    def _validate_and_build_segments(self):
        self._check_matrix(self.initial_means, segment_start=1)
        current = [list(row) for row in self.initial_means]
        # segments: parallel lists of start times and frozen matrices
        starts = [1]
        matrices = [tuple(tuple(row) for row in current)]
        idx = 0
        events = self.events
        while idx < len(events):
            t = events[idx].time
            if not (2 <= t <= self.horizon):
                raise InputError(f"event time {t} outside [2, {self.horizon}]")
            while idx < len(events) and events[idx].time == t:
                ev = events[idx]
                if not (0 <= ev.player < self.n_players and 0 <= ev.arm < self.n_arms):
                    raise InputError(f"event at t={t} has out-of-range indices")
                if not (0.0 <= ev.new_mean <= self.mu_bar):
                    raise AssumptionError(
                        f"event at t={t} sets mean {ev.new_mean} outside [0, {self.mu_bar}]"
                    )
                if ev.new_mean == current[ev.player][ev.arm]:
                    raise InputError(
                        f"event at t={t} for player {ev.player}, arm {ev.arm} "
                        "does not change the mean"
                    )
                current[ev.player][ev.arm] = ev.new_mean
                idx += 1
            frozen = tuple(tuple(row) for row in current)
            self._check_matrix(frozen, segment_start=t)
            starts.append(t)
            matrices.append(frozen)
        self._segment_starts = starts
        self._segment_means = matrices

    def _check_matrix(self, means, segment_start):
        for i, row in enumerate(means):
            for v in row:
                if not (0.0 <= v <= self.mu_bar):
                    raise AssumptionError(
                        f"player {i}: mean {v} outside [0, {self.mu_bar}] "
                        f"in segment starting at t={segment_start}"
                    )
            if len(set(row)) != len(row):
                raise AssumptionError(
                    f"player {i}: duplicate arm means in segment starting at "
                    f"t={segment_start} (minimum-gap assumption needs distinct means)"
                )

    def segments(self) -> list[tuple[int, int, tuple[tuple[float, ...], ...]]]:
        """Maximal constant segments as (first round, last round, means)."""
        out = []
        for s, (start, means) in enumerate(zip(self._segment_starts, self._segment_means)):
            end = (
                self._segment_starts[s + 1] - 1
                if s + 1 < len(self._segment_starts)
                else self.horizon
            )
            out.append((start, end, means))
        return out


def means_at(timeline: MeanRewardTimeline, t: int) -> tuple[tuple[float, ...], ...]:
    """The mean matrix in force at round ``t`` (1-based)."""
    if not (1 <= t <= timeline.horizon):
        raise InputError(f"round {t} outside [1, {timeline.horizon}]")
    idx = bisect.bisect_right(timeline._segment_starts, t) - 1
    return timeline._segment_means[idx]


def total_changes(timeline: MeanRewardTimeline) -> int:
    """Total number of per-cell mean changes over the horizon.

    Equals the event count: construction rejects events that do not alter
    their cell, so every event is exactly one change indicator.
    """
    return len(timeline.events)


def min_gap(timeline: MeanRewardTimeline) -> float:
    """Smallest |mu_i(k) - mu_i(k')| over all segments, players, arm pairs."""
    gap = math.inf
    for means in timeline._segment_means:
        for row in means:
            vals = sorted(row)
            for a, b in zip(vals, vals[1:]):
                gap = min(gap, b - a)
    return gap


def sample_reward(
    timeline: MeanRewardTimeline,
    player: int,
    arm: int,
    t: int,
    rng: np.random.Generator,
    noise: str = "gaussian",
) -> RewardSample:
    """Draw one stochastic reward around the true mean at round ``t``.

    Families: "gaussian" (standard deviation 1), "uniform" (zero-mean,
    unit-variance bounded noise), "none" (deterministic, for tests).
    """
    if not (0 <= player < timeline.n_players and 0 <= arm < timeline.n_arms):
        raise InputError("player or arm index out of range")
    mean = means_at(timeline, t)[player][arm]
    if noise == "gaussian":
        value = mean + rng.standard_normal()
    elif noise == "uniform":
        value = mean + rng.uniform(-_UNIFORM_HALF_WIDTH, _UNIFORM_HALF_WIDTH)
    elif noise == "none":
        value = mean
    else:
        raise InputError(f"unknown noise family {noise!r}")
    return RewardSample(player, arm, t, value)


def true_orderings(means: Sequence[Sequence[float]]) -> list[RankOrdering]:
    """Each player's true rank ordering under the given mean matrix."""
    return [
        RankOrdering(i, tuple(sorted(range(len(row)), key=lambda a: -row[a])))
        for i, row in enumerate(means)
    ]


def stable_benchmarks(
    timeline: MeanRewardTimeline,
    market: MarketInstance,
) -> list[tuple[Matching, Matching]]:
    """(player-optimal, player-pessimal) stable matching per round, built
    from the true means. One DA pair per constant segment, broadcast over
    the segment's rounds."""
    if timeline.n_players != market.n_players or timeline.n_arms != market.n_arms:
        raise InputError("timeline and market dimensions disagree")
    out: list[tuple[Matching, Matching]] = []
    for start, end, means in timeline.segments():
        pair = optimal_pessimal(true_orderings(means), market)
        out.extend([pair] * (end - start + 1))
    return out
