"""Per-player UCB learner with restart semantics.

State is the pull count and reward sum per arm plus the number of rounds
elapsed since the last restart. The confidence bonus uses the natural log
of that round count, so the first decision round after a restart carries a
zero bonus (all arms are unexplored there anyway and rank as infinite).
"""

from __future__ import annotations

import math

from .errors import InputError
from .market import RankOrdering


class UcbState:
    """Pull counts, reward sums and restart bookkeeping for one player."""

    __slots__ = ("owner", "n_arms", "pull_counts", "reward_sums", "rounds_since_restart")

    def __init__(self, owner: int, n_arms: int):
        if n_arms < 1:
            raise InputError("learner needs at least one arm")
        self.owner = owner
        self.n_arms = n_arms
        self.pull_counts = [0] * n_arms
        self.reward_sums = [0.0] * n_arms
        self.rounds_since_restart = 0

    def restart(self) -> None:
        """Zero all statistics. Idempotent."""
        for j in range(self.n_arms):
            self.pull_counts[j] = 0
            self.reward_sums[j] = 0.0
        self.rounds_since_restart = 0

    def begin_round(self) -> None:
        """Advance the block-local round counter; call once before each
        decision."""
        self.rounds_since_restart += 1

    def observe(self, arm: int, reward: float) -> None:
        """Record one pulled-arm reward."""
        if not (0 <= arm < self.n_arms):
            raise InputError(f"arm index {arm} out of range")
        self.pull_counts[arm] += 1
        self.reward_sums[arm] += reward

    def ucb_values(self) -> list[float]:
        """Upper confidence bound per arm; unexplored arms are +inf.

        Explored arms get empirical mean + sqrt(3 ln(tau) / (2 count)),
        with tau the rounds elapsed in the current block.
        """
        tau = max(self.rounds_since_restart, 1)
        log_tau = math.log(tau)
        out = []
        for j in range(self.n_arms):
            c = self.pull_counts[j]
            if c == 0:
                out.append(math.inf)
            else:
                out.append(self.reward_sums[j] / c + math.sqrt(1.5 * log_tau / c))
        return out

    def rank_ordering(self) -> RankOrdering:
        """Arms sorted by descending UCB, ties broken by ascending index."""
        values = self.ucb_values()
        ranks = sorted(range(self.n_arms), key=lambda j: (-values[j], j))
        return RankOrdering(self.owner, tuple(ranks))
