"""Two-sided matching markets: deferred acceptance, stability checks, and
exhaustive enumeration oracles for small instances.

Players are indexed 0..N-1 and arms 0..K-1 with K >= N. Arms hold fixed,
strict utilities over players; players submit rank orderings over arms.
A matching assigns every player an arm, injectively, so arms may stay
unmatched when K > N.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass
from typing import Iterable, Optional, Sequence

from .errors import CapacityError, InputError

# Exhaustive enumeration is factorial in the market size; refuse anything
# bigger than this on either side.
ENUMERATION_LIMIT = 6


@dataclass(frozen=True)
class MarketInstance:
    """Static market skeleton: sizes and the arms' utilities over players.

    ``arm_utilities[j][i]`` is the utility arm j derives from player i.
    Within each arm the utilities must be pairwise distinct so that arm
    preferences are strict.
    """

    n_players: int
    n_arms: int
    arm_utilities: tuple[tuple[float, ...], ...]

    def __post_init__(self):
        if self.n_players < 1:
            raise InputError("market requires at least one player")
        if self.n_arms < self.n_players:
            raise InputError("market requires K >= N")
        if len(self.arm_utilities) != self.n_arms:
            raise InputError(
                f"expected {self.n_arms} arm utility vectors, got {len(self.arm_utilities)}"
            )
        normalized = []
        for j, row in enumerate(self.arm_utilities):
            row = tuple(float(v) for v in row)
            if len(row) != self.n_players:
                raise InputError(
                    f"arm {j}: utility vector has length {len(row)}, expected {self.n_players}"
                )
            if len(set(row)) != len(row):
                raise InputError(f"arm {j}: utilities over players must be distinct")
            normalized.append(row)
        object.__setattr__(self, "arm_utilities", tuple(normalized))

    def arm_prefers(self, arm: int, player: int, other: int) -> bool:
        """True if ``arm`` strictly prefers ``player`` over ``other``."""
        util = self.arm_utilities[arm]
        return util[player] > util[other]


@dataclass(frozen=True)
class RankOrdering:
    """A player's submitted preference: ``ranks[0]`` is the favourite arm."""

    owner: int
    ranks: tuple[int, ...]

    def __post_init__(self):
        ranks = tuple(int(r) for r in self.ranks)
        if sorted(ranks) != list(range(len(ranks))):
            raise InputError(f"player {self.owner}: ranks must be a permutation of arm indices")
        object.__setattr__(self, "ranks", ranks)

    def position_of(self, arm: int) -> int:
        """0-based position of ``arm``; smaller means more preferred."""
        return self.ranks.index(arm)


@dataclass(frozen=True)
class Matching:
    """Injective assignment ``player -> arm``, total over players."""

    assignment: tuple[int, ...]

    def __post_init__(self):
        assignment = tuple(int(a) for a in self.assignment)
        if len(set(assignment)) != len(assignment):
            raise InputError("matching must be injective")
        object.__setattr__(self, "assignment", assignment)

    def arm_of(self, player: int) -> int:
        return self.assignment[player]

    def player_of(self, arm: int) -> Optional[int]:
        """The player holding ``arm``, or None if the arm is unmatched."""
        try:
            return self.assignment.index(arm)
        except ValueError:
            return None


@dataclass(frozen=True)
class BlockingTriplet:
    """Player ``player`` holds ``matched_arm`` but forms a blocking pair
    with ``preferred_arm``."""

    player: int
    preferred_arm: int
    matched_arm: int

    def __post_init__(self):
        if self.preferred_arm == self.matched_arm:
            raise InputError("a blocking triplet needs two distinct arms")


def _check_orderings(player_orderings: Sequence[RankOrdering], market: MarketInstance) -> None:
    if len(player_orderings) != market.n_players:
        raise InputError(
            f"expected {market.n_players} rank orderings, got {len(player_orderings)}"
        )
    for i, ordering in enumerate(player_orderings):
        if len(ordering.ranks) != market.n_arms:
            raise InputError(f"ordering for player {i} covers {len(ordering.ranks)} arms, "
                             f"expected {market.n_arms}")


def _check_size_guard(market: MarketInstance) -> None:
    if market.n_players > ENUMERATION_LIMIT or market.n_arms > ENUMERATION_LIMIT:
        raise CapacityError(
            f"enumeration limited to {ENUMERATION_LIMIT}x{ENUMERATION_LIMIT} markets "
            f"(got {market.n_players}x{market.n_arms})"
        )


def deferred_acceptance(
    player_orderings: Sequence[RankOrdering],
    market: MarketInstance,
    proposing_side: str = "players",
) -> Matching:
    """Gale-Shapley deferred acceptance for the submitted orderings.

    ``proposing_side="players"`` yields the player-optimal stable matching,
    ``proposing_side="arms"`` the player-pessimal one (both with respect to
    the submitted orderings and the market's arm utilities). Free proposers
    act one proposal per sweep, in ascending index order; the outcome is
    proposal-order independent but the sweep order keeps runs deterministic.
    """
    _check_orderings(player_orderings, market)
    if proposing_side == "players":
        return _da_players_propose(player_orderings, market)
    if proposing_side == "arms":
        return _da_arms_propose(player_orderings, market)
    raise InputError(f"unknown proposing side {proposing_side!r}")


def _da_players_propose(orderings: Sequence[RankOrdering], market: MarketInstance) -> Matching:
    n, _ = market.n_players, market.n_arms
    next_choice = [0] * n
    holder: dict[int, int] = {}  # arm -> player currently held
    matched = [False] * n
    while not all(matched):
        for p in range(n):
            if matched[p]:
                continue
            arm = orderings[p].ranks[next_choice[p]]
            next_choice[p] += 1
            occupant = holder.get(arm)
            if occupant is None:
                holder[arm] = p
                matched[p] = True
            elif market.arm_prefers(arm, p, occupant):
                holder[arm] = p
                matched[p] = True
                matched[occupant] = False
    assignment = [-1] * n
    for arm, p in holder.items():
        assignment[p] = arm
    return Matching(tuple(assignment))


def _da_arms_propose(orderings: Sequence[RankOrdering], market: MarketInstance) -> Matching:
    n, k = market.n_players, market.n_arms
    # Each arm proposes down its player list (descending utility).
    pref_players = [
        sorted(range(n), key=lambda p: -market.arm_utilities[j][p]) for j in range(k)
    ]
    position = [{arm: pos for pos, arm in enumerate(orderings[p].ranks)} for p in range(n)]
    next_choice = [0] * k
    engaged: dict[int, int] = {}  # player -> arm currently held
    free_arms = set(range(k))
    while free_arms:
        for arm in sorted(free_arms):
            if next_choice[arm] >= n:
                free_arms.discard(arm)  # exhausted its list, stays unmatched
                continue
            p = pref_players[arm][next_choice[arm]]
            next_choice[arm] += 1
            current = engaged.get(p)
            if current is None:
                engaged[p] = arm
                free_arms.discard(arm)
            elif position[p][arm] < position[p][current]:
                engaged[p] = arm
                free_arms.discard(arm)
                free_arms.add(current)
    assignment = [engaged[p] for p in range(n)]
    return Matching(tuple(assignment))


def blocking_pairs(
    m: Matching,
    player_orderings: Sequence[RankOrdering],
    market: MarketInstance,
) -> list[BlockingTriplet]:
    """All blocking triplets (player, preferred arm, held arm) of ``m``.

    A pair blocks when the player ranks the arm above its current one and
    the arm is unmatched or strictly prefers the player to its occupant.
    The result is empty iff ``m`` is stable.
    """
    _check_orderings(player_orderings, market)
    if len(m.assignment) != market.n_players:
        raise InputError("matching size does not fit the market")
    occupant = {arm: p for p, arm in enumerate(m.assignment)}
    out = []
    for p in range(market.n_players):
        held = m.assignment[p]
        for arm in player_orderings[p].ranks:
            if arm == held:
                break  # everything after is ranked below the held arm
            other = occupant.get(arm)
            if other is None or market.arm_prefers(arm, p, other):
                out.append(BlockingTriplet(p, arm, held))
    return out


def _all_matchings(market: MarketInstance) -> Iterable[Matching]:
    for combo in itertools.permutations(range(market.n_arms), market.n_players):
        yield Matching(combo)


def enumerate_stable_matchings(
    player_orderings: Sequence[RankOrdering],
    market: MarketInstance,
) -> list[Matching]:
    """All stable matchings by brute force, sorted lexicographically.

    Never empty for complete strict preference lists. Guarded by the
    enumeration size limit.
    """
    _check_size_guard(market)
    _check_orderings(player_orderings, market)
    stable = [
        m for m in _all_matchings(market)
        if not blocking_pairs(m, player_orderings, market)
    ]
    stable.sort(key=lambda m: m.assignment)
    return stable


def valid_partners(
    player: int,
    player_orderings: Sequence[RankOrdering],
    market: MarketInstance,
) -> set[int]:
    """Arms the player receives in at least one stable matching."""
    return {
        m.assignment[player]
        for m in enumerate_stable_matchings(player_orderings, market)
    }


def optimal_pessimal(
    player_orderings: Sequence[RankOrdering],
    market: MarketInstance,
) -> tuple[Matching, Matching]:
    """(player-optimal, player-pessimal) stable matchings via both DA
    orientations."""
    return (
        deferred_acceptance(player_orderings, market, "players"),
        deferred_acceptance(player_orderings, market, "arms"),
    )


def blocked_set(
    triplet: BlockingTriplet,
    player_orderings: Sequence[RankOrdering],
    market: MarketInstance,
) -> list[Matching]:
    """All matchings where the triplet's player holds ``matched_arm`` and
    (player, preferred_arm) is a blocking pair."""
    _check_size_guard(market)
    _check_orderings(player_orderings, market)
    ordering = player_orderings[triplet.player]
    if ordering.position_of(triplet.preferred_arm) > ordering.position_of(triplet.matched_arm):
        return []  # blocking requires the preferred arm to outrank the held one
    out = []
    for m in _all_matchings(market):
        if m.assignment[triplet.player] != triplet.matched_arm:
            continue
        other = m.player_of(triplet.preferred_arm)
        if other is None or market.arm_prefers(triplet.preferred_arm, triplet.player, other):
            out.append(m)
    out.sort(key=lambda m: m.assignment)
    return out


def is_cover(
    triplets: Sequence[BlockingTriplet],
    target: Sequence[Matching],
    player_orderings: Sequence[RankOrdering],
    market: MarketInstance,
) -> bool:
    """True iff the union of the triplets' blocked sets contains ``target``."""
    covered: set[tuple[int, ...]] = set()
    for q in triplets:
        covered.update(m.assignment for m in blocked_set(q, player_orderings, market))
    return all(m.assignment in covered for m in target)


def all_triplets(market: MarketInstance) -> list[BlockingTriplet]:
    """Every syntactically valid blocking triplet of the market."""
    out = []
    for p in range(market.n_players):
        for k in range(market.n_arms):
            for k2 in range(market.n_arms):
                if k != k2:
                    out.append(BlockingTriplet(p, k, k2))
    return out
