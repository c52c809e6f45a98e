"""Restart-based bandit learning in two-sided matching markets."""

from .engine import (
    RegretReport,
    SimulationConfig,
    SimulationTrace,
    compute_restart_period,
    regret_report,
    run_rcb,
    write_trace_csv,
)
from .environment import (
    ChangeEvent,
    MeanRewardTimeline,
    RewardSample,
    means_at,
    min_gap,
    sample_reward,
    stable_benchmarks,
    total_changes,
)
from .errors import (
    AssumptionError,
    CapacityError,
    CompetingBanditsError,
    ConfigError,
    InputError,
)
from .learner import UcbState
from .market import (
    BlockingTriplet,
    MarketInstance,
    Matching,
    RankOrdering,
    blocked_set,
    blocking_pairs,
    deferred_acceptance,
    enumerate_stable_matchings,
    is_cover,
    optimal_pessimal,
    valid_partners,
)
from .meta import (
    EpochEnsemble,
    EpochSummary,
    Exp3State,
    build_ensemble,
    exp3_select,
    exp3_update,
    run_rcb_meta,
    write_epoch_summary_csv,
)

__all__ = [
    "AssumptionError",
    "BlockingTriplet",
    "CapacityError",
    "ChangeEvent",
    "CompetingBanditsError",
    "ConfigError",
    "EpochEnsemble",
    "EpochSummary",
    "Exp3State",
    "InputError",
    "MarketInstance",
    "Matching",
    "MeanRewardTimeline",
    "RankOrdering",
    "RegretReport",
    "RewardSample",
    "SimulationConfig",
    "SimulationTrace",
    "UcbState",
    "blocked_set",
    "blocking_pairs",
    "build_ensemble",
    "compute_restart_period",
    "deferred_acceptance",
    "enumerate_stable_matchings",
    "exp3_select",
    "exp3_update",
    "is_cover",
    "means_at",
    "min_gap",
    "optimal_pessimal",
    "regret_report",
    "run_rcb",
    "run_rcb_meta",
    "sample_reward",
    "stable_benchmarks",
    "total_changes",
    "valid_partners",
    "write_epoch_summary_csv",
    "write_trace_csv",
]
