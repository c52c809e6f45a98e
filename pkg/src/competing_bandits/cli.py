"""Command line driver: single runs, grid sweeps, config linting, and the
deferred-acceptance-vs-enumeration self check.

Exit codes: 0 success, 1 validation failure, 2 oracle mismatch.
"""

from __future__ import annotations

import argparse
import csv
import statistics
import sys
from dataclasses import dataclass
from pathlib import Path
from typing import Optional, Sequence

import numpy as np

from .config import ExperimentConfig, echo_config, parse_config, resolve_instance
from .engine import SimulationConfig, regret_report, run_rcb, write_trace_csv
from .errors import CompetingBanditsError, InputError
from .market import (
    MarketInstance,
    RankOrdering,
    deferred_acceptance,
    enumerate_stable_matchings,
)
from .meta import run_rcb_meta, write_epoch_summary_csv

SWEEP_COLUMNS = ("grid_value", "mean_regret", "std_regret", "seeds", "restart_period")


@dataclass(frozen=True)
class SweepRow:
    grid_value: int
    mean_regret: float
    std_regret: float
    seeds: tuple[int, ...]
    restart_period: int


def _single_run(config: ExperimentConfig, seed: int, mode: str,
                horizon: Optional[int] = None, n_changes: Optional[int] = None,
                restart_period: Optional[int] = None):
    market, timeline = resolve_instance(config, horizon=horizon, n_changes=n_changes)
    sim = SimulationConfig(
        horizon=horizon if horizon is not None else config.horizon,
        restart_period=restart_period if restart_period is not None else config.restart_period,
        seed=seed,
        noise=config.noise,
        baseline=config.baseline,
    )
    if mode == "meta":
        return run_rcb_meta(sim, market, timeline)
    return run_rcb(sim, market, timeline)


def run_sweep(config: ExperimentConfig, grid_key: str, grid_values: Sequence[int],
              mode: str = "rcb") -> list[SweepRow]:
    """Average the max-over-players pessimal regret across seeds for each
    grid point. Grid keys: T (horizon), L (change count), H (restart
    period); T and L require a [generator] config."""
    if grid_key not in ("T", "L", "H"):
        raise InputError(f"grid key must be T, L or H, got {grid_key!r}")
    rows = []
    for value in grid_values:
        finals = []
        period = None
        for seed in config.seeds:
            trace = _single_run(
                config, seed, mode,
                horizon=value if grid_key == "T" else None,
                n_changes=value if grid_key == "L" else None,
                restart_period=value if grid_key == "H" else None,
            )
            period = trace.restart_period
            report = regret_report(trace, "pessimal")
            finals.append(float(report.final().max()))
        mean = statistics.fmean(finals)
        std = statistics.pstdev(finals) if len(finals) > 1 else 0.0
        rows.append(SweepRow(value, mean, std, config.seeds, period))
    return rows


def write_sweep_csv(rows: Sequence[SweepRow], path, grid_key: str,
                    config: ExperimentConfig) -> None:
    with open(path, "w", newline="") as fh:
        for key, value in echo_config(config):
            fh.write(f"# {key} = {value}\n")
        fh.write(f"# grid_key = {grid_key}\n")
        writer = csv.writer(fh)
        writer.writerow(SWEEP_COLUMNS)
        for row in rows:
            writer.writerow([
                row.grid_value,
                repr(row.mean_regret),
                repr(row.std_regret),
                " ".join(str(s) for s in row.seeds),
                row.restart_period,
            ])


def random_market_and_orderings(
    n_players: int, n_arms: int, rng: np.random.Generator,
) -> tuple[MarketInstance, list[RankOrdering]]:
    """Uniform random strict market plus random player orderings."""
    utilities = tuple(tuple(float(v) for v in rng.permutation(n_players)) for _ in range(n_arms))
    market = MarketInstance(n_players, n_arms, utilities)
    orderings = [
        RankOrdering(i, tuple(int(a) for a in rng.permutation(n_arms)))
        for i in range(n_players)
    ]
    return market, orderings


def oracle_check(n_instances: int, sizes: Sequence[int], seed: int) -> list[str]:
    """Cross-validate both DA orientations against exhaustive enumeration.

    Returns a list of mismatch descriptions (empty means all clean). Each
    instance checks that player-proposing DA matches the enumeration's
    player-optimal element and arm-proposing DA its player-pessimal one.
    """
    rng = np.random.default_rng(seed)
    mismatches = []
    for idx in range(n_instances):
        n = int(rng.choice(list(sizes)))
        market, orderings = random_market_and_orderings(n, n, rng)
        stable = enumerate_stable_matchings(orderings, market)
        positions = [
            {m.assignment[p] for m in stable} for p in range(n)
        ]
        best = tuple(
            min(positions[p], key=orderings[p].position_of) for p in range(n)
        )
        worst = tuple(
            max(positions[p], key=orderings[p].position_of) for p in range(n)
        )
        da_opt = deferred_acceptance(orderings, market, "players").assignment
        da_pess = deferred_acceptance(orderings, market, "arms").assignment
        if da_opt != best:
            mismatches.append(
                f"instance {idx} (N=K={n}): player-proposing DA {da_opt} != optimal {best}"
            )
        if da_pess != worst:
            mismatches.append(
                f"instance {idx} (N=K={n}): arm-proposing DA {da_pess} != pessimal {worst}"
            )
    return mismatches


def _print_echo(config: ExperimentConfig) -> None:
    print("resolved configuration:")
    for key, value in echo_config(config):
        print(f"  {key} = {value}")


def _cmd_validate(args) -> int:
    config = parse_config(args.config)
    _print_echo(config)
    print("config OK")
    return 0


def _cmd_run(args) -> int:
    config = parse_config(args.config)
    seeds = tuple(int(s) for s in args.seed.split(",")) if args.seed else config.seeds
    mode = args.mode or config.mode
    if mode not in ("rcb", "meta"):
        raise InputError(f"run mode must be rcb or meta, got {mode!r}")
    out_dir = Path(args.out or config.out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    _print_echo(config)
    metadata = echo_config(config)
    for seed in seeds:
        trace = _single_run(config, seed, mode)
        trace_path = out_dir / f"trace_{mode}_seed{seed}.csv"
        write_trace_csv(trace, trace_path, extra_metadata=metadata)
        if mode == "meta":
            write_epoch_summary_csv(trace, out_dir / f"epochs_seed{seed}.csv")
        final = regret_report(trace).final()
        print(f"seed {seed}: wrote {trace_path} "
              f"(max-player {trace.baseline} regret {final.max():.4f})")
    return 0


def _cmd_sweep(args) -> int:
    config = parse_config(args.config)
    try:
        grid_key, raw = args.grid.split("=", 1)
        grid_values = [int(v) for v in raw.split(",") if v]
    except ValueError:
        raise InputError("--grid must look like KEY=v1,v2,... with integer values")
    rows = run_sweep(config, grid_key.strip(), grid_values)
    out_dir = Path(args.out or config.out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    path = out_dir / f"sweep_{grid_key.strip()}.csv"
    write_sweep_csv(rows, path, grid_key.strip(), config)
    print(f"wrote {path}")
    for row in rows:
        print(f"  {grid_key}={row.grid_value}: mean_regret={row.mean_regret:.4f} "
              f"std={row.std_regret:.4f} H={row.restart_period}")
    return 0


def _cmd_oracle_check(args) -> int:
    sizes = [int(s) for s in args.sizes.split(",")]
    mismatches = oracle_check(args.instances, sizes, args.seed)
    if mismatches:
        for line in mismatches:
            print(f"MISMATCH: {line}", file=sys.stderr)
        return 2
    print(f"oracle check passed: {args.instances} instances, sizes {sizes}")
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="rcb",
        description="Restart-based bandit learning in two-sided matching markets",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p_run = sub.add_parser("run", help="run a single experiment per seed, write trace CSVs")
    p_run.add_argument("--config", required=True)
    p_run.add_argument("--seed", help="comma-separated seed list overriding the config")
    p_run.add_argument("--out", help="output directory")
    p_run.add_argument("--mode", choices=("rcb", "meta"))
    p_run.set_defaults(func=_cmd_run)

    p_sweep = sub.add_parser("sweep", help="grid sweep, write a summary CSV")
    p_sweep.add_argument("--config", required=True)
    p_sweep.add_argument("--grid", required=True, help="KEY=v1,v2,... with KEY in {T,L,H}")
    p_sweep.add_argument("--out", help="output directory")
    p_sweep.set_defaults(func=_cmd_sweep)

    p_oracle = sub.add_parser(
        "oracle-check",
        help="cross-validate deferred acceptance against brute-force enumeration",
    )
    p_oracle.add_argument("--instances", type=int, default=200)
    p_oracle.add_argument("--sizes", default="2,3,4", help="comma-separated N=K sizes")
    p_oracle.add_argument("--seed", type=int, default=0)
    p_oracle.set_defaults(func=_cmd_oracle_check)

    p_validate = sub.add_parser("validate", help="parse and lint a config file")
    p_validate.add_argument("--config", required=True)
    p_validate.set_defaults(func=_cmd_validate)

    return parser


def main(argv: Optional[Sequence[str]] = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except CompetingBanditsError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
