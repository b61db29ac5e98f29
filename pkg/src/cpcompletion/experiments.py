"""Random sampling patterns and Monte-Carlo completability sweeps."""
from __future__ import annotations

import csv
import io
import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from .checker import FINITE, INCONCLUSIVE, UNIQUE, CheckerLimits, check_pattern, required_count
from .constraint import check_row_occupancy
from .oracle import full_rank, reduced_rank, variety_rank
from .pattern import SamplingPattern

CHECKERS = ("oracle-reduced", "oracle-full", "combinatorial")
CSV_COLUMNS = ("p", "finite_fraction", "unique_fraction", "mean_reduced_rank",
               "occupancy_fail_fraction", "inconclusive_fraction")


@dataclass(frozen=True)
class GenConfig:
    dims: tuple[int, ...]
    p: float
    seed: int = 0
    enforce_occupancy: bool = False
    rank: int = 1

    def __post_init__(self):
        if not 0 <= self.p <= 1:
            raise ValueError(f"sampling probability must lie in [0, 1], got {self.p}")
        if self.enforce_occupancy and self.rank > math.prod(self.dims[:-1]):
            raise ValueError(f"rank {self.rank} exceeds the length of a mode-d row")


def generate_pattern(cfg: GenConfig, rng=None) -> tuple[SamplingPattern, int]:
    """Bernoulli(p) pattern and the number of entries forced in by the row top-up.

    The top-up adds uniformly chosen unobserved cells to every mode-d row that
    holds fewer than ``rank`` entries.
    """
    rng = np.random.default_rng(cfg.seed if rng is None else rng)
    dims = tuple(int(n) for n in cfg.dims)
    mask = rng.random(dims) < cfg.p
    forced = 0
    if cfg.enforce_occupancy:
        rows = mask.reshape(-1, dims[-1])
        for y in range(dims[-1]):
            short = cfg.rank - int(rows[:, y].sum())
            if short > 0:
                free = np.flatnonzero(~rows[:, y])
                rows[rng.choice(free, size=short, replace=False), y] = True
                forced += short
    return SamplingPattern.from_dense(mask), forced


@dataclass(frozen=True)
class ExperimentConfig:
    dims: tuple[int, ...]
    rank: int
    p_grid: tuple[float, ...]
    trials_per_p: int = 200
    seed: int = 0
    checker: str = "oracle-reduced"
    enforce_occupancy: bool = False
    unique: bool = False
    oracle_trials: int = 1
    limits: CheckerLimits = field(default_factory=CheckerLimits)
    workers: int = 1

    def __post_init__(self):
        if self.checker not in CHECKERS:
            raise ValueError(f"checker must be one of {CHECKERS}, got {self.checker!r}")
        if self.trials_per_p < 1:
            raise ValueError("trials_per_p must be at least 1")
        if list(self.p_grid) != sorted(self.p_grid):
            raise ValueError("p_grid must be sorted ascending")
        if math.prod(self.dims) > 10**5:
            raise ValueError(f"dims {self.dims} exceed the desk-scale limit of 1e5 cells")


@dataclass(frozen=True)
class TrialOutcome:
    finite: bool
    unique: bool
    reduced: float
    occupancy_failed: bool
    inconclusive: bool


@dataclass(frozen=True)
class ExperimentRow:
    p: float
    finite_fraction: float
    unique_fraction: float
    mean_reduced_rank: float
    occupancy_fail_fraction: float
    inconclusive_fraction: float

    def as_tuple(self) -> tuple:
        return (self.p, self.finite_fraction, self.unique_fraction, self.mean_reduced_rank,
                self.occupancy_fail_fraction, self.inconclusive_fraction)


def trial_seed(master: int, p_index: int, trial: int) -> int:
    """Per-trial seed depending only on its grid position, so worker count cannot change it."""
    return int(np.random.SeedSequence([int(master), p_index, trial]).generate_state(1)[0])


def run_trial(cfg: ExperimentConfig, p_index: int, trial: int) -> TrialOutcome:
    seed = trial_seed(cfg.seed, p_index, trial)
    pattern, _ = generate_pattern(GenConfig(cfg.dims, cfg.p_grid[p_index], seed,
                                            cfg.enforce_occupancy, cfg.rank))
    if not check_row_occupancy(pattern, cfg.rank).ok:
        return TrialOutcome(False, False, math.nan, True, False)
    red = reduced_rank(pattern, cfg.rank, cfg.oracle_trials, seed).rank
    inconclusive = False
    if cfg.checker == "oracle-reduced":
        finite = red == required_count(pattern.dims, cfg.rank)
    elif cfg.checker == "oracle-full":
        var = variety_rank(tuple(pattern.dims), cfg.rank, cfg.oracle_trials, 0)
        finite = full_rank(pattern, cfg.rank, cfg.oracle_trials, seed).rank == var.rank
    else:
        verdict = check_pattern(pattern, cfg.rank, cfg.limits).finite.verdict
        finite = verdict == FINITE
        inconclusive = verdict == INCONCLUSIVE
    unique = False
    if cfg.unique and finite:
        res = check_pattern(pattern, cfg.rank, cfg.limits, unique=True).unique
        unique = res.verdict == UNIQUE
        inconclusive = inconclusive or res.verdict == INCONCLUSIVE
    return TrialOutcome(finite, unique, red, False, inconclusive)


def _run_column(args) -> list[TrialOutcome]:
    cfg, p_index = args
    return [run_trial(cfg, p_index, t) for t in range(cfg.trials_per_p)]


def _aggregate(p: float, outcomes: Sequence[TrialOutcome]) -> ExperimentRow:
    n = len(outcomes)
    ranks = [o.reduced for o in outcomes if not math.isnan(o.reduced)]
    return ExperimentRow(
        p,
        sum(o.finite for o in outcomes) / n,
        sum(o.unique for o in outcomes) / n,
        float(np.mean(ranks)) if ranks else math.nan,
        sum(o.occupancy_failed for o in outcomes) / n,
        sum(o.inconclusive for o in outcomes) / n,
    )


def run_experiment(cfg: ExperimentConfig) -> list[ExperimentRow]:
    """One aggregated row per grid probability; deterministic given ``cfg.seed``."""
    jobs = [(cfg, i) for i in range(len(cfg.p_grid))]
    if cfg.workers > 1:
        with ProcessPoolExecutor(cfg.workers) as pool:
            columns = list(pool.map(_run_column, jobs))
    else:
        columns = [_run_column(j) for j in jobs]
    return [_aggregate(p, col) for p, col in zip(cfg.p_grid, columns)]


def format_experiment_csv(rows: Sequence[ExperimentRow]) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(CSV_COLUMNS)
    for row in rows:
        w.writerow([f"{row.p:.6g}"] + [f"{v:.6f}" for v in row.as_tuple()[1:]])
    return buf.getvalue()


def empirical_threshold(rows: Sequence[ExperimentRow], level: float = 0.5) -> float | None:
    """Smallest grid probability whose finite fraction reaches ``level``."""
    for row in rows:
        if row.finite_fraction >= level:
            return row.p
    return None


def monotone_violation(values: Sequence[float]) -> float:
    """Largest drop below the running maximum, a tolerance-friendly monotonicity gauge."""
    worst, best = 0.0, -math.inf
    for v in values:
        best = max(best, v)
        worst = max(worst, best - v)
    return worst


@dataclass(frozen=True)
class Agreement:
    total: int
    conclusive: int
    agree_all: int
    disagreements: tuple[tuple[int, dict], ...]

    @property
    def rate(self) -> float:
        return self.agree_all / self.conclusive if self.conclusive else 1.0


def cross_validate(patterns: Sequence[SamplingPattern], rank: int, trials: int = 3,
                   seed: int = 0, limits: CheckerLimits = CheckerLimits()) -> Agreement:
    """Compare the combinatorial verdict with both oracle verdicts on each pattern.

    Cases where the combinatorial check is inconclusive only compare the two
    oracle verdicts.
    """
    from .oracle import oracle_report
    conclusive = agree = 0
    bad = []
    for i, pat in enumerate(patterns):
        rep = oracle_report(pat, rank, trials, seed)
        comb = check_pattern(pat, rank, limits).finite.verdict
        verdicts = {"reduced": rep.verdict_reduced, "variety": rep.verdict_variety}
        if comb != INCONCLUSIVE:
            verdicts["combinatorial"] = comb == FINITE
            conclusive += 1
        same = len(set(verdicts.values())) == 1
        if comb != INCONCLUSIVE and same:
            agree += 1
        if not same:
            bad.append((i, verdicts))
    return Agreement(len(patterns), conclusive, agree, tuple(bad))
