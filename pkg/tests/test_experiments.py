import math

import numpy as np
import pytest

from cpcompletion import bounds as B
from cpcompletion.constraint import check_row_occupancy
from cpcompletion.experiments import (ExperimentConfig, GenConfig, cross_validate,
                                      empirical_threshold, format_experiment_csv,
                                      generate_pattern, monotone_violation, run_experiment,
                                      trial_seed)

from . import pinned


def test_generate_extremes():
    assert generate_pattern(GenConfig((3, 4, 2), 0.0))[0].size == 0
    assert generate_pattern(GenConfig((3, 4, 2), 1.0))[0].size == 24
    with pytest.raises(ValueError):
        GenConfig((2, 2), 1.5)


def test_generate_seeded_binomial():
    pat, forced = generate_pattern(GenConfig((10, 10, 10), 0.3, seed=12345))
    assert forced == 0
    assert pat.size == pinned.GEN_COUNT
    assert pat.observed[:3] == pinned.GEN_FIRST
    assert abs(pat.size - 300) <= 4 * math.sqrt(1000 * 0.3 * 0.7)
    assert generate_pattern(GenConfig((10, 10, 10), 0.3, seed=12345))[0] == pat


def test_row_top_up():
    cfg = GenConfig((4, 4, 6), 0.05, seed=3, enforce_occupancy=True, rank=3)
    pat, forced = generate_pattern(cfg)
    raw, _ = generate_pattern(GenConfig((4, 4, 6), 0.05, seed=3))
    assert check_row_occupancy(pat, 3).ok
    assert forced > 0 and pat.size == raw.size + forced
    assert set(raw.observed) <= set(pat.observed)


def test_trial_seeds_are_distinct_and_stable():
    seeds = {trial_seed(0, i, t) for i in range(5) for t in range(50)}
    assert len(seeds) == 250
    assert trial_seed(9, 1, 2) == trial_seed(9, 1, 2)


def test_experiment_rows_and_determinism():
    cfg = ExperimentConfig((4, 4, 4), 1, (0.1, 0.5, 1.0), 10, seed=4)
    rows = run_experiment(cfg)
    assert [r.p for r in rows] == [0.1, 0.5, 1.0]
    assert rows[-1].finite_fraction == 1.0 and rows[-1].occupancy_fail_fraction == 0.0
    assert format_experiment_csv(rows) == format_experiment_csv(run_experiment(cfg))
    assert format_experiment_csv(rows).splitlines()[0].startswith("p,finite_fraction")


def test_worker_count_does_not_change_results():
    base = dict(dims=(3, 3, 3), rank=1, p_grid=(0.2, 0.6), trials_per_p=6, seed=1)
    serial = run_experiment(ExperimentConfig(**base))
    parallel = run_experiment(ExperimentConfig(**base, workers=2))
    assert format_experiment_csv(serial) == format_experiment_csv(parallel)


@pytest.mark.parametrize("checker", ["oracle-full", "combinatorial"])
def test_other_checkers_agree_at_full_observation(checker):
    rows = run_experiment(ExperimentConfig((3, 3, 3), 1, (1.0,), 3, checker=checker,
                                           unique=True))
    assert rows[0].finite_fraction == 1.0
    assert rows[0].unique_fraction == 1.0


def test_config_validation():
    with pytest.raises(ValueError):
        ExperimentConfig((3, 3, 3), 1, (0.5, 0.1))
    with pytest.raises(ValueError):
        ExperimentConfig((3, 3, 3), 1, (0.5,), checker="magic")
    with pytest.raises(ValueError):
        ExperimentConfig((100, 100, 100), 1, (0.5,))


def test_threshold_below_probability_bound():
    grid = tuple(round(0.05 * i, 2) for i in range(1, 20))
    rows = run_experiment(ExperimentConfig((8, 8, 8), 1, grid, 40, seed=2))
    p_star = empirical_threshold(rows)
    bound = B.sampling_probability_bound(8, 3, 1, 0.001, "finite").probability_bound
    assert p_star is not None and p_star < bound


def test_monotone_violation():
    assert monotone_violation([0.1, 0.5, 0.4, 1.0]) == pytest.approx(0.1)
    assert monotone_violation([0, 0, 1]) == 0


def test_cross_validate_rank_one_matrices():
    rng = np.random.default_rng(0)
    from cpcompletion.pattern import SamplingPattern
    pats = [SamplingPattern.from_dense(rng.random((4, 4)) < 0.5) for _ in range(15)]
    report = cross_validate(pats, 1)
    assert report.total == 15 and report.rate == 1.0 and not report.disagreements
