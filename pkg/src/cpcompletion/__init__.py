"""Finite and unique completability of sampled low-CP-rank tensors."""
from .bounds import (best_unfolding_bound, cp_finite_bound, cp_unique_bound, figure1_table,
                     matrix_bound_l, sampling_probability_bound, unfolding_bound)
from .checker import (CheckerLimits, check_finite, check_pattern, check_unique,
                      independence_upper_bound, required_count,
                      satisfies_count_condition)
from .constraint import build_constraint_tensor, check_row_occupancy, default_basis
from .errors import CompletionError
from .experiments import ExperimentConfig, GenConfig, generate_pattern, run_experiment
from .oracle import generic_jacobian_rank, oracle_report, reduced_rank
from .pattern import SamplingPattern, matricization, parse_pattern, read_pattern, unfold

__version__ = "0.1.0"
