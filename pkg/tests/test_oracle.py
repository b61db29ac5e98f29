from fractions import Fraction

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from cpcompletion.checker import SliceSelection, independence_upper_bound, required_count
from cpcompletion.constraint import build_constraint_tensor, check_row_occupancy, random_basis
from cpcompletion.errors import InsufficientRowSamples, FieldTooSmall, SingularSystem
from cpcompletion.gfp import PRIME, check_prime, rank_mod_p, solve_mod_p
from cpcompletion.oracle import (FULL, REDUCED, VARIETY, CanonicalPattern, evaluate_entry,
                                 full_rank, generic_jacobian_rank, numeric_rank, oracle_report,
                                 random_factors, reduced_rank, sample_jacobian,
                                 selection_reduced_rank, solve_last_factor, variety_rank)
from cpcompletion.pattern import SamplingPattern


def slow_rank(rows, p):
    """Plain Python Gaussian elimination, kept deliberately naive."""
    m = [[v % p for v in row] for row in rows]
    rank, cols = 0, len(m[0]) if m else 0
    for c in range(cols):
        piv = next((i for i in range(rank, len(m)) if m[i][c]), None)
        if piv is None:
            continue
        m[rank], m[piv] = m[piv], m[rank]
        inv = pow(m[rank][c], p - 2, p)
        for i in range(len(m)):
            if i != rank and m[i][c]:
                f = m[i][c] * inv % p
                m[i] = [(a - f * b) % p for a, b in zip(m[i], m[rank])]
        rank += 1
    return rank


@settings(max_examples=60, deadline=None)
@given(st.integers(1, 7), st.integers(1, 7), st.integers(0, 10**6), st.sampled_from([2, 3, 97]))
def test_rank_mod_p_matches_naive(r, c, seed, spread):
    rng = np.random.default_rng(seed)
    a = rng.integers(0, spread, size=(r, c)) * rng.integers(1, PRIME, size=(1, c))
    assert rank_mod_p(a) == slow_rank(a.tolist(), PRIME)


def test_rank_mod_p_edge_cases():
    assert rank_mod_p(np.zeros((0, 3))) == 0
    assert rank_mod_p([[PRIME, 2 * PRIME]]) == 0
    assert rank_mod_p(np.eye(5, dtype=np.int64)) == 5


def test_solve_mod_p():
    a = [[2, 1], [1, 3]]
    x = solve_mod_p(a, [5, 10])
    assert [(2 * x[0] + x[1]) % PRIME, (x[0] + 3 * x[1]) % PRIME] == [5, 10]
    with pytest.raises(SingularSystem):
        solve_mod_p([[1, 2], [2, 4]], [1, 2])


def test_check_prime():
    assert check_prime(PRIME) == PRIME
    with pytest.raises(FieldTooSmall):
        check_prime(101)
    with pytest.raises(ValueError):
        check_prime(2**31 - 3)


def test_evaluate_entry_exact_over_rationals():
    f = [[[Fraction(1, 2), 2]], [[3, Fraction(1, 3)]]]
    assert evaluate_entry(f, (0, 0)) == Fraction(3, 2) + Fraction(2, 3)


def test_jacobian_matches_float_rank():
    rng = np.random.default_rng(5)
    dims = (3, 3, 3)
    f_mod = random_factors(dims, 2, rng)
    X = SamplingPattern.full(dims).as_array()
    f_float = [rng.standard_normal((n, 2)) for n in dims]
    assert rank_mod_p(sample_jacobian(f_mod, X)) == numeric_rank(sample_jacobian(f_float, X, None))


def test_variety_rank_is_parameter_count_minus_scaling():
    # scaling within each rank-one term leaves r(d-1) directions in the kernel
    for dims, r in [((3, 3, 3), 1), ((3, 3, 3), 2), ((2, 3, 4), 2), ((4, 5), 2)]:
        params = r * sum(dims)
        gauge = r * (len(dims) - 1) if len(dims) > 2 else r * r
        assert variety_rank(dims, r).rank == params - gauge


def test_motivating_oracle():
    pat = SamplingPattern.from_entries((2, 2, 2), [(0, 0, 0), (1, 0, 0), (0, 1, 0), (0, 0, 1)])
    rep = oracle_report(pat, 1)
    assert rep.reduced_rank == rep.required == 2
    assert rep.full_rank == rep.variety_rank == 4
    assert rep.verdict_reduced and rep.verdict_variety
    assert rep.as_dict()["field_prime"] == PRIME


def test_example1_rank():
    S = [(0, 0, 0), (0, 1, 0), (1, 2, 0), (2, 2, 0), (0, 0, 1), (1, 0, 1), (2, 1, 1),
         (0, 2, 2), (2, 1, 2)]
    pat = SamplingPattern.from_entries((3, 3, 3), S)
    assert reduced_rank(pat, 2).rank == 3 < required_count(pat.dims, 2)


def test_generic_rank_modes_and_errors():
    pat = SamplingPattern.from_entries((2, 2, 2), [(0, 0, 0), (1, 1, 1)])
    assert generic_jacobian_rank(pat, 1, FULL).rank == 2
    assert generic_jacobian_rank(pat, 1, VARIETY).rank == 4
    with pytest.raises(InsufficientRowSamples):
        generic_jacobian_rank(SamplingPattern.from_entries((2, 2, 2), [(0, 0, 0)]), 1, REDUCED)
    with pytest.raises(ValueError):
        generic_jacobian_rank(pat, 1, "bogus")


def test_canonical_pattern():
    canon = CanonicalPattern((3, 4, 5, 2), 2)
    assert canon.fixed_count == sum(m.sum() for m in canon.fixed_masks()) == 4 + 2 * 2
    assert np.array_equal(CanonicalPattern((3, 3, 3), 2, q="identity").block(None), np.eye(2))
    with pytest.raises(SingularSystem):
        CanonicalPattern((3, 3, 3), 2, q=[[1, 2], [2, 4]]).block(None)


def test_solve_last_factor_reproduces_basis_entries():
    pat = SamplingPattern.full((3, 3, 3))
    rng = np.random.default_rng(1)
    dims, r = pat.dims, 2
    factors = random_factors(dims, r, rng)
    ct = build_constraint_tensor(pat, r)
    X = pat.as_array()
    values = {tuple(x): int(v) for x, v in zip(X, evaluate_entry_all(factors, X))}
    a_last = solve_last_factor(factors[:-1], pat, ct.basis, values, PRIME, r)
    assert np.array_equal(np.asarray(a_last) % PRIME, factors[-1] % PRIME)


def evaluate_entry_all(factors, X):
    return [evaluate_entry(factors, x, PRIME) for x in X]


def random_valid(seed, dims=(3, 3, 3), r=1):
    rng = np.random.default_rng(seed)
    while True:
        pat = SamplingPattern.from_dense(rng.random(dims) < rng.uniform(0.3, 0.9))
        if check_row_occupancy(pat, r).ok:
            return pat


@settings(max_examples=20, deadline=None)
@given(st.integers(0, 10**6))
def test_rank_one_reduced_rank_is_elimination_of_full_rank(seed):
    pat = random_valid(seed)
    assert reduced_rank(pat, 1).rank == full_rank(pat, 1).rank - pat.dims[-1]


@settings(max_examples=20, deadline=None)
@given(st.integers(0, 10**6))
def test_reduced_rank_is_basis_invariant(seed):
    pat = random_valid(seed, (3, 3, 3), 2)
    base = reduced_rank(pat, 2).rank
    assert reduced_rank(pat, 2, basis=random_basis(pat, 2, seed)).rank == base


@settings(max_examples=20, deadline=None)
@given(st.integers(0, 10**6))
def test_rank_is_stable_across_trials(seed):
    pat = random_valid(seed, (3, 4, 3), 2)
    est = reduced_rank(pat, 2, trials=4, seed=seed)
    assert est.stable_fraction == 1.0


@settings(max_examples=25, deadline=None)
@given(st.integers(0, 10**6))
def test_rank_one_upper_bound_dominates(seed):
    pat = random_valid(seed, (3, 4, 3))
    ct = build_constraint_tensor(pat, 1)
    rng = np.random.default_rng(seed)
    for _ in range(5):
        ids = sorted(rng.choice(ct.K, size=int(rng.integers(1, ct.K + 1)), replace=False))
        assert selection_reduced_rank(ct, ids) <= independence_upper_bound(
            ct, SliceSelection.of(ct, ids))


COUNTEREXAMPLE = [(0, 0, 0), (0, 0, 1), (0, 0, 2), (0, 0, 3), (0, 1, 0), (0, 1, 3), (0, 2, 0),
                  (0, 2, 1), (0, 2, 2), (0, 3, 2), (2, 1, 0), (2, 1, 3), (2, 3, 1), (3, 0, 3),
                  (3, 1, 0), (3, 2, 1), (3, 2, 2), (3, 3, 2)]


def test_rank_two_upper_bound_counterexample():
    # 4x4x4, r=2: all ten slices give m = (3, 4) and a bound of 8, yet ten
    # polynomials are independent. The full Jacobian rank confirms this without
    # relying on the canonical pattern.
    pat = SamplingPattern.from_entries((4, 4, 4), COUNTEREXAMPLE)
    ct = build_constraint_tensor(pat, 2)
    everything = SliceSelection.of(ct, range(ct.K))
    assert ct.K == 10 and everything.m == (3, 4)
    assert independence_upper_bound(ct, everything) == 8
    assert reduced_rank(pat, 2).rank == 10
    assert full_rank(pat, 2).rank - 2 * pat.dims[-1] == 10
