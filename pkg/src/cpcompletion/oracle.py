"""Generic Jacobian rank of the CP sample polynomials over a prime field.

Each observed entry ``x`` gives the polynomial ``sum_l prod_i A_i[x_i, l]`` in
the entries of the factor matrices. At a random point the rank of the
Jacobian of these polynomials equals, with overwhelming probability, the
number of algebraically independent ones.

Three ranks are reported:

* reduced: the canonical pattern is fixed (an r x r block of one front
  factor plus one constant row in every other front factor), the last
  factor stays free, and ``rank - r * n_d`` counts the independent
  polynomials left after solving for the last factor.
* full: every factor entry is free.
* variety: full rank with every cell observed, i.e. the dimension of the
  set of rank-r tensors of this shape.
"""
from __future__ import annotations

import functools
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from .checker import required_count
from .constraint import BasisChoice, ConstraintTensor, check_row_occupancy, default_basis
from .errors import InsufficientRowSamples, BoundsError, SingularSystem
from .gfp import PRIME, check_prime, random_nonzero, rank_mod_p, solve_mod_p
from .pattern import SamplingPattern

REDUCED, FULL, VARIETY = "reduced", "full", "variety"
MAX_RETRIES = 10


def evaluate_entry(factors: Sequence, x: Sequence[int], p: int | None = None):
    """``U(x) = sum_l prod_i A_i[x_i, l]``.

    Exact mod ``p`` when given, otherwise in the entries' own number type.
    """
    if len(x) != len(factors):
        raise BoundsError(f"entry {tuple(x)} has {len(x)} coordinates, expected {len(factors)}")
    for xi, a in zip(x, factors):
        if not 0 <= xi < len(a):
            raise BoundsError(f"entry {tuple(x)} out of bounds")
    rank = len(factors[0][0])
    total = 0
    for col in range(rank):
        term = 1
        for xi, a in zip(x, factors):
            term = term * a[xi][col]
            if p is not None:
                term %= p
        total = total + term
    return total % p if p is not None else total


def evaluate_entries(factors: Sequence[np.ndarray], X: np.ndarray, p: int = PRIME) -> np.ndarray:
    """Vectorised :func:`evaluate_entry` over the rows of ``X`` (mod ``p``)."""
    X = np.asarray(X, dtype=np.int64)
    prod = np.ones((len(X), factors[0].shape[1]), dtype=np.int64)
    for i, a in enumerate(factors):
        prod = prod * a[X[:, i]] % p
    return prod.sum(axis=1) % p


@dataclass(frozen=True)
class CanonicalPattern:
    """Fixed factor entries selecting one decomposition per equivalence class.

    Mode ``j`` gets an ``r x r`` block in its first ``r`` rows; every other
    front mode (all but the last) gets row 0 set to ones. ``q=None`` draws a
    random full-rank block at each evaluation point; pass ``q="identity"`` or
    an explicit matrix to pin it.
    """

    dims: tuple[int, ...]
    rank: int
    j: int = 0
    q: object = None

    def __post_init__(self):
        d = len(self.dims)
        if not 0 <= self.j < d - 1:
            raise ValueError(f"distinguished mode {self.j} must be a front mode (0..{d - 2})")
        if self.dims[self.j] < self.rank:
            raise ValueError(f"mode {self.j} has {self.dims[self.j]} rows, "
                             f"fewer than rank {self.rank}")

    @property
    def ones_modes(self) -> tuple[int, ...]:
        return tuple(i for i in range(len(self.dims) - 1) if i != self.j)

    def fixed_masks(self) -> list[np.ndarray]:
        r = self.rank
        masks = [np.zeros((n, r), dtype=bool) for n in self.dims]
        masks[self.j][:r, :] = True
        for i in self.ones_modes:
            masks[i][0, :] = True
        return masks

    @property
    def fixed_count(self) -> int:
        return self.rank**2 + self.rank * (len(self.dims) - 2)

    def block(self, rng, p: int = PRIME) -> np.ndarray:
        r = self.rank
        if isinstance(self.q, str) and self.q == "identity":
            return np.eye(r, dtype=np.int64)
        if self.q is not None:
            q = np.asarray(self.q, dtype=np.int64) % p
            if rank_mod_p(q, p) != r:
                raise SingularSystem("canonical block must be full rank")
            return q
        while True:
            q = random_nonzero(rng, (r, r), p)
            if rank_mod_p(q, p) == r:
                return q

    def apply(self, factors: list[np.ndarray], rng, p: int = PRIME) -> list[np.ndarray]:
        out = [a.copy() for a in factors]
        out[self.j][: self.rank, :] = self.block(rng, p)
        for i in self.ones_modes:
            out[i][0, :] = 1
        return out


def random_factors(dims: Sequence[int], rank: int, rng, p: int = PRIME) -> list[np.ndarray]:
    return [random_nonzero(rng, (n, rank), p) for n in dims]


def _offsets(dims: Sequence[int], rank: int) -> list[int]:
    offs = [0]
    for n in dims:
        offs.append(offs[-1] + n * rank)
    return offs


def sample_jacobian(factors: Sequence[np.ndarray], X, p: int | None = PRIME) -> np.ndarray:
    """Jacobian of the sample polynomials at ``X`` w.r.t. every factor entry.

    Variable ``A_k[row, l]`` is column ``offset_k + row * r + l``. With
    ``p=None`` the factors are real and the result is float.
    """
    X = np.asarray(X, dtype=np.int64).reshape(-1, len(factors))
    dims = [a.shape[0] for a in factors]
    r = factors[0].shape[1]
    offs = _offsets(dims, r)
    dtype = np.int64 if p is not None else float
    J = np.zeros((len(X), offs[-1]), dtype=dtype)
    vals = [a[X[:, i]] for i, a in enumerate(factors)]
    rows = np.arange(len(X))[:, None]
    for k in range(len(factors)):
        prod = np.ones((len(X), r), dtype=dtype)
        for i, v in enumerate(vals):
            if i != k:
                prod = prod * v % p if p is not None else prod * v
        J[rows, offs[k] + X[:, k][:, None] * r + np.arange(r)] = prod
    return J


def numeric_rank(matrix, rel_tol: float = 1e-9) -> int:
    """Floating rank with singular-value threshold ``rel_tol * s_max`` (inspection only)."""
    m = np.asarray(matrix, dtype=float)
    if 0 in m.shape:
        return 0
    s = np.linalg.svd(m, compute_uv=False)
    return int((s > rel_tol * s[0]).sum()) if s[0] > 0 else 0


def solve_last_factor(front: Sequence, pattern: SamplingPattern, basis: BasisChoice,
                      values, p: int = PRIME, rank: int | None = None) -> list[list[int]]:
    """Rows of the last factor from the basis samples, given the other factors.

    ``values`` maps observed d-tuples to sample values (mod ``p``).
    """
    if rank is None:
        rank = len(front[0][0])
    basis.validate(pattern, rank)
    out = []
    for y, entries in enumerate(basis.per_row):
        coeffs = []
        for x in entries:
            row = []
            for l in range(rank):
                c = 1
                for i, a in enumerate(front):
                    c = c * int(a[x[i]][l]) % p
                row.append(c)
            coeffs.append(row)
        out.append(solve_mod_p(coeffs, [values[x] for x in entries], p))
    return out


@dataclass(frozen=True)
class RankEstimate:
    rank: int
    per_trial: tuple[int, ...]
    retries: int = 0

    @property
    def stable_fraction(self) -> float:
        return sum(t == self.rank for t in self.per_trial) / len(self.per_trial)


def _trial_rng(seed: int, trial: int, attempt: int):
    return np.random.default_rng([int(seed), trial, attempt])


def _reduced_point(dims, rank, canon, basis_rows, X, rng, p):
    """Free-variable Jacobian at one canonical point, or None if the basis block is singular."""
    factors = canon.apply(random_factors(dims, rank, rng, p), rng, p)
    J = sample_jacobian(factors, X, p)
    free = ~np.concatenate([m.ravel() for m in canon.fixed_masks()])
    J = J[:, free]
    last_cols = J.shape[1] - dims[-1] * rank
    n_rows = len({int(X[i, -1]) for i in basis_rows})
    if rank_mod_p(J[np.ix_(basis_rows, np.arange(last_cols, J.shape[1]))], p) != rank * n_rows:
        return None
    return J


def reduced_rank(pattern: SamplingPattern, rank: int, trials: int = 3, seed: int = 0,
                 p: int = PRIME, basis: BasisChoice | None = None, j: int = 0, q=None,
                 entries=None) -> RankEstimate:
    """Independent polynomials left after eliminating the last factor.

    ``entries`` restricts the equations to a subset of the observed entries;
    the basis entries of every mode-d row it touches are added automatically.
    """
    p = check_prime(p)
    if basis is None:
        basis = default_basis(pattern, rank)
    canon = CanonicalPattern(pattern.dims, rank, j, q)
    basis_set = [x for row in basis.per_row for x in row]
    if entries is None:
        eqs = list(pattern.observed)
    else:
        extra = {tuple(x) for x in entries}
        rows = {x[-1] for x in extra}
        eqs = sorted(extra | {x for x in basis_set if x[-1] in rows})
    if not eqs:
        return RankEstimate(0, (0,) * trials)
    X = np.asarray(eqs, dtype=np.int64)
    index = {x: i for i, x in enumerate(eqs)}
    basis_rows = [index[x] for x in basis_set if x in index]
    n_rows = len({x[-1] for x in eqs})
    ranks = []
    retries = 0
    for t in range(trials):
        for attempt in range(MAX_RETRIES + 1):
            J = _reduced_point(pattern.dims, rank, canon, basis_rows, X,
                               _trial_rng(seed, t, attempt), p)
            if J is not None:
                break
            retries += 1
        else:
            raise SingularSystem(f"basis block singular after {MAX_RETRIES} re-draws")
        ranks.append(rank_mod_p(J, p) - rank * n_rows)
    return RankEstimate(max(ranks), tuple(ranks), retries)


def full_rank(pattern: SamplingPattern, rank: int, trials: int = 3, seed: int = 0,
              p: int = PRIME) -> RankEstimate:
    """Jacobian rank with every factor entry free."""
    p = check_prime(p)
    if pattern.size == 0:
        return RankEstimate(0, (0,) * trials)
    X = pattern.as_array()
    ranks = []
    for t in range(trials):
        factors = random_factors(pattern.dims, rank, _trial_rng(seed, t, 0), p)
        ranks.append(rank_mod_p(sample_jacobian(factors, X, p), p))
    return RankEstimate(max(ranks), tuple(ranks))


@functools.lru_cache(maxsize=256)
def variety_rank(dims: tuple[int, ...], rank: int, trials: int = 3, seed: int = 0,
                 p: int = PRIME) -> RankEstimate:
    """Dimension of the rank-``rank`` CP set of shape ``dims`` (full observation)."""
    return full_rank(SamplingPattern.full(dims), rank, trials, seed, p)


def generic_jacobian_rank(pattern: SamplingPattern, rank: int, mode: str = REDUCED,
                          trials: int = 3, seed: int = 0, p: int = PRIME, **kw) -> RankEstimate:
    if mode == REDUCED:
        report = check_row_occupancy(pattern, rank)
        if not report.ok:
            y = report.failing_rows[0]
            raise InsufficientRowSamples(y, report.counts[y], rank)
        return reduced_rank(pattern, rank, trials, seed, p, **kw)
    if mode == FULL:
        return full_rank(pattern, rank, trials, seed, p)
    if mode == VARIETY:
        return variety_rank(tuple(pattern.dims), rank, trials, seed, p)
    raise ValueError(f"unknown oracle mode {mode!r}")


@dataclass(frozen=True)
class OracleReport:
    dims: tuple[int, ...]
    rank: int
    required: int
    reduced_rank: int | None
    full_rank: int
    variety_rank: int
    trials: int
    seed: int
    prime: int
    occupancy_ok: bool
    reduced_trials: tuple[int, ...] = ()
    full_trials: tuple[int, ...] = ()
    notes: tuple[str, ...] = field(default=())

    @property
    def verdict_reduced(self) -> bool:
        """Finite iff the reduced rank reaches the required count."""
        return self.occupancy_ok and self.reduced_rank == self.required

    @property
    def verdict_variety(self) -> bool:
        """Finite iff the observed samples reach the dimension of the rank-r set."""
        return self.full_rank == self.variety_rank

    def as_dict(self) -> dict:
        return {
            "dims": list(self.dims), "rank": self.rank, "required_count": self.required,
            "reduced_rank": self.reduced_rank, "full_rank": self.full_rank,
            "variety_rank": self.variety_rank, "verdict_reduced": self.verdict_reduced,
            "verdict_variety": self.verdict_variety, "occupancy_ok": self.occupancy_ok,
            "trials": self.trials, "seed": self.seed, "field_prime": self.prime,
            "reduced_trials": list(self.reduced_trials), "full_trials": list(self.full_trials),
            "notes": list(self.notes),
        }


def oracle_report(pattern: SamplingPattern, rank: int, trials: int = 3, seed: int = 0,
                  p: int = PRIME, basis: BasisChoice | None = None, q=None) -> OracleReport:
    notes = []
    a1 = check_row_occupancy(pattern, rank).ok
    red = None
    if a1:
        red = reduced_rank(pattern, rank, trials, seed, p, basis=basis, q=q)
        if red.stable_fraction < 1:
            notes.append(f"reduced rank varied across trials: {list(red.per_trial)}")
    else:
        notes.append("a mode-d row has fewer samples than the rank; reduced rank undefined")
    full = full_rank(pattern, rank, trials, seed, p)
    if full.stable_fraction < 1:
        notes.append(f"full rank varied across trials: {list(full.per_trial)}")
    var = variety_rank(tuple(pattern.dims), rank, trials, seed, p)
    rep = OracleReport(tuple(pattern.dims), rank, required_count(pattern.dims, rank),
                       red.rank if red else None, full.rank, var.rank, trials, seed, p, a1,
                       red.per_trial if red else (), full.per_trial, tuple(notes))
    if a1 and rep.verdict_reduced != rep.verdict_variety:
        notes.append("reduced-count and variety verdicts disagree")
        rep = OracleReport(**{**rep.__dict__, "notes": tuple(notes)})
    return rep


def selection_reduced_rank(ct: ConstraintTensor, slice_ids: Sequence[int], trials: int = 3,
                           seed: int = 0, p: int = PRIME, q=None) -> int:
    """Reduced rank of the polynomials of a slice selection."""
    dims = tuple(ct.dims) + (len(ct.basis.per_row),)
    entries = [ct.slices[j].extra + (ct.slices[j].row,) for j in slice_ids]
    observed = {x for row in ct.basis.per_row for x in row}
    observed.update(x for s in ct.slices for x in s.sample_entries())
    pattern = SamplingPattern.from_entries(dims, observed)
    return reduced_rank(pattern, ct.rank, trials, seed, p, basis=ct.basis, q=q,
                        entries=entries).rank
