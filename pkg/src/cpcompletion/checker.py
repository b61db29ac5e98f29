"""Counting conditions on constraint-tensor slice selections.

Every slice touches a set of rows in each of the first d-1 modes; a
selection's mode counts ``m`` are the sizes of the unions of those sets.
Subset families are evaluated in bulk: the row sets are uint64 bitsets and
the unions over all ``2^t`` subsets of a selection are built by doubling.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable, Sequence

import numpy as np

from .constraint import ConstraintTensor, build_constraint_tensor, check_row_occupancy
from .errors import EmptySelection
from .pattern import SamplingPattern

FINITE = "finite"
NOT_FINITE = "not_finite"
UNIQUE = "unique"
INCONCLUSIVE = "inconclusive"
NOT_APPLICABLE = "not_applicable"
VERIFIED = "verified"
REFUTED = "refuted"


@dataclass(frozen=True)
class CheckerLimits:
    max_subset_exhaustive: int = 20
    max_candidate_search: int = 10_000
    random_subsets: int = 2_000
    seed: int = 0

    def __post_init__(self):
        if min(self.max_subset_exhaustive, self.max_candidate_search, self.random_subsets) < 1:
            raise ValueError("checker limits must be positive")


def required_count(dims: Sequence[int], rank: int) -> int:
    """Independent polynomials needed for finite completability of a ``dims`` tensor."""
    d = len(dims)
    return rank * sum(dims[:-1]) - rank * rank - rank * (d - 2)


def upper_bound_from_counts(m: Sequence[int], rank: int, d: int) -> int:
    return rank * (sum(m) - min(max(m), rank) - (d - 2))


@dataclass(frozen=True)
class SliceSelection:
    slice_ids: tuple[int, ...]
    m: tuple[int, ...]

    @classmethod
    def of(cls, ct: ConstraintTensor, slice_ids: Sequence[int]) -> "SliceSelection":
        ids = tuple(sorted(int(j) for j in slice_ids))
        if len(set(ids)) != len(ids):
            raise ValueError(f"duplicate slice ids in {slice_ids}")
        if any(not 0 <= j < ct.K for j in ids):
            raise IndexError(f"slice ids {ids} out of range for K={ct.K}")
        m = ct.mode_counts(ids) if ids else (0,) * len(ct.dims)
        return cls(ids, m)

    def __len__(self):
        return len(self.slice_ids)


def independence_upper_bound(ct: ConstraintTensor, sel) -> int:
    """Upper bound on the number of independent polynomials in a selection."""
    if not isinstance(sel, SliceSelection):
        sel = SliceSelection.of(ct, sel)
    if not sel.slice_ids:
        raise EmptySelection("selection is empty")
    return upper_bound_from_counts(sel.m, ct.rank, ct.order)


def satisfies_count_condition(ct: ConstraintTensor, sel) -> bool:
    """Whether the selection's own counts allow all of its slices to be independent."""
    if not isinstance(sel, SliceSelection):
        sel = SliceSelection.of(ct, sel)
    return independence_upper_bound(ct, sel) >= len(sel)


# Conditions map (union counts (N, M), subset sizes (N,)) -> ok (N,).
Condition = Callable[[np.ndarray, np.ndarray], np.ndarray]


def count_condition(rank: int, d: int) -> Condition:
    def ok(counts, sizes):
        bound = rank * (counts.sum(axis=-1) - np.minimum(counts.max(axis=-1), rank) - (d - 2))
        return bound >= sizes
    return ok


def surplus_condition(mode: int, surplus: int) -> Condition:
    """``m_mode(subset) - surplus >= |subset|``."""
    def ok(counts, sizes):
        return counts[:, mode] - surplus >= sizes
    return ok


def _counts(ors: np.ndarray) -> np.ndarray:
    return np.bitwise_count(ors).sum(axis=-1, dtype=np.int64)


class _SubsetTable:
    """Unions and sizes for every subset of a growing list of slices."""

    __slots__ = ("ors", "sizes")

    def __init__(self, ors, sizes):
        self.ors = ors
        self.sizes = sizes

    @classmethod
    def empty(cls, modes: int, words: int):
        return cls(np.zeros((1, modes, words), dtype=np.uint64), np.zeros(1, dtype=np.int64))

    def try_extend(self, mask: np.ndarray, cond: Condition):
        new = self.ors | mask
        sizes = self.sizes + 1
        if not cond(_counts(new), sizes).all():
            return None
        return _SubsetTable(np.concatenate([self.ors, new]), np.concatenate([self.sizes, sizes]))

    @classmethod
    def build(cls, masks: np.ndarray):
        """Table over all subsets; index bit ``j`` selects ``masks[j]``."""
        t = cls.empty(masks.shape[1], masks.shape[2])
        ors, sizes = t.ors, t.sizes
        for mask in masks:
            ors = np.concatenate([ors, ors | mask])
            sizes = np.concatenate([sizes, sizes + 1])
        return cls(ors, sizes)


def _bits(index: int) -> list[int]:
    return [j for j in range(index.bit_length()) if index >> j & 1]


def _lexmin(indices: np.ndarray) -> int:
    """Subset index whose sorted member tuple is lexicographically smallest."""
    cand = np.asarray(indices, dtype=np.int64)
    rest = cand.copy()
    while True:
        low = rest & -rest
        nonzero = low != 0
        if not nonzero.any():
            return int(cand[0])
        # A set that has run out of members precedes its extensions.
        if not nonzero.all():
            cand, rest = cand[~nonzero], rest[~nonzero]
            continue
        keep = low == low.min()
        cand, rest = cand[keep], rest[keep] ^ low[keep]
        if len(cand) == 1:
            return int(cand[0])


@dataclass(frozen=True)
class SubsetCheck:
    status: str
    witness: tuple[int, ...] | None = None
    exhaustive: bool = False
    subsets_checked: int = 0


def all_subsets_check(masks: np.ndarray, ids: Sequence[int], cond: Condition,
                      limits: CheckerLimits = CheckerLimits()) -> SubsetCheck:
    """Check ``cond`` on every nonempty subset of ``ids`` (rows of ``masks``)."""
    ids = list(ids)
    t = len(ids)
    if t == 0:
        return SubsetCheck(VERIFIED, exhaustive=True)
    sub = masks[ids]
    if t <= limits.max_subset_exhaustive:
        table = _SubsetTable.build(sub)
        ok = cond(_counts(table.ors[1:]), table.sizes[1:])
        if ok.all():
            return SubsetCheck(VERIFIED, exhaustive=True, subsets_checked=len(ok))
        bad = np.flatnonzero(~ok) + 1
        smallest = table.sizes[bad].min()
        idx = _lexmin(bad[table.sizes[bad] == smallest])
        return SubsetCheck(REFUTED, tuple(ids[j] for j in _bits(idx)), True, len(ok))

    # Too many subsets: small subsets exhaustively, then seeded random ones.
    rng = np.random.default_rng(limits.seed)
    checked = 0
    singles = sub
    ok = cond(_counts(singles), np.ones(t, dtype=np.int64))
    checked += t
    if not ok.all():
        return SubsetCheck(REFUTED, (ids[int(np.flatnonzero(~ok)[0])],), False, checked)
    a, b = np.triu_indices(t, k=1)
    ok = cond(_counts(sub[a] | sub[b]), np.full(len(a), 2, dtype=np.int64))
    checked += len(a)
    if not ok.all():
        k = int(np.flatnonzero(~ok)[0])
        return SubsetCheck(REFUTED, (ids[a[k]], ids[b[k]]), False, checked)
    for _ in range(limits.random_subsets):
        size = int(rng.integers(3, t + 1))
        pick = np.sort(rng.choice(t, size=size, replace=False))
        union = np.bitwise_or.reduce(sub[pick], axis=0)[None]
        checked += 1
        if not cond(_counts(union), np.array([size]))[0]:
            return SubsetCheck(REFUTED, tuple(ids[j] for j in pick), False, checked)
    return SubsetCheck(INCONCLUSIVE, exhaustive=False, subsets_checked=checked)


def all_subsets_satisfy_count(ct: ConstraintTensor, sel, limits: CheckerLimits = CheckerLimits()
                            ) -> SubsetCheck:
    if not isinstance(sel, SliceSelection):
        sel = SliceSelection.of(ct, sel)
    if not sel.slice_ids:
        raise EmptySelection("selection is empty")
    return all_subsets_check(ct.row_masks(), sel.slice_ids, count_condition(ct.rank, ct.order),
                             limits)


class _BudgetExhausted(Exception):
    pass


def _search(masks: np.ndarray, candidates: Sequence[int], target: int, cond: Condition,
            budget: int):
    """First-fit search with backtracking for ``target`` candidates whose every subset
    satisfies ``cond``.

    Candidates are tried in the given order, so the first hit is the
    lexicographically smallest such set. Returns ``(ids or None, complete, nodes)``;
    ``complete`` means the search space was exhausted within budget.
    """
    candidates = list(candidates)
    nodes = 0

    def dfs(table, chosen, start):
        nonlocal nodes
        if len(chosen) == target:
            return chosen
        need = target - len(chosen)
        for pos in range(start, len(candidates) - need + 1):
            nodes += 1
            if nodes > budget:
                raise _BudgetExhausted
            ext = table.try_extend(masks[candidates[pos]], cond)
            if ext is not None:
                found = dfs(ext, chosen + [candidates[pos]], pos + 1)
                if found is not None:
                    return found
        return None

    start = _SubsetTable.empty(masks.shape[1], masks.shape[2])
    try:
        found = dfs(start, [], 0)
    except _BudgetExhausted:
        return None, False, nodes
    return found, True, nodes


@dataclass(frozen=True)
class FiniteResult:
    verdict: str
    required: int
    K: int
    witness: SliceSelection | None = None
    reason: str = ""
    max_independent: int | None = None
    nodes: int = 0

    @property
    def conclusive(self) -> bool:
        return self.verdict != INCONCLUSIVE


def check_finite(ct: ConstraintTensor, dims: Sequence[int] | None = None,
                 limits: CheckerLimits = CheckerLimits()) -> FiniteResult:
    """Search for ``required_count`` slices all of whose subsets pass the count condition.

    ``dims`` are the full d-way dims; by default ``ct.dims`` plus the number of
    mode-d rows recorded in the basis.
    """
    if dims is None:
        dims = tuple(ct.dims) + (len(ct.basis.per_row),)
    need = required_count(dims, ct.rank)
    K = ct.K
    if need <= 0:
        return FiniteResult(FINITE, need, K, SliceSelection((), (0,) * len(ct.dims)),
                            "required count is not positive")
    if K < need:
        return FiniteResult(NOT_FINITE, need, K, reason=f"K={K} < required {need}")
    masks = ct.row_masks()
    cond = count_condition(ct.rank, ct.order)
    if K <= limits.max_subset_exhaustive:
        table = _SubsetTable.build(masks)
        ok = np.ones(len(table.sizes), dtype=bool)
        ok[1:] = cond(_counts(table.ors[1:]), table.sizes[1:])
        # AND over all subsets: after pass j, ind[S] covers every subset differing in bits <= j.
        ind = ok.copy()
        for j in range(K):
            view = ind.reshape(-1, 2, 1 << j)
            view[:, 1, :] &= view[:, 0, :]
        best = int(table.sizes[ind].max())
        hits = np.flatnonzero(ind & (table.sizes == need))
        if len(hits) == 0:
            return FiniteResult(NOT_FINITE, need, K,
                                reason=f"exhaustive: largest independent selection has {best}",
                                max_independent=best)
        witness = SliceSelection.of(ct, _bits(_lexmin(hits)))
        return FiniteResult(FINITE, need, K, witness, "exhaustive", max_independent=best)
    if need > limits.max_subset_exhaustive:
        return FiniteResult(INCONCLUSIVE, need, K,
                            reason=f"required count {need} exceeds exhaustive cap "
                                   f"{limits.max_subset_exhaustive}")
    found, complete, nodes = _search(masks, range(K), need, cond, limits.max_candidate_search)
    if found is not None:
        return FiniteResult(FINITE, need, K, SliceSelection.of(ct, found), "search", nodes=nodes)
    if complete:
        return FiniteResult(NOT_FINITE, need, K, reason="search space exhausted", nodes=nodes)
    return FiniteResult(INCONCLUSIVE, need, K, reason="candidate budget exhausted", nodes=nodes)


@dataclass(frozen=True)
class UniqueWitness:
    finite_part: SliceSelection
    extras: tuple[SliceSelection, ...]


@dataclass(frozen=True)
class UniqueResult:
    verdict: str
    finite: FiniteResult | None
    witness: UniqueWitness | None = None
    reason: str = ""

    @property
    def conclusive(self) -> bool:
        return self.verdict != INCONCLUSIVE


def unique_requirements(dims: Sequence[int], rank: int) -> list[tuple[int, int, int]]:
    """``(mode, surplus, size)`` for each of the 2d-2 extra selections."""
    front = list(dims[:-1])
    reqs = [(i, 1, n - 1) for i, n in enumerate(front)]
    reqs += [(i, rank, max(n - rank, 0)) for i, n in enumerate(front)]
    return reqs


def check_unique(ct: ConstraintTensor, dims: Sequence[int] | None = None,
                 limits: CheckerLimits = CheckerLimits()) -> UniqueResult:
    """Finite witness plus 2d-2 disjoint extra selections meeting the per-mode surplus rules.

    The conditions are sufficient only; failure to find a witness is reported
    as inconclusive.
    """
    if dims is None:
        dims = tuple(ct.dims) + (len(ct.basis.per_row),)
    fin = check_finite(ct, dims, limits)
    if fin.verdict == NOT_FINITE:
        return UniqueResult(NOT_APPLICABLE, fin, reason="not finitely completable")
    if fin.verdict != FINITE:
        return UniqueResult(INCONCLUSIVE, fin, reason="finite check inconclusive")
    masks = ct.row_masks()
    used = set(fin.witness.slice_ids)
    extras = []
    for mode, surplus, size in unique_requirements(dims, ct.rank):
        if size == 0:
            extras.append(SliceSelection((), (0,) * len(ct.dims)))
            continue
        if size > limits.max_subset_exhaustive:
            return UniqueResult(INCONCLUSIVE, fin,
                                reason=f"selection size {size} exceeds exhaustive cap")
        remaining = [j for j in range(ct.K) if j not in used]
        if len(remaining) < size:
            return UniqueResult(INCONCLUSIVE, fin,
                                reason=f"only {len(remaining)} spare slices for mode {mode} "
                                       f"selection of size {size}")
        found, _, _ = _search(masks, remaining, size, surplus_condition(mode, surplus),
                              limits.max_candidate_search)
        if found is None:
            return UniqueResult(INCONCLUSIVE, fin,
                                reason=f"no selection for mode {mode} with surplus {surplus}")
        used.update(found)
        extras.append(SliceSelection.of(ct, found))
    return UniqueResult(UNIQUE, fin, UniqueWitness(fin.witness, tuple(extras)))


def verify_unique_witness(ct: ConstraintTensor, witness: UniqueWitness,
                          dims: Sequence[int]) -> bool:
    """Independent exhaustive re-check of a unique witness (small selections only)."""
    masks = ct.row_masks()
    sels = [witness.finite_part, *witness.extras]
    ids = [j for s in sels for j in s.slice_ids]
    if len(ids) != len(set(ids)):
        return False
    if len(witness.finite_part) != max(required_count(dims, ct.rank), 0):
        return False
    if witness.finite_part.slice_ids and not brute_force_all_subsets(
            masks, witness.finite_part.slice_ids, count_condition(ct.rank, ct.order)):
        return False
    for sel, (mode, surplus, size) in zip(witness.extras, unique_requirements(dims, ct.rank)):
        if len(sel) != size:
            return False
        if sel.slice_ids and not brute_force_all_subsets(
                masks, sel.slice_ids, surplus_condition(mode, surplus)):
            return False
    return True


def brute_force_all_subsets(masks: np.ndarray, ids: Sequence[int], cond: Condition) -> bool:
    """Plain itertools enumeration, independent of the doubling tables."""
    from itertools import combinations
    ids = list(ids)
    for size in range(1, len(ids) + 1):
        for combo in combinations(ids, size):
            union = np.bitwise_or.reduce(masks[list(combo)], axis=0)[None]
            if not cond(_counts(union), np.array([size]))[0]:
                return False
    return True


@dataclass(frozen=True)
class PatternVerdict:
    """Verdicts for a raw pattern, including the row-occupancy short-circuit."""

    finite: FiniteResult
    unique: UniqueResult | None = None
    constraint: ConstraintTensor | None = field(default=None, repr=False)


def check_pattern(pattern: SamplingPattern, rank: int, limits: CheckerLimits = CheckerLimits(),
                  basis=None, unique: bool = False) -> PatternVerdict:
    """Build the constraint tensor and run the finite (and optionally unique) checks.

    A mode-d row with fewer than ``rank`` samples leaves a row of the last factor
    underdetermined, so it is reported as not finite without a search.
    """
    need = required_count(pattern.dims, rank)
    report = check_row_occupancy(pattern, rank)
    if not report.ok:
        fin = FiniteResult(NOT_FINITE, need, 0,
                           reason=f"rows below rank occupancy: {list(report.failing_rows)}")
        return PatternVerdict(fin, UniqueResult(NOT_APPLICABLE, fin, reason=fin.reason)
                              if unique else None)
    ct = build_constraint_tensor(pattern, rank, basis)
    if unique:
        res = check_unique(ct, pattern.dims, limits)
        return PatternVerdict(res.finite, res, ct)
    return PatternVerdict(check_finite(ct, pattern.dims, limits), None, ct)
