"""Construction of the constraint tensor from a sampling pattern and a rank.

For every row ``y`` of the last-mode matricization, ``r`` observed entries
(the basis) are spent on solving for row ``y`` of the last factor. Each
remaining observed entry of that row yields one polynomial in the other
factors, represented by a slice holding the ``r`` basis positions plus the
entry itself.
"""
from __future__ import annotations

from dataclasses import dataclass
from pathlib import Path
from typing import Sequence

import numpy as np

from .errors import InsufficientRowSamples, BasisNotObserved, ParseError
from .pattern import SamplingPattern, mode_counts, parse_pattern


@dataclass(frozen=True)
class OccupancyReport:
    rank: int
    counts: tuple[int, ...]

    @property
    def row_ok(self) -> tuple[bool, ...]:
        return tuple(c >= self.rank for c in self.counts)

    @property
    def ok(self) -> bool:
        return all(self.row_ok)

    @property
    def failing_rows(self) -> tuple[int, ...]:
        return tuple(y for y, c in enumerate(self.counts) if c < self.rank)


def check_row_occupancy(pattern: SamplingPattern, rank: int) -> OccupancyReport:
    """Per-row occupancy of the last-mode matricization against ``rank``."""
    if rank < 1:
        raise ValueError(f"rank must be positive, got {rank}")
    counts = [0] * pattern.dims[-1]
    for x in pattern.observed:
        counts[x[-1]] += 1
    return OccupancyReport(rank, tuple(counts))


@dataclass(frozen=True)
class BasisChoice:
    """``per_row[y]`` lists the ``r`` observed d-tuples used to solve factor row ``y``."""

    per_row: tuple[tuple[tuple[int, ...], ...], ...]

    def validate(self, pattern: SamplingPattern, rank: int) -> None:
        if len(self.per_row) != pattern.dims[-1]:
            raise BasisNotObserved(
                f"basis lists {len(self.per_row)} rows, pattern has {pattern.dims[-1]}")
        report = check_row_occupancy(pattern, rank)
        for y, entries in enumerate(self.per_row):
            if report.counts[y] < rank:
                raise InsufficientRowSamples(y, report.counts[y], rank)
            if len(entries) != rank or len(set(entries)) != rank:
                raise BasisNotObserved(
                    f"row {y}: basis needs exactly {rank} distinct entries, got {len(entries)}")
            for x in entries:
                if x[-1] != y:
                    raise BasisNotObserved(f"row {y}: basis entry {x} lies in row {x[-1]}")
                if x not in pattern:
                    raise BasisNotObserved(f"row {y}: basis entry {x} is not observed")


def default_basis(pattern: SamplingPattern, rank: int) -> BasisChoice:
    """Lexicographically smallest ``rank`` observed entries of every row."""
    report = check_row_occupancy(pattern, rank)
    if not report.ok:
        y = report.failing_rows[0]
        raise InsufficientRowSamples(y, report.counts[y], rank)
    rows: list[list[tuple[int, ...]]] = [[] for _ in range(pattern.dims[-1])]
    for x in pattern.observed:
        if len(rows[x[-1]]) < rank:
            rows[x[-1]].append(x)
    return BasisChoice(tuple(tuple(r) for r in rows))


def basis_from_entries(pattern: SamplingPattern, rank: int, entries) -> BasisChoice:
    """Group explicit basis entries by their last coordinate and validate them."""
    rows: list[list[tuple[int, ...]]] = [[] for _ in range(pattern.dims[-1])]
    for x in entries:
        x = tuple(int(c) for c in x)
        if not 0 <= x[-1] < pattern.dims[-1]:
            raise BasisNotObserved(f"basis entry {x} lies outside the pattern")
        rows[x[-1]].append(x)
    basis = BasisChoice(tuple(tuple(sorted(r)) for r in rows))
    basis.validate(pattern, rank)
    return basis


def random_basis(pattern: SamplingPattern, rank: int, rng) -> BasisChoice:
    """Uniformly random valid basis; used to probe basis dependence of verdicts."""
    rng = np.random.default_rng(rng)
    report = check_row_occupancy(pattern, rank)
    if not report.ok:
        y = report.failing_rows[0]
        raise InsufficientRowSamples(y, report.counts[y], rank)
    rows: list[list[tuple[int, ...]]] = [[] for _ in range(pattern.dims[-1])]
    for x in pattern.observed:
        rows[x[-1]].append(x)
    chosen = []
    for entries in rows:
        pick = rng.choice(len(entries), size=rank, replace=False)
        chosen.append(tuple(sorted(entries[i] for i in pick)))
    return BasisChoice(tuple(chosen))


def read_basis(path, pattern: SamplingPattern, rank: int, one_based: bool = False) -> BasisChoice:
    """Basis file: one full d-tuple per line, optionally preceded by a ``dims:`` header."""
    text = Path(path).read_text()
    if not any(line.strip().startswith("dims:") for line in text.splitlines()):
        text = "dims: " + " ".join(map(str, pattern.dims)) + "\n" + text
    parsed = parse_pattern(text, one_based=one_based)
    if parsed.dims != pattern.dims:
        raise ParseError(f"basis file dims {parsed.dims} differ from pattern dims {pattern.dims}")
    return basis_from_entries(pattern, rank, parsed.observed)


@dataclass(frozen=True)
class Slice:
    """One polynomial: ``basis`` and ``extra`` are positions over the first d-1 modes."""

    row: int
    basis: tuple[tuple[int, ...], ...]
    extra: tuple[int, ...]

    @property
    def support(self) -> tuple[tuple[int, ...], ...]:
        return self.basis + (self.extra,)

    def sample_entries(self) -> tuple[tuple[int, ...], ...]:
        """The observed d-way entries behind this slice (basis first)."""
        return tuple(p + (self.row,) for p in self.support)


@dataclass(frozen=True)
class ConstraintTensor:
    dims: tuple[int, ...]
    rank: int
    slices: tuple[Slice, ...]
    k: tuple[int, ...]
    basis: BasisChoice

    @property
    def K(self) -> int:
        return len(self.slices)

    @property
    def order(self) -> int:
        """Order d of the originating tensor."""
        return len(self.dims) + 1

    @property
    def block_of_slice(self) -> tuple[int, ...]:
        return tuple(s.row for s in self.slices)

    def nonzeros(self) -> frozenset:
        """Nonzero cells as ``(pos..., slice_index)`` tuples."""
        return frozenset(p + (j,) for j, s in enumerate(self.slices) for p in s.support)

    def mode_counts(self, slice_ids: Sequence[int]) -> tuple[int, ...]:
        return mode_counts((p for j in slice_ids for p in self.slices[j].support),
                           order=len(self.dims))

    def row_masks(self) -> np.ndarray:
        """``(K, d-1, W)`` uint64 bitsets of the rows each slice touches per mode."""
        words = max(1, -(-max(self.dims) // 64))
        masks = np.zeros((self.K, len(self.dims), words), dtype=np.uint64)
        for j, s in enumerate(self.slices):
            for p in s.support:
                for i, c in enumerate(p):
                    masks[j, i, c // 64] |= np.uint64(1) << np.uint64(c % 64)
        return masks

    def format(self, one_based: bool = False) -> str:
        """Pattern text over dims ``(n_1..n_{d-1}, K)`` with slice-to-row comments."""
        shift = 1 if one_based else 0
        lines = ["dims: " + " ".join(str(n) for n in self.dims + (self.K,))]
        lines.append(f"# rank {self.rank}; slice -> mode-d row")
        lines += [f"# slice {j + shift} row {s.row + shift}" for j, s in enumerate(self.slices)]
        lines += [" ".join(str(c + shift) for c in x) for x in sorted(self.nonzeros())]
        return "\n".join(lines) + "\n"

    def format_rows(self, one_based: bool = False) -> str:
        shift = 1 if one_based else 0
        return "".join(f"{j + shift} {s.row + shift}\n" for j, s in enumerate(self.slices))


def build_constraint_tensor(pattern: SamplingPattern, rank: int,
                            basis: BasisChoice | None = None) -> ConstraintTensor:
    """Constraint tensor of ``pattern`` for CP rank ``rank``.

    Slices are ordered by mode-d row, then by the lexicographic order of the
    non-basis entry. Rows with exactly ``rank`` observations contribute nothing.
    """
    if basis is None:
        basis = default_basis(pattern, rank)
    else:
        basis.validate(pattern, rank)
    rows: list[list[tuple[int, ...]]] = [[] for _ in range(pattern.dims[-1])]
    for x in pattern.observed:
        rows[x[-1]].append(x)
    slices = []
    k = []
    for y, entries in enumerate(rows):
        chosen = set(basis.per_row[y])
        base = tuple(x[:-1] for x in basis.per_row[y])
        extras = [x for x in entries if x not in chosen]
        k.append(len(extras))
        slices.extend(Slice(y, base, x[:-1]) for x in extras)
    ct = ConstraintTensor(pattern.dims[:-1], rank, tuple(slices), tuple(k), basis)
    assert ct.K == pattern.size - rank * pattern.dims[-1]
    return ct

