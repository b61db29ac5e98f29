"""Sampling patterns, unfoldings and the pattern text format.

A pattern is the set of observed cells of a d-way tensor. Indices are
0-based everywhere; the reader accepts 1-based files on request.

File format::

    dims: 3 3 3
    0 0 0
    0 1 0
    ...

or, for small instances, the same header followed by row-major 0/1
digit strings (no whitespace inside a string; strings are concatenated)::

    dims: 2 2 2
    1110
    1000
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from pathlib import Path
from typing import Iterable, Sequence

import numpy as np

from .errors import (BoundsError, DuplicateEntry, EmptyIndexSet, EmptyInput,
                     FullIndexSet, ModeOutOfRange, ParseError)


@dataclass(frozen=True)
class SamplingPattern:
    """Observed cells of an ``n_1 x ... x n_d`` tensor.

    ``observed`` is kept strictly sorted and duplicate free; construct
    through :meth:`from_entries` to have that done for you.
    """

    dims: tuple[int, ...]
    observed: tuple[tuple[int, ...], ...] = ()

    def __post_init__(self):
        dims = tuple(int(n) for n in self.dims)
        if len(dims) < 2:
            raise ValueError(f"a pattern needs at least 2 modes, got {len(dims)}")
        if any(n < 1 for n in dims):
            raise ValueError(f"dimension sizes must be positive, got {dims}")
        obs = tuple(tuple(int(c) for c in x) for x in self.observed)
        for x in obs:
            _check_bounds(x, dims)
        for a, b in zip(obs, obs[1:]):
            if a == b:
                raise DuplicateEntry(f"duplicate observed entry {a}")
            if a > b:
                raise ValueError("observed entries must be sorted lexicographically")
        object.__setattr__(self, "dims", dims)
        object.__setattr__(self, "observed", obs)

    @classmethod
    def from_entries(cls, dims: Sequence[int], entries: Iterable[Sequence[int]],
                     allow_duplicates: bool = False) -> "SamplingPattern":
        entries = [tuple(int(c) for c in x) for x in entries]
        unique = sorted(set(entries))
        if len(unique) != len(entries) and not allow_duplicates:
            seen = set()
            for x in entries:
                if x in seen:
                    raise DuplicateEntry(f"duplicate observed entry {x}")
                seen.add(x)
        return cls(tuple(dims), tuple(unique))

    @classmethod
    def full(cls, dims: Sequence[int]) -> "SamplingPattern":
        return cls(tuple(dims), tuple(np.ndindex(*dims)))

    @classmethod
    def from_dense(cls, mask) -> "SamplingPattern":
        mask = np.asarray(mask).astype(bool)
        return cls(mask.shape, tuple(tuple(int(c) for c in x) for x in np.argwhere(mask)))

    @property
    def order(self) -> int:
        return len(self.dims)

    @property
    def size(self) -> int:
        return len(self.observed)

    def __len__(self):
        return len(self.observed)

    def __contains__(self, x):
        return tuple(x) in self._lookup

    @property
    def _lookup(self) -> frozenset:
        cached = self.__dict__.get("_set")
        if cached is None:
            cached = frozenset(self.observed)
            object.__setattr__(self, "_set", cached)
        return cached

    def as_array(self) -> np.ndarray:
        """Observed tuples as an ``(N, d)`` int64 array."""
        if not self.observed:
            return np.zeros((0, self.order), dtype=np.int64)
        return np.asarray(self.observed, dtype=np.int64)

    def to_dense(self) -> np.ndarray:
        mask = np.zeros(self.dims, dtype=bool)
        for x in self.observed:
            mask[x] = True
        return mask

    def count_in(self, mode: int, index: int) -> int:
        """N_Omega of the slab where coordinate ``mode`` equals ``index``."""
        return sum(1 for x in self.observed if x[mode] == index)

    def with_entries(self, entries: Iterable[Sequence[int]]) -> "SamplingPattern":
        """A new pattern with ``entries`` added (already-observed ones are ignored)."""
        return SamplingPattern.from_entries(
            self.dims, list(self.observed) + [tuple(x) for x in entries],
            allow_duplicates=True)

    def permute_modes(self, perm: Sequence[int]) -> "SamplingPattern":
        """Pattern whose mode ``k`` is mode ``perm[k]`` of this one."""
        perm = tuple(perm)
        if sorted(perm) != list(range(self.order)):
            raise ValueError(f"{perm} is not a permutation of the modes")
        dims = tuple(self.dims[p] for p in perm)
        return SamplingPattern.from_entries(
            dims, (tuple(x[p] for p in perm) for x in self.observed))


def _check_bounds(x, dims):
    if len(x) != len(dims):
        raise BoundsError(f"entry {x} has {len(x)} coordinates, expected {len(dims)}")
    for c, n in zip(x, dims):
        if not 0 <= c < n:
            raise BoundsError(f"entry {x} is out of bounds for dims {dims}")


@dataclass(frozen=True)
class IndexSet:
    modes: tuple[int, ...]

    def __post_init__(self):
        modes = tuple(int(m) for m in self.modes)
        if not modes:
            raise EmptyIndexSet("index set must be nonempty")
        if any(b <= a for a, b in zip(modes, modes[1:])):
            raise ValueError(f"index set {modes} must be strictly increasing")
        object.__setattr__(self, "modes", modes)

    def complement(self, d: int) -> tuple[int, ...]:
        return tuple(i for i in range(d) if i not in self.modes)


class MixedRadix:
    """Bijection between coordinate tuples over ``sizes`` and ``range(prod(sizes))``.

    The first coordinate is the most significant digit.
    """

    def __init__(self, sizes: Sequence[int]):
        self.sizes = tuple(int(s) for s in sizes)
        self.total = math.prod(self.sizes)
        strides = []
        acc = 1
        for s in reversed(self.sizes):
            strides.append(acc)
            acc *= s
        self.strides = tuple(reversed(strides))

    def encode(self, coords: Sequence[int]) -> int:
        return sum(c * s for c, s in zip(coords, self.strides))

    def decode(self, index: int) -> tuple[int, ...]:
        out = []
        for s in self.strides:
            q, index = divmod(index, s)
            out.append(q)
        return tuple(out)

    def encode_array(self, coords: np.ndarray) -> np.ndarray:
        return np.asarray(coords, dtype=np.int64) @ np.asarray(self.strides, dtype=np.int64)


@dataclass(frozen=True)
class UnfoldingMatrix:
    """Binary ``N_I x N_Ibar`` matrix holding the pattern of an unfolding."""

    row_modes: tuple[int, ...]
    col_modes: tuple[int, ...]
    rows: int
    cols: int
    nonzeros: tuple[tuple[int, int], ...]
    row_map: MixedRadix = field(compare=False, repr=False)
    col_map: MixedRadix = field(compare=False, repr=False)

    def tensor_index(self, row: int, col: int) -> tuple[int, ...]:
        """Invert the row/column maps back to a d-way coordinate tuple."""
        d = len(self.row_modes) + len(self.col_modes)
        x = [0] * d
        for m, c in zip(self.row_modes, self.row_map.decode(row)):
            x[m] = c
        for m, c in zip(self.col_modes, self.col_map.decode(col)):
            x[m] = c
        return tuple(x)

    def row_occupancy(self) -> list[int]:
        counts = [0] * self.rows
        for i, _ in self.nonzeros:
            counts[i] += 1
        return counts

    def to_dense(self) -> np.ndarray:
        out = np.zeros((self.rows, self.cols), dtype=bool)
        for i, j in self.nonzeros:
            out[i, j] = True
        return out


def unfold(pattern: SamplingPattern, index_set) -> UnfoldingMatrix:
    """Unfolding of ``pattern`` with the modes of ``index_set`` indexing rows."""
    if not isinstance(index_set, IndexSet):
        index_set = IndexSet(tuple(index_set))
    d = pattern.order
    modes = index_set.modes
    if any(not 0 <= m < d for m in modes):
        raise ModeOutOfRange(f"index set {modes} not within modes 0..{d - 1}")
    if len(modes) == d:
        raise FullIndexSet("index set must be a proper subset of the modes")
    comp = index_set.complement(d)
    row_map = MixedRadix([pattern.dims[m] for m in modes])
    col_map = MixedRadix([pattern.dims[m] for m in comp])
    nz = sorted((row_map.encode([x[m] for m in modes]), col_map.encode([x[m] for m in comp]))
                for x in pattern.observed)
    return UnfoldingMatrix(modes, comp, row_map.total, col_map.total, tuple(nz),
                           row_map, col_map)


def matricization(pattern: SamplingPattern, mode: int) -> UnfoldingMatrix:
    """The ``mode``-th matricization (unfolding with a singleton index set)."""
    if not 0 <= mode < pattern.order:
        raise ModeOutOfRange(f"mode {mode} not within 0..{pattern.order - 1}")
    return unfold(pattern, IndexSet((mode,)))


def mode_counts(entries, order: int | None = None) -> tuple[int, ...]:
    """Number of distinct values of each coordinate among ``entries``.

    ``entries`` is a :class:`SamplingPattern` or any iterable of equal-length
    tuples (e.g. the union of constraint-tensor slice supports).
    """
    if isinstance(entries, SamplingPattern):
        entries = entries.observed
    entries = list(entries)
    if not entries:
        raise EmptyInput("mode counts of an empty set are undefined")
    order = order if order is not None else len(entries[0])
    return tuple(len({x[i] for x in entries}) for i in range(order))


def format_pattern(pattern: SamplingPattern, one_based: bool = False,
                   comments: Sequence[str] = ()) -> str:
    shift = 1 if one_based else 0
    lines = ["dims: " + " ".join(str(n) for n in pattern.dims)]
    lines += ["# " + c for c in comments]
    lines += [" ".join(str(c + shift) for c in x) for x in pattern.observed]
    return "\n".join(lines) + "\n"


def write_pattern(pattern: SamplingPattern, path, one_based: bool = False) -> None:
    Path(path).write_text(format_pattern(pattern, one_based=one_based))


def parse_pattern(text: str, one_based: bool = False) -> SamplingPattern:
    dims = None
    entries = []
    digits = []
    seen = {}
    shift = 1 if one_based else 0
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if dims is None:
            if not line.startswith("dims:"):
                raise ParseError("expected header 'dims: n_1 ... n_d'", lineno)
            try:
                dims = tuple(int(t) for t in line[5:].split())
            except ValueError:
                raise ParseError("non-integer dimension size", lineno) from None
            if len(dims) < 2 or any(n < 1 for n in dims):
                raise ParseError(f"invalid dims {dims}", lineno)
            continue
        tokens = line.split()
        if len(tokens) == 1 and set(tokens[0]) <= {"0", "1"}:
            if entries:
                raise ParseError("dense digits mixed with coordinate lines", lineno)
            digits.append(tokens[0])
            continue
        if digits:
            raise ParseError("coordinate line mixed with dense digits", lineno)
        try:
            x = tuple(int(t) - shift for t in tokens)
        except ValueError:
            raise ParseError(f"non-integer coordinate in {line!r}", lineno) from None
        if len(x) != len(dims):
            raise ParseError(f"expected {len(dims)} coordinates, got {len(x)}", lineno)
        try:
            _check_bounds(x, dims)
        except BoundsError as exc:
            raise BoundsError(f"line {lineno}: {exc}") from None
        if x in seen:
            raise DuplicateEntry(f"line {lineno}: duplicate entry {x} (first on line {seen[x]})")
        seen[x] = lineno
        entries.append(x)
    if dims is None:
        raise ParseError("missing 'dims:' header", 1)
    if digits:
        flat = "".join(digits)
        if len(flat) != math.prod(dims):
            raise ParseError(f"dense body has {len(flat)} digits, expected {math.prod(dims)}")
        mask = np.array([c == "1" for c in flat], dtype=bool).reshape(dims)
        return SamplingPattern.from_dense(mask)
    return SamplingPattern.from_entries(dims, entries)


def read_pattern(path, one_based: bool = False) -> SamplingPattern:
    return parse_pattern(Path(path).read_text(), one_based=one_based)
