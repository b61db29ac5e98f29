"""Exact linear algebra over a prime field with int64 numpy arrays.

All values are kept in ``[0, p)`` with ``p < 2**31`` so that a product of
two residues fits in a signed 64-bit integer.
"""
from __future__ import annotations

import numpy as np

from .errors import FieldTooSmall, SingularSystem

PRIME = 2**31 - 1


def check_prime(p: int) -> int:
    p = int(p)
    if p <= 10**6:
        raise FieldTooSmall(f"field prime {p} must exceed 10^6 for generic-rank estimates")
    if p >= 2**31:
        raise ValueError(f"field prime {p} must be below 2^31 for int64 arithmetic")
    if pow(2, p - 1, p) != 1 or pow(3, p - 1, p) != 1:
        raise ValueError(f"{p} is not prime")
    return p


def rank_mod_p(matrix, p: int = PRIME) -> int:
    """Rank of ``matrix`` over GF(p) by row reduction."""
    a = np.array(matrix, dtype=np.int64) % p
    if a.ndim != 2 or 0 in a.shape:
        return 0
    rows, cols = a.shape
    rank = 0
    for c in range(cols):
        if rank == rows:
            break
        nz = np.flatnonzero(a[rank:, c])
        if len(nz) == 0:
            continue
        piv = rank + int(nz[0])
        if piv != rank:
            a[[rank, piv], c:] = a[[piv, rank], c:]
        inv = pow(int(a[rank, c]), p - 2, p)
        a[rank, c:] = a[rank, c:] * inv % p
        below = np.flatnonzero(a[rank + 1:, c]) + rank + 1
        if len(below):
            a[below, c:] = (a[below, c:] - np.outer(a[below, c], a[rank, c:])) % p
        rank += 1
    return rank


def solve_mod_p(a, b, p: int = PRIME) -> list[int]:
    """Solve the square system ``a x = b`` over GF(p) with Python integers."""
    n = len(a)
    m = [[int(v) % p for v in row] + [int(bv) % p] for row, bv in zip(a, b)]
    for c in range(n):
        piv = next((i for i in range(c, n) if m[i][c]), None)
        if piv is None:
            raise SingularSystem("coefficient matrix is singular over the field")
        m[c], m[piv] = m[piv], m[c]
        inv = pow(m[c][c], p - 2, p)
        m[c] = [v * inv % p for v in m[c]]
        for i in range(n):
            if i != c and m[i][c]:
                f = m[i][c]
                m[i] = [(vi - f * vc) % p for vi, vc in zip(m[i], m[c])]
    return [row[n] for row in m]


def random_nonzero(rng, shape, p: int = PRIME) -> np.ndarray:
    return rng.integers(1, p, size=shape, dtype=np.int64)
