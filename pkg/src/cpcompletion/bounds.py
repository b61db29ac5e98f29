"""Closed-form sample-complexity bounds for an ``n x ... x n`` tensor of order d.

``log`` is the natural logarithm throughout. Strict inequalities of the form
``l > value`` are reported as ``value`` itself; :func:`integer_samples` turns a
bound into the smallest admissible integer count. Regime conditions never
change a value, they are attached as flags.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field

from .errors import InvalidEpsilon, InvalidIsize, OrderTooSmall


@dataclass(frozen=True)
class BoundParams:
    n: int
    d: int
    r: int
    eps: float
    isize: int | None = None
    k: int | None = None

    def __post_init__(self):
        _check_eps(self.eps)
        if min(self.n, self.d, self.r) < 1:
            raise ValueError("n, d and r must be positive")


@dataclass(frozen=True)
class BoundResult:
    name: str
    per_column_l: float
    columns: float
    total_samples: float
    probability_bound: float | None = None
    success_probability: float | None = None
    applicability: tuple[tuple[str, bool], ...] = field(default=())

    @property
    def in_regime(self) -> bool:
        return all(ok for _, ok in self.applicability)

    def as_dict(self, integer: bool = False) -> dict:
        out = {
            "name": self.name,
            "per_column_l": integer_samples(self.per_column_l) if integer else self.per_column_l,
            "columns": self.columns,
            "total_samples": (self.columns * integer_samples(self.per_column_l) if integer
                              else self.total_samples),
            "applicability": {c: ok for c, ok in self.applicability},
            "in_regime": self.in_regime,
        }
        if self.probability_bound is not None:
            out["probability_bound"] = self.probability_bound
            out["success_probability"] = self.success_probability
        return out


def _check_eps(eps):
    if not 0 < eps < 1:
        raise InvalidEpsilon(f"epsilon must lie in (0, 1), got {eps}")


def integer_samples(value: float) -> int:
    """Smallest integer strictly above ``value``."""
    return math.floor(value) + 1


def matrix_bound_l(n: int, k: int, eps: float) -> float:
    """Per-column samples for finite completability of an n x N rank-k matrix."""
    _check_eps(eps)
    return max(12 * math.log(n / eps) + 12, 2 * k)


def matrix_bound(n: int, k: int, eps: float, N: int | None = None) -> BoundResult:
    flags = [("k <= n/6", k <= n / 6)]
    if N is not None:
        flags.append(("k(n-k) <= N", k * (n - k) <= N))
    l = matrix_bound_l(n, k, eps)
    cols = N if N is not None else math.nan
    return BoundResult("matrix", l, cols, cols * l, applicability=tuple(flags))


def unfolding_bound(n: int, d: int, r: int, eps: float, isize: int) -> BoundResult:
    """Samples needed when one unfolding with ``isize`` row modes is treated as a matrix."""
    _check_eps(eps)
    if not 1 <= isize < d:
        raise InvalidIsize(f"|I| must satisfy 1 <= |I| < d, got {isize} for d={d}")
    log_rows = isize * math.log(n)
    l = max(12 * (log_rows + math.log(r) - math.log(eps)) + 12, 2 * r)
    cols = float(n) ** (d - isize)
    rows = float(n) ** isize
    flags = (
        ("|I| < d/2", isize < d / 2),
        ("r <= n/6", r <= n / 6),
        ("r(N_I - r) <= N_Ibar", r * (rows - r) <= cols),
    )
    return BoundResult(f"unfolding(|I|={isize})", l, cols, cols * l, applicability=flags)


def best_isize(d: int) -> int:
    if d < 3:
        raise OrderTooSmall(f"the unfolding bound needs d >= 3, got {d}")
    return (d - 1) // 2


def best_unfolding_bound(n: int, d: int, r: int, eps: float) -> BoundResult:
    return unfolding_bound(n, d, r, eps, best_isize(d))


def _cp_l(n, d, r, eps, n_scale, r_scale):
    return max(27 * math.log(n_scale * n / eps)
               + 9 * math.log(r_scale * r * (d - 2) / eps) + 18, 6 * r)


def _check_order(d):
    if d <= 2:
        raise OrderTooSmall(f"the CP bounds need d > 2, got {d}")


def cp_finite_bound(n: int, d: int, r: int, eps: float) -> BoundResult:
    """Samples needed for finite completability via the constraint-tensor analysis."""
    _check_eps(eps)
    _check_order(d)
    l = _cp_l(n, d, r, eps, 1, 2)
    flags = (("d > 2", True), ("n > 200", n > 200), ("n > r(d-2)", n > r * (d - 2)),
             ("r <= n/6", r <= n / 6))
    cols = float(n) ** 2
    return BoundResult("cp-finite", l, cols, cols * l, applicability=flags)


def cp_unique_bound(n: int, d: int, r: int, eps: float) -> BoundResult:
    """Samples needed for unique completability via the constraint-tensor analysis."""
    _check_eps(eps)
    _check_order(d)
    l = _cp_l(n, d, r, eps, 2, 8)
    flags = (("d > 2", True), ("n > 200", n > 200),
             ("n > (r+2)(d-2)", n > (r + 2) * (d - 2)), ("r <= n/6", r <= n / 6))
    cols = float(n) ** 2
    return BoundResult("cp-unique", l, cols, cols * l, applicability=flags)


def sampling_probability_bound(n: int, d: int, r: int, eps: float,
                               variant: str = "finite") -> BoundResult:
    """Sampling probability above which the CP per-column count holds w.h.p.

    ``probability_bound = l / n^(d-2) + n^(-(d-2)/4)``; ``success_probability``
    is ``(1 - eps) (1 - exp(-sqrt(n^(d-2)) / 2))^(n^2)``.
    """
    if variant == "finite":
        base = cp_finite_bound(n, d, r, eps)
    elif variant == "unique":
        base = cp_unique_bound(n, d, r, eps)
    else:
        raise ValueError(f"variant must be 'finite' or 'unique', got {variant!r}")
    col_len = float(n) ** (d - 2)
    p = base.per_column_l / col_len + col_len ** -0.25
    tail = math.exp(-math.sqrt(col_len) / 2)
    success = (1 - eps) * math.exp(float(n) ** 2 * math.log1p(-tail))
    return BoundResult(f"probability-{variant}", base.per_column_l, base.columns,
                       base.total_samples, p, success,
                       base.applicability + (("p <= 1", p <= 1),))


def figure1_table(n: int = 1000, d: int = 7, r_min: int = 1, r_max: int = 150,
                  eps: float = 0.001) -> list[tuple[int, float, float]]:
    """Rows ``(r, unfolding_total, cp_total)`` comparing the two finite-completability bounds."""
    if r_min > r_max:
        raise ValueError(f"r_min={r_min} exceeds r_max={r_max}")
    return [(r, best_unfolding_bound(n, d, r, eps).total_samples,
             cp_finite_bound(n, d, r, eps).total_samples)
            for r in range(r_min, r_max + 1)]
