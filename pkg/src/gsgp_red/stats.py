"""Wilcoxon signed-rank test and median helpers."""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Sequence

import numpy as np

EXACT_MAX_N = 25
MIN_NONZERO = 5


@dataclass(frozen=True)
class WilcoxonResult:
    statistic: float  # min(W+, W-)
    w_plus: float
    w_minus: float
    n: int  # non-zero differences
    p_value: float | None
    reject: bool
    direction: int  # sign of the median difference x - y when rejected, else 0
    method: str  # "exact", "normal" or "inconclusive"

    @property
    def inconclusive(self) -> bool:
        return self.method == "inconclusive"


def average_ranks(values: Sequence[float]) -> np.ndarray:
    """1-based ranks with ties sharing the mean of their positions."""
    a = np.asarray(values, dtype=float)
    order = np.argsort(a, kind="mergesort")
    ranks = np.empty(len(a))
    i = 0
    while i < len(a):
        j = i
        while j + 1 < len(a) and a[order[j + 1]] == a[order[i]]:
            j += 1
        ranks[order[i : j + 1]] = (i + j) / 2 + 1
        i = j + 1
    return ranks


def _exact_lower_tail(doubled_ranks: Sequence[int], t2: int) -> float:
    """P(W+ <= t2 / 2) under random signs, by subset-sum counting."""
    total = sum(doubled_ranks)
    counts = [0] * (total + 1)
    counts[0] = 1
    for r in doubled_ranks:
        for s in range(total, r - 1, -1):
            counts[s] += counts[s - r]
    return sum(counts[: t2 + 1]) / 2 ** len(doubled_ranks)


def wilcoxon_signed_rank(x, y, alpha: float = 0.05) -> WilcoxonResult:
    """Two-sided paired test of ``x`` against ``y``.

    Zero differences are discarded and tied magnitudes get average ranks. The
    null distribution is enumerated exactly for up to 25 non-zero differences;
    larger samples use the normal approximation with tie and continuity
    corrections.
    """
    x = np.asarray(x, dtype=float)
    y = np.asarray(y, dtype=float)
    if x.shape != y.shape:
        raise ValueError(f"samples differ in length: {x.shape} vs {y.shape}")
    d = x - y
    d = d[d != 0]
    n = len(d)
    if n < MIN_NONZERO:
        return WilcoxonResult(0.0, 0.0, 0.0, n, None, False, 0, "inconclusive")
    ranks = average_ranks(np.abs(d))
    w_plus = float(ranks[d > 0].sum())
    w_minus = float(ranks[d < 0].sum())
    stat = min(w_plus, w_minus)
    if n <= EXACT_MAX_N:
        doubled = [int(round(2 * r)) for r in ranks]
        p = min(1.0, 2 * _exact_lower_tail(doubled, int(round(2 * stat))))
        method = "exact"
    else:
        mean = n * (n + 1) / 4
        _, tie_counts = np.unique(np.abs(d), return_counts=True)
        var = n * (n + 1) * (2 * n + 1) / 24 - float(np.sum(tie_counts**3 - tie_counts)) / 48
        diff = w_plus - mean
        z = (abs(diff) - 0.5) / math.sqrt(var) if var > 0 else 0.0
        p = min(1.0, math.erfc(max(z, 0.0) / math.sqrt(2)))
        method = "normal"
    reject = p <= alpha
    direction = int(np.sign(np.median(d))) if reject else 0
    return WilcoxonResult(stat, w_plus, w_minus, n, p, reject, direction, method)


def median(values: Sequence[float]) -> float:
    """Middle element, or the mean of the lower and upper middles."""
    v = sorted(values)
    if not v:
        raise ValueError("median of empty sample")
    m = len(v) // 2
    return float(v[m]) if len(v) % 2 else (v[m - 1] + v[m]) / 2


def median_exact(values: Sequence[int]) -> str:
    """Median of (possibly huge) integers as a decimal string."""
    v = sorted(int(x) for x in values)
    if not v:
        raise ValueError("median of empty sample")
    m = len(v) // 2
    if len(v) % 2:
        return str(v[m])
    total = v[m - 1] + v[m]
    if total % 2 == 0:
        return str(total // 2)
    sign = "-" if total < 0 else ""
    return f"{sign}{abs(total) // 2}.5"
