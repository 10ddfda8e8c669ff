"""Expected individual sizes under each geometric operator, and lineage analytics.

For ``g`` generations using only one operator:

* mutation:            ``E[P0] + g * (2 E[r] + a)``
* Euclidean crossover: ``2^g E[P0] + (2^g - 1) b``
* Manhattan crossover: ``2^g E[P0] + (2^g - 1) (E[r] + c)``
"""

from __future__ import annotations

import csv
import io
import json
import math
from collections import Counter
from dataclasses import dataclass
from fractions import Fraction
from typing import Iterable

from .gsgp import GSM_EXTRA_NODES, GSX_EXTRA_NODES
from .red import INITIAL

# Manhattan crossover adds (+, *, *, -, 1) around one stored copy of r_f
GSX_M_EXTRA_NODES = 5


@dataclass(frozen=True)
class GrowthParams:
    e_p0: float
    e_r: float = 0.0
    a: int = GSM_EXTRA_NODES
    b: int = GSX_EXTRA_NODES
    c: int = GSX_M_EXTRA_NODES
    g: int = 0

    def __post_init__(self):
        if not self.e_p0 > 0:
            raise ValueError("e_p0 must be > 0")
        if self.e_r < 0:
            raise ValueError("e_r must be >= 0")
        if min(self.a, self.b, self.c) < 0:
            raise ValueError("a, b, c must be >= 0")
        if self.g < 0:
            raise ValueError("g must be >= 0")


def expected_size_gsm(p: GrowthParams) -> float:
    return p.e_p0 + p.g * (2 * p.e_r + p.a)


def expected_size_gsx_e(p: GrowthParams) -> float:
    two_g = 2.0**p.g  # raises OverflowError past ~1023; see log10 variant
    return two_g * p.e_p0 + (two_g - 1) * p.b


def expected_size_gsx_m(p: GrowthParams) -> float:
    two_g = 2.0**p.g
    return two_g * p.e_p0 + (two_g - 1) * (p.e_r + p.c)


def _log10_doubling(g: int, base: float, extra: float) -> float:
    # log10(2^g * base + (2^g - 1) * extra) = g log10 2 + log10(base + extra - extra / 2^g)
    tail = base + extra - extra * 2.0 ** (-g) if g < 1074 else base + extra
    return g * math.log10(2) + math.log10(tail)


def log10_expected_size(operator: str, p: GrowthParams) -> float:
    """``log10`` of the expected size; finite for any ``g``."""
    if operator == "gsm":
        return math.log10(expected_size_gsm(p))
    if operator == "gsx-e":
        return _log10_doubling(p.g, p.e_p0, p.b)
    if operator == "gsx-m":
        return _log10_doubling(p.g, p.e_p0, p.e_r + p.c)
    raise ValueError(f"unknown operator {operator!r}")


def exact_expected_size(operator: str, p: GrowthParams) -> Fraction:
    """Exact rational value; an integer whenever ``e_p0`` and ``e_r`` are."""
    e_p0 = Fraction(p.e_p0)
    e_r = Fraction(p.e_r)
    if operator == "gsm":
        return e_p0 + p.g * (2 * e_r + p.a)
    two_g = 2**p.g
    if operator == "gsx-e":
        return two_g * e_p0 + (two_g - 1) * p.b
    if operator == "gsx-m":
        return two_g * e_p0 + (two_g - 1) * (e_r + p.c)
    raise ValueError(f"unknown operator {operator!r}")


def expected_size(operator: str, p: GrowthParams) -> float:
    if operator == "gsm":
        return expected_size_gsm(p)
    if operator == "gsx-e":
        return expected_size_gsx_e(p)
    if operator == "gsx-m":
        return expected_size_gsx_m(p)
    raise ValueError(f"unknown operator {operator!r}")


@dataclass
class FrequencyReport:
    counts: dict[str, int]
    survivors: int
    initial_size: int

    def to_csv(self) -> str:
        buf = io.StringIO()
        w = csv.writer(buf)
        w.writerow(["key", "count"])
        for key, n in self.counts.items():
            w.writerow([key, n])
        return buf.getvalue()

    def to_json(self) -> str:
        return json.dumps(
            {"survivors": self.survivors, "initial_size": self.initial_size, "counts": self.counts}
        )


def initial_tree_frequency(population: Iterable, initial_keys: Iterable[str] | None = None) -> FrequencyReport:
    """How many individuals contain each initial-population tree as a term.

    With ``initial_keys`` a term counts when its key is one of them, whatever
    operator produced it; otherwise the terms' provenance tags decide. Each
    individual counts a given tree at most once.
    """
    keyset = set(initial_keys) if initial_keys is not None else None
    counts: Counter[str] = Counter()
    for ind in population:
        present = set()
        for t in ind.terms:
            if (t.key in keyset) if keyset is not None else (t.origin == INITIAL):
                present.add(t.key)
        counts.update(present)
    ordered = dict(sorted(counts.items(), key=lambda kv: (-kv[1], kv[0])))
    n_initial = len(keyset) if keyset is not None else len(counts)
    return FrequencyReport(ordered, len(ordered), n_initial)
