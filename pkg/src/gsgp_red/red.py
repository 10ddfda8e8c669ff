"""GSGP with reduced trees.

Every individual is a linear combination ``sum(c_i * f_i)`` where each ``f_i``
is either an initial-population tree or a random tree drawn by mutation.
Offspring are expanded into a flat term list and then aggregated: terms whose
trees share a canonical key are merged by summing their coefficients.
Semantics follow exactly the arithmetic of the pointer engine, so both
engines see bit-identical fitness values under the same seed.
"""

from __future__ import annotations

import math
import time
from dataclasses import dataclass
from typing import Callable, NamedTuple, Sequence

import numpy as np

from .data import Dataset
from .expr import Const, Expr, add, canonical_key, grow, mul, ramped_half_and_half, semantics, to_infix, to_prefix
from .gp import ConfigError
from .gsgp import GsgpConfig, mutation_step
from .report import RunReport, fitness, tournament_select

INITIAL = "initial"
RANDOM = "random"


class Term(NamedTuple):
    key: str
    coef: float
    fn: Expr
    origin: str = INITIAL


@dataclass(eq=False)
class LinearIndividual:
    terms: tuple[Term, ...]
    train_semantics: np.ndarray
    fitness: float = math.inf

    @property
    def term_count(self) -> int:
        return len(self.terms)

    @property
    def coefficients(self) -> list[float]:
        return [t.coef for t in self.terms]

    @property
    def functions(self) -> list[Expr]:
        return [t.fn for t in self.terms]

    @property
    def keys(self) -> list[str]:
        return [t.key for t in self.terms]


class TreeStore:
    """One stored copy per distinct tree for a whole run."""

    def __init__(self):
        self._trees: dict[str, Expr] = {}

    def intern(self, tree: Expr) -> tuple[str, Expr]:
        key = canonical_key(tree)
        stored = self._trees.setdefault(key, tree)
        return key, stored

    def __len__(self) -> int:
        return len(self._trees)

    def __contains__(self, key: str) -> bool:
        return key in self._trees


def lift_initial(
    tree: Expr, X_train: np.ndarray, store: TreeStore | None = None
) -> LinearIndividual:
    """``p = 1 * p`` as a single-term individual."""
    if store is not None:
        key, tree = store.intern(tree)
    else:
        key = canonical_key(tree)
    return LinearIndividual((Term(key, 1.0, tree, INITIAL),), semantics(tree, X_train, check=False))


def expand_gsm(
    parent: LinearIndividual,
    delta: float,
    r_m: Expr,
    r_n: Expr,
    X_train: np.ndarray,
    store: TreeStore | None = None,
) -> LinearIndividual:
    """Parent terms followed by ``(+delta, r_m)`` and ``(-delta, r_n)``; not aggregated."""
    if not delta > 0:
        raise ValueError("mutation step must be > 0")
    sem_m = semantics(r_m, X_train, check=False)
    sem_n = semantics(r_n, X_train, check=False)
    if store is not None:
        key_m, r_m = store.intern(r_m)
        key_n, r_n = store.intern(r_n)
    else:
        key_m, key_n = canonical_key(r_m), canonical_key(r_n)
    terms = parent.terms + (Term(key_m, delta, r_m, RANDOM), Term(key_n, -delta, r_n, RANDOM))
    with np.errstate(over="ignore", invalid="ignore"):
        sem = parent.train_semantics + delta * (sem_m - sem_n)
    return LinearIndividual(terms, sem)


def expand_gsx(p1: LinearIndividual, p2: LinearIndividual, k: float) -> LinearIndividual:
    """``k`` times the terms of ``p1`` followed by ``1 - k`` times those of ``p2``.

    Terms whose scaled coefficient is exactly zero are dropped.
    """
    if not 0.0 <= k <= 1.0:
        raise ValueError(f"crossover weight must lie in [0, 1], got {k}")
    k1 = 1.0 - k
    terms = [t._replace(coef=k * t.coef) for t in p1.terms if k * t.coef != 0.0]
    terms += [t._replace(coef=k1 * t.coef) for t in p2.terms if k1 * t.coef != 0.0]
    with np.errstate(over="ignore", invalid="ignore"):
        sem = k * p1.train_semantics + k1 * p2.train_semantics
    return LinearIndividual(tuple(terms), sem)


def aggregate(ind: LinearIndividual) -> LinearIndividual:
    """Merge terms with equal keys into the first occurrence; drop exact zeros.

    Coefficients are summed left to right in term order. Semantics are carried
    over untouched.
    """
    slot: dict[str, int] = {}
    merged: list[Term] = []
    for t in ind.terms:
        i = slot.get(t.key)
        if i is None:
            slot[t.key] = len(merged)
            merged.append(t)
        else:
            merged[i] = merged[i]._replace(coef=merged[i].coef + t.coef)
    terms = tuple(t for t in merged if t.coef != 0.0)
    return LinearIndividual(terms, ind.train_semantics, ind.fitness)


def red_semantics(ind: LinearIndividual, X: np.ndarray) -> np.ndarray:
    """Dot product of the coefficients with the term semantics, in term order."""
    X = np.asarray(X, dtype=float)
    out = np.zeros(X.shape[0])
    with np.errstate(over="ignore", invalid="ignore"):
        for t in ind.terms:
            out = out + t.coef * semantics(t.fn, X, check=False)
    return out


def red_node_count(ind: LinearIndividual) -> int:
    """Nodes in the left-deep sum of ``coef * fn`` products."""
    s = len(ind.terms)
    if s == 0:
        return 1
    return sum(t.fn.size + 2 for t in ind.terms) + (s - 1)


def to_expression(ind: LinearIndividual) -> Expr:
    if not ind.terms:
        return Const(0.0)
    first, *rest = ind.terms
    out: Expr = mul(Const(first.coef), first.fn)
    for t in rest:
        out = add(out, mul(Const(t.coef), t.fn))
    return out


def term_table(ind: LinearIndividual) -> list[dict]:
    """JSON-ready rows ``{coefficient, key, function, origin}``."""
    return [
        {"coefficient": t.coef, "key": t.key, "function": to_infix(t.fn), "origin": t.origin}
        for t in ind.terms
    ]


def to_infix_sum(ind: LinearIndividual) -> str:
    if not ind.terms:
        return "0.0"
    return " + ".join(f"{t.coef!r} * {to_infix(t.fn)}" for t in ind.terms)


@dataclass
class RedResult:
    report: RunReport
    population: list[LinearIndividual]
    best: LinearIndividual
    delta: float
    initial_keys: list[str]
    store: TreeStore


def evolve_red(
    config: GsgpConfig,
    train: Dataset,
    test: Dataset | None = None,
    on_generation: Callable[[int, list[LinearIndividual]], None] | None = None,
    node_budget: int = 10_000,
) -> RedResult:
    """Run GSGP-Red; the test set is scored once, for the final best individual."""
    if test is not None and test.d != train.d:
        raise ConfigError(f"train has {train.d} features but test has {test.d}")
    rng = np.random.default_rng(config.seed)
    X, y = train.features, train.target
    delta = mutation_step(config, train)
    t0 = time.perf_counter()
    store = TreeStore()

    trees = ramped_half_and_half(
        config.pop_size, config.max_init_depth, train.d, config.erc_range, rng
    )
    pop = [lift_initial(t, X, store) for t in trees]
    initial_keys = [ind.terms[0].key for ind in pop]
    for ind in pop:
        ind.fitness = fitness(ind.train_semantics, y)
    report = RunReport(
        engine="gsgp-red",
        seed=config.seed,
        dataset=train.name,
        n_train=train.n,
        n_test=test.n if test is not None else 0,
        n_features=train.d,
        config=config.to_dict(),
    )

    def record(gen: int) -> int:
        fits = [ind.fitness for ind in pop]
        b = int(np.argmin(fits))
        report.train_rmse_trace.append(fits[b])
        report.size_trace.append(str(red_node_count(pop[b])))
        report.time_trace.append(time.perf_counter() - t0)
        if on_generation is not None:
            on_generation(gen, pop)
        return b

    best = record(0)
    for gen in range(1, config.generations + 1):
        fits = [ind.fitness for ind in pop]
        new_pop = [pop[best]]
        while len(new_pop) < config.pop_size:
            if rng.random() < config.p_crossover:
                a = tournament_select(fits, config.tournament_size, rng)
                b = tournament_select(fits, config.tournament_size, rng)
                child = expand_gsx(pop[a], pop[b], float(rng.random()))
            else:
                a = tournament_select(fits, config.tournament_size, rng)
                r_m = grow(config.random_tree_depth, train.d, config.erc_range, rng)
                r_n = grow(config.random_tree_depth, train.d, config.erc_range, rng)
                child = expand_gsm(pop[a], delta, r_m, r_n, X, store)
            child = aggregate(child)
            child.fitness = fitness(child.train_semantics, y)
            new_pop.append(child)
        pop = new_pop
        best = record(gen)

    winner = pop[best]
    report.best_train_rmse = winner.fitness
    size = red_node_count(winner)
    report.best_size = str(size)
    report.best_term_count = winner.term_count
    if size <= node_budget:
        report.best_expression = to_prefix(to_expression(winner))
    if test is not None:
        report.best_test_rmse = fitness(red_semantics(winner, test.features), test.target)
    report.wall_time = time.perf_counter() - t0
    return RedResult(report, pop, winner, delta, initial_keys, store)


def run_gsgp_red(config: GsgpConfig, train: Dataset, test: Dataset | None = None) -> RunReport:
    return evolve_red(config, train, test).report


def from_terms(
    terms: Sequence[tuple[float, Expr]], X_train: np.ndarray, origin: str = INITIAL
) -> LinearIndividual:
    """Build an (unaggregated) individual from explicit ``(coef, fn)`` pairs."""
    ts = tuple(Term(canonical_key(f), float(c), f, origin) for c, f in terms)
    ind = LinearIndividual(ts, np.zeros(np.asarray(X_train).shape[0]))
    ind.train_semantics = red_semantics(ind, X_train)
    return ind
