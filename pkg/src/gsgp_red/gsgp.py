"""Pointer-based GSGP.

Offspring are nodes of a lineage DAG that reference their parents and the
random trees used to build them. Semantics are propagated from the parents,
so no offspring tree is ever materialized during evolution; node counts are
tracked exactly with Python integers.

Per offspring, the random stream is consumed in a fixed order: operator
choice, parent tournament(s), then either ``k`` (crossover) or ``r_m`` and
``r_n`` (mutation). The reduced engine replays the same order.
"""

from __future__ import annotations

import math
import time
from dataclasses import asdict, dataclass
from typing import Callable, Iterator, Union

import numpy as np

from .data import Dataset, target_std
from .expr import Const, Expr, add, grow, mul, ramped_half_and_half, semantics, sub, to_prefix
from .gp import ConfigError, check_common
from .report import RunReport, fitness, tournament_select

# extra nodes per operator: GSM adds (+, *, delta, -); GSX adds (+, *, k, *, 1-k)
GSM_EXTRA_NODES = 4
GSX_EXTRA_NODES = 5


@dataclass(frozen=True)
class GsgpConfig:
    pop_size: int = 1000
    generations: int = 250
    tournament_size: int = 10
    p_crossover: float = 0.5
    p_mutation: float = 0.5
    max_init_depth: int = 6
    random_tree_depth: int = 6
    erc_range: tuple[float, float] = (-1.0, 1.0)
    ms_fraction: float = 0.1
    seed: int = 0

    def __post_init__(self):
        check_common(self)
        if abs(self.p_crossover + self.p_mutation - 1.0) > 1e-12:
            raise ConfigError("p_crossover + p_mutation must equal 1")
        if self.random_tree_depth < 1:
            raise ConfigError("random_tree_depth must be >= 1")
        if not self.ms_fraction > 0:
            raise ConfigError("ms_fraction must be > 0")

    def to_dict(self) -> dict:
        return asdict(self)


@dataclass(frozen=True, eq=False)
class Initial:
    tree: Expr


@dataclass(frozen=True, eq=False)
class Gsm:
    parent: "PointerIndividual"
    r_m: Expr
    r_n: Expr
    delta: float


@dataclass(frozen=True, eq=False)
class GsxE:
    p1: "PointerIndividual"
    p2: "PointerIndividual"
    k: float


Origin = Union[Initial, Gsm, GsxE]


@dataclass(eq=False)
class PointerIndividual:
    origin: Origin
    train_semantics: np.ndarray | None
    test_semantics: np.ndarray | None
    exact_size: int
    fitness: float = math.inf

    def release_semantics(self) -> None:
        """Drop cached vectors; the lineage stays usable for reconstruction."""
        self.train_semantics = None
        self.test_semantics = None


class ReconstructionRefused(RuntimeError):
    def __init__(self, exact_size: int, node_budget: int):
        super().__init__(
            f"individual has {exact_size} nodes (~1e{len(str(exact_size)) - 1}), "
            f"over the budget of {node_budget}"
        )
        self.exact_size = exact_size
        self.node_budget = node_budget


def _parents(ind: PointerIndividual) -> tuple[PointerIndividual, ...]:
    o = ind.origin
    if isinstance(o, Gsm):
        return (o.parent,)
    if isinstance(o, GsxE):
        return (o.p1, o.p2)
    return ()


def lineage(ind: PointerIndividual) -> Iterator[PointerIndividual]:
    """Distinct ancestors of ``ind`` (itself included), parents before children."""
    seen: set[int] = set()
    stack: list[tuple[PointerIndividual, bool]] = [(ind, False)]
    while stack:
        node, expanded = stack.pop()
        if expanded:
            yield node
            continue
        if id(node) in seen:
            continue
        seen.add(id(node))
        stack.append((node, True))
        for p in reversed(_parents(node)):
            if id(p) not in seen:
                stack.append((p, False))


def initial_individual(tree: Expr, X_train: np.ndarray, X_test: np.ndarray | None = None):
    return PointerIndividual(
        Initial(tree),
        semantics(tree, X_train, check=False),
        semantics(tree, X_test, check=False) if X_test is not None else None,
        tree.size,
    )


def _gsm_vector(parent_sem, delta, sem_m, sem_n):
    if parent_sem is None:
        return None
    with np.errstate(over="ignore", invalid="ignore"):
        return parent_sem + delta * (sem_m - sem_n)


def apply_gsm(
    parent: PointerIndividual,
    delta: float,
    r_m: Expr,
    r_n: Expr,
    X_train: np.ndarray,
    X_test: np.ndarray | None = None,
) -> PointerIndividual:
    if not delta > 0:
        raise ValueError("mutation step must be > 0")
    train = _gsm_vector(
        parent.train_semantics,
        delta,
        semantics(r_m, X_train, check=False),
        semantics(r_n, X_train, check=False),
    )
    test = None
    if X_test is not None:
        test = _gsm_vector(
            parent.test_semantics,
            delta,
            semantics(r_m, X_test, check=False),
            semantics(r_n, X_test, check=False),
        )
    size = parent.exact_size + r_m.size + r_n.size + GSM_EXTRA_NODES
    return PointerIndividual(Gsm(parent, r_m, r_n, delta), train, test, size)


def gsm(
    parent: PointerIndividual,
    delta: float,
    rng: np.random.Generator,
    X_train: np.ndarray,
    X_test: np.ndarray | None = None,
    max_depth: int = 6,
    erc_range: tuple[float, float] = (-1.0, 1.0),
) -> PointerIndividual:
    """Geometric semantic mutation with two fresh grown trees."""
    d = X_train.shape[1]
    r_m = grow(max_depth, d, erc_range, rng)
    r_n = grow(max_depth, d, erc_range, rng)
    return apply_gsm(parent, delta, r_m, r_n, X_train, X_test)


def _gsx_vector(s1, s2, k):
    if s1 is None or s2 is None:
        return None
    k1 = 1.0 - k
    with np.errstate(over="ignore", invalid="ignore"):
        return k * s1 + k1 * s2


def apply_gsx_e(p1: PointerIndividual, p2: PointerIndividual, k: float) -> PointerIndividual:
    if not 0.0 <= k <= 1.0:
        raise ValueError(f"crossover weight must lie in [0, 1], got {k}")
    return PointerIndividual(
        GsxE(p1, p2, k),
        _gsx_vector(p1.train_semantics, p2.train_semantics, k),
        _gsx_vector(p1.test_semantics, p2.test_semantics, k),
        p1.exact_size + p2.exact_size + GSX_EXTRA_NODES,
    )


def gsx_e(p1: PointerIndividual, p2: PointerIndividual, rng: np.random.Generator) -> PointerIndividual:
    """Geometric semantic crossover (Euclidean) with ``k ~ U[0, 1)``."""
    return apply_gsx_e(p1, p2, float(rng.random()))


def reconstruct(ind: PointerIndividual, node_budget: int = 100_000) -> Expr:
    """Materialize the full tree; shared ancestors become shared subtrees."""
    if ind.exact_size > node_budget:
        raise ReconstructionRefused(ind.exact_size, node_budget)
    built: dict[int, Expr] = {}
    for node in lineage(ind):
        o = node.origin
        if isinstance(o, Initial):
            tree = o.tree
        elif isinstance(o, Gsm):
            tree = add(built[id(o.parent)], mul(Const(o.delta), sub(o.r_m, o.r_n)))
        else:
            tree = add(
                mul(Const(o.k), built[id(o.p1)]),
                mul(Const(1.0 - o.k), built[id(o.p2)]),
            )
        built[id(node)] = tree
    return built[id(ind)]


def pointer_semantics(ind: PointerIndividual, X: np.ndarray) -> np.ndarray:
    """Semantics on new inputs by replaying the lineage, memoized per ancestor.

    Cost is linear in the number of distinct ancestors, not in ``exact_size``.
    """
    X = np.asarray(X, dtype=float)
    order = list(lineage(ind))
    pending = {id(n): 0 for n in order}
    for n in order:
        for p in _parents(n):
            pending[id(p)] += 1
    memo: dict[int, np.ndarray] = {}

    def take(p: PointerIndividual) -> np.ndarray:
        v = memo[id(p)]
        pending[id(p)] -= 1
        if pending[id(p)] == 0:
            del memo[id(p)]
        return v

    for n in order:
        o = n.origin
        if isinstance(o, Initial):
            v = semantics(o.tree, X, check=False)
        elif isinstance(o, Gsm):
            v = _gsm_vector(
                take(o.parent),
                o.delta,
                semantics(o.r_m, X, check=False),
                semantics(o.r_n, X, check=False),
            )
        else:
            v = _gsx_vector(take(o.p1), take(o.p2), o.k)
        memo[id(n)] = v
    return memo[id(ind)]


@dataclass
class GsgpResult:
    report: RunReport
    population: list[PointerIndividual]
    best: PointerIndividual
    delta: float


def mutation_step(config: GsgpConfig, train: Dataset) -> float:
    delta = config.ms_fraction * target_std(train)
    if not delta > 0:
        raise ConfigError("training target has zero spread; mutation step would be 0")
    return delta


def evolve_gsgp(
    config: GsgpConfig,
    train: Dataset,
    test: Dataset | None = None,
    on_generation: Callable[[int, list[PointerIndividual]], None] | None = None,
    node_budget: int = 10_000,
    keep_semantics: bool = False,
) -> GsgpResult:
    """Run pointer-based GSGP.

    Test semantics are propagated for every individual when ``test`` is given.
    Retired individuals drop their cached vectors unless ``keep_semantics``.
    """
    if test is not None and test.d != train.d:
        raise ConfigError(f"train has {train.d} features but test has {test.d}")
    rng = np.random.default_rng(config.seed)
    X, y = train.features, train.target
    X_test = test.features if test is not None else None
    delta = mutation_step(config, train)
    t0 = time.perf_counter()

    trees = ramped_half_and_half(
        config.pop_size, config.max_init_depth, train.d, config.erc_range, rng
    )
    pop = [initial_individual(t, X, X_test) for t in trees]
    for ind in pop:
        ind.fitness = fitness(ind.train_semantics, y)
    report = RunReport(
        engine="gsgp",
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
        report.size_trace.append(str(pop[b].exact_size))
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
                child = gsx_e(pop[a], pop[b], rng)
            else:
                a = tournament_select(fits, config.tournament_size, rng)
                child = gsm(pop[a], delta, rng, X, X_test, config.random_tree_depth, config.erc_range)
            child.fitness = fitness(child.train_semantics, y)
            new_pop.append(child)
        if not keep_semantics:
            elite = pop[best]
            for ind in pop:
                if ind is not elite:
                    ind.release_semantics()
        pop = new_pop
        best = record(gen)

    winner = pop[best]
    report.best_train_rmse = winner.fitness
    report.best_size = str(winner.exact_size)
    if winner.exact_size <= node_budget:
        report.best_expression = to_prefix(reconstruct(winner, node_budget))
    if test is not None:
        report.best_test_rmse = fitness(winner.test_semantics, test.target)
    report.wall_time = time.perf_counter() - t0
    return GsgpResult(report, pop, winner, delta)


def run_gsgp(config: GsgpConfig, train: Dataset, test: Dataset | None = None) -> RunReport:
    return evolve_gsgp(config, train, test).report
