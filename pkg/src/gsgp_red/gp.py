"""Canonical tree-based GP: subtree crossover, subtree mutation, tournament selection."""

from __future__ import annotations

import time
from dataclasses import asdict, dataclass
from typing import Callable

import numpy as np

from .data import Dataset
from .expr import Expr, grow, ramped_half_and_half, replace_at, semantics, subtree_at, to_prefix
from .report import RunReport, fitness, tournament_select


class ConfigError(ValueError):
    pass


@dataclass(frozen=True)
class GpConfig:
    pop_size: int = 1000
    generations: int = 250
    tournament_size: int = 7
    p_crossover: float = 0.9
    p_mutation: float = 0.1
    max_init_depth: int = 6
    erc_range: tuple[float, float] = (-1.0, 1.0)
    seed: int = 0

    def __post_init__(self):
        check_common(self)
        if abs(self.p_crossover + self.p_mutation - 1.0) > 1e-12:
            raise ConfigError("p_crossover + p_mutation must equal 1")

    def to_dict(self) -> dict:
        return asdict(self)


def check_common(cfg) -> None:
    if cfg.pop_size < 2:
        raise ConfigError("pop_size must be >= 2")
    if cfg.generations < 0:
        raise ConfigError("generations must be >= 0")
    if not 1 <= cfg.tournament_size <= cfg.pop_size:
        raise ConfigError("tournament_size must lie in [1, pop_size]")
    if not (0.0 <= cfg.p_crossover <= 1.0 and 0.0 <= cfg.p_mutation <= 1.0):
        raise ConfigError("operator probabilities must lie in [0, 1]")
    if cfg.max_init_depth < 1:
        raise ConfigError("max_init_depth must be >= 1")
    lo, hi = cfg.erc_range
    if not lo <= hi:
        raise ConfigError("erc_range must satisfy lo <= hi")


def subtree_crossover(p1: Expr, p2: Expr, rng: np.random.Generator) -> Expr:
    """Replace a uniformly chosen node of ``p1`` by a uniformly chosen subtree of ``p2``."""
    site = int(rng.integers(p1.size))
    donor = subtree_at(p2, int(rng.integers(p2.size)))
    return replace_at(p1, site, donor)


def subtree_mutation(
    p: Expr,
    max_depth: int,
    n_features: int,
    rng: np.random.Generator,
    erc_range: tuple[float, float] = (-1.0, 1.0),
) -> Expr:
    site = int(rng.integers(p.size))
    return replace_at(p, site, grow(max_depth, n_features, erc_range, rng))


@dataclass
class GpResult:
    report: RunReport
    population: list[Expr]
    fitness: list[float]
    best: Expr


def evolve_gp(
    config: GpConfig,
    train: Dataset,
    test: Dataset | None = None,
    on_generation: Callable[[int, list[Expr], list[float]], None] | None = None,
) -> GpResult:
    if test is not None and test.d != train.d:
        raise ConfigError(f"train has {train.d} features but test has {test.d}")
    rng = np.random.default_rng(config.seed)
    X, y = train.features, train.target
    t0 = time.perf_counter()

    def score(tree: Expr) -> float:
        return fitness(semantics(tree, X, check=False), y)

    pop = ramped_half_and_half(
        config.pop_size, config.max_init_depth, train.d, config.erc_range, rng
    )
    fit = [score(t) for t in pop]
    report = RunReport(
        engine="gp",
        seed=config.seed,
        dataset=train.name,
        n_train=train.n,
        n_test=test.n if test is not None else 0,
        n_features=train.d,
        config=config.to_dict(),
    )

    def record(gen: int) -> int:
        b = int(np.argmin(fit))
        report.train_rmse_trace.append(fit[b])
        report.size_trace.append(str(pop[b].size))
        report.time_trace.append(time.perf_counter() - t0)
        if on_generation is not None:
            on_generation(gen, pop, fit)
        return b

    best = record(0)
    for gen in range(1, config.generations + 1):
        new_pop = [pop[best]]
        new_fit = [fit[best]]
        while len(new_pop) < config.pop_size:
            if rng.random() < config.p_crossover:
                a = tournament_select(fit, config.tournament_size, rng)
                b = tournament_select(fit, config.tournament_size, rng)
                child = subtree_crossover(pop[a], pop[b], rng)
            else:
                a = tournament_select(fit, config.tournament_size, rng)
                child = subtree_mutation(
                    pop[a], config.max_init_depth, train.d, rng, config.erc_range
                )
            new_pop.append(child)
            new_fit.append(score(child))
        pop, fit = new_pop, new_fit
        best = record(gen)

    winner = pop[best]
    report.best_train_rmse = fit[best]
    report.best_size = str(winner.size)
    report.best_expression = to_prefix(winner)
    if test is not None:
        report.best_test_rmse = fitness(semantics(winner, test.features, check=False), test.target)
    report.wall_time = time.perf_counter() - t0
    return GpResult(report, pop, fit, winner)


def run_gp(config: GpConfig, train: Dataset, test: Dataset | None = None) -> RunReport:
    return evolve_gp(config, train, test).report
