import json

import numpy as np
import pytest

from gsgp_red.data import make_synthetic
from gsgp_red.expr import Var, add, depth, mul, node_count, parse_prefix, semantics
from gsgp_red.gp import ConfigError, GpConfig, evolve_gp, run_gp, subtree_crossover, subtree_mutation
from gsgp_red.report import RunReport, fitness, tournament_select


@pytest.fixture(scope="module")
def ds():
    return make_synthetic("prod-sum", 80, 0.05, seed=4)


def test_config_validation():
    with pytest.raises(ConfigError):
        GpConfig(pop_size=1)
    with pytest.raises(ConfigError):
        GpConfig(p_crossover=0.5, p_mutation=0.4)
    with pytest.raises(ConfigError):
        GpConfig(pop_size=5, tournament_size=6)
    with pytest.raises(ConfigError):
        GpConfig(erc_range=(1.0, -1.0))
    with pytest.raises(ConfigError):
        GpConfig(generations=-1)


def test_tournament_prefers_fitter_and_breaks_ties_early():
    rng = np.random.default_rng(0)
    assert tournament_select([5.0, 1.0, 3.0], 50, rng) == 1
    picks = {tournament_select([1.0, 1.0], 1, np.random.default_rng(s)) for s in range(20)}
    assert picks == {0, 1}
    with pytest.raises(ValueError):
        tournament_select([], 2, rng)


def test_fitness_inf_for_non_finite():
    assert fitness(np.array([np.inf, 0.0]), np.zeros(2)) == float("inf")
    assert fitness(np.array([1.0, 1.0]), np.zeros(2)) == 1.0


def test_variation_operators():
    rng = np.random.default_rng(1)
    a = add(Var(0), mul(Var(1), Var(2)))
    b = mul(Var(0), Var(0))
    for _ in range(200):
        child = subtree_crossover(a, b, rng)
        assert node_count(child) >= 1
        m = subtree_mutation(b, 6, 3, rng)
        assert depth(m) <= depth(b) - 1 + 6


def test_run_is_deterministic_and_elitist(ds):
    cfg = GpConfig(pop_size=30, generations=8, seed=5)
    r1 = run_gp(cfg, ds)
    r2 = run_gp(cfg, ds)
    assert r1.without_timing() == r2.without_timing()
    tr = r1.train_rmse_trace
    assert len(tr) == 9
    assert all(b <= a for a, b in zip(tr, tr[1:]))
    best = parse_prefix(r1.best_expression)
    assert fitness(semantics(best, ds.features), ds.target) == r1.best_train_rmse


def test_report_round_trip(ds):
    res = evolve_gp(GpConfig(pop_size=10, generations=2, seed=1), ds, ds)
    d = json.loads(res.report.to_json())
    back = RunReport.from_dict(d)
    assert back.without_timing() == res.report.without_timing()
    assert d["engine"] == "gp" and d["schema_version"] == 1
    assert res.report.best_test_rmse is not None


def test_generation_callback(ds):
    seen = []
    evolve_gp(GpConfig(pop_size=10, generations=3, seed=2), ds, on_generation=lambda g, p, f: seen.append((g, len(p))))
    assert seen == [(0, 10), (1, 10), (2, 10), (3, 10)]
