import numpy as np
import pytest

from gsgp_red.data import Dataset, make_synthetic, target_std
from gsgp_red.expr import Const, Var, add, grow, node_count, semantics, sub
from gsgp_red.gp import ConfigError
from gsgp_red.gsgp import (
    Gsm,
    GsgpConfig,
    GsxE,
    ReconstructionRefused,
    apply_gsm,
    apply_gsx_e,
    evolve_gsgp,
    initial_individual,
    lineage,
    mutation_step,
    pointer_semantics,
    reconstruct,
)


@pytest.fixture(scope="module")
def ds():
    return make_synthetic("poly3", 60, 0.1, seed=2)


X = np.array([[0.5, -1.0], [2.0, 0.25], [-1.5, 1.0]])


def test_operator_semantics_and_sizes():
    p = initial_individual(add(Var(0), Const(1.0)), X)
    q = initial_individual(sub(Var(1), Var(0)), X)
    m = apply_gsm(p, 0.1, Var(0), Var(1), X)
    np.testing.assert_array_equal(m.train_semantics, p.train_semantics + 0.1 * (X[:, 0] - X[:, 1]))
    assert m.exact_size == 3 + 1 + 1 + 4
    c = apply_gsx_e(p, q, 0.25)
    np.testing.assert_array_equal(c.train_semantics, 0.25 * p.train_semantics + 0.75 * q.train_semantics)
    assert c.exact_size == 3 + 3 + 5
    with pytest.raises(ValueError):
        apply_gsx_e(p, q, 1.5)
    with pytest.raises(ValueError):
        apply_gsm(p, 0.0, Var(0), Var(1), X)


def test_reconstruct_matches_semantics_and_size():
    rng = np.random.default_rng(3)
    pop = [initial_individual(grow(4, 2, (-1, 1), rng), X) for _ in range(6)]
    for _ in range(30):
        a, b = rng.integers(0, len(pop), size=2)
        if rng.random() < 0.5:
            child = apply_gsx_e(pop[a], pop[b], float(rng.random()))
        else:
            child = apply_gsm(pop[a], 0.2, grow(3, 2, (-1, 1), rng), grow(3, 2, (-1, 1), rng), X)
        pop.append(child)
    for ind in pop[-5:]:
        tree = reconstruct(ind, 10**7)
        assert node_count(tree) == ind.exact_size
        np.testing.assert_allclose(semantics(tree, X), ind.train_semantics, rtol=1e-12, atol=1e-12)
        np.testing.assert_array_equal(pointer_semantics(ind, X), ind.train_semantics)


def test_reconstruct_refuses_over_budget():
    p = initial_individual(add(Var(0), Var(1)), X)
    for _ in range(40):
        p = apply_gsx_e(p, p, 0.5)
    assert p.exact_size == 2**40 * 3 + (2**40 - 1) * 5
    with pytest.raises(ReconstructionRefused) as err:
        reconstruct(p, 1000)
    assert err.value.exact_size == p.exact_size
    # the DAG stays tiny even though the tree is huge
    assert len(list(lineage(p))) == 41
    np.testing.assert_allclose(pointer_semantics(p, X), X[:, 0] + X[:, 1])


def test_mutation_step(ds):
    cfg = GsgpConfig(pop_size=10, generations=1)
    assert mutation_step(cfg, ds) == pytest.approx(0.1 * target_std(ds))
    flat = Dataset(np.ones((4, 1)), np.ones(4))
    with pytest.raises(ConfigError):
        mutation_step(cfg, flat)


def test_run_properties(ds):
    cfg = GsgpConfig(pop_size=20, generations=10, seed=4)
    seen = []
    res = evolve_gsgp(cfg, ds, ds, on_generation=lambda g, pop: seen.append(pop))
    tr = res.report.train_rmse_trace
    assert len(tr) == 11 and all(b <= a for a, b in zip(tr, tr[1:]))
    assert res.report.best_test_rmse == pytest.approx(res.report.best_train_rmse)
    for pop in seen[1:]:
        for ind in pop[1:]:
            o = ind.origin
            assert isinstance(o, (Gsm, GsxE))
            if isinstance(o, GsxE):
                assert ind.exact_size == o.p1.exact_size + o.p2.exact_size + 5
            else:
                assert ind.exact_size == o.parent.exact_size + o.r_m.size + o.r_n.size + 4
    # retired individuals drop their vectors; the survivors keep theirs
    assert seen[0][1].train_semantics is None
    assert all(ind.train_semantics is not None for ind in res.population)
    again = evolve_gsgp(cfg, ds, ds)
    assert again.report.without_timing() == res.report.without_timing()
    assert int(res.report.best_size) == res.best.exact_size


def test_test_feature_mismatch(ds):
    other = make_synthetic("prod-sum", 10, 0.0, seed=1)
    with pytest.raises(ConfigError):
        evolve_gsgp(GsgpConfig(pop_size=4, generations=1), ds, other)
