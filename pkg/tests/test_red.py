import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from gsgp_red.data import make_synthetic
from gsgp_red.expr import Const, Var, add, canonical_key, mul, node_count, semantics, sub
from gsgp_red.gsgp import GsgpConfig, apply_gsm, apply_gsx_e, evolve_gsgp, initial_individual
from gsgp_red.red import (
    INITIAL,
    RANDOM,
    LinearIndividual,
    Term,
    TreeStore,
    aggregate,
    evolve_red,
    expand_gsm,
    expand_gsx,
    from_terms,
    lift_initial,
    red_node_count,
    red_semantics,
    term_table,
    to_expression,
    to_infix_sum,
)

X = np.array([[0.5, -1.0], [2.0, 0.25], [-1.5, 1.0], [0.0, 0.3]])
x0, x1 = Var(0), Var(1)


def test_lift_and_expand_match_pointer_engine():
    t1, t2 = add(x0, Const(0.5)), mul(x0, x1)
    p1, q1 = lift_initial(t1, X), initial_individual(t1, X)
    p2, q2 = lift_initial(t2, X), initial_individual(t2, X)
    c = expand_gsx(p1, p2, 0.3)
    np.testing.assert_array_equal(c.train_semantics, apply_gsx_e(q1, q2, 0.3).train_semantics)
    m = expand_gsm(c, 0.2, x1, sub(x0, x1), X)
    qm = apply_gsm(apply_gsx_e(q1, q2, 0.3), 0.2, x1, sub(x0, x1), X)
    np.testing.assert_array_equal(m.train_semantics, qm.train_semantics)
    assert [t.origin for t in m.terms] == [INITIAL, INITIAL, RANDOM, RANDOM]
    assert m.coefficients == [0.3, 0.7, 0.2, -0.2]


def test_expand_gsx_drops_zero_weights():
    p = lift_initial(x0, X)
    q = lift_initial(x1, X)
    assert expand_gsx(p, q, 0.0).keys == [canonical_key(x1)]
    assert expand_gsx(p, q, 1.0).keys == [canonical_key(x0)]
    with pytest.raises(ValueError):
        expand_gsx(p, q, -0.1)


def test_aggregate_merges_into_first_slot_and_prunes_zeros():
    ind = from_terms([(1.0, x0), (2.0, x1), (0.5, x0), (-2.0, x1)], X)
    agg = aggregate(ind)
    assert agg.keys == [canonical_key(x0)]
    assert agg.coefficients == [1.5]
    assert agg.train_semantics is ind.train_semantics


def test_store_keeps_one_copy():
    store = TreeStore()
    a = lift_initial(add(x0, x1), X, store)
    b = lift_initial(add(Var(0), Var(1)), X, store)
    assert a.terms[0].fn is b.terms[0].fn and len(store) == 1


def test_node_count_and_expression():
    ind = from_terms([(0.5, add(x0, x1)), (-1.0, x1)], X)
    tree = to_expression(ind)
    assert node_count(tree) == red_node_count(ind) == (3 + 2) + (1 + 2) + 1
    np.testing.assert_allclose(semantics(tree, X), red_semantics(ind, X))
    empty = LinearIndividual((), np.zeros(len(X)))
    assert red_node_count(empty) == 1
    assert node_count(to_expression(empty)) == 1
    assert to_infix_sum(empty) == "0.0"
    assert to_infix_sum(ind) == "0.5 * (x0 + x1) + -1.0 * x1"
    rows = term_table(ind)
    assert rows[0] == {"coefficient": 0.5, "key": "(add x0 x1)", "function": "(x0 + x1)", "origin": INITIAL}


coef = st.floats(-10, 10, allow_nan=False).filter(lambda c: c != 0.0)
pool = [x0, x1, add(x0, x1), mul(x0, Const(0.25)), sub(x1, Const(1.0))]


@settings(max_examples=200, deadline=None)
@given(st.lists(st.tuples(coef, st.integers(0, len(pool) - 1)), min_size=1, max_size=15))
def test_aggregation_properties(pairs):
    ind = from_terms([(c, pool[i]) for c, i in pairs], X)
    agg = aggregate(ind)
    assert len(set(agg.keys)) == len(agg.keys)
    assert all(c != 0.0 for c in agg.coefficients)
    assert [t.coef for t in aggregate(agg).terms] == agg.coefficients
    scale = max(1.0, float(np.max(np.abs([c for c, _ in pairs]))))
    np.testing.assert_allclose(red_semantics(agg, X), red_semantics(ind, X), atol=1e-12 * scale * len(pairs))


def test_engine_traces_match_pointer_engine():
    ds = make_synthetic("aq-mix", 80, 0.1, seed=6)
    cfg = GsgpConfig(pop_size=25, generations=12, seed=3)
    g = evolve_gsgp(cfg, ds, ds)
    r = evolve_red(cfg, ds, ds)
    assert g.report.train_rmse_trace == r.report.train_rmse_trace
    assert r.report.best_test_rmse == pytest.approx(g.report.best_test_rmse, rel=1e-9)
    assert r.report.best_term_count == r.best.term_count
    assert int(r.report.best_size) == red_node_count(r.best)
    np.testing.assert_allclose(red_semantics(r.best, ds.features), r.best.train_semantics, rtol=1e-9, atol=1e-9)
    assert len(r.initial_keys) == 25
    for ind in r.population:
        assert len(set(ind.keys)) == len(ind.keys)
