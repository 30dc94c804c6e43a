import itertools
import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from cdrdag.bayesnet import (
    BayesianNetwork,
    Cpt,
    fit_cpts,
    forward_sample,
    intervene,
    joint_distribution,
    log_likelihood,
    query,
)
from cdrdag.cdr import PROFILES, reference_network
from cdrdag.errors import InvalidLevel, UnknownNode, ZeroProbabilityEvidence
from cdrdag.graph import Dag, Dataset, VariableSpec

from conftest import dags, make_dataset


def _specs(levels):
    return tuple(VariableSpec(f"X{i}", tuple(str(v) for v in range(k))) for i, k in enumerate(levels))


def random_network(g: Dag, rng: np.random.Generator, levels=None) -> BayesianNetwork:
    levels = levels or [int(rng.integers(2, 4)) for _ in g.nodes]
    cpts = []
    for v in g.nodes:
        pa = g.parents(v)
        shape = tuple(levels[p] for p in pa) + (levels[v],)
        table = rng.dirichlet(np.ones(levels[v]), size=shape[:-1]) if pa else rng.dirichlet(np.ones(levels[v]))
        cpts.append(Cpt(v, tuple(pa), table.reshape(shape)))
    return BayesianNetwork(_specs(levels), g, tuple(cpts))


def brute_joint(bn, assignment):
    p = 1.0
    for c in bn.cpts:
        p *= c.table[tuple(assignment[i] for i in (*c.parents, c.node))]
    return p


def test_cpt_validation():
    with pytest.raises(ValueError):
        Cpt(0, (), np.array([0.6, 0.6]))
    with pytest.raises(ValueError):
        Cpt(0, (), np.array([1.2, -0.2]))
    with pytest.raises(ValueError):
        Cpt(0, (1,), np.array([0.5, 0.5]))


def test_network_parent_sets_must_match_dag():
    g = Dag(2, frozenset({(0, 1)}))
    with pytest.raises(ValueError):
        BayesianNetwork(_specs([2, 2]), g, (Cpt(0, (), [0.5, 0.5]), Cpt(1, (), [0.5, 0.5])))


def test_fit_examples():
    g = Dag(1, frozenset())
    d = make_dataset([[0, 0, 0, 1]])
    assert fit_cpts(d, g, 0).cpts[0].table.tolist() == [0.75, 0.25]
    assert fit_cpts(d, g, 1).cpts[0].table == pytest.approx([4 / 6, 2 / 6])
    d2 = make_dataset([[0, 0, 0], [1, 0, 1]], levels=[2, 2])
    bn = fit_cpts(d2, Dag(2, frozenset({(0, 1)})), 0)
    assert bn.cpts[1].table[1].tolist() == [0.5, 0.5]
    with pytest.raises(ValueError):
        fit_cpts(d2, Dag(2, frozenset()), -1)


def test_forward_sample_examples():
    bn = BayesianNetwork(_specs([2]), Dag(1, frozenset()), (Cpt(0, (), [0.5, 0.5]),))
    empty = forward_sample(bn, 0, 1)
    assert empty.n_rows == 0 and empty.variables == bn.variables
    big = forward_sample(bn, 100_000, 7)
    assert abs(big.rows[:, 0].mean() - 0.5) < 0.01
    assert np.array_equal(forward_sample(bn, 50, 3).rows, forward_sample(bn, 50, 3).rows)


@pytest.mark.parametrize("profile", PROFILES)
def test_round_trip_on_reference_networks(profile):
    bn = reference_network(profile)
    fitted = fit_cpts(forward_sample(bn, 100_000, 11), bn.dag, 0)
    # compare rows whose parent configuration is common enough to estimate
    joint = joint_distribution(bn)
    for c, f in zip(bn.cpts, fitted.cpts):
        keep = tuple(c.parents)
        marg = joint.sum(axis=tuple(v for v in range(bn.n_nodes) if v not in keep)) if keep else None
        for cfg in itertools.product(*(range(n) for n in c.table.shape[:-1])):
            if marg is not None and marg[cfg] * 100_000 < 2000:
                continue
            assert np.abs(c.table[cfg] - f.table[cfg]).max() <= 0.02


def test_query_examples():
    g = Dag(3, frozenset({(0, 2), (1, 2)}))
    bn = random_network(g, np.random.default_rng(0), [2, 3, 2])
    assert query(bn, 0) == pytest.approx(bn.cpts[0].table, abs=1e-12)
    assert query(bn, 2, {0: 1, 1: 2}) == pytest.approx(bn.cpts[2].table[1, 2], abs=1e-12)
    assert query(bn, "X2", {"X0": "1"}).sum() == pytest.approx(1.0, abs=1e-12)
    with pytest.raises(ValueError):
        query(bn, 0, {0: 1})
    with pytest.raises(InvalidLevel):
        query(bn, 0, {1: 5})
    with pytest.raises(UnknownNode):
        query(bn, "Q")


def test_zero_probability_evidence():
    g = Dag(2, frozenset({(0, 1)}))
    bn = BayesianNetwork(_specs([2, 2]), g, (Cpt(0, (), [1.0, 0.0]), Cpt(1, (0,), [[0.5, 0.5], [0.5, 0.5]])))
    with pytest.raises(ZeroProbabilityEvidence):
        query(bn, 1, {0: 1})


@settings(max_examples=30, deadline=None)
@given(dags(min_nodes=2, max_nodes=5), st.integers(0, 2**31), st.data())
def test_query_matches_brute_force(g, seed, data):
    bn = random_network(g, np.random.default_rng(seed))
    target = data.draw(st.sampled_from(list(g.nodes)))
    others = [v for v in g.nodes if v != target]
    ev_nodes = data.draw(st.sets(st.sampled_from(others), max_size=len(others)))
    ev = {v: data.draw(st.integers(0, bn.variables[v].n_levels - 1)) for v in ev_nodes}
    levels = [v.n_levels for v in bn.variables]
    want = np.zeros(levels[target])
    for a in itertools.product(*(range(k) for k in levels)):
        if all(a[v] == lv for v, lv in ev.items()):
            want[a[target]] += brute_joint(bn, a)
    got = query(bn, target, ev)
    assert got == pytest.approx(want / want.sum(), abs=1e-12)
    assert got.sum() == pytest.approx(1.0, abs=1e-12)


def test_empty_evidence_is_joint_marginal():
    bn = reference_network("lasi-like")
    joint = joint_distribution(bn)
    assert joint.sum() == pytest.approx(1.0, abs=1e-12)
    for v in range(bn.n_nodes):
        marg = joint.sum(axis=tuple(i for i in range(bn.n_nodes) if i != v))
        assert query(bn, v) == pytest.approx(marg, abs=1e-12)


def test_query_agrees_with_sampling():
    bn = reference_network("adni-like")
    n = 200_000
    d = forward_sample(bn, n, 5)
    cdr = d.index_of("CDR")
    m = d.index_of("M")
    rows = d.rows[d.rows[:, m] == 2]
    emp = np.bincount(rows[:, cdr], minlength=5) / len(rows)
    exact = query(bn, "CDR", {"M": 2})
    se = np.sqrt(exact * (1 - exact) / len(rows))
    assert np.all(np.abs(emp - exact) <= 3 * se + 1e-12)


def test_do_on_root_equals_conditioning():
    g = Dag(3, frozenset({(0, 1), (1, 2), (0, 2)}))
    bn = random_network(g, np.random.default_rng(1))
    for lv in range(bn.variables[0].n_levels):
        assert query(intervene(bn, {0: lv}), 2) == pytest.approx(query(bn, 2, {0: lv}), abs=1e-12)


def test_do_differs_from_seeing_on_confounded_node():
    g = Dag(3, frozenset({(0, 1), (1, 2), (0, 2)}))
    bn = random_network(g, np.random.default_rng(2), [2, 2, 2])
    cut = intervene(bn, {1: 1})
    assert cut.dag.parents(1) == [] and cut.cpts[1].table.tolist() == [0.0, 1.0]
    assert cut.cpts[0] == bn.cpts[0] and cut.cpts[2] == bn.cpts[2]


def test_do_everything_is_point_mass():
    bn = reference_network("lasi-like")
    assign = {name: i % 5 for i, name in enumerate(bn.names)}
    joint = joint_distribution(intervene(bn, assign))
    idx = tuple(assign[name] for name in bn.names)
    assert joint[idx] == pytest.approx(1.0) and joint.sum() == pytest.approx(1.0)


def test_intervene_idempotent_and_commuting():
    bn = reference_network("adni-like")
    once = intervene(bn, {"M": 3})
    assert intervene(once, {"M": 3}) == once
    a = intervene(intervene(bn, {"M": 1}), {"PC": 2})
    b = intervene(intervene(bn, {"PC": 2}), {"M": 1})
    assert a == b == intervene(bn, {"M": 1, "PC": 2})


def test_intervene_errors():
    bn = reference_network("adni-like")
    with pytest.raises(UnknownNode):
        intervene(bn, {"Q": 0})
    with pytest.raises(InvalidLevel):
        intervene(bn, {"M": 9})


def test_memory_intervention_raises_impairment():
    bn = reference_network("adni-like")
    hi = query(intervene(bn, {"M": "2"}), "CDR")[2:].sum()
    lo = query(intervene(bn, {"M": "0"}), "CDR")[2:].sum()
    assert hi > lo


def test_log_likelihood_examples():
    g = Dag(2, frozenset({(0, 1)}))
    det = BayesianNetwork(_specs([2, 2]), g, (Cpt(0, (), [0.5, 0.5]), Cpt(1, (0,), [[1.0, 0.0], [0.0, 1.0]])))
    d = Dataset(det.variables, np.array([[0, 0], [1, 1], [1, 1]]))
    assert log_likelihood(det, d) == pytest.approx(3 * math.log(0.5))
    bad = Dataset(det.variables, np.array([[0, 1]]))
    assert log_likelihood(det, bad) == -math.inf
    one = BayesianNetwork(_specs([2]), Dag(1, frozenset()), (Cpt(0, (), [1.0, 0.0]),))
    assert log_likelihood(one, Dataset(one.variables, np.zeros((4, 1), dtype=int))) == 0.0


@settings(max_examples=20, deadline=None)
@given(dags(min_nodes=7, max_nodes=7), st.integers(0, 2**31))
def test_log_likelihood_matches_enumeration(g, seed):
    bn = random_network(g, np.random.default_rng(seed))
    d = forward_sample(bn, 30, seed)
    want = sum(math.log(brute_joint(bn, row)) for row in d.rows)
    assert log_likelihood(bn, d) == pytest.approx(want, rel=1e-12)
