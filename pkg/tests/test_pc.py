import itertools

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from cdrdag.bayesnet import forward_sample
from cdrdag.cdr import DOMAINS, GLOBAL, generate_cohort, reference_network
from cdrdag.errors import InsufficientVariables, NoConsistentExtension
from cdrdag.graph import Cpdag, Dag, SepSetMap
from cdrdag.pc import (
    PcConfig,
    apply_meek_rules,
    compute_edge_strengths,
    cpdag_of,
    dsep_oracle,
    extend_to_dag,
    learn_cpdag,
    learn_skeleton,
    learn_structure,
    orient_v_structures,
)

from conftest import dags, make_dataset


@settings(max_examples=60, deadline=None)
@given(dags(min_nodes=2, max_nodes=7))
def test_oracle_recovers_cpdag(g):
    learned, _ = learn_cpdag(g.n_nodes, ci=dsep_oracle(g))
    assert learned == cpdag_of(g)


@settings(max_examples=40, deadline=None)
@given(dags(min_nodes=2, max_nodes=7))
def test_oracle_classic_mode_agrees(g):
    cfg = PcConfig(stable=False)
    learned, _ = learn_cpdag(g.n_nodes, cfg, ci=dsep_oracle(g))
    assert learned == cpdag_of(g)


@settings(max_examples=60, deadline=None)
@given(dags(min_nodes=2, max_nodes=7))
def test_extension_is_member_of_equivalence_class(g):
    cp = cpdag_of(g)
    ext = extend_to_dag(cp)
    assert ext.skeleton() == g.skeleton()
    assert ext.v_structures() == g.v_structures()
    assert cpdag_of(ext) == cp
    # already-directed edges keep their direction
    assert cp.directed <= ext.edges


@settings(max_examples=40, deadline=None)
@given(dags(min_nodes=2, max_nodes=7))
def test_meek_closure_is_idempotent(g):
    cp = cpdag_of(g)
    assert apply_meek_rules(cp) == cp


def test_meek_r1():
    g = apply_meek_rules(Cpdag(3, frozenset({(0, 1)}), frozenset({(1, 2)})))
    assert g.directed == {(0, 1), (1, 2)} and not g.undirected


def test_meek_r2():
    g = apply_meek_rules(Cpdag(3, frozenset({(0, 1), (1, 2)}), frozenset({(0, 2)})))
    assert (0, 2) in g.directed and not g.undirected


def test_meek_r3():
    # 1 -> 3 <- 2 with 0 -- 1, 0 -- 2, 0 -- 3 and 1, 2 non-adjacent
    g = apply_meek_rules(Cpdag(4, frozenset({(1, 3), (2, 3)}), frozenset({(0, 1), (0, 2), (0, 3)})))
    assert (0, 3) in g.directed
    assert {(0, 1), (0, 2)} <= g.undirected


def test_meek_r4():
    # 0 -- 1, 0 -- 2, 0 -- 3, 1 -> 2 -> 3 with 1, 3 non-adjacent
    g = apply_meek_rules(Cpdag(4, frozenset({(1, 2), (2, 3)}), frozenset({(0, 1), (0, 2), (0, 3)})))
    assert (0, 3) in g.directed


def test_v_structure_from_sepsets():
    skel = Cpdag(3, frozenset(), frozenset({(0, 1), (1, 2)}))
    collider = orient_v_structures(skel, SepSetMap({(0, 2): []}))
    assert collider.directed == {(0, 1), (2, 1)}
    chain = orient_v_structures(skel, SepSetMap({(0, 2): [1]}))
    assert chain.undirected == {(0, 1), (1, 2)}


def test_conflicting_colliders_are_not_both_applied():
    # sepsets imply 0 -> 1 <- 2 and 1 -> 2 <- 3 which disagree on 1 -- 2
    skel = Cpdag(4, frozenset(), frozenset({(0, 1), (1, 2), (2, 3)}))
    g = orient_v_structures(skel, SepSetMap({(0, 2): [], (1, 3): [], (0, 3): []}))
    assert len(g.directed) + len(g.undirected) == 3
    assert not ({(1, 2), (2, 1)} <= g.directed)


def test_non_extendable_pattern_raises():
    g = Cpdag(4, frozenset({(0, 1), (2, 1), (2, 3), (0, 3)}), frozenset())
    assert extend_to_dag(g) == Dag(4, g.directed)
    # every orientation of a chordless undirected 4-cycle adds a collider
    bad = Cpdag(4, frozenset(), frozenset({(0, 1), (1, 2), (2, 3), (0, 3)}))
    with pytest.raises(NoConsistentExtension):
        extend_to_dag(bad)


def test_extend_orients_low_to_high_when_free():
    g = Cpdag(3, frozenset(), frozenset({(0, 1), (1, 2)}))
    assert extend_to_dag(g).edges == {(0, 1), (1, 2)}


def test_insufficient_variables():
    with pytest.raises(InsufficientVariables):
        learn_skeleton(make_dataset([[0, 1, 0]]))


def test_constant_variable_gets_no_edges(rng):
    x = rng.integers(0, 3, 2000)
    d = make_dataset([x, x, np.zeros(2000, dtype=int)], levels=[3, 3, 2])
    dag, _, _ = learn_structure(d)
    assert dag.edges in ({(0, 1)}, {(1, 0)})


def test_max_cond_size_zero_is_marginal_testing(rng):
    n = 5000
    x = rng.integers(0, 2, n)
    z = np.where(rng.random(n) < 0.9, x, 1 - x)
    y = np.where(rng.random(n) < 0.9, z, 1 - z)
    d = make_dataset([x, y, z])
    assert learn_skeleton(d, PcConfig(max_cond_size=0))[0].skeleton() == {(0, 1), (0, 2), (1, 2)}
    assert learn_skeleton(d)[0].skeleton() == {(0, 2), (1, 2)}


def test_chain_recovered_from_data(rng):
    n = 5000
    x = rng.integers(0, 3, n)
    z = np.where(rng.random(n) < 0.7, x, rng.integers(0, 3, n))
    y = np.where(rng.random(n) < 0.7, z, rng.integers(0, 3, n))
    cp, sep = learn_cpdag(make_dataset([x, y, z]))
    assert cp.skeleton() == {(0, 2), (1, 2)} and not cp.directed
    assert sep[(0, 1)] == {2}


def test_collider_recovered_from_data(rng):
    n = 5000
    x = rng.integers(0, 2, n)
    y = rng.integers(0, 2, n)
    z = np.where(rng.random(n) < 0.9, x + y, rng.integers(0, 3, n))
    cp, _ = learn_cpdag(make_dataset([x, y, z]))
    assert cp.directed == {(0, 2), (1, 2)}


@pytest.mark.parametrize("seed", range(5))
def test_stable_skeleton_invariant_under_permutation(seed):
    d = generate_cohort("lasi-like", 2000, seed)
    perm = list(np.random.default_rng(seed).permutation(d.n_variables))
    base, sep = learn_skeleton(d)
    moved, msep = learn_skeleton(d.permuted(perm))
    back = {tuple(sorted((perm[a], perm[b]))) for a, b in moved.skeleton()}
    assert back == base.skeleton()
    for (a, b) in msep:
        assert {perm[v] for v in msep[(a, b)]} == sep[(perm[a], perm[b])]


@settings(max_examples=25, deadline=None)
@given(st.integers(0, 10_000))
def test_strengths_normalized(seed):
    d = forward_sample(reference_network("lasi-like"), 600, seed)
    dag, _, s = learn_structure(d)
    if not dag.edges:
        assert len(s) == 0
        return
    vals = [v for _, v in s.items()]
    assert all(0.0 <= v <= 1.0 for v in vals)
    assert max(vals) == 1.0
    assert s[s.strongest()] == 1.0


def test_all_zero_strengths_tie_at_one():
    d = make_dataset([[0, 0, 0, 0], [1, 0, 1, 0]], levels=[2, 2])
    s = compute_edge_strengths(d, Dag(2, frozenset({(0, 1)})))
    assert s[(0, 1)] == 1.0 and s.raw[(0, 1)] == 0.0


def test_rule_consistent_cohort_links_every_domain_to_global():
    d = generate_cohort("adni-like", 10_000, 0, rule_consistent=True)
    dag, _, _ = learn_structure(d)
    g = d.index_of(GLOBAL)
    for name in DOMAINS:
        assert dag.adjacent(d.index_of(name), g), name


def test_config_validation():
    with pytest.raises(ValueError):
        PcConfig(alpha=0)
    with pytest.raises(ValueError):
        PcConfig(method="fisher")
    with pytest.raises(ValueError):
        PcConfig(max_cond_size=-1)
    with pytest.raises(ValueError):
        PcConfig(strength="partial")


def test_sepsets_only_for_non_adjacent_pairs():
    g = Dag(5, frozenset({(0, 2), (1, 2), (2, 3), (3, 4)}))
    skel, sep = learn_skeleton(5, ci=dsep_oracle(g))
    for x, y in itertools.combinations(range(5), 2):
        assert ((x, y) in sep) != ((x, y) in skel.skeleton())
