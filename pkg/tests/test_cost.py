import itertools
import math
from fractions import Fraction

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from eteq.cost import (
    CostModel,
    QueryProfile,
    candidate_probability,
    exed_verify_cost,
    lemma2_upper_bound_F,
    prob_all_labels,
    prob_all_labels_closed,
    s_t,
    wced_verify_cost,
)
from eteq.generate import generate_synthetic
from eteq.graph import EteqError, LabelStats
from eteq.oracle import exhaustive_label_probability
from eteq.query import QueryGraph, edge_order, generate_wildcard_queries


def profile(levels, D=2.0):
    return QueryProfile(0, len(levels), levels, [], [], [], D, 100)


def test_label_probability_examples():
    assert prob_all_labels(2, [0.5]) == pytest.approx(0.75, abs=1e-15)
    assert prob_all_labels(2, [1 / 3, 1 / 3]) == pytest.approx(2 / 9, abs=1e-15)
    assert prob_all_labels(0, [0.2, 0.3]) == 0.0
    assert prob_all_labels(5, []) == 1.0
    # a certain label is always drawn
    assert prob_all_labels(3, [1.0]) == 1.0


def test_label_probability_errors():
    with pytest.raises(EteqError):
        prob_all_labels(2, [0.7, 0.6])
    with pytest.raises(EteqError):
        prob_all_labels(2, [1.2])


def test_label_probability_matches_exhaustive_enumeration():
    for D in range(0, 7):
        for sels in [(Fraction(1, 4),), (Fraction(1, 3), Fraction(1, 3)), (Fraction(1, 2), Fraction(1, 4), Fraction(1, 8))]:
            exact = exhaustive_label_probability(D, sels, alphabet=len(sels) + 1)
            assert abs(prob_all_labels(D, [float(s) for s in sels]) - float(exact)) < 1e-12


def test_recurrence_matches_closed_form():
    rng = np.random.default_rng(0)
    for _ in range(200):
        k = int(rng.integers(1, 5))
        sels = rng.dirichlet(np.ones(k + 1))[:k]
        D = float(rng.uniform(0, 20))
        assert prob_all_labels(D, sels) == pytest.approx(prob_all_labels_closed(D, sels), abs=1e-9)


@settings(max_examples=100, deadline=None)
@given(st.lists(st.floats(0.01, 0.3), min_size=1, max_size=3), st.integers(0, 12))
def test_label_probability_monotonicity(sels, D):
    p = prob_all_labels(D, sels)
    assert prob_all_labels(D + 1, sels) >= p - 1e-12
    if sum(sels) + 0.05 <= 1:
        assert prob_all_labels(D, sels + [0.05]) <= p + 1e-12


def test_candidate_probability():
    assert candidate_probability(profile([[], []])) == 1.0
    assert candidate_probability(profile([[0.3]])) == pytest.approx(prob_all_labels(2, [0.3]))
    two = candidate_probability(profile([[0.3], [0.2, 0.1]], D=3.0))
    assert two == pytest.approx(prob_all_labels(3, [0.3]) * prob_all_labels(9, [0.2, 0.1]))


def test_s_t_examples():
    assert s_t(1, 2, [0.5, 0.5], 2) == 0
    assert s_t(2, 0, [0.5, 0.5], 2) == pytest.approx(1.0)
    assert s_t(2, 1, [0.5, 0.5], 2) == pytest.approx(2.0)
    with pytest.raises(EteqError):
        s_t(3, 0, [0.5], 2)


def test_s_t_partition_is_complete():
    for m in range(0, 6):
        for s in (0.1, 0.4, 0.9):
            total = sum(s_t(m, t, [s] * m, 3.0) for t in range(m + 1))
            assert total == pytest.approx(3.0**m)


def test_exed_verify_at_t0_is_the_wced_chain():
    rng = np.random.default_rng(1)
    for _ in range(50):
        sels = list(rng.uniform(0.01, 1.0, size=int(rng.integers(1, 8))))
        D = float(rng.uniform(1, 20))
        assert exed_verify_cost(0, sels, D) == pytest.approx(wced_verify_cost([D * s for s in sels]), rel=1e-9)
    assert exed_verify_cost(0, [0.3], 4.0) == pytest.approx(1.2)


def test_exed_verify_three_edges_by_hand():
    s, D = 0.5, 2.0
    # i=0: S1(0)=0 term, S0(0)*D = 2
    # i=1: S1(1)*D*s = D(1-s)*D*s = 1, S0(1)*D = D*s*D = 2
    # i=2: S1(2)*D*s = 2*D^2*s(1-s)*D*s = 2, S0(2)*D = (Ds)^2*D = 2
    assert exed_verify_cost(1, [s] * 3, D) == pytest.approx(2 + 1 + 2 + 2 + 2)


def test_upper_bound_F():
    for D in (2.0, 5.0, 15.0):
        x = D**-0.5
        assert lemma2_upper_bound_F(x, 2, D) == pytest.approx(-2 * D * x)
        assert lemma2_upper_bound_F(0.0, 2, D) == pytest.approx(D)
        for n in range(2, 9):
            xs = np.linspace(0.01, 1.0, 50)
            vals = [lemma2_upper_bound_F(x, n, D) for x in xs]
            assert all(a > b for a, b in zip(vals, vals[1:]))


def uniform_model(n_labels=3, n=300, deg=6.0, seed=0):
    g = generate_synthetic(n, deg, n_labels, "uniform", seed=seed)
    return CostModel(LabelStats.from_graph(g), depth=2), g


def test_wced_single_edge_by_hand():
    model, g = uniform_model()
    q = QueryGraph(2, ((0, 1, 0),))
    est = model.wced_cost(q, 0)
    s, D, V = model.sel(0), model.stats.avg_degree, g.n_nodes
    assert est.candidates == pytest.approx(V * (1 - (1 - s) ** D))
    assert est.total == pytest.approx(est.candidates * D * s)


def test_wced_sums_its_wildcard_queries():
    model, _ = uniform_model()
    q = QueryGraph(3, ((0, 1, 0), (1, 2, 1)))
    est = model.wced_cost(q, 1)
    parts = []
    for w in generate_wildcard_queries(q, 1):
        seed = model.seed(w)
        cands = model.stats.node_count * model.node_probability(w, seed)
        order = edge_order(w, seed, model.sel)
        parts.append(cands * wced_verify_cost([model.match_factor(w.edges[i][2], "exact") for i in order]))
    assert est.total == pytest.approx(sum(parts))


def test_exed_candidates_by_hand():
    model, _ = uniform_model()
    q = QueryGraph(3, ((0, 1, 0), (1, 2, 1)))
    V = model.stats.node_count
    seed = 1
    assert model.exed_candidates(q, 0, seed=seed) == pytest.approx(V * model.node_probability(q, seed))
    w = generate_wildcard_queries(q, 1)
    expect = V * (model.node_probability(w[0], seed) + model.node_probability(w[1], seed)) - V * model.node_probability(q, seed)
    assert model.exed_candidates(q, 1, seed=seed) == pytest.approx(max(0.0, expect))


def test_wildcards_over_whole_neighbourhood_give_all_nodes():
    model, _ = uniform_model()
    star = QueryGraph(2, ((0, 1, -1),))
    assert model.node_probability(star, 0) == 1.0


@pytest.mark.parametrize("seed", range(3))
def test_upper_bounds_dominate_exact_on_uniform_graphs(seed):
    model, g = uniform_model(seed=seed)
    from eteq.generate import sample_query

    for i in range(8):
        q = sample_query(g, 3, seed=i)
        for t in (0, 1):
            for cost in (model.exed_cost, model.wced_cost):
                exact = cost(q, t, "exact").total
                for ub in ("ub-adj", "ub-path"):
                    assert cost(q, t, ub).total >= exact * (1 - 1e-9)


def test_upper_bound_collapses_to_exact_when_lossless():
    model, _ = uniform_model(n_labels=1)
    # a single-edge query with one label: no collapsing possible
    q = QueryGraph(2, ((0, 1, 0),))
    assert model.node_probability(q, 0, "ub-adj") == pytest.approx(model.node_probability(q, 0, "exact"))


def test_ub_adj_bounds_correlated_siblings():
    # labels a and b always sit together on the same node
    from conftest import make_graph

    triples = []
    for i in range(60):
        if i % 3 == 0:
            triples += [(f"h{i}", "a", f"x{i}"), (f"h{i}", "b", f"y{i}")]
        else:
            triples += [(f"h{i}", "c", f"x{i}"), (f"h{i}", "c", f"y{i}")]
    g = make_graph(triples)
    model = CostModel(LabelStats.from_graph(g), depth=1)
    q = QueryGraph(3, ((0, 1, g.labels["a"]), (0, 2, g.labels["b"])))
    measured = sum(
        1
        for n in range(g.n_nodes)
        if {g.edge_label[e] for e in g.out_adj[n]} >= {g.labels["a"], g.labels["b"]}
    )
    assert g.n_nodes * model.node_probability(q, 0, "ub-adj") >= measured
    assert g.n_nodes * model.node_probability(q, 0, "exact") < measured


def test_choose_algorithm_ties_to_exed_at_t0():
    model, g = uniform_model()
    q = QueryGraph(3, ((0, 1, 0), (1, 2, 1)))
    c = model.choose_algorithm(q, 0)
    assert c.exed.total == pytest.approx(c.wced.total)
    assert c.algorithm == "EXED"
    assert c.exed_verify_condition is None


def test_choose_algorithm_scale_invariant():
    model, g = uniform_model()
    q = QueryGraph(3, ((0, 1, 0), (1, 2, 1)))
    c = model.choose_algorithm(q, 1)
    scaled = [c.exed.total * 7.5, c.wced.total * 7.5]
    assert ("WCED" if scaled[1] < scaled[0] else "EXED") == c.algorithm


def test_exed_verify_condition_report():
    model, g = uniform_model()
    q = QueryGraph(3, ((0, 1, 0), (1, 2, 1)))
    cond = model.exed_verify_condition(q, 1)
    assert cond["threshold_value"] == pytest.approx(model.stats.avg_degree ** -0.5)
    assert cond["holds"] == (cond["sel_l1"] > cond["threshold_value"])


def test_exed_verify_beats_wced_sum():
    # Sel above D^(-1/2), two uniform edges: EXED verify beats the summed WCED chains
    D, s = 4.0, 0.7
    exed = exed_verify_cost(1, [s, s], D)
    # each wildcard query checks its labeled edge first, the wildcard last
    wced = 2 * wced_verify_cost([D * s, D])
    assert exed == pytest.approx(18.56)
    assert exed < wced


def test_upper_bound_cost_dispatch():
    from eteq.cost import upper_bound_cost

    model, g = uniform_model()
    q = QueryGraph(3, ((0, 1, 0), (1, 2, 1)))
    assert upper_bound_cost(model, q, 1, "ub-adj").total == model.exed_cost(q, 1, "ub-adj").total
    assert upper_bound_cost(model, q, 1, "ub-path", "WCED").total == model.wced_cost(q, 1, "ub-path").total
    with pytest.raises(EteqError):
        upper_bound_cost(model, q, 1, "exact")
