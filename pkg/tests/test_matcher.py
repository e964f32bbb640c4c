import io
import json

import pytest

from eteq.graph import DataGraph, LabelTable
from eteq.matcher import Answer, AnswerSet, Engine, count_operations, exed, mismatches, verify_candidate, wced, write_answers
from eteq.oracle import brute_force_answers
from eteq.query import QueryGraph

from conftest import make_graph, random_instance


def test_single_edge_examples():
    g = make_graph([("a", "l", "b"), ("c", "m", "d")])
    q = QueryGraph(2, ((0, 1, g.labels["l"]),))
    assert len(exed(g, q, 0)) == 1
    q2 = QueryGraph(3, ((0, 1, g.labels["l"]), (1, 2, g.labels["l"])))
    h = make_graph([("a", "l", "b"), ("b", "l", "c"), ("b", "m", "d")])
    ans = exed(h, q2, 1)
    assert sorted(a.distance for a in ans) == [0, 1]


def test_verify_candidate_one_extra_edge():
    g = make_graph([("a", "l", "b"), ("a", "m", "c")])
    q = QueryGraph(2, ((0, 1, g.labels["l"]),))
    found, ops = verify_candidate(g, q, 0, 0, 1, [0])
    assert sorted(a.distance for a in found) == [0, 1]
    assert ops == 2
    found, ops = verify_candidate(g, q, 0, 0, 0, [0])
    assert [a.distance for a in found] == [0] and ops == 1


def test_triangle_automorphisms():
    # uniformly labeled directed 3-cycle: three rotations
    g = make_graph([("a", "l", "b"), ("b", "l", "c"), ("c", "l", "a")])
    q = QueryGraph(3, ((0, 1, 0), (1, 2, 0), (2, 0, 0)))
    assert len(exed(g, q, 0)) == 3
    assert len(brute_force_answers(g, q, 0)) == 3


def test_direction_is_not_editable():
    g = make_graph([("a", "l", "b")])
    q = QueryGraph(3, ((0, 1, 0), (2, 1, 0)))
    assert len(exed(g, q, 1)) == 0


def test_distinct_embeddings_onto_one_subgraph_are_distinct_answers():
    g = make_graph([("h", "l", "a"), ("h", "l", "b")])
    q = QueryGraph(3, ((0, 1, 0), (0, 2, 0)))
    ans = exed(g, q, 0)
    assert len(ans) == 2
    assert {a.edge_map for a in ans} == {(0, 1), (1, 0)}


def test_empty_graph():
    g = DataGraph([], LabelTable(["l"]), [])
    q = QueryGraph(2, ((0, 1, 0),))
    assert len(exed(g, q, 0)) == 0 and len(wced(g, q, 0)) == 0


def test_wildcard_hit_on_original_label_is_one_distance_zero_answer():
    g = make_graph([("a", "x", "b"), ("b", "y", "c")])
    q = QueryGraph(3, ((0, 1, g.labels["x"]), (1, 2, g.labels["y"])))
    ans = wced(g, q, 1)
    assert [a.distance for a in ans] == [0]


def test_answer_set_dedupes_and_sorts():
    s = AnswerSet([Answer((0, 1), (3,), 1), Answer((0, 1), (3,), 1), Answer((2, 3), (1,), 0)])
    assert len(s) == 2
    assert [a.edge_map for a in s] == [(1,), (3,)]
    assert s.distance_histogram() == {0: 1, 1: 1}


@pytest.mark.parametrize("i", range(25))
def test_engines_agree_with_oracle(i):
    g, q = random_instance(200 + i)
    eng = Engine(g)
    for t in range(min(3, q.n_edges)):
        truth = brute_force_answers(g, q, t)
        for filters in ("none", "neighbour", "path", "both"):
            assert eng.exed(q, t, filters) == truth
            assert eng.wced(q, t, filters) == truth
        for a in truth:
            assert a.distance <= t and a.distance == mismatches(g, q, a.edge_map)


@pytest.mark.parametrize("i", range(10))
def test_verify_candidate_restricted_to_seed_image(i):
    g, q = random_instance(300 + i)
    eng = Engine(g)
    t = min(1, q.n_edges - 1)
    truth = brute_force_answers(g, q, t)
    order = eng.edge_order(q, 0)
    for cand in range(0, g.n_nodes, max(1, g.n_nodes // 10)):
        found, _ = verify_candidate(g, q, 0, cand, t, order)
        assert AnswerSet(found) == AnswerSet(a for a in truth if a.node_map[0] == cand)


def test_operation_counter_matches_trace(small_engine):
    from eteq.generate import sample_query

    for seed in range(5):
        q = sample_query(small_engine.g, 3, seed=seed)
        trace = []
        ans = small_engine.exed(q, 1, "both", trace=trace)
        assert count_operations(ans) == len(trace)
        # every probe touches a data edge incident to an already mapped node
        assert all(0 <= de < small_engine.g.n_edges for _, de in trace)
        again = small_engine.exed(q, 1, "both")
        assert again.operations == ans.operations


def test_zero_candidates_zero_operations():
    g = make_graph([("a", "x", "b")], ["x", "y"])
    q = QueryGraph(2, ((0, 1, 1),))
    assert count_operations(exed(g, q, 0, "neighbour")) == 0


def test_single_edge_probes_bounded_by_degree():
    g = make_graph([("h", "l", "a"), ("h", "m", "b"), ("c", "l", "h"), ("h", "l", "d")])
    q = QueryGraph(2, ((0, 1, g.labels["l"]),))
    found, ops = verify_candidate(g, q, 0, g.node_id("h"), 0, [0])
    assert ops <= g.degree(g.node_id("h"))


def test_monotone_in_threshold():
    for i in range(30):
        g, q = random_instance(400 + i)
        eng = Engine(g)
        prev = None
        for t in range(q.n_edges):
            cur = eng.exed(q, t, "both").keys()
            if prev is not None:
                assert prev <= cur
            prev = cur


def test_answer_json_lines_format():
    g = make_graph([("a", "x", "b"), ("b", "x", "c"), ("b", "y", "d")])
    x = g.labels["x"]
    q = QueryGraph(3, ((0, 1, x), (1, 2, x)))
    buf = io.StringIO()
    write_answers(g, q, exed(g, q, 1), buf)
    lines = [json.loads(v) for v in buf.getvalue().splitlines()]
    assert [v["distance"] for v in lines] == [0, 1]
    assert lines[0]["nodes"] == {"0": "a", "1": "b", "2": "c"}
    assert lines[1]["edges"][1] == {"query_edge": 1, "data_edge": ["b", "y", "d"], "matched": False}


def test_unknown_query_label_only_matches_by_substitution():
    g = make_graph([("a", "x", "b"), ("b", "x", "c")])
    q = QueryGraph(3, ((0, 1, 5), (1, 2, g.labels["x"])))
    assert len(exed(g, q, 0)) == 0
    ans = exed(g, q, 1)
    assert [a.distance for a in ans] == [1]
    assert ans == wced(g, q, 1)


def test_run_auto_uses_cost_choice(small_engine):
    from eteq.generate import sample_query

    q = sample_query(small_engine.g, 3, seed=1)
    name, ans = small_engine.run(q, 1, "auto")
    assert name == small_engine.cost.choose_algorithm(q, 1).algorithm
    assert ans == small_engine.exed(q, 1)


def test_deletion_search_by_hand():
    # path a-x->b-y->c-x->d; deleting the middle edge leaves two x-edges
    g = make_graph([("a", "x", "b"), ("b", "y", "c"), ("c", "x", "d")])
    q = QueryGraph(4, ((0, 1, 0), (1, 2, 1), (2, 3, 0)))
    eng = Engine(g)
    maps = eng.deletion_search(q, 1)
    # middle deleted: two disjoint x-edges placed injectively (2 orderings);
    # an end deleted: the remaining 2-edge path fits exactly once
    assert {0: 0, 1: 1, 2: 2, 3: 3} in maps
    assert {0: 2, 1: 3, 2: 0, 3: 1} in maps
    assert {1: 1, 2: 2, 3: 3} in maps and {0: 0, 1: 1, 2: 2} in maps
    assert len(maps) == 4
