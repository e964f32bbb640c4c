import io
from math import comb

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from eteq.cost import CostModel
from eteq.graph import WILDCARD, LabelStats, LabelTable
from eteq.query import (
    QueryError,
    QueryGraph,
    edge_order,
    generate_deletion_queries,
    generate_wildcard_queries,
    parse_query,
    select_seed,
    validate,
    write_query,
)

from conftest import make_graph


def path3():
    return QueryGraph(4, ((0, 1, 0), (1, 2, 1), (2, 3, 2)))


def test_validate_rejections():
    with pytest.raises(QueryError):
        validate(QueryGraph(1, ()), 0)
    with pytest.raises(QueryError):
        validate(path3(), -1)
    with pytest.raises(QueryError, match="unlabeled-isomorphism"):
        validate(path3(), 3)
    with pytest.raises(QueryError, match="disconnected"):
        validate(QueryGraph(4, ((0, 1, 0), (2, 3, 0))), 0)
    validate(path3(), 2)


def test_parse_query_wildcard_and_unknown_labels():
    labels = LabelTable(["a", "b"])
    q = parse_query(io.StringIO("x\ta\ty\ny\t*\tz\nz\tnope\tx\n"), labels)
    assert q.n_nodes == 3
    assert q.edges == ((0, 1, 0), (1, 2, WILDCARD), (2, 0, 2))
    assert q.unknown_labels == {2: "nope"}
    buf = io.StringIO()
    write_query(q, labels, buf)
    assert buf.getvalue() == "x\ta\ty\ny\t*\tz\nz\tnope\tx\n"


def test_wildcard_queries_are_lexicographic():
    ws = generate_wildcard_queries(path3(), 2)
    assert len(ws) == 3
    assert [[i for i, e in enumerate(w.edges) if e[2] == WILDCARD] for w in ws] == [[0, 1], [0, 2], [1, 2]]
    assert generate_wildcard_queries(path3(), 0) == [path3()]
    with pytest.raises(QueryError):
        generate_wildcard_queries(ws[0], 1)


def test_deletion_drops_isolated_nodes_and_splits_components():
    vs = generate_deletion_queries(path3(), 1)
    assert len(vs) == 3
    middle = vs[1]
    assert middle.deleted == (1,)
    assert [c.n_edges for c in middle.components] == [1, 1]
    assert middle.node_origin == ((0, 1), (2, 3))
    first = vs[0]
    assert len(first.components) == 1 and first.node_origin == ((1, 2, 3),)


def test_seed_star_center_beats_leaf():
    # uniform labels: the center sees all three labels at level 1
    g = make_graph([(f"n{i}", f"l{i % 3}", f"n{(i + 1) % 30}") for i in range(30)])
    model = CostModel(LabelStats.from_graph(g), depth=2)
    star = QueryGraph(4, ((0, 1, 0), (0, 2, 1), (0, 3, 2)))
    assert select_seed(star, model) == 0


def test_seed_ties_go_to_lowest_id():
    class Flat:
        def node_selectivity(self, q, n, t):
            return 0.5

    assert select_seed(path3(), Flat()) == 0


def test_edge_order_examples():
    sel = {0: 0.5, 1: 0.01, 2: 0.3}.get
    star = QueryGraph(3, ((0, 1, 0), (0, 2, 1)))
    assert edge_order(star, 0, sel) == [1, 0]
    uniform = QueryGraph(4, ((0, 1, 0), (0, 2, 0), (0, 3, 0)))
    assert edge_order(uniform, 0, lambda l: 0.2) == [0, 1, 2]
    wild = QueryGraph(3, ((0, 1, WILDCARD), (0, 2, 0)))
    assert edge_order(wild, 0, lambda l: 1.0) == [1, 0]


@st.composite
def connected_queries(draw):
    n_edges = draw(st.integers(1, 7))
    edges = []
    n_nodes = 1
    for _ in range(n_edges):
        a = draw(st.integers(0, n_nodes - 1))
        if draw(st.booleans()) or n_nodes == 1:
            b = n_nodes
            n_nodes += 1
        else:
            b = draw(st.integers(0, n_nodes - 1))
        if draw(st.booleans()):
            a, b = b, a
        edges.append((a, b, draw(st.integers(0, 4))))
    return QueryGraph(n_nodes, tuple(edges))


@settings(max_examples=100, deadline=None)
@given(connected_queries(), st.data())
def test_edge_order_is_a_connected_expansion(q, data):
    seed = data.draw(st.integers(0, q.n_nodes - 1))
    sels = [0.1, 0.3, 0.2, 0.05, 0.35]
    order = edge_order(q, seed, lambda l: sels[l])
    assert sorted(order) == list(range(q.n_edges))
    covered = {seed}
    for i in order:
        s, d, _ = q.edges[i]
        assert s in covered or d in covered
        covered |= {s, d}


@settings(max_examples=50, deadline=None)
@given(connected_queries(), st.integers(0, 3))
def test_wildcard_count_is_binomial(q, t):
    if t >= q.n_edges:
        return
    assert len(generate_wildcard_queries(q, t)) == comb(q.n_edges, t)
