import pytest

from eteq.bench import (
    UndefinedCorrelation,
    correlation_report,
    filter_counts,
    parse_range,
    pearson,
    pruning_power_experiment,
    sample_queries,
    spearman,
)
from eteq.graph import EteqError


def test_correlation_examples():
    assert spearman([1, 2, 3, 4], [10, 20, 30, 40]) == pytest.approx(1.0)
    assert spearman([1, 2, 3, 4], [4, 3, 2, 1]) == pytest.approx(-1.0)
    assert spearman([1, 2, 3], [1, 8, 27]) == pytest.approx(1.0)
    assert pearson([1, 2, 3], [2, 4, 6]) == pytest.approx(1.0)
    assert pearson([1, 2, 3], [1, 8, 27]) < 1.0
    rep = correlation_report([1, 2, 3, 4], [1, 3, 2, 4])
    assert rep.n == 4 and rep.spearman == pytest.approx(0.8)


def test_correlation_undefined():
    with pytest.raises(UndefinedCorrelation):
        spearman([1, 1, 1], [1, 2, 3])
    with pytest.raises(UndefinedCorrelation):
        pearson([1, 2], [1, 2])
    with pytest.raises(UndefinedCorrelation):
        pearson([1, 2, 3], [1, 2])


def test_parse_range():
    assert parse_range("3") == [3]
    assert parse_range("2-6") == [2, 3, 4, 5, 6]
    assert parse_range("1,3-4") == [1, 3, 4]
    for bad in ("a", "5-2", ""):
        with pytest.raises(EteqError):
            parse_range(bad)


def test_filter_ordering(small_engine):
    for q in sample_queries(small_engine, 10, [2, 3, 4], seed=0):
        c = filter_counts(small_engine, q, 1)
        assert c["both"] <= min(c["neighbour"], c["path"])
        assert c["path"] <= small_engine.g.n_nodes


def test_pruning_fractions(small_engine):
    rep = pruning_power_experiment(small_engine, sample_queries(small_engine, 8, [3], seed=4), 1)
    assert len(rep.records) == 8
    for f in ("neighbour", "path", "both"):
        assert 0.0 <= rep.mean_pruned(f) <= 1.0
    assert rep.mean_pruned("both") >= max(rep.mean_pruned("neighbour"), rep.mean_pruned("path"))
    assert rep.mean_pruned("none") == 0.0
