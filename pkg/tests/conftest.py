import numpy as np
import pytest

from eteq.generate import generate_synthetic, sample_query
from eteq.graph import DataGraph, LabelTable
from eteq.matcher import Engine


def make_graph(triples, labels=None):
    """DataGraph from ``(src, label, dst)`` string triples."""
    labels = LabelTable(labels or sorted({p for _, p, _ in triples}))
    names: dict[str, int] = {}
    edges = []
    for s, p, o in triples:
        for x in (s, o):
            names.setdefault(x, len(names))
        edges.append((names[s], names[o], labels.intern(p)))
    return DataGraph(sorted(names, key=names.get), labels, edges)


def random_instance(i: int):
    """The i-th small randomized (graph, query) pair of the exactness suite."""
    rng = np.random.default_rng(i)
    n = int(rng.integers(5, 201))
    deg = float(rng.uniform(2.0, 5.0))
    n_labels = int(rng.integers(1, 11))
    g = generate_synthetic(n, deg, n_labels, "zipf:1.0" if i % 2 else "uniform", seed=i)
    q = sample_query(g, int(rng.integers(1, 5)), seed=i)
    return g, q


@pytest.fixture(scope="session")
def small_engine():
    g = generate_synthetic(120, 4.0, 4, "zipf:1.0", seed=11)
    return Engine(g)


@pytest.fixture(scope="session")
def big_engine():
    """The 10K-node, average degree 15, Zipf-labeled benchmark graph with both indexes."""
    g = generate_synthetic(10_000, 15.0, 50, "zipf:1.0", seed=7)
    eng = Engine(g)
    eng.neighbour_index
    eng.path_index
    return eng
