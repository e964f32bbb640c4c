"""Synthetic data graphs and random query sampling."""

from __future__ import annotations

import numpy as np

from .graph import DataGraph, EteqError, LabelTable
from .query import QueryGraph


def label_distribution(n_labels: int, dist: str | tuple = "uniform") -> np.ndarray:
    """Probability vector over label ranks.

    ``dist`` is ``"uniform"``, ``("zipf", s)`` or the string form ``"zipf:s"``.
    """
    if isinstance(dist, str) and dist.startswith("zipf"):
        _, _, s = dist.partition(":")
        dist = ("zipf", float(s) if s else 1.0)
    if dist == "uniform":
        w = np.ones(n_labels)
    elif isinstance(dist, tuple) and dist[0] == "zipf":
        w = 1.0 / np.arange(1, n_labels + 1) ** float(dist[1])
    else:
        raise EteqError(f"unknown label distribution {dist!r}")
    return w / w.sum()


def generate_synthetic(
    n_nodes: int,
    avg_degree: float,
    n_labels: int,
    label_dist: str | tuple = "uniform",
    seed: int = 0,
) -> DataGraph:
    """Connected random multigraph with ``floor(n * avg_degree / 2)`` edges.

    A random spanning tree guarantees connectivity; remaining edges join
    uniform random node pairs.  Every edge gets a random direction and an
    i.i.d. label from ``label_dist``.  Self-loops are never generated.
    """
    if n_nodes < 1 or avg_degree < 0 or n_labels < 1:
        raise EteqError("need n_nodes >= 1, avg_degree >= 0, n_labels >= 1")
    n_edges = int(n_nodes * avg_degree // 2)
    capacity = n_nodes * (n_nodes - 1) * n_labels
    if n_edges > capacity:
        raise EteqError(f"{n_edges} edges exceed multigraph capacity {capacity}")
    if n_nodes > 1 and n_edges < n_nodes - 1:
        raise EteqError("average degree too low for a connected graph")

    rng = np.random.default_rng(seed)
    probs = label_distribution(n_labels, label_dist)
    labels = LabelTable(f"L{i}" for i in range(n_labels))
    names = [f"n{i}" for i in range(n_nodes)]

    order = rng.permutation(n_nodes)
    seen: set[tuple[int, int, int]] = set()
    edges: list[tuple[int, int, int]] = []

    def place(u: int, v: int) -> bool:
        if rng.random() < 0.5:
            u, v = v, u
        lab = int(rng.choice(n_labels, p=probs))
        key = (u, v, lab)
        if key in seen:
            return False
        seen.add(key)
        edges.append(key)
        return True

    for i in range(1, n_nodes):
        parent = int(order[rng.integers(0, i)])
        while not place(int(order[i]), parent):
            pass
    while len(edges) < n_edges:
        u, v = (int(x) for x in rng.integers(0, n_nodes, size=2))
        if u != v:
            place(u, v)
    return DataGraph(names, labels, edges)


def sample_query(g: DataGraph, n_edges: int, seed: int = 0, max_tries: int = 100) -> QueryGraph:
    """Connected query made of ``n_edges`` data edges grown from a random start node.

    Query node ids follow first appearance, so every prefix of the node order
    is connected.  Entity names are copied from the data graph.
    """
    if n_edges < 1 or g.n_edges < n_edges:
        raise EteqError("graph has fewer edges than requested")
    rng = np.random.default_rng(seed)
    for _ in range(max_tries):
        start = int(rng.integers(0, g.n_nodes))
        if g.degree(start) == 0:
            continue
        nodes = [start]
        node_set = {start}
        chosen: list[int] = []
        chosen_set: set[int] = set()
        frontier: list[int] = []
        frontier_set: set[int] = set()

        def grow(n: int) -> None:
            for e in g.out_adj[n] + g.in_adj[n]:
                if e not in chosen_set and e not in frontier_set:
                    frontier.append(e)
                    frontier_set.add(e)

        grow(start)
        while len(chosen) < n_edges and frontier:
            e = frontier.pop(int(rng.integers(0, len(frontier))))
            frontier_set.discard(e)
            chosen.append(e)
            chosen_set.add(e)
            for x in (g.edge_src[e], g.edge_dst[e]):
                if x not in node_set:
                    node_set.add(x)
                    nodes.append(x)
                    grow(x)
        if len(chosen) == n_edges:
            local = {x: i for i, x in enumerate(nodes)}
            edges = tuple(
                (local[g.edge_src[e]], local[g.edge_dst[e]], g.edge_label[e]) for e in chosen
            )
            return QueryGraph(len(nodes), edges, tuple(g.names[x] for x in nodes))
    raise EteqError(f"could not grow a {n_edges}-edge query after {max_tries} tries")
