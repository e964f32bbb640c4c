"""Neighbourhood signatures, their inverted index and candidate pruning.

A signature records, per level ``k <= d`` and edge label ``l``, how many
neighbours of a node are reached through an ``l``-labeled edge.  Edge
direction is ignored.  Two tables are kept:

``counts``
    first-visit counts: nodes at BFS depth exactly ``k`` having an
    ``l``-edge to a node at depth ``k - 1``.  Used for the query side.
``reach``
    cumulative counts: nodes within distance ``k`` having an ``l``-edge to
    a node within distance ``k - 1``.  Used for the data side.

An embedding maps a query node at depth ``k`` to a data node within distance
``k`` (never necessarily exactly ``k``), so comparing query ``counts`` against
data ``reach`` gives a lower bound on label substitutions, while comparing
exact-depth counts on both sides would not.
"""

from __future__ import annotations

import weakref
from collections import deque
from dataclasses import dataclass, field

import numpy as np
import scipy.sparse as sp

from .graph import WILDCARD, DataGraph, EteqError
from .query import QueryGraph

DEFAULT_DEPTH = 3


@dataclass
class NeighbourhoodSignature:
    owner: int
    depth: int
    counts: dict[tuple[int, int], int] = field(default_factory=dict)
    reach: dict[tuple[int, int], int] = field(default_factory=dict)

    def level_labels(self, k: int) -> list[int]:
        return sorted(l for (kk, l), c in self.counts.items() if kk == k and c > 0)


def _undirected(n_nodes: int, edges) -> list[list[tuple[int, int]]]:
    adj: list[list[tuple[int, int]]] = [[] for _ in range(n_nodes)]
    for s, d, l in edges:
        adj[s].append((d, l))
        if s != d:
            adj[d].append((s, l))
    return adj


def _signature(adj: list[list[tuple[int, int]]], n: int, d: int) -> NeighbourhoodSignature:
    if d < 1:
        raise EteqError("depth must be >= 1")
    dist = {n: 0}
    todo = deque([n])
    while todo:
        u = todo.popleft()
        if dist[u] == d:
            continue
        for v, _ in adj[u]:
            if v not in dist:
                dist[v] = dist[u] + 1
                todo.append(v)
    counts: dict[tuple[int, int], int] = {}
    reach: dict[tuple[int, int], int] = {}
    for y, dy in dist.items():
        exact_labels = set()
        # smallest k at which y joins reach(k, l): y within k and a neighbour within k - 1
        first_k: dict[int, int] = {}
        for z, l in adj[y]:
            if l == WILDCARD:
                continue
            dz = dist.get(z)
            if dz is None:
                continue
            if dy > 0 and dz == dy - 1:
                exact_labels.add(l)
            k = max(dy, dz + 1)
            if k <= d and k < first_k.get(l, d + 1):
                first_k[l] = k
        for l in exact_labels:
            counts[(dy, l)] = counts.get((dy, l), 0) + 1
        for l, k0 in first_k.items():
            for k in range(k0, d + 1):
                reach[(k, l)] = reach.get((k, l), 0) + 1
    return NeighbourhoodSignature(n, d, counts, reach)


def build_signature(g: DataGraph, n: int, d: int = DEFAULT_DEPTH) -> NeighbourhoodSignature:
    """Signature of data node ``n`` computed by a bounded BFS."""
    return _signature(_undirected(g.n_nodes, g.edges()), n, d)


def query_signature(q: QueryGraph, n: int, d: int = DEFAULT_DEPTH) -> NeighbourhoodSignature:
    """Signature of query node ``n``; wildcard edges contribute nothing."""
    return _signature(_undirected(q.n_nodes, q.edges), n, d)


def node_distance(sig_q: NeighbourhoodSignature, sig_g: NeighbourhoodSignature) -> int:
    """Lower bound on substitutions needed to map the query node onto the data node."""
    if sig_q.depth != sig_g.depth:
        raise EteqError(f"depth mismatch: {sig_q.depth} != {sig_g.depth}")
    total = 0
    for key, c in sig_q.counts.items():
        total += max(0, c - sig_g.reach.get(key, 0))
    return total


class InvertedNeighbourhoodIndex:
    """``(label, level) -> (nodes, cardinalities)`` sorted by descending cardinality."""

    def __init__(self, depth: int, n_nodes: int, postings: dict[tuple[int, int], tuple[np.ndarray, np.ndarray]]):
        self.depth = depth
        self.n_nodes = n_nodes
        self.postings = postings

    def lookup(self, label: int, k: int, min_card: int = 1) -> np.ndarray:
        """Nodes whose ``reach(k, label)`` is at least ``min_card``."""
        entry = self.postings.get((label, k))
        if entry is None:
            return np.empty(0, dtype=np.int64)
        nodes, cards = entry
        # cards is descending; count entries >= min_card
        cut = int(np.searchsorted(-cards, -min_card, side="right"))
        return nodes[:cut]

    def signature(self, n: int) -> NeighbourhoodSignature:
        reach = {}
        for (l, k), (nodes, cards) in self.postings.items():
            hit = np.nonzero(nodes == n)[0]
            if hit.size:
                reach[(k, l)] = int(cards[hit[0]])
        return NeighbourhoodSignature(n, self.depth, {}, reach)


def _reach_tables(g: DataGraph, d: int) -> dict[tuple[int, int], np.ndarray]:
    """``(k, l) -> per-node reach counts`` via sparse ball products."""
    n = g.n_nodes
    src, dst, lab = g.edge_arrays()
    ones = np.ones(src.size, dtype=np.int32)
    a = sp.coo_matrix((ones, (src, dst)), shape=(n, n)).tocsr()
    a = ((a + a.T) > 0).astype(np.int32).tocsr()
    ball = sp.identity(n, dtype=np.int32, format="csr")
    label_adj = {}
    for l in np.unique(lab):
        m = lab == l
        al = sp.coo_matrix((ones[m], (src[m], dst[m])), shape=(n, n)).tocsr()
        label_adj[int(l)] = ((al + al.T) > 0).astype(np.int32).tocsr()
    tables = {}
    for k in range(1, d + 1):
        for l, al in label_adj.items():
            prod = ball @ al
            prod.eliminate_zeros()
            row_nnz = np.diff(prod.indptr)
            tables[(k, l)] = row_nnz.astype(np.int64)
        if k < d:
            ball = ((ball + ball @ a) > 0).astype(np.int32).tocsr()
    return tables


def build_inverted_index(g: DataGraph, d: int = DEFAULT_DEPTH) -> InvertedNeighbourhoodIndex:
    if d < 1:
        raise EteqError("depth must be >= 1")
    postings = {}
    if g.n_edges:
        for (k, l), row in _reach_tables(g, d).items():
            nodes = np.nonzero(row)[0]
            cards = row[nodes]
            order = np.lexsort((nodes, -cards))
            postings[(l, k)] = (nodes[order].astype(np.int64), cards[order].astype(np.int64))
    return InvertedNeighbourhoodIndex(d, g.n_nodes, postings)


def neighbourhood_candidates(
    idx: InvertedNeighbourhoodIndex, sig_q: NeighbourhoodSignature, t: int
) -> np.ndarray:
    """Sorted node ids whose ``node_distance`` to ``sig_q`` is at most ``t``."""
    if sig_q.depth != idx.depth:
        raise EteqError(f"depth mismatch: {sig_q.depth} != {idx.depth}")
    required = {key: c for key, c in sig_q.counts.items() if c > 0}
    deficit = np.full(idx.n_nodes, sum(required.values()), dtype=np.int64)
    for (k, l), c in required.items():
        entry = idx.postings.get((l, k))
        if entry is None:
            continue
        nodes, cards = entry
        deficit[nodes] -= np.minimum(cards, c)
    return np.nonzero(deficit <= t)[0]


# query node -> {data node: smallest substitution budget used to reach it}
CandidateMap = dict[int, dict[int, int]]


def _contributions(g: DataGraph, q: QueryGraph, e: int, frm: int, mu_from: dict[int, int], t: int) -> dict[int, int]:
    s, d, l = q.edges[e]
    outgoing = frm == s
    edge_other = g.edge_dst if outgoing else g.edge_src
    adj_all = g.out_adj if outgoing else g.in_adj
    by_label = g.out_edges_labeled if outgoing else g.in_edges_labeled
    labels = g.edge_label
    out: dict[int, int] = {}
    for n, b in mu_from.items():
        if l == WILDCARD:
            for de in adj_all[n]:
                m = edge_other[de]
                if b < out.get(m, t + 1):
                    out[m] = b
        elif b < t:
            for de in adj_all[n]:
                m = edge_other[de]
                c = b if labels[de] == l else b + 1
                if c < out.get(m, t + 1):
                    out[m] = c
        else:
            for de in by_label(n, l):
                m = edge_other[de]
                if b < out.get(m, t + 1):
                    out[m] = b
    return out


def neighbourhood_pruning(
    g: DataGraph,
    q: QueryGraph,
    t: int,
    seed: int,
    idx: InvertedNeighbourhoodIndex | None = None,
    seed_candidates=None,
) -> CandidateMap:
    """Propagate candidate sets with edit budgets outward from ``seed``.

    The seed starts from ``seed_candidates`` (or the index lookup, or every
    node).  Each query edge is processed once in BFS order: tree edges build
    the neighbour's set from the current node's set, charging one
    substitution for a label mismatch; edges closing a cycle only filter the
    already-built set.  With an index, each set is also intersected with that
    query node's own neighbourhood candidates.
    """

    def node_filter(n: int):
        if idx is None:
            return None
        return set(neighbourhood_candidates(idx, query_signature(q, n, idx.depth), t).tolist())

    if seed_candidates is not None:
        start = set(int(x) for x in seed_candidates)
    elif idx is not None:
        start = node_filter(seed)
    else:
        start = set(range(g.n_nodes))
    mu: CandidateMap = {seed: {n: 0 for n in sorted(start)}}
    done_edges: set[int] = set()
    todo = deque([seed])
    while todo:
        x = todo.popleft()
        for e in q.incident(x):
            if e in done_edges:
                continue
            done_edges.add(e)
            s, d, _ = q.edges[e]
            y = d if s == x else s
            contrib = _contributions(g, q, e, x, mu[x], t)
            if y not in mu:
                keep = node_filter(y)
                if keep is not None:
                    contrib = {n: b for n, b in contrib.items() if n in keep}
                mu[y] = contrib
                todo.append(y)
            else:
                mu[y] = {n: b for n, b in mu[y].items() if n in contrib}
    return mu


_MATRICES: "weakref.WeakKeyDictionary[DataGraph, tuple]" = weakref.WeakKeyDictionary()


def _directed_matrices(g: DataGraph):
    """Directed adjacency (any label), per-label adjacency and self-loop masks, cached per graph."""
    hit = _MATRICES.get(g)
    if hit is not None:
        return hit
    n = g.n_nodes
    src, dst, lab = g.edge_arrays()
    ones = np.ones(src.size, dtype=np.int32)
    any_ = sp.csr_matrix((ones, (src, dst)), shape=(n, n))
    by_label = {}
    for l in np.unique(lab):
        m = lab == l
        by_label[int(l)] = sp.csr_matrix((ones[m], (src[m], dst[m])), shape=(n, n))
    loops = src == dst
    loop_any = np.zeros(n, dtype=bool)
    loop_any[src[loops]] = True
    loop_label = {}
    for l in np.unique(lab[loops]):
        mask = np.zeros(n, dtype=bool)
        mask[src[loops & (lab == l)]] = True
        loop_label[int(l)] = mask
    out = (any_, any_.T.tocsr(), by_label, {l: a.T.tocsr() for l, a in by_label.items()}, loop_any, loop_label)
    _MATRICES[g] = out
    return out


def refine_candidates(g: DataGraph, q: QueryGraph, t: int, mu: CandidateMap) -> CandidateMap:
    """Shrink ``mu`` to its budgeted-simulation fixpoint.

    A data node ``n`` stays a candidate of query node ``x`` only if every
    query edge at ``x`` has a data edge at ``n`` with the same direction whose
    other end is a candidate of the neighbouring query node, and at most
    ``t`` of those query edges lack such support with the right label.  Query
    edges sharing a direction and label must also find that many distinct
    supporting data edges, each shortfall costing one substitution.  Finally
    the substitutions needed along a spanning tree of the query, rooted at
    ``x``, must not exceed ``t``.  Any
    embedding with at most ``t`` substitutions passes this test, so no answer
    is lost.
    """
    n = g.n_nodes
    if set(mu) != set(range(q.n_nodes)):
        raise EteqError("candidate map must cover every query node")
    fwd, bwd, fwd_l, bwd_l, loop_any, loop_label = _directed_matrices(g)
    empty = np.zeros(n, dtype=bool)
    masks = {}
    for x, cands in mu.items():
        m = np.zeros(n, dtype=bool)
        m[list(cands)] = True
        masks[x] = m

    def support(x: int, e: int):
        s, d, l = q.edges[e]
        if s == d:
            lab = loop_any if l == WILDCARD else loop_label.get(l, empty)
            return loop_any, lab
        y = d if s == x else s
        outgoing = s == x
        a = fwd if outgoing else bwd
        vec = masks[y].astype(np.int32)
        has_any = (a @ vec) > 0
        if l == WILDCARD:
            return has_any, has_any
        al = (fwd_l if outgoing else bwd_l).get(l)
        has_lab = (al @ vec) > 0 if al is not None else empty
        return has_any, has_lab

    def grouped_deficit(x: int) -> np.ndarray:
        # c query edges sharing direction and label need c distinct data edges
        groups: dict[tuple[bool, int], list[int]] = {}
        for e in q.incident(x):
            s, d, l = q.edges[e]
            if s != d and l != WILDCARD:
                groups.setdefault((s == x, l), []).append(d if s == x else s)
        deficit = np.zeros(n, dtype=np.int64)
        for (outgoing, l), ys in groups.items():
            if len(ys) < 2:
                continue
            al = (fwd_l if outgoing else bwd_l).get(l)
            if al is None:
                deficit += len(ys)
                continue
            union = np.zeros(n, dtype=np.int32)
            for y in ys:
                union |= masks[y]
            deficit += np.maximum(0, len(ys) - al @ union)
        return deficit

    big = t + 1

    def tree_cost(root: int) -> np.ndarray:
        # min substitutions over a BFS spanning tree rooted at ``root``, capped at t + 1
        parent: dict[int, tuple[int, int]] = {}
        order = [root]
        seen = {root}
        for u in order:
            for e in q.incident(u):
                s, d, _ = q.edges[e]
                v = d if s == u else s
                if v not in seen:
                    seen.add(v)
                    parent[v] = (u, e)
                    order.append(v)
        cost = {x: np.where(masks[x], 0, big).astype(np.int64) for x in order}
        for y in reversed(order[1:]):
            p, e = parent[y]
            s, _, l = q.edges[e]
            outgoing = s == p
            a = fwd if outgoing else bwd
            al = a if l == WILDCARD else (fwd_l if outgoing else bwd_l).get(l)
            best = np.full(n, big, dtype=np.int64)
            for v in range(t + 1):
                within = (cost[y] <= v).astype(np.int32)
                if al is not None:
                    best = np.where(((al @ within) > 0) & (best > v), v, best)
                best = np.where(((a @ within) > 0) & (best > v + 1), v + 1, best)
            cost[p] = np.minimum(cost[p] + best, big)
        return cost[root]

    changed = True
    while changed:
        changed = False
        for x in range(q.n_nodes):
            keep = masks[x] & (tree_cost(x) <= t)
            forced = np.zeros(n, dtype=np.int64)
            for e in q.incident(x):
                has_any, has_lab = support(x, e)
                keep &= has_any
                forced += ~has_lab
            keep &= np.maximum(forced, grouped_deficit(x)) <= t
            if keep.sum() != masks[x].sum():
                masks[x] = keep
                changed = True
    return {x: {v: b for v, b in mu[x].items() if masks[x][v]} for x in mu}
