"""EXED and WCED: exact error-tolerant subgraph search.

An answer is an injective embedding of the query nodes and edges into the
data graph that keeps every edge direction and relabels at most ``t`` edges.
Two embeddings onto the same data subgraph are distinct answers.
"""

from __future__ import annotations

import itertools
import json
from dataclasses import dataclass, field
from typing import Iterable, Iterator

import numpy as np

from .cost import CostModel
from .graph import WILDCARD, DataGraph, EteqError, LabelStats
from .neighbourhood import (
    DEFAULT_DEPTH,
    InvertedNeighbourhoodIndex,
    build_inverted_index,
    neighbourhood_candidates,
    neighbourhood_pruning,
    refine_candidates,
    query_signature,
)
from .pathindex import DEFAULT_FPR, PathIndex, build_path_index, path_candidates_for_node
from .query import QueryGraph, edge_order, generate_deletion_queries, generate_wildcard_queries, validate

FILTERS = ("none", "neighbour", "path", "both")


@dataclass(frozen=True)
class Answer:
    """``edge_map[i]`` is the data edge id matched to query edge ``i``."""

    node_map: tuple[int, ...]
    edge_map: tuple[int, ...]
    distance: int

    @property
    def key(self) -> tuple[int, ...]:
        return self.edge_map


def mismatches(g: DataGraph, q: QueryGraph, edge_map: Iterable[int]) -> int:
    return sum(1 for (_, _, l), de in zip(q.edges, edge_map) if l != WILDCARD and g.edge_label[de] != l)


class AnswerSet:
    """Duplicate-free answers keyed by their edge map."""

    def __init__(self, answers: Iterable[Answer] = ()):
        self._by_key: dict[tuple[int, ...], Answer] = {}
        self.operations = 0
        for a in answers:
            self.add(a)

    def add(self, a: Answer) -> None:
        old = self._by_key.get(a.key)
        if old is None or a.distance < old.distance:
            self._by_key[a.key] = a

    def update(self, other: Iterable[Answer]) -> None:
        for a in other:
            self.add(a)

    def keys(self) -> set[tuple[int, ...]]:
        return set(self._by_key)

    def sorted(self) -> list[Answer]:
        return sorted(self._by_key.values(), key=lambda a: (a.distance, a.key))

    def distance_histogram(self) -> dict[int, int]:
        hist: dict[int, int] = {}
        for a in self._by_key.values():
            hist[a.distance] = hist.get(a.distance, 0) + 1
        return dict(sorted(hist.items()))

    def __len__(self) -> int:
        return len(self._by_key)

    def __iter__(self) -> Iterator[Answer]:
        return iter(self.sorted())

    def __contains__(self, key) -> bool:
        return key in self._by_key

    def __eq__(self, other) -> bool:
        if not isinstance(other, AnswerSet):
            return NotImplemented
        return {k: a.distance for k, a in self._by_key.items()} == {k: a.distance for k, a in other._by_key.items()}


def answer_record(g: DataGraph, q: QueryGraph, a: Answer) -> dict:
    names = g.names
    return {
        "nodes": {str(i): names[n] for i, n in enumerate(a.node_map)},
        "edges": [
            {
                "query_edge": i,
                "data_edge": [names[g.edge_src[de]], g.labels.name(g.edge_label[de]), names[g.edge_dst[de]]],
                "matched": q.edges[i][2] == WILDCARD or g.edge_label[de] == q.edges[i][2],
            }
            for i, de in enumerate(a.edge_map)
        ],
        "distance": a.distance,
    }


def write_answers(g: DataGraph, q: QueryGraph, answers: AnswerSet, out) -> None:
    """One JSON object per line, sorted by ``(distance, edge map)``."""
    for a in answers.sorted():
        out.write(json.dumps(answer_record(g, q, a), sort_keys=True, ensure_ascii=False) + "\n")


class _Search:
    """Backtracking over a fixed edge order from one seed image."""

    def __init__(self, g: DataGraph, q: QueryGraph, t: int, order: list[int], allowed=None, trace=None):
        self.g = g
        self.q = q
        self.t = t
        self.order = order
        self.allowed = allowed or {}
        self.trace = trace
        self.ops = 0
        self.node_map = [-1] * q.n_nodes
        self.used_nodes: set[int] = set()
        self.used_edges: set[int] = set()
        self.edge_map = [-1] * q.n_edges
        self.found: list[Answer] = []

    def run(self, seed: int, cand: int) -> list[Answer]:
        ok = self.allowed.get(seed)
        if ok is not None and cand not in ok:
            return []
        self.node_map[seed] = cand
        self.used_nodes.add(cand)
        self._step(0, 0)
        self.used_nodes.discard(cand)
        self.node_map[seed] = -1
        return self.found

    def _probe(self, qe: int, de: int) -> None:
        self.ops += 1
        if self.trace is not None:
            self.trace.append((qe, de))

    def _step(self, pos: int, edits: int) -> None:
        if pos == len(self.order):
            self.found.append(Answer(tuple(self.node_map), tuple(self.edge_map), edits))
            return
        g, t = self.g, self.t
        qe = self.order[pos]
        s, d, l = self.q.edges[qe]
        ms, md = self.node_map[s], self.node_map[d]
        wild = l == WILDCARD
        if ms >= 0 and md >= 0:
            for de in g.edges_between(ms, md):
                self._probe(qe, de)
                if de in self.used_edges:
                    continue
                cost = 0 if wild or g.edge_label[de] == l else 1
                if edits + cost <= t:
                    self._assign_edge(qe, de, pos, edits + cost)
            return
        if ms >= 0:
            new_q = d
            other = g.edge_dst
            pool = g.out_adj[ms] if (wild or edits < t) else g.out_edges_labeled(ms, l)
        else:
            new_q = s
            other = g.edge_src
            pool = g.in_adj[md] if (wild or edits < t) else g.in_edges_labeled(md, l)
        ok = self.allowed.get(new_q)
        for de in pool:
            self._probe(qe, de)
            m = other[de]
            if m in self.used_nodes or (ok is not None and m not in ok):
                continue
            if de in self.used_edges:
                continue
            cost = 0 if wild or g.edge_label[de] == l else 1
            if edits + cost > t:
                continue
            self.node_map[new_q] = m
            self.used_nodes.add(m)
            self._assign_edge(qe, de, pos, edits + cost)
            self.used_nodes.discard(m)
            self.node_map[new_q] = -1

    def _assign_edge(self, qe: int, de: int, pos: int, edits: int) -> None:
        self.edge_map[qe] = de
        self.used_edges.add(de)
        self._step(pos + 1, edits)
        self.used_edges.discard(de)
        self.edge_map[qe] = -1


def verify_candidate(
    g: DataGraph,
    q: QueryGraph,
    seed: int,
    cand: int,
    t: int,
    order: list[int],
    allowed: dict | None = None,
    trace: list | None = None,
) -> tuple[list[Answer], int]:
    """All answers mapping ``seed`` to ``cand``, and the number of edge probes spent."""
    s = _Search(g, q, t, order, allowed, trace)
    found = s.run(seed, cand)
    return found, s.ops


@dataclass
class Filtering:
    """Candidates surviving each filter for one query's seed."""

    seed: int
    before: int
    neighbour: np.ndarray | None = None
    path: np.ndarray | None = None
    candidates: np.ndarray = field(default_factory=lambda: np.zeros(0, dtype=np.int64))
    allowed: dict | None = None


class Engine:
    """A data graph with its statistics and lazily built filter indexes."""

    def __init__(
        self,
        g: DataGraph,
        depth: int = DEFAULT_DEPTH,
        fpr: float = DEFAULT_FPR,
        neighbour_index: InvertedNeighbourhoodIndex | None = None,
        path_index: PathIndex | None = None,
    ):
        self.g = g
        self.depth = depth
        self.fpr = fpr
        self.stats = LabelStats.from_graph(g)
        self.cost = CostModel(self.stats, depth)
        self._nidx = neighbour_index
        self._pidx = path_index

    @property
    def neighbour_index(self) -> InvertedNeighbourhoodIndex:
        if self._nidx is None:
            self._nidx = build_inverted_index(self.g, self.depth)
        return self._nidx

    @property
    def path_index(self) -> PathIndex:
        if self._pidx is None:
            self._pidx = build_path_index(self.g, self.depth, self.fpr)
        return self._pidx

    def select_seed(self, q: QueryGraph, t: int = 0) -> int:
        return self.cost.seed(q, t)

    def edge_order(self, q: QueryGraph, seed: int) -> list[int]:
        return edge_order(q, seed, self.stats.sel_or_zero)

    def neighbour_candidates(self, q: QueryGraph, n: int, t: int) -> np.ndarray:
        sig = query_signature(q, n, self.depth)
        return neighbourhood_candidates(self.neighbour_index, sig, t)

    def path_candidates(self, q: QueryGraph, n: int, t: int) -> np.ndarray:
        return path_candidates_for_node(self.path_index, q, n, t)

    def filter(self, q: QueryGraph, t: int, filters: str = "both", seed: int | None = None) -> Filtering:
        if filters not in FILTERS:
            raise EteqError(f"unknown filter configuration {filters!r}")
        seed = self.select_seed(q, t) if seed is None else seed
        everything = np.arange(self.g.n_nodes, dtype=np.int64)
        f = Filtering(seed=seed, before=self.g.n_nodes, candidates=everything)
        if filters in ("neighbour", "both"):
            f.neighbour = self.neighbour_candidates(q, seed, t)
        if filters in ("path", "both"):
            f.path = self.path_candidates(q, seed, t)
        if filters == "path":
            f.candidates = f.path
        elif f.neighbour is not None:
            start = f.neighbour if f.path is None else np.intersect1d(f.neighbour, f.path)
            mu = neighbourhood_pruning(self.g, q, t, seed, self.neighbour_index, start)
            mu = refine_candidates(self.g, q, t, mu)
            f.allowed = {n: set(c) for n, c in mu.items()}
            f.candidates = np.array(sorted(mu[seed]), dtype=np.int64)
        return f

    def exed(self, q: QueryGraph, t: int, filters: str = "both", seed: int | None = None, trace: list | None = None) -> AnswerSet:
        """Single edit-budget search from the most selective seed."""
        validate(q, t)
        return self._search(q, t, filters, seed, trace)

    def _search(self, q: QueryGraph, t: int, filters: str, seed: int | None, trace: list | None) -> AnswerSet:
        f = self.filter(q, t, filters, seed)
        order = self.edge_order(q, f.seed)
        out = AnswerSet()
        for cand in f.candidates.tolist():
            found, ops = verify_candidate(self.g, q, f.seed, cand, t, order, f.allowed, trace)
            out.operations += ops
            out.update(found)
        return out

    def wced(self, q: QueryGraph, t: int, filters: str = "both", trace: list | None = None) -> AnswerSet:
        """One exact search per wildcard query, merged and re-scored against ``q``."""
        validate(q, t)
        out = AnswerSet()
        for w in generate_wildcard_queries(q, t):
            part = self._search(w, 0, filters, None, trace)
            out.operations += part.operations
            for a in part:
                out.add(Answer(a.node_map, a.edge_map, mismatches(self.g, q, a.edge_map)))
        return out

    def run(self, q: QueryGraph, t: int, algo: str = "exed", filters: str = "both", model: str = "exact", seed: int | None = None):
        """Run ``exed``, ``wced`` or ``auto`` (cost-model choice); returns ``(algorithm, answers)``.

        ``seed`` overrides the EXED starting query node.
        """
        algo = algo.lower()
        if algo == "auto":
            algo = self.cost.choose_algorithm(q, t, model).algorithm.lower()
        if algo == "exed":
            return "EXED", self.exed(q, t, filters, seed)
        if algo == "wced":
            return "WCED", self.wced(q, t, filters)
        raise EteqError(f"unknown algorithm {algo!r}")

    def deletion_search(self, q: QueryGraph, t: int, filters: str = "both") -> list[dict[int, int]]:
        """Node mappings of ``q`` after deleting exactly ``t`` edges (exact labels elsewhere).

        Each deletion variant's components are searched independently and
        joined by injective cartesian product.  Results are original-query
        node maps; deduplicated and sorted.
        """
        results: set[tuple[tuple[int, int], ...]] = set()
        for var in generate_deletion_queries(q, t):
            per_comp = []
            for comp, origin in zip(var.components, var.node_origin):
                ans = self._search(comp, 0, filters, None, None)
                per_comp.append([(origin, a.node_map) for a in ans])
            for combo in itertools.product(*per_comp):
                mapping: dict[int, int] = {}
                images: set[int] = set()
                ok = True
                for origin, nm in combo:
                    for qn, dn in zip(origin, nm):
                        if dn in images:
                            ok = False
                            break
                        mapping[qn] = dn
                        images.add(dn)
                    if not ok:
                        break
                if ok:
                    results.add(tuple(sorted(mapping.items())))
        return [dict(r) for r in sorted(results)]


def exed(g: DataGraph, q: QueryGraph, t: int, filters: str = "both", **kw) -> AnswerSet:
    return Engine(g, **kw).exed(q, t, filters)


def wced(g: DataGraph, q: QueryGraph, t: int, filters: str = "both", **kw) -> AnswerSet:
    return Engine(g, **kw).wced(q, t, filters)


def count_operations(answers: AnswerSet) -> int:
    """Edge probes spent producing ``answers``."""
    return answers.operations
