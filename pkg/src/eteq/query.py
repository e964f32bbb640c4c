"""Query graphs, validation and the wildcard / deletion query rewrites."""

from __future__ import annotations

from collections import deque
from dataclasses import dataclass, field
from itertools import combinations
from typing import Iterable, Protocol, Sequence

from .graph import WILDCARD, WILDCARD_TOKEN, EteqError, LabelTable, read_triples


class QueryError(EteqError, ValueError):
    pass


@dataclass(frozen=True)
class QueryGraph:
    """A small directed labeled multigraph; labels may be ``WILDCARD``.

    Label ids refer to the data graph's LabelTable.  Labels that do not occur
    in the data graph carry ids ``>= len(labels)`` so they never match.
    Entity names are informational only and are ignored by matching.
    """

    n_nodes: int
    edges: tuple[tuple[int, int, int], ...]
    names: tuple[str, ...] | None = None
    # query-local ids of labels absent from the data graph -> their names
    unknown_labels: dict[int, str] | None = field(default=None, compare=False, hash=False, repr=False)

    def __post_init__(self):
        object.__setattr__(self, "edges", tuple(tuple(e) for e in self.edges))
        for s, d, _ in self.edges:
            if not (0 <= s < self.n_nodes and 0 <= d < self.n_nodes):
                raise QueryError(f"query edge endpoint out of range: {(s, d)}")

    @property
    def n_edges(self) -> int:
        return len(self.edges)

    def incident(self, n: int) -> list[int]:
        return [i for i, (s, d, _) in enumerate(self.edges) if s == n or d == n]

    def is_connected(self) -> bool:
        if self.n_nodes == 0:
            return False
        return len(self.bfs_depths(0)) == self.n_nodes

    def bfs_depths(self, start: int) -> dict[int, int]:
        """Undirected shortest-path depth of every node reachable from ``start``."""
        adj: list[list[int]] = [[] for _ in range(self.n_nodes)]
        for s, d, _ in self.edges:
            adj[s].append(d)
            adj[d].append(s)
        depth = {start: 0}
        todo = deque([start])
        while todo:
            u = todo.popleft()
            for v in adj[u]:
                if v not in depth:
                    depth[v] = depth[u] + 1
                    todo.append(v)
        return depth

    def labels(self) -> list[int]:
        return [l for _, _, l in self.edges]

    def relabel(self, edge_ids: Iterable[int], label: int = WILDCARD) -> "QueryGraph":
        chosen = set(edge_ids)
        edges = tuple((s, d, label if i in chosen else l) for i, (s, d, l) in enumerate(self.edges))
        return QueryGraph(self.n_nodes, edges, self.names, self.unknown_labels)


def validate(q: QueryGraph, t: int) -> None:
    if q.n_edges < 1:
        raise QueryError("query has no edges")
    if t < 0:
        raise QueryError("edit threshold must be non-negative")
    if not q.is_connected():
        raise QueryError("query graph is disconnected")
    if t >= q.n_edges:
        raise QueryError(
            f"threshold t={t} >= |E_q|={q.n_edges}: unlabeled-isomorphism regime unsupported"
        )


def parse_query(stream: Iterable[str], labels: LabelTable) -> QueryGraph:
    """Parse a TSV query; ``*`` as predicate denotes the wildcard."""
    node_ids: dict[str, int] = {}
    unknown: dict[str, int] = {}
    edges = []

    def node(name: str) -> int:
        if name not in node_ids:
            node_ids[name] = len(node_ids)
        return node_ids[name]

    for _, (s, p, o) in read_triples(stream):
        if p == WILDCARD_TOKEN:
            lid = WILDCARD
        else:
            lid = labels.get(p)
            if lid is None:
                lid = unknown.setdefault(p, len(labels) + len(unknown))
        edges.append((node(s), node(o), lid))
    names = tuple(sorted(node_ids, key=node_ids.get))
    return QueryGraph(len(names), tuple(edges), names, {v: k for k, v in unknown.items()} or None)


def load_query(path: str, labels: LabelTable) -> QueryGraph:
    with open(path, encoding="utf-8") as fh:
        return parse_query(fh, labels)


def query_label_name(q: QueryGraph, labels: LabelTable, lid: int) -> str:
    if lid == WILDCARD or lid < len(labels):
        return labels.name(lid)
    return (q.unknown_labels or {}).get(lid, f"?{lid}")


def write_query(q: QueryGraph, labels: LabelTable, out) -> None:
    names = q.names or tuple(f"q{i}" for i in range(q.n_nodes))
    for s, d, l in q.edges:
        out.write(f"{names[s]}\t{query_label_name(q, labels, l)}\t{names[d]}\n")


def generate_wildcard_queries(q: QueryGraph, t: int) -> list[QueryGraph]:
    """All C(|E_q|, t) copies of ``q`` with a t-subset of edges set to WILDCARD."""
    validate(q, t)
    if any(l == WILDCARD for l in q.labels()):
        raise QueryError("query already contains wildcard edges")
    return [q.relabel(subset) for subset in combinations(range(q.n_edges), t)]


@dataclass(frozen=True)
class DeletionVariant:
    """One deletion choice: ``deleted`` edge ids and the remaining components.

    ``components[i]`` is a connected QueryGraph; ``node_origin[i][j]`` is the
    original query node id of its node ``j`` and ``edge_origin[i][j]`` the
    original id of its edge ``j``.
    """

    deleted: tuple[int, ...]
    components: tuple[QueryGraph, ...]
    node_origin: tuple[tuple[int, ...], ...]
    edge_origin: tuple[tuple[int, ...], ...]


def _components(q: QueryGraph, keep: Sequence[int]) -> DeletionVariant:
    parent = list(range(q.n_nodes))

    def find(x):
        while parent[x] != x:
            parent[x] = parent[parent[x]]
            x = parent[x]
        return x

    for i in keep:
        s, d, _ = q.edges[i]
        parent[find(s)] = find(d)
    groups: dict[int, list[int]] = {}
    for i in keep:
        groups.setdefault(find(q.edges[i][0]), []).append(i)
    comps, norig, eorig = [], [], []
    for root in sorted(groups, key=lambda r: groups[r][0]):
        eids = groups[root]
        nodes: list[int] = []
        for i in eids:
            for x in q.edges[i][:2]:
                if x not in nodes:
                    nodes.append(x)
        local = {x: j for j, x in enumerate(nodes)}
        edges = tuple((local[q.edges[i][0]], local[q.edges[i][1]], q.edges[i][2]) for i in eids)
        names = tuple(q.names[x] for x in nodes) if q.names else None
        comps.append(QueryGraph(len(nodes), edges, names, q.unknown_labels))
        norig.append(tuple(nodes))
        eorig.append(tuple(eids))
    return DeletionVariant((), tuple(comps), tuple(norig), tuple(eorig))


def generate_deletion_queries(q: QueryGraph, t: int) -> list[DeletionVariant]:
    """C(|E_q|, t) variants with t edges deleted, split into connected components."""
    if t >= q.n_edges:
        raise QueryError("deleting t edges empties the query")
    validate(q, 0)
    out = []
    for subset in combinations(range(q.n_edges), t):
        gone = set(subset)
        v = _components(q, [i for i in range(q.n_edges) if i not in gone])
        out.append(DeletionVariant(subset, v.components, v.node_origin, v.edge_origin))
    return out


class NodeProbabilityModel(Protocol):
    def node_selectivity(self, q: QueryGraph, n: int, t: int) -> float: ...


def select_seed(q: QueryGraph, model: NodeProbabilityModel, t: int = 0) -> int:
    """Query node with the smallest estimated selectivity under budget ``t``; ties to the lowest id."""
    best, best_p = 0, None
    for n in range(q.n_nodes):
        if not q.incident(n) and q.n_nodes > 1:
            continue
        p = model.node_selectivity(q, n, t)
        if best_p is None or p < best_p:
            best, best_p = n, p
    return best


def edge_order(q: QueryGraph, seed: int, sel) -> list[int]:
    """Connected expansion order from ``seed``, most selective frontier edge first.

    ``sel`` maps a label id to its selectivity.  Among edges touching an
    already covered node, the smallest selectivity wins, wildcard edges go
    last, and remaining ties go to the lower edge index.
    """
    covered = {seed}
    left = list(range(q.n_edges))
    order: list[int] = []
    while left:
        eligible = [i for i in left if q.edges[i][0] in covered or q.edges[i][1] in covered]
        if not eligible:
            raise QueryError("query graph is disconnected")
        best = min(eligible, key=lambda i: (sel(q.edges[i][2]), q.edges[i][2] == WILDCARD, i))
        order.append(best)
        left.remove(best)
        covered.update(q.edges[best][:2])
    return order
