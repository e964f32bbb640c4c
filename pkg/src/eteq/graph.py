"""Edge-labeled directed data graphs: interning, ingestion and label statistics."""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Iterable, Iterator, TextIO

import numpy as np

# Reserved label id for the wildcard; never stored in a DataGraph.
WILDCARD = -1
WILDCARD_TOKEN = "*"


class EteqError(Exception):
    """Base class for errors raised by this package."""


class ParseError(EteqError, ValueError):
    def __init__(self, lineno: int, message: str):
        super().__init__(f"line {lineno}: {message}")
        self.lineno = lineno


class LabelTable:
    """Bijective interning of label strings to dense ids."""

    def __init__(self, names: Iterable[str] = ()):
        self.names: list[str] = []
        self._ids: dict[str, int] = {}
        for name in names:
            self.intern(name)

    def intern(self, name: str) -> int:
        if name == WILDCARD_TOKEN:
            raise EteqError("'*' is reserved for the wildcard label")
        lid = self._ids.get(name)
        if lid is None:
            lid = len(self.names)
            self._ids[name] = lid
            self.names.append(name)
        return lid

    def get(self, name: str, default: int | None = None) -> int | None:
        return self._ids.get(name, default)

    def __getitem__(self, name: str) -> int:
        return self._ids[name]

    def __contains__(self, name: str) -> bool:
        return name in self._ids

    def __len__(self) -> int:
        return len(self.names)

    def name(self, lid: int) -> str:
        if lid == WILDCARD:
            return WILDCARD_TOKEN
        return self.names[lid]


class DataGraph:
    """Immutable directed multigraph with labeled edges.

    Nodes are dense ids ``0..n-1`` with entity strings in ``names``.  Edges are
    stored as parallel arrays (``src``, ``dst``, ``label``) indexed by edge id;
    ``out_adj``/``in_adj`` list incident edge ids per node.  Identical
    ``(src, dst, label)`` triples are collapsed at construction.
    """

    def __init__(self, names: list[str], labels: LabelTable, edges: Iterable[tuple[int, int, int]]):
        self.names = list(names)
        self.labels = labels
        n = len(self.names)
        seen: set[tuple[int, int, int]] = set()
        src: list[int] = []
        dst: list[int] = []
        lab: list[int] = []
        for s, d, l in edges:
            if not (0 <= s < n and 0 <= d < n):
                raise EteqError(f"edge endpoint out of range: {(s, d, l)}")
            if not 0 <= l < len(labels):
                raise EteqError(f"unknown label id {l}")
            key = (s, d, l)
            if key in seen:
                continue
            seen.add(key)
            src.append(s)
            dst.append(d)
            lab.append(l)
        self.edge_src = src
        self.edge_dst = dst
        self.edge_label = lab
        self.out_adj: list[list[int]] = [[] for _ in range(n)]
        self.in_adj: list[list[int]] = [[] for _ in range(n)]
        for e, (s, d) in enumerate(zip(src, dst)):
            self.out_adj[s].append(e)
            self.in_adj[d].append(e)
        self._out_by_label: list[dict[int, list[int]]] | None = None
        self._in_by_label: list[dict[int, list[int]]] | None = None
        self._pairs: dict[tuple[int, int], list[int]] | None = None
        self._index: dict[str, int] | None = None

    @property
    def n_nodes(self) -> int:
        return len(self.names)

    @property
    def n_edges(self) -> int:
        return len(self.edge_src)

    def edges(self) -> Iterator[tuple[int, int, int]]:
        return zip(self.edge_src, self.edge_dst, self.edge_label)

    def edge_arrays(self) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
        return (
            np.asarray(self.edge_src, dtype=np.int64),
            np.asarray(self.edge_dst, dtype=np.int64),
            np.asarray(self.edge_label, dtype=np.int64),
        )

    def degree(self, n: int) -> int:
        return len(self.out_adj[n]) + len(self.in_adj[n])

    def node_id(self, name: str) -> int:
        if self._index is None:
            self._index = {s: i for i, s in enumerate(self.names)}
        return self._index[name]

    def _build_label_adjacency(self) -> None:
        out_by: list[dict[int, list[int]]] = [{} for _ in range(self.n_nodes)]
        in_by: list[dict[int, list[int]]] = [{} for _ in range(self.n_nodes)]
        for e, (s, d, l) in enumerate(self.edges()):
            out_by[s].setdefault(l, []).append(e)
            in_by[d].setdefault(l, []).append(e)
        self._out_by_label = out_by
        self._in_by_label = in_by

    def out_edges_labeled(self, n: int, label: int) -> list[int]:
        if self._out_by_label is None:
            self._build_label_adjacency()
        return self._out_by_label[n].get(label, [])

    def in_edges_labeled(self, n: int, label: int) -> list[int]:
        if self._in_by_label is None:
            self._build_label_adjacency()
        return self._in_by_label[n].get(label, [])

    def edges_between(self, s: int, d: int) -> list[int]:
        """Edge ids directed ``s -> d``."""
        if self._pairs is None:
            pairs: dict[tuple[int, int], list[int]] = {}
            for e, (a, b) in enumerate(zip(self.edge_src, self.edge_dst)):
                pairs.setdefault((a, b), []).append(e)
            self._pairs = pairs
        return self._pairs.get((s, d), [])

    def triples(self) -> Iterator[tuple[str, str, str]]:
        names, lab = self.names, self.labels.names
        for s, d, l in self.edges():
            yield names[s], lab[l], names[d]

    def __repr__(self) -> str:
        return f"DataGraph(nodes={self.n_nodes}, edges={self.n_edges}, labels={len(self.labels)})"


def _split_triple(line: str, lineno: int) -> tuple[str, str, str] | None:
    line = line.rstrip("\r\n")
    if not line.strip() or line.startswith("#"):
        return None
    fields = line.split("\t")
    if len(fields) != 3:
        raise ParseError(lineno, f"expected 3 tab-separated fields, got {len(fields)}")
    return fields[0], fields[1], fields[2]


def read_triples(stream: Iterable[str]) -> Iterator[tuple[int, tuple[str, str, str]]]:
    """Yield ``(lineno, (subject, predicate, object))`` from TSV lines."""
    for lineno, line in enumerate(stream, start=1):
        triple = _split_triple(line, lineno)
        if triple is not None:
            yield lineno, triple


def parse_triples(stream: Iterable[str]) -> DataGraph:
    """Build a DataGraph from ``subject<TAB>predicate<TAB>object`` lines."""
    node_ids: dict[str, int] = {}
    names: list[str] = []
    labels = LabelTable()
    edges = []

    def node(name: str) -> int:
        nid = node_ids.get(name)
        if nid is None:
            nid = node_ids[name] = len(names)
            names.append(name)
        return nid

    for lineno, (s, p, o) in read_triples(stream):
        if p == WILDCARD_TOKEN:
            raise ParseError(lineno, "wildcard predicate is not allowed in a data graph")
        edges.append((node(s), node(o), labels.intern(p)))
    return DataGraph(names, labels, edges)


def load_graph(path: str) -> DataGraph:
    with open(path, encoding="utf-8") as fh:
        return parse_triples(fh)


def write_triples(g: DataGraph, out: TextIO) -> None:
    for s, p, o in g.triples():
        out.write(f"{s}\t{p}\t{o}\n")


@dataclass(frozen=True)
class LabelStats:
    """Label frequencies and degree figures used by the cost model.

    ``max_under_node[l]`` is the largest number of edges labeled ``l``
    incident (in or out) to any single node.
    """

    freq: np.ndarray
    edge_count: int
    node_count: int
    avg_degree: float
    max_under_node: np.ndarray
    max_degree: int = field(default=0)

    @classmethod
    def from_graph(cls, g: DataGraph) -> "LabelStats":
        n_labels = len(g.labels)
        src, dst, lab = g.edge_arrays()
        freq = np.bincount(lab, minlength=n_labels).astype(np.int64)
        per_node = np.zeros((g.n_nodes, max(n_labels, 1)), dtype=np.int64)
        if g.n_edges:
            np.add.at(per_node, (src, lab), 1)
            np.add.at(per_node, (dst, lab), 1)
        max_under = per_node.max(axis=0)[:n_labels] if g.n_nodes else np.zeros(n_labels, np.int64)
        deg = per_node.sum(axis=1)
        avg = 2.0 * g.n_edges / g.n_nodes if g.n_nodes else 0.0
        return cls(
            freq=freq,
            edge_count=g.n_edges,
            node_count=g.n_nodes,
            avg_degree=avg,
            max_under_node=max_under,
            max_degree=int(deg.max()) if g.n_nodes else 0,
        )

    def selectivity(self, label: int) -> float:
        return selectivity(self, label)

    def sel_or_zero(self, label: int) -> float:
        """Selectivity, with labels absent from the graph mapped to 0."""
        if label == WILDCARD:
            return 1.0
        if 0 <= label < len(self.freq) and self.edge_count:
            return float(self.freq[label]) / self.edge_count
        return 0.0

    def max_count(self, label: int) -> float:
        """N(l); the wildcard is bounded by the maximum node degree."""
        if label == WILDCARD:
            return float(self.max_degree)
        if 0 <= label < len(self.max_under_node):
            return float(self.max_under_node[label])
        return 0.0


def selectivity(stats: LabelStats, label: int) -> float:
    """Fraction of data edges carrying ``label``; 1 for the wildcard."""
    if label == WILDCARD:
        return 1.0
    if not (0 <= label < len(stats.freq)) or stats.freq[label] == 0:
        raise EteqError(f"label {label} does not occur in the graph")
    return float(stats.freq[label]) / stats.edge_count
