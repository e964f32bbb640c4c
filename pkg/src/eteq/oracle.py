"""Brute-force reference answers and label probabilities for small inputs.

Shares only the graph and query types with the engine: no indexes, no
filters, no edge ordering.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass
from fractions import Fraction
from typing import Sequence

import numpy as np

from .graph import WILDCARD, DataGraph, EteqError
from .matcher import Answer, AnswerSet
from .query import QueryGraph, validate


class OracleLimitError(EteqError):
    """Input exceeds the oracle's size caps."""


@dataclass(frozen=True)
class OracleConfig:
    max_nodes: int = 200
    max_query_edges: int = 5
    max_tuples: int = 10**6


def brute_force_answers(g: DataGraph, q: QueryGraph, t: int, config: OracleConfig = OracleConfig()) -> AnswerSet:
    """Every injective embedding of ``q`` into ``g`` with at most ``t`` relabeled edges.

    Query nodes are assigned in id order over all data nodes; a node is
    accepted when each query edge back to an already assigned node has at
    least one data edge in the right direction.  Complete node maps are then
    expanded into every injective choice of parallel data edges.
    """
    if g.n_nodes > config.max_nodes:
        raise OracleLimitError(f"graph has {g.n_nodes} nodes, cap is {config.max_nodes}")
    if q.n_edges > config.max_query_edges:
        raise OracleLimitError(f"query has {q.n_edges} edges, cap is {config.max_query_edges}")
    validate(q, t)

    n = g.n_nodes
    pair_edges: dict[tuple[int, int], list[int]] = {}
    for i, (s, d, _) in enumerate(zip(g.edge_src, g.edge_dst, g.edge_label)):
        pair_edges.setdefault((s, d), []).append(i)
    linked = np.zeros((n, n), dtype=bool)
    for s, d in pair_edges:
        linked[s, d] = True

    # query edges whose later endpoint is node k
    closing: list[list[tuple[int, int]]] = [[] for _ in range(q.n_nodes)]
    for s, d, _ in q.edges:
        closing[max(s, d)].append((s, d))

    out = AnswerSet()
    assign = [-1] * q.n_nodes

    def emit() -> None:
        options = [pair_edges[(assign[s], assign[d])] for s, d, _ in q.edges]
        for combo in itertools.product(*options):
            if len(set(combo)) < len(combo):
                continue
            dist = sum(1 for (_, _, l), de in zip(q.edges, combo) if l != WILDCARD and g.edge_label[de] != l)
            if dist <= t:
                out.add(Answer(tuple(assign), tuple(combo), dist))

    def place(k: int) -> None:
        if k == q.n_nodes:
            emit()
            return
        used = set(assign[:k])
        for x in range(n):
            if x in used:
                continue
            assign[k] = x
            if all(linked[assign[s], assign[d]] for s, d in closing[k]):
                place(k + 1)
            assign[k] = -1

    place(0)
    return out


def exhaustive_label_probability(
    D: int, sels: Sequence[Fraction | float], alphabet: int | None = None, max_tuples: int = 10**6
) -> Fraction:
    """Exact fraction of weighted ``D``-tuples containing every required label.

    The required labels carry the given marginals; any leftover mass goes to
    ``alphabet - len(sels)`` filler symbols sharing it evenly.
    """
    probs = [Fraction(s).limit_denominator(10**9) if isinstance(s, float) else Fraction(s) for s in sels]
    k = len(probs)
    rest = 1 - sum(probs, Fraction(0))
    if rest < 0:
        raise EteqError("selectivities sum to more than 1")
    alphabet = k + 1 if alphabet is None else alphabet
    fillers = alphabet - k
    if fillers < 0 or (fillers == 0 and rest != 0):
        raise EteqError("alphabet too small for the given marginals")
    if alphabet**D > max_tuples:
        raise OracleLimitError(f"{alphabet}^{D} tuples exceed {max_tuples}")
    weights = probs + ([rest / fillers] * fillers if fillers else [])
    total = Fraction(0)
    for tup in itertools.product(range(alphabet), repeat=D):
        if all(i in tup for i in range(k)):
            w = Fraction(1)
            for sym in tup:
                w *= weights[sym]
            total += w
    return total
