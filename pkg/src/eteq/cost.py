"""Selectivity-based cost models for EXED and WCED.

All estimates count edge probes during verification, the same unit the
matcher's operation counter reports.  ``model`` is one of ``"exact"``
(independent, evenly spread labels), ``"ub-adj"`` (sibling edges collapsed to
their most selective label) or ``"ub-path"`` (each root-to-leaf path collapsed
to its most selective label); both upper-bound variants also replace the
expected per-node label count ``D*Sel(l)`` by the observed maximum ``N(l)``.
"""

from __future__ import annotations

import math
from dataclasses import asdict, dataclass, field
from functools import lru_cache
from itertools import combinations
from typing import Sequence

from .graph import WILDCARD, EteqError, LabelStats
from .neighbourhood import DEFAULT_DEPTH, query_signature
from .query import QueryGraph, edge_order, generate_wildcard_queries, select_seed, validate

MODELS = ("exact", "ub-adj", "ub-path")
_SUM_TOL = 1e-12


def _clamp(p: float) -> float:
    return min(1.0, max(0.0, p))


def prob_all_labels(D: float, sels: Sequence[float]) -> float:
    """Probability that ``D`` independent label draws include every required label.

    Uses the subtraction rule ``P(l1..lk | F) = P(l2..lk | F) - P(l2..lk | F + l1)``
    where ``F`` is a set of labels that must not be drawn, bottoming out at
    ``P(nothing required | F) = (1 - sum Sel(F))^D``.
    """
    sels = tuple(float(s) for s in sels)
    if D < 0:
        raise EteqError("D must be non-negative")
    for s in sels:
        if not 0.0 <= s <= 1.0:
            raise EteqError(f"selectivity {s} outside [0, 1]")
    if sum(sels) > 1.0 + _SUM_TOL:
        raise EteqError("selectivities sum to more than 1")
    k = len(sels)

    @lru_cache(maxsize=None)
    def rec(i: int, forbidden_mass: float) -> float:
        if i == k:
            return max(0.0, 1.0 - forbidden_mass) ** D
        return rec(i + 1, forbidden_mass) - rec(i + 1, forbidden_mass + sels[i])

    return _clamp(rec(0, 0.0))


def prob_all_labels_closed(D: float, sels: Sequence[float]) -> float:
    """Inclusion-exclusion form, kept as an independent cross-check."""
    total = 0.0
    for r in range(len(sels) + 1):
        for sub in combinations(sels, r):
            total += (-1) ** r * max(0.0, 1.0 - sum(sub)) ** D
    return _clamp(total)


@dataclass
class QueryProfile:
    """What the formulas need to know about one query seen from one seed."""

    seed: int
    depth: int
    level_sels: list[list[float]]
    order: list[int]
    order_sels: list[float]
    order_max: list[float]
    avg_degree: float
    n_nodes: int


def candidate_probability(profile: QueryProfile, d: int | None = None) -> float:
    """Product over levels of ``prob_all_labels(D^m, level labels)``."""
    d = profile.depth if d is None else d
    p = 1.0
    for m, sels in enumerate(profile.level_sels[:d], start=1):
        if sels:
            p *= prob_all_labels(profile.avg_degree**m, sels)
    return p


def s_t(m: int, t: int, sels: Sequence[float], D: float, match: Sequence[float] | None = None) -> float:
    """Expected partial matchings over the first ``m`` edges with exactly ``t`` mismatches.

    ``match[i]`` is the expected number of matching data edges for query edge
    ``i`` (``D * sels[i]`` unless overridden by an upper-bound model).
    """
    if len(sels) < m:
        raise EteqError("not enough selectivities")
    if t > m:
        return 0.0
    match = [D * s for s in sels] if match is None else match
    miss = [D * (1.0 - s) for s in sels]
    if t == 0:
        return math.prod(match[:m])
    total = 0.0
    for wrong in combinations(range(m), t):
        w = set(wrong)
        total += math.prod(miss[i] if i in w else match[i] for i in range(m))
    return total


def exed_verify_cost(t: int, sels: Sequence[float], D: float, match: Sequence[float] | None = None) -> float:
    """Expected probes to verify one EXED candidate, edges taken in ``sels`` order."""
    n = len(sels)
    match = [D * s for s in sels] if match is None else list(match)
    total = 0.0
    for i in range(n):
        total += s_t(i, t, sels, D, match) * match[i]
        total += sum(s_t(i, j, sels, D, match) for j in range(t)) * D
    return total


def wced_verify_cost(factors: Sequence[float]) -> float:
    """Sum over prefixes of the product of per-edge match factors."""
    total, run = 0.0, 1.0
    for f in factors:
        run *= f
        total += run
    return total


def lemma2_upper_bound_F(x: float, n: int, D: float) -> float:
    """Upper bound of EXED-minus-WCED verification cost at ``t = 1``."""
    if n < 2:
        raise EteqError("n must be >= 2")
    val = D * (1 - n * x) - (n - 1) * D**n * x**n
    for i in range(2, n):
        val += D**i * (i - (n + i - 1) * x**i)
    return val


@dataclass
class CostEstimate:
    algorithm: str
    model: str
    candidates: float
    verify_cost: float
    total: float
    exed_verify_condition: dict | None = field(default=None)

    def to_dict(self) -> dict:
        return asdict(self)


@dataclass
class Choice:
    algorithm: str
    exed: CostEstimate
    wced: CostEstimate
    exed_verify_condition: dict | None


class CostModel:
    """Cost formulas bound to one data graph's label statistics."""

    def __init__(self, stats: LabelStats, depth: int = DEFAULT_DEPTH):
        self.stats = stats
        self.depth = depth

    # -- selectivities -----------------------------------------------------
    def sel(self, label: int) -> float:
        return self.stats.sel_or_zero(label)

    def match_factor(self, label: int, model: str) -> float:
        if model == "exact":
            return self.stats.avg_degree * self.sel(label)
        return self.stats.max_count(label)

    # -- candidates --------------------------------------------------------
    def profile(self, q: QueryGraph, seed: int) -> QueryProfile:
        sig = query_signature(q, seed, self.depth)
        levels = [[self.sel(l) for l in sig.level_labels(m)] for m in range(1, self.depth + 1)]
        order = edge_order(q, seed, self.sel)
        labels = [q.edges[i][2] for i in order]
        return QueryProfile(
            seed=seed,
            depth=self.depth,
            level_sels=levels,
            order=order,
            order_sels=[self.sel(l) for l in labels],
            order_max=[self.stats.max_count(l) for l in labels],
            avg_degree=self.stats.avg_degree,
            n_nodes=self.stats.node_count,
        )

    def node_probability(self, q: QueryGraph, n: int, model: str = "exact") -> float:
        if model == "exact":
            return candidate_probability(self.profile(q, n))
        if model == "ub-adj":
            return self._ub_adj_probability(q, n)
        if model == "ub-path":
            return self._ub_path_probability(q, n)
        raise EteqError(f"unknown model {model!r}")

    def node_selectivity(self, q: QueryGraph, n: int, t: int = 0, model: str = "exact") -> float:
        """Expected fraction of data nodes passing as ``n`` with ``t`` substitutions allowed."""
        if t == 0:
            return self.node_probability(q, n, model)
        return self.exed_candidates(q, t, model, n) / max(1, self.stats.node_count)

    def seed(self, q: QueryGraph, t: int = 0) -> int:
        return select_seed(q, self, t)

    def _tree(self, q: QueryGraph, root: int):
        """BFS tree limited to the model depth: children lists as ``(child, label)``."""
        depth = q.bfs_depths(root)
        children: dict[int, list[tuple[int, int]]] = {n: [] for n in depth}
        parent_seen: set[int] = {root}
        for u in sorted(depth, key=lambda x: (depth[x], x)):
            for e in q.incident(u):
                s, d, l = q.edges[e]
                v = d if s == u else s
                if depth.get(v) == depth[u] + 1 and depth[v] <= self.depth and v not in parent_seen:
                    parent_seen.add(v)
                    children[u].append((v, l))
        return depth, children

    def _ub_adj_probability(self, q: QueryGraph, root: int) -> float:
        depth, children = self._tree(q, root)
        levels: dict[int, set[int]] = {}
        for u, kids in children.items():
            real = [l for _, l in kids if l != WILDCARD]
            if real:
                levels.setdefault(depth[u] + 1, set()).add(min(real, key=lambda l: (self.sel(l), l)))
        p = 1.0
        for m, labs in levels.items():
            p *= prob_all_labels(self.stats.avg_degree**m, [self.sel(l) for l in labs])
        return p

    def _ub_path_probability(self, q: QueryGraph, root: int) -> float:
        _, children = self._tree(q, root)
        mins: set[int] = set()

        def walk(u: int, best: int | None):
            if not children[u]:
                if best is not None:
                    mins.add(best)
                return
            for v, l in children[u]:
                nb = best
                if l != WILDCARD and (nb is None or (self.sel(l), l) < (self.sel(nb), nb)):
                    nb = l
                walk(v, nb)

        walk(root, None)
        if not mins:
            return 1.0
        return prob_all_labels(self.stats.avg_degree**self.depth, [self.sel(l) for l in mins])

    # -- per-algorithm totals ----------------------------------------------
    def _check_model(self, model: str) -> None:
        if model not in MODELS:
            raise EteqError(f"unknown model {model!r}")

    def wced_cost(self, q: QueryGraph, t: int, model: str = "exact") -> CostEstimate:
        self._check_model(model)
        validate(q, t)
        V = self.stats.node_count
        cand_total = 0.0
        total = 0.0
        for w in generate_wildcard_queries(q, t):
            seed = self.seed(w)
            cands = V * self.node_probability(w, seed, model)
            order = edge_order(w, seed, self.sel)
            verify = wced_verify_cost([self.match_factor(w.edges[i][2], model) for i in order])
            cand_total += cands
            total += cands * verify
        verify_avg = total / cand_total if cand_total > 0 else 0.0
        return CostEstimate("WCED", model, cand_total, verify_avg, total)

    def exed_candidates(self, q: QueryGraph, t: int, model: str = "exact", seed: int | None = None) -> float:
        """Candidates for the EXED seed, overlap-corrected over the wildcard queries."""
        self._check_model(model)
        seed = self.seed(q, t) if seed is None else seed
        V = self.stats.node_count
        base = V * self.node_probability(q, seed, model)
        if t == 0:
            return base
        wild = generate_wildcard_queries(q, t)
        total = sum(V * self.node_probability(w, seed, model) for w in wild) - (len(wild) - 1) * base
        return max(0.0, total)

    def exed_cost(self, q: QueryGraph, t: int, model: str = "exact") -> CostEstimate:
        self._check_model(model)
        validate(q, t)
        prof = self.profile(q, self.seed(q, t))
        match = None if model == "exact" else prof.order_max
        verify = exed_verify_cost(t, prof.order_sels, self.stats.avg_degree, match)
        cands = self.exed_candidates(q, t, model, prof.seed)
        return CostEstimate("EXED", model, cands, verify, cands * verify)

    def upper_bound_cost(self, q: QueryGraph, t: int, variant: str, algorithm: str = "EXED") -> CostEstimate:
        """``ub-adj`` or ``ub-path`` estimate for one algorithm."""
        if variant not in ("ub-adj", "ub-path"):
            raise EteqError(f"unknown upper-bound variant {variant!r}")
        if algorithm == "EXED":
            return self.exed_cost(q, t, variant)
        if algorithm == "WCED":
            return self.wced_cost(q, t, variant)
        raise EteqError(f"unknown algorithm {algorithm!r}")

    def exed_verify_condition(self, q: QueryGraph, t: int) -> dict | None:
        if t != 1 or q.n_edges < 2:
            return None
        sel_l1 = min(self.sel(l) for l in q.labels())
        threshold = self.stats.avg_degree ** (-1.0 / q.n_edges) if self.stats.avg_degree > 0 else math.inf
        return {"sel_l1": sel_l1, "threshold_value": threshold, "holds": bool(sel_l1 > threshold)}

    def choose_algorithm(self, q: QueryGraph, t: int, model: str = "exact") -> Choice:
        ex = self.exed_cost(q, t, model)
        wc = self.wced_cost(q, t, model)
        cond = self.exed_verify_condition(q, t)
        ex.exed_verify_condition = wc.exed_verify_condition = cond
        algo = "WCED" if wc.total < ex.total else "EXED"
        return Choice(algo, ex, wc, cond)


def upper_bound_cost(model: CostModel, q: QueryGraph, t: int, variant: str, algorithm: str = "EXED") -> CostEstimate:
    return model.upper_bound_cost(q, t, variant, algorithm)


def choose_algorithm(model: CostModel, q: QueryGraph, t: int, kind: str = "exact") -> Choice:
    return model.choose_algorithm(q, t, kind)


def estimate_report(est: CostEstimate) -> dict:
    d = est.to_dict()
    return {
        "algorithm": d["algorithm"],
        "model": d["model"],
        "candidates": d["candidates"],
        "verify_cost": d["verify_cost"],
        "total": d["total"],
        "exed_verify_condition": d["exed_verify_condition"],
    }

