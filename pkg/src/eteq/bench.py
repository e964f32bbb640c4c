"""Experiment harness: pruning power, cost-model correlation and CSV reports.

Bench CSV columns, in order:

``query_id, n_edges, t, algorithm, filters``
    the run configuration
``candidates_before, candidates_after_neighbour, candidates_after_path, candidates_after_both``
    seed candidates under each filter (independent of the row's own filter)
``answers, distance_histogram, answers_sha256``
    result size, ``d:count`` pairs joined by ``;`` and a hash of the JSON-lines output
``operations``
    edge probes spent by the row's run
``est_exact, est_ub_adj, est_ub_path, recommended``
    model totals for the row's algorithm and the exact-model recommendation
``wall_time_s``
    blank unless timing is requested, so reports stay byte-reproducible
"""

from __future__ import annotations

import csv
import hashlib
import io
import os
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from typing import Iterable, Sequence

import numpy as np
from scipy import stats as sps

from .cost import MODELS
from .generate import sample_query
from .graph import EteqError
from .matcher import FILTERS, AnswerSet, Engine, write_answers
from .query import QueryGraph

CSV_COLUMNS = [
    "query_id",
    "n_edges",
    "t",
    "algorithm",
    "filters",
    "candidates_before",
    "candidates_after_neighbour",
    "candidates_after_path",
    "candidates_after_both",
    "answers",
    "distance_histogram",
    "answers_sha256",
    "operations",
    "est_exact",
    "est_ub_adj",
    "est_ub_path",
    "recommended",
    "wall_time_s",
]


class UndefinedCorrelation(EteqError):
    pass


def _check_series(xs: Sequence[float], ys: Sequence[float]) -> tuple[np.ndarray, np.ndarray]:
    x = np.asarray(xs, dtype=float)
    y = np.asarray(ys, dtype=float)
    if x.shape != y.shape or x.ndim != 1:
        raise UndefinedCorrelation("series must be one-dimensional and of equal length")
    if x.size < 3:
        raise UndefinedCorrelation("need at least 3 pairs")
    if np.ptp(x) == 0 or np.ptp(y) == 0:
        raise UndefinedCorrelation("constant series")
    return x, y


def spearman(xs: Sequence[float], ys: Sequence[float]) -> float:
    """Rank correlation with average ranks for ties."""
    x, y = _check_series(xs, ys)
    return float(sps.spearmanr(x, y).statistic)


def pearson(xs: Sequence[float], ys: Sequence[float]) -> float:
    x, y = _check_series(xs, ys)
    return float(sps.pearsonr(x, y).statistic)


@dataclass
class CorrelationReport:
    pairs: list[tuple[float, float]]
    spearman: float
    pearson: float

    @property
    def n(self) -> int:
        return len(self.pairs)


def correlation_report(estimates: Sequence[float], actuals: Sequence[float]) -> CorrelationReport:
    return CorrelationReport(list(zip(map(float, estimates), map(float, actuals))), spearman(estimates, actuals), pearson(estimates, actuals))


@dataclass
class QueryRecord:
    query_id: int
    n_edges: int
    t: int
    candidates_before: int
    after: dict[str, int]

    def pruned(self, filters: str) -> float:
        if filters == "none":
            return 0.0
        return 1.0 - self.after[filters] / self.candidates_before


@dataclass
class RunReport:
    records: list[QueryRecord] = field(default_factory=list)

    def mean_pruned(self, filters: str) -> float:
        if not self.records:
            return 0.0
        return float(np.mean([r.pruned(filters) for r in self.records]))


def threads() -> int:
    try:
        return max(1, int(os.environ.get("ETEQ_THREADS", "1")))
    except ValueError:
        return 1


def _map(fn, items: list) -> list:
    n = threads()
    if n == 1 or len(items) < 2:
        return [fn(x) for x in items]
    with ThreadPoolExecutor(max_workers=n) as ex:
        return list(ex.map(fn, items))


def filter_counts(engine: Engine, q: QueryGraph, t: int) -> dict[str, int]:
    neigh = engine.filter(q, t, "neighbour")
    both = engine.filter(q, t, "both", seed=neigh.seed)
    return {"neighbour": int(neigh.candidates.size), "path": int(both.path.size), "both": int(both.candidates.size)}


def pruning_power_experiment(engine: Engine, queries: Sequence[QueryGraph], t: int) -> RunReport:
    """Seed candidates surviving each filter, per query."""

    def one(item):
        i, q = item
        return QueryRecord(i, q.n_edges, t, engine.g.n_nodes, filter_counts(engine, q, t))

    return RunReport(_map(one, list(enumerate(queries))))


def sample_queries(engine: Engine, n: int, edges: Sequence[int], seed: int = 0) -> list[QueryGraph]:
    """``n`` queries; query ``i`` has ``edges[i % len(edges)]`` edges and seed ``seed + i``."""
    return [sample_query(engine.g, edges[i % len(edges)], seed=seed + i) for i in range(n)]


def answers_digest(engine: Engine, q: QueryGraph, ans: AnswerSet) -> str:
    buf = io.StringIO()
    write_answers(engine.g, q, ans, buf)
    return hashlib.sha256(buf.getvalue().encode("utf-8")).hexdigest()


def _fmt(x: float) -> str:
    return f"{x:.6g}"


def bench_rows(
    engine: Engine,
    queries: Sequence[QueryGraph],
    thresholds: Iterable[int],
    filters: Sequence[str] = FILTERS,
    algos: Sequence[str] = ("exed", "wced"),
    models: Sequence[str] = MODELS,
    timing: bool = False,
) -> list[dict]:
    """One row per valid (query, t, filter, algorithm); thresholds ``>= |E_q|`` are skipped."""
    for f in filters:
        if f not in FILTERS:
            raise EteqError(f"unknown filter configuration {f!r}")
    for m in models:
        if m not in MODELS:
            raise EteqError(f"unknown model {m!r}")
    thresholds = list(thresholds)

    def per_query(item) -> list[dict]:
        qid, q = item
        out = []
        for t in thresholds:
            if t >= q.n_edges:
                continue
            counts = filter_counts(engine, q, t)
            choice = engine.cost.choose_algorithm(q, t, "exact")
            est = {m: {"EXED": engine.cost.exed_cost(q, t, m).total, "WCED": engine.cost.wced_cost(q, t, m).total} for m in models}
            for f in filters:
                for algo in algos:
                    start = time.perf_counter()
                    name, ans = engine.run(q, t, algo, f)
                    wall = time.perf_counter() - start
                    row = {
                        "query_id": qid,
                        "n_edges": q.n_edges,
                        "t": t,
                        "algorithm": name,
                        "filters": f,
                        "candidates_before": engine.g.n_nodes,
                        "candidates_after_neighbour": counts["neighbour"],
                        "candidates_after_path": counts["path"],
                        "candidates_after_both": counts["both"],
                        "answers": len(ans),
                        "distance_histogram": ";".join(f"{d}:{c}" for d, c in ans.distance_histogram().items()),
                        "answers_sha256": answers_digest(engine, q, ans),
                        "operations": ans.operations,
                        "recommended": choice.algorithm,
                        "wall_time_s": f"{wall:.4f}" if timing else "",
                    }
                    for m in MODELS:
                        row["est_" + m.replace("-", "_")] = _fmt(est[m][name]) if m in est else ""
                    out.append(row)
        return out

    rows: list[dict] = []
    for part in _map(per_query, list(enumerate(queries))):
        rows.extend(part)
    return rows


def write_csv(rows: Sequence[dict], out) -> None:
    w = csv.DictWriter(out, fieldnames=CSV_COLUMNS, lineterminator="\n")
    w.writeheader()
    for r in rows:
        w.writerow(r)


def parse_range(spec: str) -> list[int]:
    """``"3"``, ``"2-6"`` or ``"1,3,5"`` (items may themselves be ranges)."""
    out: list[int] = []
    try:
        for part in spec.split(","):
            part = part.strip()
            if "-" in part:
                lo, hi = (int(x) for x in part.split("-", 1))
                if hi < lo:
                    raise ValueError
                out.extend(range(lo, hi + 1))
            else:
                out.append(int(part))
    except ValueError:
        raise EteqError(f"bad range {spec!r}") from None
    return out
