"""``eteq`` command line.

Exit codes: 0 success, 2 usage error, 3 input error, 4 size cap or limit hit.
``ETEQ_THREADS`` caps the worker threads used by ``bench``.
"""

from __future__ import annotations

import argparse
import json
import sys
from contextlib import contextmanager

from .bench import bench_rows, parse_range, sample_queries, write_csv
from .cost import MODELS, estimate_report
from .generate import generate_synthetic, sample_query
from .graph import EteqError, load_graph, write_triples
from .io import is_index_dir, load_index, save_index
from .matcher import FILTERS, Engine, write_answers
from .neighbourhood import DEFAULT_DEPTH, build_inverted_index
from .oracle import OracleConfig, OracleLimitError, brute_force_answers
from .pathindex import DEFAULT_FPR, build_path_index
from .query import load_query, validate, write_query

EXIT_OK, EXIT_USAGE, EXIT_INPUT, EXIT_LIMIT = 0, 2, 3, 4


@contextmanager
def _output(path: str | None):
    if path is None or path == "-":
        yield sys.stdout
    else:
        with open(path, "w", encoding="utf-8", newline="") as fh:
            yield fh


def _engine(source: str, depth: int = DEFAULT_DEPTH, fpr: float = DEFAULT_FPR) -> Engine:
    if is_index_dir(source):
        g, nidx, pidx, header = load_index(source)
        return Engine(g, header["depth"], header["bloom_fpr"], nidx, pidx)
    return Engine(load_graph(source), depth, fpr)


def cmd_build_index(a) -> int:
    g = load_graph(a.graph)
    nidx = build_inverted_index(g, a.depth)
    pidx = build_path_index(g, a.depth, a.bloom_fpr)
    save_index(a.out, a.graph, g, nidx, pidx)
    print(f"indexed {g.n_nodes} nodes, {g.n_edges} edges into {a.out}", file=sys.stderr)
    return EXIT_OK


def cmd_query(a) -> int:
    eng = _engine(a.source, a.depth, a.bloom_fpr)
    q = load_query(a.query, eng.g.labels)
    validate(q, a.threshold)
    report: dict = {"threshold": a.threshold, "filters": a.filters}
    if a.algo == "auto":
        choice = eng.cost.choose_algorithm(q, a.threshold, a.model)
        print(f"recommended: {choice.algorithm} (model {a.model})", file=sys.stderr)
        report["recommended"] = choice.algorithm
        report["estimates"] = [estimate_report(choice.exed), estimate_report(choice.wced)]
        algo = choice.algorithm.lower()
    else:
        algo = a.algo
    if a.seed_node is not None and not 0 <= a.seed_node < q.n_nodes:
        raise EteqError(f"seed node {a.seed_node} outside the query")
    name, ans = eng.run(q, a.threshold, algo, a.filters, seed=a.seed_node)
    with _output(a.out) as fh:
        write_answers(eng.g, q, ans, fh)
    if a.report:
        f = eng.filter(q, a.threshold, a.filters, a.seed_node)
        report.update(
            algorithm=name,
            answers=len(ans),
            operations=ans.operations,
            distance_histogram={str(k): v for k, v in ans.distance_histogram().items()},
            candidates_before=f.before,
            candidates_after=int(f.candidates.size),
        )
        with open(a.report, "w", encoding="utf-8") as fh:
            json.dump(report, fh, indent=2, sort_keys=True)
            fh.write("\n")
    return EXIT_OK


def cmd_estimate(a) -> int:
    eng = _engine(a.source)
    q = load_query(a.query, eng.g.labels)
    choice = eng.cost.choose_algorithm(q, a.threshold, a.model)
    out = {"recommended": choice.algorithm, "estimates": [estimate_report(choice.exed), estimate_report(choice.wced)]}
    json.dump(out, sys.stdout, indent=2, sort_keys=True)
    sys.stdout.write("\n")
    return EXIT_OK


def cmd_generate(a) -> int:
    g = generate_synthetic(a.nodes, a.avg_degree, a.labels, a.dist, a.seed)
    with _output(a.out) as fh:
        write_triples(g, fh)
    return EXIT_OK


def cmd_sample_query(a) -> int:
    g = load_graph(a.graph)
    q = sample_query(g, a.edges, a.seed)
    with _output(a.out) as fh:
        write_query(q, g.labels, fh)
    return EXIT_OK


def cmd_bench(a) -> int:
    eng = _engine(a.source, a.depth, a.bloom_fpr)
    queries = sample_queries(eng, a.queries, parse_range(a.edges), a.seed)
    rows = bench_rows(
        eng,
        queries,
        parse_range(a.thresholds),
        filters=a.filters.split(","),
        algos=a.algos.split(","),
        models=a.models.split(","),
        timing=a.timing,
    )
    with _output(a.out) as fh:
        write_csv(rows, fh)
    return EXIT_OK


def cmd_oracle(a) -> int:
    g = load_graph(a.graph)
    q = load_query(a.query, g.labels)
    ans = brute_force_answers(g, q, a.threshold, OracleConfig(a.max_nodes, a.max_query_edges))
    with _output(a.out) as fh:
        write_answers(g, q, ans, fh)
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="eteq", description="Error-tolerant exemplar queries over labeled graphs.")
    sub = p.add_subparsers(dest="command", required=True)

    def index_opts(sp):
        sp.add_argument("--depth", type=int, default=DEFAULT_DEPTH)
        sp.add_argument("--bloom-fpr", type=float, default=DEFAULT_FPR)

    sp = sub.add_parser("build-index", help="build neighbourhood and path indexes")
    sp.add_argument("graph")
    index_opts(sp)
    sp.add_argument("--out", required=True)
    sp.set_defaults(fn=cmd_build_index)

    sp = sub.add_parser("query", help="answer a query file")
    sp.add_argument("source", metavar="GRAPH|DIR")
    sp.add_argument("query")
    sp.add_argument("--threshold", "-t", type=int, default=0)
    sp.add_argument("--algo", choices=("exed", "wced", "auto"), default="auto")
    sp.add_argument("--filters", choices=FILTERS, default="both")
    sp.add_argument("--model", choices=MODELS, default="exact", help="cost model for --algo auto")
    sp.add_argument("--seed-node", type=int, help="EXED starting query node (default: most selective)")
    sp.add_argument("--report")
    sp.add_argument("--out", help="answers file (default stdout)")
    index_opts(sp)
    sp.set_defaults(fn=cmd_query)

    sp = sub.add_parser("estimate", help="cost estimates for a query")
    sp.add_argument("source", metavar="GRAPH|DIR")
    sp.add_argument("query")
    sp.add_argument("--threshold", "-t", type=int, default=0)
    sp.add_argument("--model", choices=MODELS, default="exact")
    sp.set_defaults(fn=cmd_estimate)

    sp = sub.add_parser("generate", help="write a synthetic graph")
    sp.add_argument("--nodes", type=int, required=True)
    sp.add_argument("--avg-degree", type=float, required=True)
    sp.add_argument("--labels", type=int, required=True)
    sp.add_argument("--dist", default="uniform", help="uniform or zipf:S")
    sp.add_argument("--seed", type=int, default=0)
    sp.add_argument("--out")
    sp.set_defaults(fn=cmd_generate)

    sp = sub.add_parser("sample-query", help="cut a random connected query from a graph")
    sp.add_argument("graph")
    sp.add_argument("--edges", type=int, required=True)
    sp.add_argument("--seed", type=int, default=0)
    sp.add_argument("--out")
    sp.set_defaults(fn=cmd_sample_query)

    sp = sub.add_parser("bench", help="run sampled queries and write a CSV report")
    sp.add_argument("source", metavar="GRAPH|DIR")
    sp.add_argument("--queries", type=int, default=100)
    sp.add_argument("--edges", default="2-6")
    sp.add_argument("--thresholds", default="0-2")
    sp.add_argument("--models", default=",".join(MODELS))
    sp.add_argument("--filters", default=",".join(FILTERS))
    sp.add_argument("--algos", default="exed,wced")
    sp.add_argument("--seed", type=int, default=0)
    sp.add_argument("--timing", action="store_true", help="fill the wall_time_s column")
    sp.add_argument("--out")
    index_opts(sp)
    sp.set_defaults(fn=cmd_bench)

    sp = sub.add_parser("oracle", help="brute-force answers for small inputs")
    sp.add_argument("graph")
    sp.add_argument("query")
    sp.add_argument("--threshold", "-t", type=int, default=0)
    sp.add_argument("--max-nodes", type=int, default=OracleConfig.max_nodes)
    sp.add_argument("--max-query-edges", type=int, default=OracleConfig.max_query_edges)
    sp.add_argument("--out")
    sp.set_defaults(fn=cmd_oracle)
    return p


def main(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.fn(args)
    except OracleLimitError as exc:
        print(f"eteq: {exc}", file=sys.stderr)
        return EXIT_LIMIT
    except (EteqError, OSError, KeyError) as exc:
        print(f"eteq: {exc}", file=sys.stderr)
        return EXIT_INPUT


if __name__ == "__main__":
    sys.exit(main())
