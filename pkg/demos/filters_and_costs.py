"""Filter pruning and cost-model predictions on a synthetic graph.

Generates a Zipf-labeled graph, samples queries from it and reports, per
query, how many seed candidates each filter keeps, the estimated and
measured probe counts for EXED and WCED, and the cost model's pick.

Run with ``python3 demos/filters_and_costs.py [nodes]``.
"""

import sys

from eteq import Engine, generate_synthetic
from eteq.bench import filter_counts, sample_queries, spearman

n_nodes = int(sys.argv[1]) if len(sys.argv) > 1 else 2000
t = 1

g = generate_synthetic(n_nodes, 10.0, 30, "zipf:1.0", seed=1)
eng = Engine(g)
print(f"graph: {g.n_nodes} nodes, {g.n_edges} edges, average degree {eng.stats.avg_degree:.1f}")

queries = sample_queries(eng, 12, [2, 3, 4, 5], seed=100)
header = f"{'q':>2} {'|E|':>3} {'neigh':>6} {'path':>6} {'both':>6} {'est EX':>9} {'ops EX':>7} {'est WC':>9} {'ops WC':>7}  pick"
print(header)
est, ops = [], []
for i, q in enumerate(queries):
    c = filter_counts(eng, q, t)
    choice = eng.cost.choose_algorithm(q, t)
    ex, wc = eng.exed(q, t), eng.wced(q, t)
    assert ex == wc
    est.append(choice.exed.total)
    ops.append(ex.operations)
    print(
        f"{i:>2} {q.n_edges:>3} {c['neighbour']:>6} {c['path']:>6} {c['both']:>6} "
        f"{choice.exed.total:>9.1f} {ex.operations:>7} {choice.wced.total:>9.1f} {wc.operations:>7}  {choice.algorithm}"
    )
print(f"Spearman(estimated, measured EXED probes) = {spearman(est, ops):.2f}")
