"""Answer one error-tolerant query on a tiny knowledge graph.

Run with ``python3 demos/quickstart.py``.
"""

import io
import sys

from eteq import Engine, brute_force_answers, parse_query, parse_triples, write_answers

GRAPH = """\
alice\tworksAt\tacme
bob\tworksAt\tacme
carol\tworksAt\tglobex
alice\tlivesIn\tparis
bob\tlivesIn\tberlin
carol\tbornIn\tparis
acme\tlocatedIn\tparis
globex\tlocatedIn\tparis
"""

# someone who works at a company and lives in the city the company is in
QUERY = """\
p\tworksAt\tc
p\tlivesIn\tx
c\tlocatedIn\tx
"""

g = parse_triples(io.StringIO(GRAPH))
q = parse_query(io.StringIO(QUERY), g.labels)
eng = Engine(g)

for t in (0, 1):
    print(f"--- t={t}: answers within {t} relabeled edge(s)")
    exed = eng.exed(q, t)
    wced = eng.wced(q, t)
    # both algorithms and the brute-force reference agree exactly
    assert exed == wced == brute_force_answers(g, q, t)
    write_answers(g, q, exed, sys.stdout)
    print(f"EXED probes {exed.operations}, WCED probes {wced.operations}")

choice = eng.cost.choose_algorithm(q, 1)
print(f"cost model recommends {choice.algorithm} "
      f"(EXED {choice.exed.total:.1f} vs WCED {choice.wced.total:.1f} estimated probes)")
