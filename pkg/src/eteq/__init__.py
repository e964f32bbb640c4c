"""Error-tolerant exemplar queries over edge-labeled graphs."""

from .cost import CostEstimate, CostModel, prob_all_labels
from .generate import generate_synthetic, sample_query
from .graph import WILDCARD, DataGraph, EteqError, LabelStats, LabelTable, load_graph, parse_triples
from .matcher import Answer, AnswerSet, Engine, count_operations, exed, verify_candidate, wced, write_answers
from .oracle import OracleConfig, brute_force_answers, exhaustive_label_probability
from .query import QueryGraph, edge_order, load_query, parse_query, validate

__version__ = "0.1.0"

__all__ = [
    "Answer",
    "AnswerSet",
    "CostEstimate",
    "CostModel",
    "DataGraph",
    "Engine",
    "EteqError",
    "LabelStats",
    "LabelTable",
    "OracleConfig",
    "QueryGraph",
    "WILDCARD",
    "brute_force_answers",
    "count_operations",
    "edge_order",
    "exed",
    "exhaustive_label_probability",
    "generate_synthetic",
    "load_graph",
    "load_query",
    "parse_query",
    "parse_triples",
    "prob_all_labels",
    "sample_query",
    "validate",
    "verify_candidate",
    "wced",
    "write_answers",
]
