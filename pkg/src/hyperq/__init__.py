"""Query embeddings over hyper-relational knowledge graphs.

The package covers the full pipeline: graph ingestion and synthesis,
query graphs with qualifier constraints, exact subgraph matching,
dataset sampling, a message-passing query encoder with hand-rolled
reverse-mode differentiation, training, ranking evaluation, and an
analytic oracle for qualifier-blind upper bounds.
"""

from .kg import (ALL_SPLITS, GraphBuilder, IngestError, KnowledgeGraph,
                 QualifierPair, QualifierProfile, SplitTag, Statement,
                 Vocabulary, graph_stats, load_graph, qualifier_match,
                 save_graph, splits_before, splits_up_to, strip_graph,
                 synth_graph, synth_skewed_graph)
from .query import (JOIN_PATTERNS, PATTERN_EDGES, PATTERN_JOIN_SLOT, TARGET,
                    Direction, InvalidQueryError, NodeKind, Pattern,
                    QueryGraph, QueryNode, QueryStatement, Validity,
                    ValidityStatus, anchor, canonical_query, canonicalize,
                    diameter, instantiate, pattern_anchor_count,
                    pattern_edge_count, query_from_dict, query_from_json,
                    query_to_dict, query_to_json, strip_qualifiers, validate,
                    var)
from .matcher import answer_set, answer_set_ignoring_qualifiers
from .reify import (RDF_OBJECT, RDF_PREDICATE, RDF_SUBJECT, reify_graph,
                    reify_query)
from .sampler import (DatasetBundle, QualifierCondition, QueryRecord,
                      SamplingConfig, constant_ranking_hits, generate,
                      load_bundle, reify_bundle, save_bundle, strip_bundle)
from .encoder import (ACTIVATIONS, COMPOSITIONS, DEPTH_MODES,
                      MESSAGE_WEIGHTINGS, POOLINGS, RELATION_AGGREGATIONS,
                      SIMILARITIES, HyperParams, Parameters, QueryEmbedding,
                      encode, load_params, save_params, score_all)
from .trainer import (BASELINES, REGIME_PATTERNS, DivergenceError,
                      TrainConfig, TrainReport, prepare_baseline,
                      regime_patterns, regime_reified, train)
from .evaluator import (MetricReport, Metrics, RankingResult, aggregate,
                        evaluate_bundle, evaluate_faithfulness,
                        evaluate_records, oracle_expected_metrics, ranks,
                        summarize_runs, summary_to_text)

__version__ = "0.1.0"

__all__ = [
    "ALL_SPLITS", "GraphBuilder", "IngestError", "KnowledgeGraph",
    "QualifierPair", "QualifierProfile", "SplitTag", "Statement",
    "Vocabulary", "graph_stats", "load_graph", "qualifier_match",
    "save_graph", "splits_before", "splits_up_to", "strip_graph",
    "synth_graph", "synth_skewed_graph",
    "JOIN_PATTERNS", "PATTERN_EDGES", "PATTERN_JOIN_SLOT", "TARGET",
    "Direction", "InvalidQueryError", "NodeKind", "Pattern", "QueryGraph",
    "QueryNode", "QueryStatement", "Validity", "ValidityStatus", "anchor",
    "canonical_query", "canonicalize", "diameter", "instantiate",
    "pattern_anchor_count", "pattern_edge_count", "query_from_dict",
    "query_from_json", "query_to_dict", "query_to_json", "strip_qualifiers",
    "validate", "var",
    "answer_set", "answer_set_ignoring_qualifiers",
    "RDF_OBJECT", "RDF_PREDICATE", "RDF_SUBJECT", "reify_graph",
    "reify_query",
    "DatasetBundle", "QualifierCondition", "QueryRecord", "SamplingConfig",
    "constant_ranking_hits", "generate", "load_bundle", "reify_bundle",
    "save_bundle", "strip_bundle",
    "ACTIVATIONS", "COMPOSITIONS", "DEPTH_MODES", "MESSAGE_WEIGHTINGS",
    "POOLINGS", "RELATION_AGGREGATIONS", "SIMILARITIES", "HyperParams",
    "Parameters", "QueryEmbedding", "encode", "load_params", "save_params",
    "score_all",
    "BASELINES", "REGIME_PATTERNS", "DivergenceError", "TrainConfig",
    "TrainReport", "prepare_baseline", "regime_patterns", "regime_reified",
    "train",
    "MetricReport", "Metrics", "RankingResult", "aggregate",
    "evaluate_bundle", "evaluate_faithfulness", "evaluate_records",
    "oracle_expected_metrics", "ranks", "summarize_runs", "summary_to_text",
]
