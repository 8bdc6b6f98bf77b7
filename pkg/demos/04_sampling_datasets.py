"""
Sampling query datasets
=======================

Benchmark datasets pair queries with their complete answer sets, split
so that evaluation measures generalization: a valid query must use at
least one valid statement, a test query at least one test statement, and
answers already derivable from earlier splits are tagged easy so the
ranking protocol can filter them. This script samples bundles from a
synthetic graph and pokes at what comes out.

Run with: python demos/04_sampling_datasets.py
"""

from hyperq import (QualifierCondition, SamplingConfig, constant_ranking_hits,
                    generate, oracle_expected_metrics, strip_bundle,
                    synth_graph)

g = synth_graph(seed=23, n_entities=80, n_relations=8, profile="mixed")

# ---------------------------------------------------------------------------
# A 2p bundle. The sampler enumerates deterministically under the seed,
# deduplicates isomorphic queries, rejects over-popular answers by
# in-degree, and demands exactly one qualifier pair per edge by default.

cfg = SamplingConfig(pattern="2p", seed=4, max_queries_per_split=50)
bundle = generate(g, cfg)

print("pattern:", bundle.pattern.value)
for split in ("train", "valid", "test"):
    print(f"  {split:<5} queries:", len(bundle.records(split)))

# ---------------------------------------------------------------------------
# Each record holds the query, its split, the full answer set over the
# splits visible to it, and the easy subset answerable without the
# record's own split.

rec = bundle.records("test")[0]
print("\nfirst test record")
print("  answers     :", len(rec.answers))
print("  easy subset :", len(rec.easy_answers))
print("  hard        :", len(rec.hard_answers))
print("  easy+hard==answers:",
      rec.easy_answers | rec.hard_answers == rec.answers)

# Query edges carry exactly one qualifier pair each under the default
# condition.
print("  pairs per edge:",
      [len(s.qualifiers) for s in rec.query.statements])

# ---------------------------------------------------------------------------
# Same seed, same bundle; different seed, different queries.

again = generate(g, cfg)
print("\nresampling is deterministic:",
      [r.query for r in again.all_records()] ==
      [r.query for r in bundle.all_records()])

other = generate(g, SamplingConfig(pattern="2p", seed=5,
                                   max_queries_per_split=50))
print("another seed differs       :",
      [r.query for r in other.all_records()] !=
      [r.query for r in bundle.all_records()])

# ---------------------------------------------------------------------------
# Qualifier-free sampling: ask for zero pairs per edge.

plain = generate(g, SamplingConfig(pattern="1p", seed=4,
                                   max_queries_per_split=50,
                                   qualifier_condition=QualifierCondition.none()))
print("\n1p bundle without qualifiers:",
      sum(len(plain.records(s)) for s in ("train", "valid", "test")),
      "queries")

# strip_bundle removes qualifiers from queries but keeps the original
# answer sets, which is how a triple-only baseline gets scored on the
# real task.
stripped = strip_bundle(bundle)
srec = stripped.records("test")[0]
print("stripped pairs per edge:",
      [len(s.qualifiers) for s in srec.query.statements],
      "answers kept:", srec.answers == rec.answers)

# ---------------------------------------------------------------------------
# Two cheap reference points before any training. A constant scorer
# ranks every candidate equally; expected Hits@10 only reflects answer
# set size. The qualifier-blind oracle retrieves perfectly but cannot
# see qualifiers, which caps what triple-level reasoning can reach.

test_recs = bundle.records("test")
print("\nconstant scorer Hits@10:",
      round(constant_ranking_hits(bundle, 10), 4))
oracle = oracle_expected_metrics(g, test_recs)
print("qualifier-blind oracle  Hits@10:", round(oracle.hits[10], 4),
      " MRR:", round(oracle.mrr, 4))
