"""Seeded query/answer dataset generation.

For a chosen pattern, the generator walks groundings of the pattern's edges
against the data graph (depth-first, in a seeded random statement order,
under a visit budget), turns accepted groundings into query graphs, and
attaches exact answer sets from the matcher. Acceptance enforces:

* split provenance: train queries ground entirely in train statements;
  validation queries use train+valid statements with at least one valid
  statement; test queries may use any split but need at least one test
  statement. Validation/test queries must also have at least one hard
  answer (an answer not already derivable from earlier splits alone).
* transductivity: every entity and relation a validation/test query
  mentions, qualifier parts included, occurs in some train statement.
* degree filtering: for join patterns, groundings that bind the join node
  to an entity with in-degree above the threshold are discarded; patterns
  whose join node is the target additionally drop queries with any
  above-threshold answer, so no high-in-degree entity remains reachable
  as an answer through the join.
* qualifier condition: each required edge carries between ``min_pairs`` and
  ``max_pairs`` qualifier pairs drawn (seeded) from its grounding
  statement's own pairs.
* isomorphism dedup: queries identical up to variable renaming are emitted
  once per split.

Emitted answer sets are exactly the matcher's over the splits visible to the
query's split; easy answers are the matcher's over strictly earlier splits.
Record order within a split is fixed by a seeded content hash, so it does
not depend on enumeration schedule.
"""

from __future__ import annotations

import hashlib
import json
from dataclasses import dataclass, field
from pathlib import Path
from typing import Iterator

import numpy as np

from .kg import KnowledgeGraph, SplitTag, splits_before, splits_up_to
from .matcher import answer_set
from .query import (NodeKind, PATTERN_EDGES, PATTERN_JOIN_SLOT, Pattern,
                    QueryGraph, canonical_query, canonicalize, instantiate,
                    pattern_anchor_count, pattern_edge_count,
                    query_from_dict, query_to_dict, query_to_json,
                    strip_qualifiers)
from .reify import reify_query

BUNDLE_FORMAT = "hyperq-bundle"
BUNDLE_FORMAT_VERSION = 1

_SAMPLER_STREAM = 0x5A3B

# patterns whose join node is the target: every answer is a possible join
# binding, so answer-level degree filtering applies
_TARGET_JOIN_PATTERNS = frozenset(
    p for p, slot in PATTERN_JOIN_SLOT.items() if slot == ("t", 0)
)


@dataclass(frozen=True)
class QualifierCondition:
    """How many qualifier pairs query edges must carry.

    ``edges`` selects which pattern edges (by index in grounding order) the
    condition applies to; ``None`` means all of them. Unselected edges carry
    no qualifiers. Pairs are drawn from the grounding statement's own
    qualifier set; statements with fewer than ``min_pairs`` pairs cannot
    ground a selected edge.
    """

    min_pairs: int = 1
    max_pairs: int = 1
    edges: frozenset[int] | None = None

    def __post_init__(self):
        if not 0 <= self.min_pairs <= self.max_pairs:
            raise ValueError(f"need 0 <= min_pairs <= max_pairs, got {self!r}")

    def applies_to(self, edge_index: int) -> bool:
        return self.edges is None or edge_index in self.edges

    @classmethod
    def none(cls) -> "QualifierCondition":
        return cls(0, 0, None)


@dataclass(frozen=True)
class SamplingConfig:
    pattern: Pattern
    seed: int
    max_queries_per_split: int = 1000
    in_degree_threshold: int = 50
    qualifier_condition: QualifierCondition = field(default_factory=QualifierCondition)
    max_answer_set: int = 1000
    visit_budget: int = 200_000

    def __post_init__(self):
        object.__setattr__(self, "pattern", Pattern.coerce(self.pattern))
        for name in ("max_queries_per_split", "in_degree_threshold",
                     "max_answer_set", "visit_budget"):
            if getattr(self, name) <= 0:
                raise ValueError(f"{name} must be positive")
        qc = self.qualifier_condition
        if qc.edges is not None:
            n = pattern_edge_count(self.pattern)
            bad = [i for i in qc.edges if not 0 <= i < n]
            if bad:
                raise ValueError(f"qualifier edges {bad} out of range for "
                                 f"{self.pattern.value} ({n} edges)")

    def to_dict(self) -> dict:
        qc = self.qualifier_condition
        return {
            "pattern": self.pattern.value,
            "seed": self.seed,
            "max_queries_per_split": self.max_queries_per_split,
            "in_degree_threshold": self.in_degree_threshold,
            "qualifier_condition": {
                "min_pairs": qc.min_pairs,
                "max_pairs": qc.max_pairs,
                "edges": sorted(qc.edges) if qc.edges is not None else None,
            },
            "max_answer_set": self.max_answer_set,
            "visit_budget": self.visit_budget,
        }

    def content_hash(self) -> str:
        payload = json.dumps(self.to_dict(), sort_keys=True, separators=(",", ":"))
        return hashlib.sha256(payload.encode()).hexdigest()


@dataclass(frozen=True)
class QueryRecord:
    """One dataset row: a query with its exact and easy answer sets."""

    query: QueryGraph
    split: SplitTag
    answers: frozenset[int]
    easy_answers: frozenset[int]

    @property
    def hard_answers(self) -> frozenset[int]:
        return self.answers - self.easy_answers


class DatasetBundle:
    """Per-split query records for one pattern, plus generation metadata."""

    def __init__(self, pattern: Pattern,
                 splits: dict[SplitTag, tuple[QueryRecord, ...]],
                 metadata: dict):
        self.pattern = pattern
        self.splits = {tag: tuple(splits.get(tag, ())) for tag in SplitTag}
        self.metadata = metadata

    def records(self, split: SplitTag | str) -> tuple[QueryRecord, ...]:
        return self.splits[SplitTag.coerce(split)]

    def all_records(self) -> Iterator[QueryRecord]:
        for tag in SplitTag:
            yield from self.splits[tag]

    @property
    def warnings(self) -> tuple[str, ...]:
        return tuple(self.metadata.get("warnings", ()))

    def __len__(self) -> int:
        return sum(len(v) for v in self.splits.values())

    def __repr__(self) -> str:
        counts = ", ".join(f"{t.value}={len(self.splits[t])}" for t in SplitTag)
        return f"DatasetBundle({self.pattern.value}: {counts})"


# -- grounding enumeration ---------------------------------------------------


def _edge_candidates(g: KnowledgeGraph, visible: frozenset[SplitTag],
                     src_entity: int | None, dst_entity: int | None,
                     min_pairs: int, rank: np.ndarray) -> list[int]:
    if src_entity is not None:
        pool = g.by_head(src_entity)
    elif dst_entity is not None:
        pool = g.by_tail(dst_entity)
    else:
        pool = range(len(g.statements))
    out = []
    for i in pool:
        s = g.statements[i]
        if s.split not in visible:
            continue
        if src_entity is not None and s.head != src_entity:
            continue
        if dst_entity is not None and s.tail != dst_entity:
            continue
        if len(s.qualifiers) < min_pairs:
            continue
        out.append(i)
    out.sort(key=lambda i: rank[i])
    return out


def _groundings(g: KnowledgeGraph, cfg: SamplingConfig,
                visible: frozenset[SplitTag], rank: np.ndarray,
                budget: list[int]) -> Iterator[tuple[dict, tuple[int, ...]]]:
    """DFS over pattern-edge groundings, seeded order, shared visit budget.

    Yields (slot binding, chosen statement indices). Stops silently when the
    budget runs out.
    """
    edges = PATTERN_EDGES[cfg.pattern]
    join_slot = PATTERN_JOIN_SLOT.get(cfg.pattern)
    qc = cfg.qualifier_condition
    binding: dict[tuple, int] = {}
    chosen: list[int] = []

    def walk(edge_index: int) -> Iterator[tuple[dict, tuple[int, ...]]]:
        if edge_index == len(edges):
            yield dict(binding), tuple(chosen)
            return
        src_slot, dst_slot = edges[edge_index]
        min_pairs = qc.min_pairs if qc.applies_to(edge_index) else 0
        candidates = _edge_candidates(g, visible, binding.get(src_slot),
                                      binding.get(dst_slot), min_pairs, rank)
        for i in candidates:
            if budget[0] <= 0:
                return
            budget[0] -= 1
            s = g.statements[i]
            newly = []
            ok = True
            for slot, entity in ((src_slot, s.head), (dst_slot, s.tail)):
                if slot in binding:
                    continue
                if slot == join_slot and g.in_degree(entity) > cfg.in_degree_threshold:
                    ok = False
                    break
                binding[slot] = entity
                newly.append(slot)
            if ok:
                chosen.append(i)
                yield from walk(edge_index + 1)
                chosen.pop()
            for slot in newly:
                del binding[slot]

    yield from walk(0)


def _draw_qualifiers(rng: np.random.Generator, cfg: SamplingConfig,
                     stmts: tuple[int, ...], g: KnowledgeGraph) -> list | None:
    qc = cfg.qualifier_condition
    out = []
    for edge_index, stmt_index in enumerate(stmts):
        if not qc.applies_to(edge_index) or qc.max_pairs == 0:
            out.append(frozenset())
            continue
        available = sorted(g.statements[stmt_index].qualifiers)
        if len(available) < qc.min_pairs:
            return None
        k = min(qc.max_pairs, len(available))
        if k == 0:
            out.append(frozenset())
        elif k == len(available):
            out.append(frozenset(available))
        else:
            picks = rng.choice(len(available), size=k, replace=False)
            out.append(frozenset(available[int(p)] for p in picks))
    return out


def _query_mentions(q: QueryGraph) -> tuple[set[int], set[int]]:
    """Entity and relation ids a query mentions, qualifier parts included."""
    ents: set[int] = set()
    rels: set[int] = set()
    for s in q.statements:
        for n in (s.head, s.tail):
            if n.kind is NodeKind.ANCHOR:
                ents.add(n.id)
        rels.add(s.relation)
        for p in s.qualifiers:
            rels.add(p.relation)
            ents.add(p.value)
    return ents, rels


def generate(g: KnowledgeGraph, cfg: SamplingConfig) -> DatasetBundle:
    """Materialize a seeded dataset bundle for ``cfg.pattern`` over ``g``.

    Requires all three splits populated in ``g``. Same graph and config give
    a byte-identical bundle. Splits where the pattern admits no acceptable
    grounding come back empty, with a note in ``metadata["warnings"]``.
    """
    counts = g.split_counts()
    missing = [t.value for t in SplitTag if counts[t] == 0]
    if missing:
        raise ValueError(f"graph is missing statements in splits: {missing}")

    train_ents, train_rels = g.train_seen()
    hub_answers = cfg.pattern in _TARGET_JOIN_PATTERNS
    warnings: list[str] = []
    splits: dict[SplitTag, tuple[QueryRecord, ...]] = {}

    for split_rank, split in enumerate(SplitTag):
        rng = np.random.default_rng([_SAMPLER_STREAM, cfg.seed, split_rank])
        rank = rng.permutation(len(g.statements))
        visible = splits_up_to(split)
        earlier = splits_before(split)
        budget = [cfg.visit_budget]
        seen: set[QueryGraph] = set()
        records: list[QueryRecord] = []

        for binding, stmts in _groundings(g, cfg, visible, rank, budget):
            if split is not SplitTag.TRAIN and not any(
                    g.statements[i].split is split for i in stmts):
                continue
            qualifiers = _draw_qualifiers(rng, cfg, stmts, g)
            if qualifiers is None:
                continue
            anchors = [binding[("a", j)]
                       for j in range(pattern_anchor_count(cfg.pattern))]
            relations = [g.statements[i].relation for i in stmts]
            q = instantiate(cfg.pattern, anchors, relations, qualifiers)
            if len(q.statements) != pattern_edge_count(cfg.pattern):
                continue  # coincident groundings collapsed the shape
            q = canonical_query(q)
            if q in seen:
                continue
            seen.add(q)
            if split is not SplitTag.TRAIN:
                ents, rels = _query_mentions(q)
                if not (ents <= train_ents and rels <= train_rels):
                    continue
            answers = answer_set(g, q, visible, max_answers=cfg.max_answer_set + 1)
            if len(answers) > cfg.max_answer_set:
                continue
            easy = answer_set(g, q, earlier) if earlier else frozenset()
            if split is not SplitTag.TRAIN and not (answers - easy):
                continue
            if hub_answers and any(g.in_degree(a) > cfg.in_degree_threshold
                                   for a in answers):
                continue
            records.append(QueryRecord(q, split, answers, easy))
            if len(records) >= cfg.max_queries_per_split:
                break

        records.sort(key=lambda r: _record_order_key(cfg.seed, r))
        splits[split] = tuple(records)
        if not records:
            warnings.append(f"no {split.value} queries found for pattern "
                            f"{cfg.pattern.value}")

    if not any(splits.values()):
        warnings.append(f"pattern {cfg.pattern.value} is impossible on this graph")

    metadata = {
        "pattern": cfg.pattern.value,
        "config": cfg.to_dict(),
        "config_hash": cfg.content_hash(),
        "counts": {t.value: len(splits[t]) for t in SplitTag},
        "warnings": warnings,
    }
    return DatasetBundle(cfg.pattern, splits, metadata)


def _record_order_key(seed: int, rec: QueryRecord) -> str:
    payload = f"{seed}|{rec.split.value}|{query_to_json(rec.query)}"
    return hashlib.sha256(payload.encode()).hexdigest()


# -- diagnostics ---------------------------------------------------------------


def constant_ranking_hits(bundle: DatasetBundle, k: int) -> float:
    """Hits@k a single fixed entity ranking achieves on the whole bundle.

    The ranking greedily orders entities by how often they appear in the
    bundle's answer sets (ties by id). Each query contributes the fraction
    of its answers inside the top k; queries weigh equally. High values mean
    answers are concentrated on a few entities, so a constant prediction
    does well without reading the query.
    """
    records = list(bundle.all_records())
    if not records:
        raise ValueError("bundle has no records")
    if k <= 0:
        raise ValueError("k must be positive")
    freq: dict[int, int] = {}
    for rec in records:
        for a in rec.answers:
            freq[a] = freq.get(a, 0) + 1
    ranked = sorted(freq, key=lambda e: (-freq[e], e))
    top = set(ranked[:k])
    total = sum(len(rec.answers & top) / len(rec.answers) for rec in records)
    return total / len(records)


# -- derived bundles -----------------------------------------------------------


def strip_bundle(bundle: DatasetBundle) -> DatasetBundle:
    """Qualifier-free copy of each query; answer sets are kept as stored.

    This deliberately leaves the prediction targets at the qualified answer
    sets: a model consuming the stripped queries is scored on the original
    task, measuring what the qualifiers were worth.
    """
    splits = {
        tag: tuple(QueryRecord(strip_qualifiers(r.query), r.split,
                               r.answers, r.easy_answers)
                   for r in recs)
        for tag, recs in bundle.splits.items()
    }
    metadata = dict(bundle.metadata)
    metadata["derived"] = "stripped"
    return DatasetBundle(bundle.pattern, splits, metadata)


def reify_bundle(bundle: DatasetBundle, reified: KnowledgeGraph) -> DatasetBundle:
    """Reified copy of each query, canonicalized so encoders accept it.

    Entity ids are preserved by graph reification, so the stored answer sets
    remain correct against the reified graph.
    """
    splits = {
        tag: tuple(QueryRecord(canonicalize(reify_query(r.query, reified)),
                               r.split, r.answers, r.easy_answers)
                   for r in recs)
        for tag, recs in bundle.splits.items()
    }
    metadata = dict(bundle.metadata)
    metadata["derived"] = "reified"
    return DatasetBundle(bundle.pattern, splits, metadata)


# -- disk format ----------------------------------------------------------------


def save_bundle(bundle: DatasetBundle, directory: str | Path) -> None:
    """Write one JSON-lines file per split plus a metadata sidecar.

    Files: ``{pattern}_{split}.jsonl`` with lines
    ``{"query": ..., "answers": [...], "easy_answers": [...]}``, and
    ``{pattern}_metadata.json``. Output bytes depend only on the bundle.
    """
    directory = Path(directory)
    directory.mkdir(parents=True, exist_ok=True)
    tag = bundle.pattern.value
    for split in SplitTag:
        path = directory / f"{tag}_{split.value}.jsonl"
        with open(path, "w", encoding="utf-8") as fh:
            for rec in bundle.splits[split]:
                line = {
                    "query": query_to_dict(rec.query, bundle.pattern),
                    "answers": sorted(rec.answers),
                    "easy_answers": sorted(rec.easy_answers),
                }
                fh.write(json.dumps(line, separators=(",", ":")))
                fh.write("\n")
    doc = {
        "format": BUNDLE_FORMAT,
        "version": BUNDLE_FORMAT_VERSION,
        **bundle.metadata,
    }
    with open(directory / f"{tag}_metadata.json", "w", encoding="utf-8") as fh:
        json.dump(doc, fh, indent=2, sort_keys=True)
        fh.write("\n")


def load_bundle(directory: str | Path, pattern: Pattern | str) -> DatasetBundle:
    directory = Path(directory)
    pattern = Pattern.coerce(pattern)
    meta_path = directory / f"{pattern.value}_metadata.json"
    with open(meta_path, encoding="utf-8") as fh:
        doc = json.load(fh)
    if doc.get("format") != BUNDLE_FORMAT:
        raise ValueError(f"{meta_path}: not a {BUNDLE_FORMAT} file")
    metadata = {k: v for k, v in doc.items() if k not in ("format", "version")}
    splits: dict[SplitTag, tuple[QueryRecord, ...]] = {}
    for split in SplitTag:
        path = directory / f"{pattern.value}_{split.value}.jsonl"
        records = []
        with open(path, encoding="utf-8") as fh:
            for line in fh:
                if not line.strip():
                    continue
                row = json.loads(line)
                q, _ = query_from_dict(row["query"])
                records.append(QueryRecord(
                    q, split,
                    frozenset(row["answers"]),
                    frozenset(row["easy_answers"]),
                ))
        splits[split] = tuple(records)
    return DatasetBundle(pattern, splits, metadata)
