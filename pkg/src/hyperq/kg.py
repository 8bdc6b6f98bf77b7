"""Hyper-relational knowledge graphs.

A statement is a directed labeled edge ``(head, relation, tail)`` decorated
with a set of qualifier pairs ``(qualifier relation, qualifier value)``.
Qualifier values are entities and qualifier relations live in the same
vocabulary as edge relations, mirroring the statement model of
qualifier-bearing datasets. Every statement carries a split tag so one graph
object can hold train, validation and test edges side by side.

Graphs are immutable once built. Use :class:`GraphBuilder` to assemble one
from CSV rows or programmatic statements, or :func:`synth_graph` to generate
a seeded synthetic graph.
"""

from __future__ import annotations

import csv
import enum
import json
from dataclasses import dataclass, field
from typing import Iterable, Iterator, NamedTuple, Sequence

import numpy as np

GRAPH_FORMAT = "hyperq-graph"
GRAPH_FORMAT_VERSION = 1

# sub-stream tag so graph synthesis decorrelates from other seeded modules
_GRAPH_STREAM = 0xA11CE


class SplitTag(enum.Enum):
    """Which split a statement belongs to."""

    TRAIN = "train"
    VALID = "valid"
    TEST = "test"

    @classmethod
    def coerce(cls, value: "SplitTag | str") -> "SplitTag":
        if isinstance(value, cls):
            return value
        try:
            return cls(value)
        except ValueError:
            raise ValueError(f"unknown split tag {value!r}") from None


_SPLIT_ORDER = {SplitTag.TRAIN: 0, SplitTag.VALID: 1, SplitTag.TEST: 2}

ALL_SPLITS: frozenset[SplitTag] = frozenset(SplitTag)


def splits_up_to(split: SplitTag) -> frozenset[SplitTag]:
    """Splits visible to a query of the given split (its own included)."""
    rank = _SPLIT_ORDER[split]
    return frozenset(s for s, r in _SPLIT_ORDER.items() if r <= rank)


def splits_before(split: SplitTag) -> frozenset[SplitTag]:
    """Splits strictly earlier than the given one (empty for train)."""
    rank = _SPLIT_ORDER[split]
    return frozenset(s for s, r in _SPLIT_ORDER.items() if r < rank)


class QualifierPair(NamedTuple):
    """One qualifier: a relation id and an entity-valued id."""

    relation: int
    value: int


def qualifier_match(query_pairs: frozenset[QualifierPair],
                    data_pairs: frozenset[QualifierPair]) -> bool:
    """Monotone qualifier semantics: the query's pairs must all be present.

    A query edge with qualifier set Q matches a data statement with qualifier
    set D iff Q is a subset of D. An unqualified query edge (Q empty) matches
    any statement with the same triple.
    """
    return query_pairs <= data_pairs


@dataclass(frozen=True)
class Statement:
    """One hyper-relational statement, identified up to its split tag."""

    head: int
    relation: int
    tail: int
    qualifiers: frozenset[QualifierPair] = field(default_factory=frozenset)
    split: SplitTag = SplitTag.TRAIN

    def sort_key(self) -> tuple:
        return (self.head, self.relation, self.tail,
                tuple(sorted(self.qualifiers)), _SPLIT_ORDER[self.split])


class IngestError(ValueError):
    """Malformed CSV input. Carries the 1-based line number."""

    def __init__(self, message: str, line: int, source: str = "<rows>"):
        super().__init__(f"{source}:{line}: {message}")
        self.line = line
        self.source = source


class Vocabulary:
    """Bidirectional label/id map. Ids are dense and assigned first-seen."""

    __slots__ = ("_labels", "_ids")

    def __init__(self, labels: Iterable[str] = ()):
        self._labels: list[str] = []
        self._ids: dict[str, int] = {}
        for label in labels:
            self.add(label)

    def add(self, label: str) -> int:
        """Return the id for ``label``, creating it if unseen."""
        existing = self._ids.get(label)
        if existing is not None:
            return existing
        idx = len(self._labels)
        self._labels.append(label)
        self._ids[label] = idx
        return idx

    def id(self, label: str) -> int:
        try:
            return self._ids[label]
        except KeyError:
            raise KeyError(f"unknown label {label!r}") from None

    def label(self, idx: int) -> str:
        if not 0 <= idx < len(self._labels):
            raise KeyError(f"id {idx} out of range (vocabulary size {len(self._labels)})")
        return self._labels[idx]

    @property
    def labels(self) -> tuple[str, ...]:
        return tuple(self._labels)

    def copy(self) -> "Vocabulary":
        return Vocabulary(self._labels)

    def __len__(self) -> int:
        return len(self._labels)

    def __contains__(self, label: str) -> bool:
        return label in self._ids

    def __eq__(self, other: object) -> bool:
        return isinstance(other, Vocabulary) and self._labels == other._labels

    def __repr__(self) -> str:
        return f"Vocabulary({len(self._labels)} labels)"


class KnowledgeGraph:
    """Immutable hyper-relational graph with lazy lookup indexes."""

    def __init__(self, entities: Vocabulary, relations: Vocabulary,
                 statements: Sequence[Statement]):
        self.entities = entities
        self.relations = relations
        self.statements: tuple[Statement, ...] = tuple(statements)
        self._in_degree: np.ndarray | None = None
        self._by_head: dict[int, tuple[int, ...]] | None = None
        self._by_tail: dict[int, tuple[int, ...]] | None = None
        self._by_rel: dict[int, tuple[int, ...]] | None = None
        self._by_rel_head: dict[tuple[int, int], tuple[int, ...]] | None = None
        self._by_rel_tail: dict[tuple[int, int], tuple[int, ...]] | None = None
        self._train_seen: tuple[frozenset[int], frozenset[int]] | None = None

    # -- basic facts ------------------------------------------------------

    @property
    def n_entities(self) -> int:
        return len(self.entities)

    @property
    def n_relations(self) -> int:
        return len(self.relations)

    def in_degree(self, entity: int) -> int:
        """Number of statements with ``entity`` in tail position.

        Raises KeyError for ids outside the vocabulary.
        """
        if not 0 <= entity < self.n_entities:
            raise KeyError(f"entity id {entity} out of range")
        return int(self.in_degrees()[entity])

    def in_degrees(self) -> np.ndarray:
        if self._in_degree is None:
            deg = np.zeros(self.n_entities, dtype=np.int64)
            for s in self.statements:
                deg[s.tail] += 1
            self._in_degree = deg
        return self._in_degree

    # -- lookup indexes (built on first use) -------------------------------

    def _build_indexes(self) -> None:
        by_head: dict[int, list[int]] = {}
        by_tail: dict[int, list[int]] = {}
        by_rel: dict[int, list[int]] = {}
        by_rh: dict[tuple[int, int], list[int]] = {}
        by_rt: dict[tuple[int, int], list[int]] = {}
        for i, s in enumerate(self.statements):
            by_head.setdefault(s.head, []).append(i)
            by_tail.setdefault(s.tail, []).append(i)
            by_rel.setdefault(s.relation, []).append(i)
            by_rh.setdefault((s.relation, s.head), []).append(i)
            by_rt.setdefault((s.relation, s.tail), []).append(i)
        self._by_head = {k: tuple(v) for k, v in by_head.items()}
        self._by_tail = {k: tuple(v) for k, v in by_tail.items()}
        self._by_rel = {k: tuple(v) for k, v in by_rel.items()}
        self._by_rel_head = {k: tuple(v) for k, v in by_rh.items()}
        self._by_rel_tail = {k: tuple(v) for k, v in by_rt.items()}

    def by_head(self, head: int) -> tuple[int, ...]:
        if self._by_head is None:
            self._build_indexes()
        return self._by_head.get(head, ())

    def by_tail(self, tail: int) -> tuple[int, ...]:
        if self._by_tail is None:
            self._build_indexes()
        return self._by_tail.get(tail, ())

    def by_relation(self, relation: int) -> tuple[int, ...]:
        if self._by_rel is None:
            self._build_indexes()
        return self._by_rel.get(relation, ())

    def by_relation_head(self, relation: int, head: int) -> tuple[int, ...]:
        if self._by_rel_head is None:
            self._build_indexes()
        return self._by_rel_head.get((relation, head), ())

    def by_relation_tail(self, relation: int, tail: int) -> tuple[int, ...]:
        if self._by_rel_tail is None:
            self._build_indexes()
        return self._by_rel_tail.get((relation, tail), ())

    def train_seen(self) -> tuple[frozenset[int], frozenset[int]]:
        """Entity and relation ids occurring in any train statement.

        Qualifier relations and values count as occurrences.
        """
        if self._train_seen is None:
            ents: set[int] = set()
            rels: set[int] = set()
            for s in self.statements:
                if s.split is not SplitTag.TRAIN:
                    continue
                ents.add(s.head)
                ents.add(s.tail)
                rels.add(s.relation)
                for q in s.qualifiers:
                    rels.add(q.relation)
                    ents.add(q.value)
            self._train_seen = (frozenset(ents), frozenset(rels))
        return self._train_seen

    def split_counts(self) -> dict[SplitTag, int]:
        counts = {tag: 0 for tag in SplitTag}
        for s in self.statements:
            counts[s.split] += 1
        return counts

    def __eq__(self, other: object) -> bool:
        return (isinstance(other, KnowledgeGraph)
                and self.entities == other.entities
                and self.relations == other.relations
                and set(self.statements) == set(other.statements))

    def __repr__(self) -> str:
        return (f"KnowledgeGraph({self.n_entities} entities, "
                f"{self.n_relations} relations, {len(self.statements)} statements)")


class GraphBuilder:
    """Mutable accumulator for statements; ``build()`` freezes the graph.

    Ingesting the same rows twice is a no-op: statements are deduplicated on
    (head, relation, tail, qualifiers, split).
    """

    def __init__(self, entities: Vocabulary | None = None,
                 relations: Vocabulary | None = None):
        self.entities = entities.copy() if entities is not None else Vocabulary()
        self.relations = relations.copy() if relations is not None else Vocabulary()
        self._statements: list[Statement] = []
        self._seen: set[tuple] = set()

    def add(self, head: str, relation: str, tail: str,
            qualifiers: Iterable[tuple[str, str]] = (),
            split: SplitTag | str = SplitTag.TRAIN) -> "GraphBuilder":
        """Add one statement by labels. Returns self for chaining."""
        h = self.entities.add(head)
        r = self.relations.add(relation)
        t = self.entities.add(tail)
        pairs = frozenset(QualifierPair(self.relations.add(qr), self.entities.add(qv))
                          for qr, qv in qualifiers)
        return self.add_ids(h, r, t, pairs, split)

    def add_ids(self, head: int, relation: int, tail: int,
                qualifiers: Iterable[QualifierPair] = (),
                split: SplitTag | str = SplitTag.TRAIN) -> "GraphBuilder":
        """Add one statement by ids already present in the vocabularies."""
        split = SplitTag.coerce(split)
        pairs = frozenset(QualifierPair(*q) for q in qualifiers)
        for e in (head, tail, *(q.value for q in pairs)):
            if not 0 <= e < len(self.entities):
                raise KeyError(f"entity id {e} out of range")
        for r in (relation, *(q.relation for q in pairs)):
            if not 0 <= r < len(self.relations):
                raise KeyError(f"relation id {r} out of range")
        key = (head, relation, tail, pairs, split)
        if key not in self._seen:
            self._seen.add(key)
            self._statements.append(Statement(head, relation, tail, pairs, split))
        return self

    def ingest_rows(self, rows: Iterable[Sequence[str]],
                    split: SplitTag | str,
                    source: str = "<rows>") -> "GraphBuilder":
        """Ingest pre-tokenized rows: ``h, r, t`` plus repeated ``qr, qv`` pairs.

        This is the converter hook: adapt any upstream layout to row tuples
        and feed them here. Blank rows are skipped. Malformed rows raise
        :class:`IngestError` with the offending 1-based row number.
        """
        split = SplitTag.coerce(split)
        for lineno, row in enumerate(rows, start=1):
            if not row:
                continue
            if len(row) < 3:
                raise IngestError(f"expected at least 3 fields, got {len(row)}",
                                  lineno, source)
            if (len(row) - 3) % 2 != 0:
                raise IngestError(
                    f"qualifier fields must come in (relation, value) pairs, "
                    f"got {len(row) - 3} trailing fields", lineno, source)
            if any(f == "" for f in row):
                raise IngestError("empty field", lineno, source)
            quals = [(row[i], row[i + 1]) for i in range(3, len(row), 2)]
            self.add(row[0], row[1], row[2], quals, split)
        return self

    def ingest_csv(self, path: str, split: SplitTag | str) -> "GraphBuilder":
        """Ingest a headerless UTF-8 CSV file, one statement per row."""
        with open(path, newline="", encoding="utf-8") as fh:
            return self.ingest_rows(csv.reader(fh), split, source=str(path))

    def build(self) -> KnowledgeGraph:
        return KnowledgeGraph(self.entities.copy(), self.relations.copy(),
                              list(self._statements))


def ingest_csv(path: str, split: SplitTag | str) -> KnowledgeGraph:
    """One-shot CSV ingest. For multi-file graphs use :class:`GraphBuilder`."""
    return GraphBuilder().ingest_csv(path, split).build()


def strip_graph(g: KnowledgeGraph) -> KnowledgeGraph:
    """Same graph with every qualifier set emptied.

    Statements identical up to qualifiers collapse to one (per split), so the
    result can be smaller. Vocabularies are unchanged.
    """
    builder = GraphBuilder(g.entities, g.relations)
    for s in g.statements:
        builder.add_ids(s.head, s.relation, s.tail, (), s.split)
    return builder.build()


# -- statistics -----------------------------------------------------------


def graph_stats(g: KnowledgeGraph) -> dict:
    """Summary dict: sizes, max in-degree and qualifier-count histogram."""
    hist: dict[int, int] = {}
    for s in g.statements:
        k = len(s.qualifiers)
        hist[k] = hist.get(k, 0) + 1
    max_in = int(g.in_degrees().max()) if g.n_entities else 0
    return {
        "entities": g.n_entities,
        "relations": g.n_relations,
        "statements": len(g.statements),
        "max_in_degree": max_in,
        "qualifier_histogram": {str(k): hist[k] for k in sorted(hist)},
    }


# -- serialization --------------------------------------------------------


def save_graph(g: KnowledgeGraph, path: str) -> None:
    doc = {
        "format": GRAPH_FORMAT,
        "version": GRAPH_FORMAT_VERSION,
        "entities": list(g.entities.labels),
        "relations": list(g.relations.labels),
        "statements": [
            [s.head, s.relation, s.tail,
             [[q.relation, q.value] for q in sorted(s.qualifiers)],
             s.split.value]
            for s in g.statements
        ],
    }
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(doc, fh, separators=(",", ":"))
        fh.write("\n")


def load_graph(path: str) -> KnowledgeGraph:
    with open(path, encoding="utf-8") as fh:
        doc = json.load(fh)
    if doc.get("format") != GRAPH_FORMAT:
        raise ValueError(f"{path}: not a {GRAPH_FORMAT} file")
    if doc.get("version") != GRAPH_FORMAT_VERSION:
        raise ValueError(f"{path}: unsupported version {doc.get('version')}")
    builder = GraphBuilder(Vocabulary(doc["entities"]), Vocabulary(doc["relations"]))
    for h, r, t, quals, split in doc["statements"]:
        builder.add_ids(h, r, t, [QualifierPair(qr, qv) for qr, qv in quals], split)
    return builder.build()


# -- synthetic graphs ------------------------------------------------------


@dataclass(frozen=True)
class QualifierProfile:
    """Controls how many qualifiers statements carry and whether qualifiers
    are answer-discriminative (same (head, relation) with different tails
    distinguished only by qualifier value).

    p0/p1/p2 are the fractions of statements carrying 0, 1 and 2 qualifier
    pairs. In discriminative mode p2 is reused as the chance of one extra
    noise pair on a discriminative statement.
    """

    p0: float
    p1: float
    p2: float
    discriminative: bool = False

    def __post_init__(self):
        total = self.p0 + self.p1 + self.p2
        if not (abs(total - 1.0) < 1e-9 and min(self.p0, self.p1, self.p2) >= 0):
            raise ValueError(f"qualifier fractions must be a distribution, got {self!r}")

    @classmethod
    def none(cls) -> "QualifierProfile":
        return cls(1.0, 0.0, 0.0, False)

    @classmethod
    def mixed(cls) -> "QualifierProfile":
        return cls(0.4, 0.4, 0.2, False)

    @classmethod
    def discriminative_preset(cls) -> "QualifierProfile":
        return cls(0.0, 0.7, 0.3, True)

    @classmethod
    def coerce(cls, value: "QualifierProfile | str") -> "QualifierProfile":
        if isinstance(value, cls):
            return value
        presets = {"none": cls.none, "mixed": cls.mixed,
                   "discriminative": cls.discriminative_preset}
        try:
            return presets[value]()
        except KeyError:
            raise ValueError(f"unknown qualifier profile {value!r}; "
                             f"expected one of {sorted(presets)}") from None


def _assign_splits(rng: np.random.Generator, statements: list[tuple],
                   fractions: tuple[float, float, float]) -> list[SplitTag]:
    """Pick splits so every entity and relation occurs in some train statement.

    statements: list of (entity_ids, relation_ids) participation tuples.
    """
    n = len(statements)
    order = rng.permutation(n)
    covered_e: set[int] = set()
    covered_r: set[int] = set()
    forced_train: list[int] = []
    free: list[int] = []
    for i in order:
        ents, rels = statements[i]
        if any(e not in covered_e for e in ents) or any(r not in covered_r for r in rels):
            forced_train.append(int(i))
            covered_e.update(ents)
            covered_r.update(rels)
        else:
            free.append(int(i))
    n_valid = min(len(free), max(1, round(fractions[1] * n)))
    n_test = min(len(free) - n_valid, max(1, round(fractions[2] * n)))
    splits = [SplitTag.TRAIN] * n
    for i in free[:n_valid]:
        splits[i] = SplitTag.VALID
    for i in free[n_valid:n_valid + n_test]:
        splits[i] = SplitTag.TEST
    return splits


def _entity_labels(n: int) -> list[str]:
    width = max(3, len(str(max(n - 1, 0))))
    return [f"e{i:0{width}d}" for i in range(n)]


def _relation_labels(n: int) -> list[str]:
    width = max(2, len(str(max(n - 1, 0))))
    return [f"r{i:0{width}d}" for i in range(n)]


def synth_graph(seed: int, n_entities: int, n_relations: int,
                profile: QualifierProfile | str = "mixed",
                n_statements: int | None = None,
                split_fractions: tuple[float, float, float] = (0.8, 0.1, 0.1),
                ) -> KnowledgeGraph:
    """Generate a seeded synthetic graph. Same arguments, same bytes.

    The non-discriminative modes draw uniform random statements with the
    profile's qualifier-count distribution. Discriminative mode lays out a
    two-hop economy: head-pool entities link to bridge entities, and bridge
    entities link to tail entities where the tail is a fixed global function
    of the qualifier value, so qualifiers carry real signal.
    """
    if n_entities < 2 or n_relations < 1:
        raise ValueError("need at least 2 entities and 1 relation")
    profile = QualifierProfile.coerce(profile)
    rng = np.random.default_rng([_GRAPH_STREAM, seed])
    entities = Vocabulary(_entity_labels(n_entities))
    relations = Vocabulary(_relation_labels(n_relations))

    if profile.discriminative:
        raw = _discriminative_statements(rng, n_entities, n_relations, profile)
    else:
        raw = _uniform_statements(rng, n_entities, n_relations, profile,
                                  n_statements or 3 * n_entities)

    participation = [
        ((h, t, *(q.value for q in quals)), (r, *(q.relation for q in quals)))
        for h, r, t, quals in raw
    ]
    splits = _assign_splits(rng, participation, split_fractions)
    builder = GraphBuilder(entities, relations)
    for (h, r, t, quals), split in zip(raw, splits):
        builder.add_ids(h, r, t, quals, split)
    return builder.build()


def _uniform_statements(rng, n_entities, n_relations, profile, n_statements):
    raw: list[tuple] = []
    seen: set[tuple] = set()
    counts = rng.choice(3, size=4 * n_statements, p=[profile.p0, profile.p1, profile.p2])
    attempt = 0
    while len(raw) < n_statements and attempt < 4 * n_statements:
        h = int(rng.integers(n_entities))
        r = int(rng.integers(n_relations))
        t = int(rng.integers(n_entities))
        k = int(counts[attempt])
        attempt += 1
        pairs: set[QualifierPair] = set()
        guard = 0
        while len(pairs) < k and guard < 10 * (k + 1):
            pairs.add(QualifierPair(int(rng.integers(n_relations)),
                                    int(rng.integers(n_entities))))
            guard += 1
        quals = frozenset(pairs)
        key = (h, r, t, quals)
        if key in seen:
            continue
        seen.add(key)
        raw.append((h, r, t, quals))
    return raw


def _discriminative_statements(rng, n_entities, n_relations, profile):
    # entity pools: heads, bridges, qualifier values, tails
    n_heads = max(2, int(0.40 * n_entities))
    n_bridges = max(2, int(0.25 * n_entities))
    n_qvals = max(2, int(0.15 * n_entities))
    heads = list(range(n_heads))
    bridges = list(range(n_heads, n_heads + n_bridges))
    qvals = list(range(n_heads + n_bridges, n_heads + n_bridges + n_qvals))
    tails = list(range(n_heads + n_bridges + n_qvals, n_entities))
    if not tails:
        raise ValueError("discriminative profile needs more entities")

    n_qrels = max(1, n_relations // 5)
    qual_rels = list(range(n_relations - n_qrels, n_relations))
    main_rels = list(range(n_relations - n_qrels))
    if len(main_rels) < 2:
        raise ValueError("discriminative profile needs at least 3 relations")
    hop1_rels = main_rels[: len(main_rels) // 2] or main_rels[:1]
    hop2_rels = main_rels[len(main_rels) // 2:] or main_rels[-1:]

    # global qualifier-value -> tail mapping: the learnable regularity
    tail_of = {qv: tails[i % len(tails)] for i, qv in enumerate(qvals)}

    raw: list[tuple] = []
    seen: set[tuple] = set()

    def emit(h, r, t, quals):
        key = (h, r, t, quals)
        if key not in seen:
            seen.add(key)
            raw.append((h, r, t, quals))

    # hop 1: each head keeps a single relation; edges differ by qualifier
    for h in heads:
        r = int(rng.choice(hop1_rels))
        k_edges = 2
        bs = rng.choice(len(bridges), size=min(k_edges, len(bridges)), replace=False)
        for b_i in bs:
            qr = int(rng.choice(qual_rels))
            qv = int(rng.choice(qvals))
            emit(h, r, bridges[int(b_i)], frozenset({QualifierPair(qr, qv)}))

    # hop 2: per bridge and relation, several tails separable only by qualifier
    for b in bridges:
        rels = rng.choice(len(hop2_rels), size=min(2, len(hop2_rels)), replace=False)
        for r_i in rels:
            r = hop2_rels[int(r_i)]
            n_branch = min(3, len(qvals))
            chosen = rng.choice(len(qvals), size=n_branch, replace=False)
            for qv_i in chosen:
                qv = qvals[int(qv_i)]
                qr = int(rng.choice(qual_rels))
                quals = {QualifierPair(qr, qv)}
                if rng.random() < profile.p2:
                    quals.add(QualifierPair(int(rng.choice(qual_rels)),
                                            int(rng.choice(qvals))))
                emit(b, r, tail_of[qv], frozenset(quals))
    return raw


def synth_skewed_graph(seed: int, n_entities: int, n_relations: int,
                       n_hubs: int = 2, hub_in_degree: int = 120,
                       n_background: int | None = None,
                       split_fractions: tuple[float, float, float] = (0.8, 0.1, 0.1),
                       ) -> KnowledgeGraph:
    """Synthetic graph with a few very high in-degree hub entities.

    Used to study answer-frequency skew: hubs soak up most incoming edges
    while background statements keep ordinary in-degrees low.
    """
    if n_entities <= n_hubs + 3:
        raise ValueError("need more entities than hubs")
    rng = np.random.default_rng([_GRAPH_STREAM, seed, 0x5E])
    entities = Vocabulary(_entity_labels(n_entities))
    relations = Vocabulary(_relation_labels(n_relations))
    n_background = n_background if n_background is not None else 4 * n_entities

    raw: list[tuple] = []
    seen: set[tuple] = set()

    def emit(h, r, t):
        key = (h, r, t, frozenset())
        if key not in seen:
            seen.add(key)
            raw.append((h, r, t, frozenset()))

    hubs = list(range(n_hubs))
    others = list(range(n_hubs, n_entities))
    for hub in hubs:
        made = 0
        guard = 0
        while made < hub_in_degree and guard < 20 * hub_in_degree:
            guard += 1
            h = int(rng.choice(others))
            r = int(rng.integers(n_relations))
            before = len(raw)
            emit(h, r, hub)
            made += len(raw) - before
    for _ in range(n_background):
        h = int(rng.choice(others))
        t = int(rng.choice(others))
        r = int(rng.integers(n_relations))
        emit(h, r, t)

    participation = [((h, t), (r,)) for h, r, t, _ in raw]
    splits = _assign_splits(rng, participation, split_fractions)
    builder = GraphBuilder(entities, relations)
    for (h, r, t, quals), split in zip(raw, splits):
        builder.add_ids(h, r, t, quals, split)
    return builder.build()
