"""Statement reification: hyper-relational graphs as plain triple graphs.

Each statement ``(h, r, t, {(qr, qv), ...})`` becomes a fresh blank node
``_:s{i}`` plus triples

    (_:s{i}, rdf:subject,   h)
    (_:s{i}, rdf:predicate, rel:<label of r>)
    (_:s{i}, rdf:object,    t)
    (_:s{i}, qr,            qv)     for every qualifier pair

where ``rel:<label>`` is an entity standing in for relation ``r``. Original
entity ids are preserved, so answer sets computed on the reified graph are
directly comparable to answer sets on the source graph. Queries reify the
same way with the blank as a fresh variable; the query-side qualifier subset
semantics carries over because a reified query simply asks for fewer of the
blank's outgoing triples.
"""

from __future__ import annotations

from .kg import KnowledgeGraph, Statement
from .query import (Direction, NodeKind, QueryGraph, QueryStatement,
                    anchor, var)

RDF_SUBJECT = "rdf:subject"
RDF_PREDICATE = "rdf:predicate"
RDF_OBJECT = "rdf:object"

_RDF_LABELS = (RDF_SUBJECT, RDF_PREDICATE, RDF_OBJECT)


def _relation_node_label(relation_label: str) -> str:
    return f"rel:{relation_label}"


def _blank_label(index: int) -> str:
    return f"_:s{index}"


def reify_graph(g: KnowledgeGraph) -> KnowledgeGraph:
    """Rewrite every statement of ``g`` into reified triples.

    The result keeps the original entity and relation ids, appends one
    ``rel:<label>`` entity per relation (in relation-id order), then one
    blank per statement (in statement order), and appends the three rdf
    structural relations. Reified triples inherit the source statement's
    split tag. Raises ValueError if a generated label already exists.
    """
    entities = g.entities.copy()
    relations = g.relations.copy()

    rel_node: dict[int, int] = {}
    for r in range(g.n_relations):
        label = _relation_node_label(g.relations.label(r))
        if label in entities:
            raise ValueError(f"entity label {label!r} collides with a relation node")
        rel_node[r] = entities.add(label)

    blanks: list[int] = []
    for i in range(len(g.statements)):
        label = _blank_label(i)
        if label in entities:
            raise ValueError(f"entity label {label!r} collides with a blank node")
        blanks.append(entities.add(label))

    for label in _RDF_LABELS:
        relations.add(label)
    r_subj = relations.id(RDF_SUBJECT)
    r_pred = relations.id(RDF_PREDICATE)
    r_obj = relations.id(RDF_OBJECT)

    triples: list[Statement] = []
    for b, s in zip(blanks, g.statements):
        triples.append(Statement(b, r_subj, s.head, frozenset(), s.split))
        triples.append(Statement(b, r_pred, rel_node[s.relation], frozenset(), s.split))
        triples.append(Statement(b, r_obj, s.tail, frozenset(), s.split))
        for q in sorted(s.qualifiers):
            triples.append(Statement(b, q.relation, q.value, frozenset(), s.split))
    return KnowledgeGraph(entities, relations, triples)


def reify_query(q: QueryGraph, reified: KnowledgeGraph) -> QueryGraph:
    """Reify a query against an already-reified graph's vocabularies.

    Each query statement gets a fresh blank variable with all arrows leaving
    it, mirroring :func:`reify_graph`. Statement direction flags are resolved
    first, so the reified query asserts the same data edges. The result is
    RELAXABLE in general (blanks point at anchors); canonicalize before
    encoding if a VALID shape is needed.
    """
    r_subj = reified.relations.id(RDF_SUBJECT)
    r_pred = reified.relations.id(RDF_PREDICATE)
    r_obj = reified.relations.id(RDF_OBJECT)

    next_var = 1 + max((n.id for n in q.nodes if n.kind is NodeKind.VAR), default=-1)
    out: list[QueryStatement] = []
    for s in q.statements:
        src, rel, dst, quals = s.semantic_edge()
        rel_entity = reified.entities.id(_relation_node_label(reified.relations.label(rel)))
        blank = var(next_var)
        next_var += 1
        out.append(QueryStatement(blank, r_subj, Direction.FORWARD, src))
        out.append(QueryStatement(blank, r_pred, Direction.FORWARD, anchor(rel_entity)))
        out.append(QueryStatement(blank, r_obj, Direction.FORWARD, dst))
        for p in sorted(quals):
            out.append(QueryStatement(blank, p.relation, Direction.FORWARD,
                                      anchor(p.value)))
    return QueryGraph(out)
