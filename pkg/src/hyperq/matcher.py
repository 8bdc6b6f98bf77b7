"""Exact answer sets for query graphs by backtracking subgraph matching.

An entity ``e`` answers a query iff some assignment of entities to the
query's variables (target included) maps every query statement onto a data
statement with the right endpoints and relation, where the query statement's
qualifier set is a subset of the data statement's (monotone semantics).
Assignments are plain homomorphisms: two variables may bind the same entity.

The search picks, at every step, the pending query statement with the fewest
candidate data statements under the current partial binding (greedy join
ordering) and backtracks over those candidates.
"""

from __future__ import annotations

from typing import Iterable

from .kg import ALL_SPLITS, KnowledgeGraph, SplitTag
from .query import (InvalidQueryError, NodeKind, QueryGraph, QueryNode,
                    ValidityStatus, strip_qualifiers, validate)


def answer_set(g: KnowledgeGraph, q: QueryGraph,
               split_filter: Iterable[SplitTag | str] = ALL_SPLITS,
               max_answers: int | None = None) -> frozenset[int]:
    """All entities answering ``q`` over the statements in ``split_filter``.

    Args:
        g: the graph to match against.
        q: any VALID or RELAXABLE query (direction flags are honored, so
           canonicalization does not change the result).
        split_filter: which statement splits participate; must be nonempty.
        max_answers: optional cap; the search stops once this many distinct
           answers are found (a guard for pathological queries, not a
           sampling mechanism).

    Returns:
        Frozen set of entity ids. Empty when nothing matches.
    """
    v = validate(q)
    if v.status is ValidityStatus.INVALID:
        raise InvalidQueryError(f"cannot match invalid query: {v.reason}")
    splits = frozenset(SplitTag.coerce(s) for s in split_filter)
    if not splits:
        raise ValueError("split filter must be nonempty")
    if max_answers is not None and max_answers <= 0:
        raise ValueError("max_answers must be positive")

    # work on the asserted data edges; the stored arrow no longer matters
    edges = [s.semantic_edge() for s in q.statements]
    all_splits = splits >= ALL_SPLITS
    target = next(n for n in q.nodes if n.kind is NodeKind.TARGET)
    binding: dict[QueryNode, int] = {}
    answers: set[int] = set()
    cap = max_answers if max_answers is not None else float("inf")

    def node_value(n: QueryNode) -> int | None:
        if n.kind is NodeKind.ANCHOR:
            return n.id
        return binding.get(n)

    def candidates(edge) -> list[int]:
        src, rel, dst, quals = edge
        sv = node_value(src)
        dv = node_value(dst)
        if sv is not None:
            pool = g.by_relation_head(rel, sv)
        elif dv is not None:
            pool = g.by_relation_tail(rel, dv)
        else:
            pool = g.by_relation(rel)
        out = []
        for i in pool:
            s = g.statements[i]
            if sv is not None and s.head != sv:
                continue
            if dv is not None and s.tail != dv:
                continue
            if not (all_splits or s.split in splits):
                continue
            if not quals <= s.qualifiers:
                continue
            out.append(i)
        return out

    def extend(remaining: list) -> bool:
        # returns True to abort the whole search (answer cap reached)
        if not remaining:
            answers.add(binding[target])
            return len(answers) >= cap
        best_i = 0
        best_c: list[int] | None = None
        for i, e in enumerate(remaining):
            c = candidates(e)
            if best_c is None or len(c) < len(best_c):
                best_i, best_c = i, c
            if not c:
                return False
        rest = remaining[:best_i] + remaining[best_i + 1:]
        src, _, dst, _ = remaining[best_i]
        for i in best_c:
            s = g.statements[i]
            newly: list[QueryNode] = []
            ok = True
            for n, val in ((src, s.head), (dst, s.tail)):
                cur = node_value(n)
                if cur is None:
                    binding[n] = val
                    newly.append(n)
                elif cur != val:
                    ok = False
                    break
            if ok and extend(rest):
                return True
            for n in newly:
                del binding[n]
        return False

    extend(edges)
    return frozenset(answers)


def answer_set_ignoring_qualifiers(g: KnowledgeGraph, q: QueryGraph,
                                   split_filter: Iterable[SplitTag | str] = ALL_SPLITS,
                                   max_answers: int | None = None) -> frozenset[int]:
    """Answers with every query qualifier set treated as empty.

    By construction this equals ``answer_set(g, strip_qualifiers(q))`` and,
    by monotonicity, is a superset of the qualified answers.
    """
    return answer_set(g, strip_qualifiers(q), split_filter, max_answers)
