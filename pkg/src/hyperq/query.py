"""Query graphs over hyper-relational knowledge graphs.

A query is a set of qualified statements whose endpoints are anchor nodes
(concrete entities), variable nodes, or the single target node. Each
statement carries a direction flag: ``INVERSE`` means the underlying data
edge runs tail-to-head while the stored arrow still points head-to-tail.
Keeping the flag separate from the arrow lets structurally-backward queries
be rewritten (canonicalized) without touching their meaning.

Validity grades:

* ``VALID``: the stored arrows form a DAG that can be topologically ordered
  with all anchors first and the target last.
* ``RELAXABLE``: a DAG, but some arrows point at anchors or leave the
  target; :func:`canonicalize` repairs these by flipping arrows.
* ``INVALID``: a directed cycle (self-loops included), or no target node.
"""

from __future__ import annotations

import enum
import itertools
import json
from dataclasses import dataclass, field
from typing import Iterable, Mapping, Sequence

from .kg import QualifierPair


class InvalidQueryError(ValueError):
    """Raised when an operation requires a better validity grade."""


class NodeKind(enum.Enum):
    ANCHOR = "anchor"
    VAR = "var"
    TARGET = "target"


_KIND_RANK = {NodeKind.ANCHOR: 0, NodeKind.VAR: 1, NodeKind.TARGET: 2}


@dataclass(frozen=True)
class QueryNode:
    """Anchor (id = entity), variable (id = variable index), or target."""

    kind: NodeKind
    id: int = 0

    def sort_key(self) -> tuple[int, int]:
        return (_KIND_RANK[self.kind], self.id)

    def __repr__(self) -> str:
        if self.kind is NodeKind.ANCHOR:
            return f"anchor({self.id})"
        if self.kind is NodeKind.VAR:
            return f"var({self.id})"
        return "TARGET"


def anchor(entity: int) -> QueryNode:
    return QueryNode(NodeKind.ANCHOR, entity)


def var(index: int) -> QueryNode:
    return QueryNode(NodeKind.VAR, index)


TARGET = QueryNode(NodeKind.TARGET, 0)


class Direction(enum.Enum):
    FORWARD = "forward"
    INVERSE = "inverse"

    def flipped(self) -> "Direction":
        return Direction.INVERSE if self is Direction.FORWARD else Direction.FORWARD


@dataclass(frozen=True)
class QueryStatement:
    """One query edge: stored arrow head -> tail plus a direction flag."""

    head: QueryNode
    relation: int
    direction: Direction
    tail: QueryNode
    qualifiers: frozenset[QualifierPair] = field(default_factory=frozenset)

    def sort_key(self) -> tuple:
        return (self.head.sort_key(), self.relation,
                0 if self.direction is Direction.FORWARD else 1,
                self.tail.sort_key(), tuple(sorted(self.qualifiers)))

    def semantic_edge(self) -> tuple[QueryNode, int, QueryNode, frozenset[QualifierPair]]:
        """The data edge this statement asserts, as (source, relation, dest, quals)."""
        if self.direction is Direction.FORWARD:
            return (self.head, self.relation, self.tail, self.qualifiers)
        return (self.tail, self.relation, self.head, self.qualifiers)

    def flipped(self) -> "QueryStatement":
        """Swap the stored arrow; the asserted data edge is unchanged."""
        return QueryStatement(self.tail, self.relation, self.direction.flipped(),
                              self.head, self.qualifiers)


class QueryGraph:
    """Immutable set of query statements, stored in canonical sorted order."""

    __slots__ = ("statements", "_nodes")

    def __init__(self, statements: Iterable[QueryStatement]):
        unique = sorted(set(statements), key=QueryStatement.sort_key)
        object.__setattr__(self, "statements", tuple(unique))
        nodes: set[QueryNode] = set()
        for s in self.statements:
            nodes.add(s.head)
            nodes.add(s.tail)
        object.__setattr__(self, "_nodes", tuple(sorted(nodes, key=QueryNode.sort_key)))

    @property
    def nodes(self) -> tuple[QueryNode, ...]:
        return self._nodes

    @property
    def variables(self) -> tuple[QueryNode, ...]:
        return tuple(n for n in self._nodes if n.kind is NodeKind.VAR)

    @property
    def anchors(self) -> tuple[QueryNode, ...]:
        return tuple(n for n in self._nodes if n.kind is NodeKind.ANCHOR)

    def has_target(self) -> bool:
        return any(n.kind is NodeKind.TARGET for n in self._nodes)

    def __eq__(self, other: object) -> bool:
        return isinstance(other, QueryGraph) and self.statements == other.statements

    def __hash__(self) -> int:
        return hash(self.statements)

    def __len__(self) -> int:
        return len(self.statements)

    def __repr__(self) -> str:
        return f"QueryGraph({len(self.statements)} statements, {len(self._nodes)} nodes)"


# -- validity ---------------------------------------------------------------


class ValidityStatus(enum.Enum):
    VALID = "valid"
    RELAXABLE = "relaxable"
    INVALID = "invalid"


@dataclass(frozen=True)
class Validity:
    status: ValidityStatus
    reason: str = ""

    def __bool__(self) -> bool:
        return self.status is ValidityStatus.VALID


def _is_dag(q: QueryGraph) -> bool:
    out: dict[QueryNode, list[QueryNode]] = {n: [] for n in q.nodes}
    indeg: dict[QueryNode, int] = {n: 0 for n in q.nodes}
    for s in q.statements:
        if s.head == s.tail:
            return False
        out[s.head].append(s.tail)
        indeg[s.tail] += 1
    ready = [n for n in q.nodes if indeg[n] == 0]
    seen = 0
    while ready:
        n = ready.pop()
        seen += 1
        for m in out[n]:
            indeg[m] -= 1
            if indeg[m] == 0:
                ready.append(m)
    return seen == len(q.nodes)


def validate(q: QueryGraph) -> Validity:
    """Grade a query graph as VALID, RELAXABLE or INVALID.

    VALID needs: a DAG whose arrows admit a topological order with every
    anchor before every variable and the target last. Equivalently: no arrow
    enters an anchor from a non-anchor, and the target has no outgoing
    arrows. A DAG failing those is RELAXABLE (arrow flips can repair it).
    """
    if not q.statements:
        return Validity(ValidityStatus.INVALID, "query has no statements")
    if not q.has_target():
        return Validity(ValidityStatus.INVALID, "query has no target node")
    if not _is_dag(q):
        return Validity(ValidityStatus.INVALID, "stored arrows contain a directed cycle")
    problems = []
    for s in q.statements:
        if s.tail.kind is NodeKind.ANCHOR and s.head.kind is not NodeKind.ANCHOR:
            problems.append("arrow into an anchor")
        if s.head.kind is NodeKind.TARGET:
            problems.append("arrow out of the target")
    if problems:
        return Validity(ValidityStatus.RELAXABLE, ", ".join(sorted(set(problems))))
    return Validity(ValidityStatus.VALID)


def canonicalize(q: QueryGraph) -> QueryGraph:
    """Flip backward arrows so the query becomes VALID. Idempotent.

    Arrows crossing from a later block to an earlier one (blocks ordered
    anchors < variables < target) are flipped to their inverse form; arrows
    within a block or pointing forward are kept. VALID queries are returned
    unchanged; INVALID queries raise :class:`InvalidQueryError`.
    """
    v = validate(q)
    if v.status is ValidityStatus.INVALID:
        raise InvalidQueryError(f"cannot canonicalize: {v.reason}")
    if v.status is ValidityStatus.VALID:
        return q
    flipped = [
        s.flipped() if _KIND_RANK[s.head.kind] > _KIND_RANK[s.tail.kind] else s
        for s in q.statements
    ]
    return QueryGraph(flipped)


# -- canonical variable labeling --------------------------------------------

_MAX_CANONICAL_VARS = 8


def canonical_query(q: QueryGraph) -> QueryGraph:
    """Relabel variables so isomorphic queries become equal objects.

    Tries every permutation of variable indices and keeps the relabeling
    with the lexicographically smallest statement list. Queries are small
    (a handful of variables), so exhaustive search is fine; beyond
    ``_MAX_CANONICAL_VARS`` variables we refuse rather than stall.
    """
    vs = q.variables
    if not vs:
        return q
    if len(vs) > _MAX_CANONICAL_VARS:
        raise InvalidQueryError(f"too many variables to canonicalize ({len(vs)})")
    old_ids = [n.id for n in vs]
    best: tuple | None = None
    best_stmts: list[QueryStatement] | None = None
    for perm in itertools.permutations(range(len(vs))):
        mapping = {old: new for old, new in zip(old_ids, perm)}
        relabeled = [_relabel_statement(s, mapping) for s in q.statements]
        key = tuple(sorted(s.sort_key() for s in relabeled))
        if best is None or key < best:
            best = key
            best_stmts = relabeled
    assert best_stmts is not None
    return QueryGraph(best_stmts)


def _relabel_statement(s: QueryStatement, mapping: Mapping[int, int]) -> QueryStatement:
    def rl(n: QueryNode) -> QueryNode:
        if n.kind is NodeKind.VAR:
            return QueryNode(NodeKind.VAR, mapping[n.id])
        return n

    return QueryStatement(rl(s.head), s.relation, s.direction, rl(s.tail), s.qualifiers)


# -- qualifier stripping and diameter ----------------------------------------


def strip_qualifiers(q: QueryGraph) -> QueryGraph:
    """Same query with every qualifier set emptied (answers can only grow)."""
    return QueryGraph(
        QueryStatement(s.head, s.relation, s.direction, s.tail, frozenset())
        for s in q.statements
    )


def diameter(q: QueryGraph) -> int:
    """Undirected diameter of the query's node graph (BFS from every node)."""
    nodes = q.nodes
    if not nodes:
        raise InvalidQueryError("diameter of an empty query")
    adj: dict[QueryNode, set[QueryNode]] = {n: set() for n in nodes}
    for s in q.statements:
        adj[s.head].add(s.tail)
        adj[s.tail].add(s.head)
    best = 0
    for start in nodes:
        dist = {start: 0}
        frontier = [start]
        while frontier:
            nxt = []
            for n in frontier:
                for m in adj[n]:
                    if m not in dist:
                        dist[m] = dist[n] + 1
                        nxt.append(m)
            frontier = nxt
        if len(dist) != len(nodes):
            raise InvalidQueryError("query graph is disconnected")
        best = max(best, max(dist.values()))
    return best


# -- patterns ----------------------------------------------------------------


class Pattern(enum.Enum):
    """The seven supported query shapes."""

    P1 = "1p"
    P2 = "2p"
    P3 = "3p"
    I2 = "2i"
    I3 = "3i"
    IP = "2i-1p"
    PI = "1p-2i"

    @classmethod
    def coerce(cls, value: "Pattern | str") -> "Pattern":
        if isinstance(value, cls):
            return value
        try:
            return cls(value)
        except ValueError:
            raise ValueError(f"unknown pattern {value!r}; expected one of "
                             f"{[p.value for p in cls]}") from None


_A0, _A1, _A2 = ("a", 0), ("a", 1), ("a", 2)
_V0, _V1 = ("v", 0), ("v", 1)
_T = ("t", 0)

# edge lists in grounding order: (source slot, destination slot)
PATTERN_EDGES: dict[Pattern, tuple[tuple, ...]] = {
    Pattern.P1: ((_A0, _T),),
    Pattern.P2: ((_A0, _V0), (_V0, _T)),
    Pattern.P3: ((_A0, _V0), (_V0, _V1), (_V1, _T)),
    Pattern.I2: ((_A0, _T), (_A1, _T)),
    Pattern.I3: ((_A0, _T), (_A1, _T), (_A2, _T)),
    Pattern.IP: ((_A0, _V0), (_A1, _V0), (_V0, _T)),
    Pattern.PI: ((_A0, _V0), (_V0, _T), (_A1, _T)),
}

# where branches meet, for patterns that join; used by degree filtering
PATTERN_JOIN_SLOT: dict[Pattern, tuple] = {
    Pattern.I2: _T,
    Pattern.I3: _T,
    Pattern.IP: _V0,
    Pattern.PI: _T,
}

JOIN_PATTERNS = frozenset(PATTERN_JOIN_SLOT)


def pattern_anchor_count(pattern: Pattern) -> int:
    slots = {s for edge in PATTERN_EDGES[pattern] for s in edge if s[0] == "a"}
    return len(slots)


def pattern_edge_count(pattern: Pattern) -> int:
    return len(PATTERN_EDGES[pattern])


def _slot_node(slot: tuple, anchors: Sequence[int]) -> QueryNode:
    kind, idx = slot
    if kind == "a":
        return anchor(anchors[idx])
    if kind == "v":
        return var(idx)
    return TARGET


def instantiate(pattern: Pattern | str, anchors: Sequence[int],
                relations: Sequence[int],
                qualifiers: Sequence[Iterable[QualifierPair]] | None = None,
                ) -> QueryGraph:
    """Build a query of the given shape. The result is always VALID.

    Args:
        pattern: one of the seven shapes.
        anchors: entity ids for the anchor slots, in slot order.
        relations: relation ids, one per pattern edge, in edge order.
        qualifiers: optional qualifier sets, one per edge.
    """
    pattern = Pattern.coerce(pattern)
    edges = PATTERN_EDGES[pattern]
    if len(anchors) != pattern_anchor_count(pattern):
        raise ValueError(f"{pattern.value} needs {pattern_anchor_count(pattern)} "
                         f"anchors, got {len(anchors)}")
    if len(relations) != len(edges):
        raise ValueError(f"{pattern.value} needs {len(edges)} relations, "
                         f"got {len(relations)}")
    if qualifiers is None:
        qualifiers = [frozenset()] * len(edges)
    if len(qualifiers) != len(edges):
        raise ValueError(f"{pattern.value} needs {len(edges)} qualifier sets, "
                         f"got {len(qualifiers)}")
    stmts = [
        QueryStatement(_slot_node(src, anchors), rel, Direction.FORWARD,
                       _slot_node(dst, anchors),
                       frozenset(QualifierPair(*p) for p in quals))
        for (src, dst), rel, quals in zip(edges, relations, qualifiers)
    ]
    return QueryGraph(stmts)


# -- serialization ------------------------------------------------------------


def _node_to_dict(n: QueryNode) -> dict:
    if n.kind is NodeKind.TARGET:
        return {"kind": "target"}
    return {"kind": n.kind.value, "id": n.id}


def _node_from_dict(d: Mapping) -> QueryNode:
    kind = NodeKind(d["kind"])
    if kind is NodeKind.TARGET:
        return TARGET
    return QueryNode(kind, int(d["id"]))


def query_to_dict(q: QueryGraph, pattern: Pattern | None = None) -> dict:
    """Plain-dict form with deterministic field and element order."""
    return {
        "pattern": pattern.value if pattern is not None else None,
        "nodes": [_node_to_dict(n) for n in q.nodes],
        "statements": [
            {
                "head": _node_to_dict(s.head),
                "relation": s.relation,
                "direction": s.direction.value,
                "tail": _node_to_dict(s.tail),
                "qualifiers": [[p.relation, p.value] for p in sorted(s.qualifiers)],
            }
            for s in q.statements
        ],
    }


def query_from_dict(d: Mapping) -> tuple[QueryGraph, Pattern | None]:
    stmts = [
        QueryStatement(
            _node_from_dict(sd["head"]),
            int(sd["relation"]),
            Direction(sd["direction"]),
            _node_from_dict(sd["tail"]),
            frozenset(QualifierPair(int(r), int(v)) for r, v in sd["qualifiers"]),
        )
        for sd in d["statements"]
    ]
    pattern = Pattern(d["pattern"]) if d.get("pattern") else None
    return QueryGraph(stmts), pattern


def query_to_json(q: QueryGraph, pattern: Pattern | None = None) -> str:
    return json.dumps(query_to_dict(q, pattern), separators=(",", ":"))


def query_from_json(text: str) -> tuple[QueryGraph, Pattern | None]:
    return query_from_dict(json.loads(text))
