"""Backtracking matcher checked against exhaustive enumeration."""

import itertools
import random

import pytest

from hyperq import (ALL_SPLITS, Direction, GraphBuilder, InvalidQueryError,
                    NodeKind, Pattern, QualifierPair, QueryGraph,
                    QueryStatement, SplitTag, anchor, answer_set,
                    answer_set_ignoring_qualifiers, canonicalize, instantiate,
                    pattern_anchor_count, pattern_edge_count, qualifier_match,
                    synth_graph, var)
from hyperq.query import TARGET


def brute_force_answers(g, q, splits=ALL_SPLITS):
    """Enumerate every assignment of entities to free nodes."""
    splits = frozenset(SplitTag.coerce(s) for s in splits)
    edges = [s.semantic_edge() for s in q.statements]
    free = [n for n in q.nodes if n.kind is not NodeKind.ANCHOR]
    data = [(s.head, s.relation, s.tail, s.qualifiers)
            for s in g.statements if s.split in splits]

    def value(n, assign):
        return n.id if n.kind is NodeKind.ANCHOR else assign[n]

    answers = set()
    for combo in itertools.product(range(len(g.entities)), repeat=len(free)):
        assign = dict(zip(free, combo))
        ok = all(
            any(h == value(src, assign) and r == rel and t == value(dst, assign)
                and qualifier_match(quals, dquals)
                for h, r, t, dquals in data)
            for src, rel, dst, quals in edges)
        if ok:
            answers.add(assign[TARGET])
    return frozenset(answers)


def random_query(rnd, g, pattern):
    n_e, n_r = len(g.entities), len(g.relations)
    anchors = [rnd.randrange(n_e) for _ in range(pattern_anchor_count(pattern))]
    relations = [rnd.randrange(n_r) for _ in range(pattern_edge_count(pattern))]
    quals = []
    for _ in relations:
        if rnd.random() < 0.3:
            quals.append([(rnd.randrange(n_r), rnd.randrange(n_e))])
        else:
            quals.append([])
    return instantiate(pattern, anchors, relations, qualifiers=quals)


# patterns with <= 2 free variables besides the target keep enumeration cheap
CHEAP_PATTERNS = [Pattern.P1, Pattern.P2, Pattern.P3, Pattern.I2, Pattern.I3,
                  Pattern.IP, Pattern.PI]


@pytest.mark.parametrize("pattern", CHEAP_PATTERNS, ids=lambda p: p.value)
def test_matcher_agrees_with_enumeration(pattern):
    rnd = random.Random(CHEAP_PATTERNS.index(pattern))
    g = synth_graph(17, 9, 4, profile="mixed", n_statements=60)
    hits = 0
    for _ in range(40):
        q = random_query(rnd, g, pattern)
        got = answer_set(g, q)
        want = brute_force_answers(g, q)
        assert got == want
        hits += bool(got)
    # the comparison should exercise nonempty cases too
    assert hits > 0 or pattern in (Pattern.P3, Pattern.IP)


def test_matcher_agrees_on_anchored_groundings():
    # force nonempty answer sets by building queries from actual data paths
    g = synth_graph(23, 10, 4, profile="mixed", n_statements=70)
    checked = 0
    for s1 in g.statements:
        for i2 in g.by_head(s1.tail):
            s2 = g.statements[i2]
            q = instantiate("2p", [s1.head], [s1.relation, s2.relation])
            assert answer_set(g, q) == brute_force_answers(g, q)
            checked += 1
            if checked >= 25:
                return
    assert checked > 0


def test_qualifier_narrowing_property():
    # adding a qualifier pair to any edge never grows the answer set
    g = synth_graph(31, 12, 5, profile="mixed", n_statements=90)
    rnd = random.Random(12)
    cases = narrowed = 0
    while cases < 1000:
        pattern = rnd.choice(CHEAP_PATTERNS)
        q = random_query(rnd, g, pattern)
        base = answer_set(g, q)
        edge_i = rnd.randrange(len(q.statements))
        extra = QualifierPair(rnd.randrange(len(g.relations)),
                              rnd.randrange(len(g.entities)))
        stmts = list(q.statements)
        s = stmts[edge_i]
        stmts[edge_i] = QueryStatement(s.head, s.relation, s.direction, s.tail,
                                       s.qualifiers | {extra})
        tightened = answer_set(g, QueryGraph(stmts))
        assert tightened <= base
        narrowed += tightened < base
        cases += 1
    assert narrowed > 0


def test_qualified_edges_match_superset_statements():
    # a query qualifier set matches any data statement carrying at least it
    b = GraphBuilder()
    b.add("h", "r", "t1", [("q", "u"), ("p", "w")])
    b.add("h", "r", "t2", [("q", "u")])
    b.add("h", "r", "t3")
    g = b.build()
    ent = {g.entities.label(i): i for i in range(len(g.entities))}
    rel = {g.relations.label(i): i for i in range(len(g.relations))}
    bare = instantiate("1p", [ent["h"]], [rel["r"]])
    one = instantiate("1p", [ent["h"]], [rel["r"]],
                      qualifiers=[[(rel["q"], ent["u"])]])
    two = instantiate("1p", [ent["h"]], [rel["r"]],
                      qualifiers=[[(rel["q"], ent["u"]), (rel["p"], ent["w"])]])
    assert answer_set(g, bare) == {ent["t1"], ent["t2"], ent["t3"]}
    assert answer_set(g, one) == {ent["t1"], ent["t2"]}
    assert answer_set(g, two) == {ent["t1"]}


def test_split_monotonicity():
    g = synth_graph(7, 10, 4, profile="mixed", n_statements=80)
    rnd = random.Random(3)
    grew = 0
    for _ in range(200):
        q = random_query(rnd, g, rnd.choice(CHEAP_PATTERNS))
        train = answer_set(g, q, {"train"})
        val = answer_set(g, q, {"train", "valid"})
        full = answer_set(g, q)
        assert train <= val <= full
        grew += full > train
    assert grew > 0


def test_statement_order_invariance(tiny_graph):
    g = tiny_graph
    rnd = random.Random(1)
    stmts = list(g.statements)
    q = instantiate("2p", [0], [0, 1])
    base = answer_set(g, q)
    for _ in range(5):
        rnd.shuffle(stmts)
        b = GraphBuilder(g.entities, g.relations)
        for s in stmts:
            b.add_ids(s.head, s.relation, s.tail, s.qualifiers, s.split)
        assert answer_set(b.build(), q) == base


def test_canonicalize_preserves_answers():
    g = synth_graph(41, 10, 4, profile="mixed", n_statements=70)
    rnd = random.Random(8)
    for _ in range(100):
        # random relaxable query: arrows deliberately written against the flow
        rel = rnd.randrange(len(g.relations))
        a = rnd.randrange(len(g.entities))
        q = QueryGraph([
            QueryStatement(var(0), rel, Direction.FORWARD, anchor(a)),
            QueryStatement(TARGET, rnd.randrange(len(g.relations)),
                           Direction.FORWARD, var(0)),
        ])
        c = canonicalize(q)
        assert c != q
        assert answer_set(g, q) == answer_set(g, c)


def test_two_variables_may_bind_same_entity():
    b = GraphBuilder()
    b.add("a", "r", "m")
    b.add("m", "r", "m")
    b.add("m", "s", "z")
    g = b.build()
    ent = {g.entities.label(i): i for i in range(len(g.entities))}
    rel = {g.relations.label(i): i for i in range(len(g.relations))}
    q = instantiate("3p", [ent["a"]], [rel["r"], rel["r"], rel["s"]])
    # path a -r-> m -r-> m -s-> z requires v0 = v1 = m
    assert ent["z"] in answer_set(g, q)


def test_ignoring_qualifiers_is_superset():
    g = synth_graph(2, 10, 4, profile="mixed", n_statements=80)
    rnd = random.Random(4)
    widened = 0
    for _ in range(300):
        q = random_query(rnd, g, rnd.choice(CHEAP_PATTERNS))
        tight = answer_set(g, q)
        loose = answer_set_ignoring_qualifiers(g, q)
        assert tight <= loose
        widened += loose > tight
    assert widened > 0


def test_max_answers_caps_search():
    b = GraphBuilder()
    for i in range(20):
        b.add("h", "r", f"t{i}")
    g = b.build()
    q = instantiate("1p", [g.entities.id("h")], [g.relations.id("r")])
    full = answer_set(g, q)
    assert len(full) == 20
    capped = answer_set(g, q, max_answers=5)
    assert len(capped) == 5
    assert capped <= full


def test_invalid_query_rejected(tiny_graph):
    with pytest.raises(InvalidQueryError):
        answer_set(tiny_graph, QueryGraph([]))


def test_bad_arguments_rejected(tiny_graph):
    q = instantiate("1p", [0], [0])
    with pytest.raises(ValueError):
        answer_set(tiny_graph, q, split_filter=())
    with pytest.raises(ValueError):
        answer_set(tiny_graph, q, max_answers=0)


def test_education_style_qualifier_filter():
    # degrees as qualifiers on an attendance relation: asking with the
    # qualifier keeps only the institution where that degree was earned
    b = GraphBuilder()
    b.add("person", "studied_at", "uni_a", [("degree", "bsc")])
    b.add("person", "studied_at", "uni_b", [("degree", "msc")])
    b.add("person", "studied_at", "uni_c")
    g = b.build()
    ent = {g.entities.label(i): i for i in range(len(g.entities))}
    rel = {g.relations.label(i): i for i in range(len(g.relations))}
    bare = instantiate("1p", [ent["person"]], [rel["studied_at"]])
    bsc = instantiate("1p", [ent["person"]], [rel["studied_at"]],
                      qualifiers=[[(rel["degree"], ent["bsc"])]])
    assert answer_set(g, bare) == {ent["uni_a"], ent["uni_b"], ent["uni_c"]}
    assert answer_set(g, bsc) == {ent["uni_a"]}
