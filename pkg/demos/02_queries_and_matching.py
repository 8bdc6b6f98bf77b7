"""
Query graphs and exact matching
===============================

Queries are small graphs themselves: anchor nodes bound to known
entities, variable nodes, one target variable, and edges that may carry
qualifier constraints. A data statement satisfies a query edge when it
has the right endpoints and relation and its qualifier set is a superset
of the edge's constraint. That subset rule makes qualifiers monotone:
adding one can only shrink the answer set.

Run with: python demos/02_queries_and_matching.py
"""

from hyperq import (GraphBuilder, Pattern, answer_set,
                    answer_set_ignoring_qualifiers, instantiate,
                    pattern_anchor_count, pattern_edge_count, query_to_json,
                    strip_qualifiers, validate)

# ---------------------------------------------------------------------------
# Seven query shapes, from one-hop chains to intersections.

print("pattern  anchors  edges")
for p in Pattern:
    print(f"{p.value:<8} {pattern_anchor_count(p):>7}  {pattern_edge_count(p):>5}")

# ---------------------------------------------------------------------------
# A graph to query: who studied where, and for which degree.

b = GraphBuilder()
b.add("photoelectric_effect", "discovered_by", "albert_einstein")
b.add("albert_einstein", "educated_at", "eth_zurich",
      qualifiers=[("academic_degree", "bachelor")])
b.add("albert_einstein", "educated_at", "university_of_zurich",
      qualifiers=[("academic_degree", "doctorate")])
g = b.build()

ent, rel = g.entities, g.relations
degree = rel.id("academic_degree")
bachelor = ent.id("bachelor")

# ---------------------------------------------------------------------------
# Two-hop query: start at the discovery, follow discovered_by, then
# educated_at. The second edge demands the bachelor qualifier.

q = instantiate(
    "2p",
    anchors=[ent.id("photoelectric_effect")],
    relations=[rel.id("discovered_by"), rel.id("educated_at")],
    qualifiers=[[], [(degree, bachelor)]],
)
print("\nquery as JSON:")
print(query_to_json(q, Pattern.P2))
print("validity:", validate(q).status.value)

answers = answer_set(g, q)
print("\nwith the bachelor qualifier :",
      sorted(ent.label(a) for a in answers))

# Drop the qualifier and both universities come back.
unqualified = answer_set(g, strip_qualifiers(q))
print("without any qualifier       :",
      sorted(ent.label(a) for a in unqualified))

# answer_set_ignoring_qualifiers evaluates the query as if every edge
# constraint were empty; same result by a different route.
print("ignoring qualifiers         :",
      sorted(ent.label(a)
             for a in answer_set_ignoring_qualifiers(g, q)))

# Monotonicity in action: the constrained answers are a subset.
print("qualified subset of stripped:", answers <= unqualified)

# ---------------------------------------------------------------------------
# Intersections. 2i asks for entities reachable from two different
# anchors at once.

b = GraphBuilder()
b.add("alice", "follows", "carol")
b.add("alice", "follows", "dave")
b.add("bob", "follows", "carol")
b.add("bob", "follows", "erin")
g2 = b.build()

q2 = instantiate("2i",
                 anchors=[g2.entities.id("alice"), g2.entities.id("bob")],
                 relations=[g2.relations.id("follows")] * 2)
print("\nfollowed by both alice and bob:",
      sorted(g2.entities.label(a) for a in answer_set(g2, q2)))

# ---------------------------------------------------------------------------
# The matcher searches over all splits by default; pass a split_filter
# to restrict it. Here the test statement is invisible when matching
# against train only.

b = GraphBuilder()
b.add("h", "r", "t_train", split="train")
b.add("h", "r", "t_test", split="test")
g3 = b.build()
q3 = instantiate("1p", anchors=[g3.entities.id("h")],
                 relations=[g3.relations.id("r")])
print("\nall splits :", sorted(g3.entities.label(a) for a in answer_set(g3, q3)))
print("train only :", sorted(g3.entities.label(a)
                             for a in answer_set(g3, q3, split_filter={"train"})))
