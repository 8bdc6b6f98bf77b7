"""Shared fixtures: small hand-built graphs used across the suite."""

import pytest

from hyperq import GraphBuilder


@pytest.fixture
def tiny_graph():
    """Six entities, three relations, a couple of qualifier pairs.

    Statements (all train unless noted):
        a --r--> b                      {(q, u)}
        a --r--> c
        b --s--> d
        c --s--> d                      valid split
        d --t--> e
        b --s--> f                      {(q, v)}  test split
    """
    b = GraphBuilder()
    b.add("a", "r", "b", [("q", "u")])
    b.add("a", "r", "c")
    b.add("b", "s", "d")
    b.add("c", "s", "d", split="valid")
    b.add("d", "t", "e")
    b.add("b", "s", "f", [("q", "v")], split="test")
    return b.build()


@pytest.fixture
def degree_ids(tiny_graph):
    """Label -> id maps for the tiny graph."""
    ent = {tiny_graph.entities.label(i): i for i in range(len(tiny_graph.entities))}
    rel = {tiny_graph.relations.label(i): i for i in range(len(tiny_graph.relations))}
    return ent, rel
