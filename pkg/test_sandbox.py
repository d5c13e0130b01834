#!/usr/bin/env python3
"""
Tests for the in-memory evaluation sandbox:
- Turtle loading
- Property graph materialization
- SPARQL evaluation
- Cypher evaluation
"""

import sys
from decimal import Decimal
from pathlib import Path

# Add src to path
sys.path.insert(0, str(Path(__file__).parent / "src"))

from sparql2cypher.cypher_eval import CypherEvalError, eval_cypher, parse_cypher
from sparql2cypher.frontend import AmbiguousNameError, parse_text
from sparql2cypher.property_graph import materialize
from sparql2cypher.rdf_store import TurtleSyntaxError, load_turtle, load_turtle_file
from sparql2cypher.samples import products_store, toy_store
from sparql2cypher.schemas import NodeRef
from sparql2cypher.sparql_eval import EvalError, eval_sparql

EX = "http://example.org/"
PREFIX = "PREFIX : <http://example.org/>\n"


def sparql(store, query):
    return eval_sparql(store, parse_text(query))


def test_load_turtle():
    """Test loading Turtle text and files."""
    print("Test 1: Turtle loading...")

    store = toy_store()
    assert len(store) == 17
    assert store.prefixes.resolve("") == EX
    assert store.prefixes.resolve("xsd") == "http://www.w3.org/2001/XMLSchema#"
    assert list(store.triples) == sorted(store.triples, key=lambda t: tuple(x.n3() for x in t))
    print(f"  ✓ {len(store)} triples, document and standard prefixes")

    try:
        load_turtle("@prefix : <http://example.org/> .\n:a :b ")
        assert False, "Should have raised TurtleSyntaxError"
    except TurtleSyntaxError as e:
        assert "Invalid Turtle" in str(e)
        print("  ✓ Truncated document rejected")

    try:
        load_turtle_file("/nonexistent/graph.ttl")
        assert False, "Should have raised FileNotFoundError"
    except FileNotFoundError:
        print("  ✓ Missing file rejected")

    store = load_turtle(
        "@prefix : <http://example.org/> .\n"
        ':a :note """first line\n'
        '@prefix fake: <http://fake.org/> .\n'
        '""" .\n'
        ":a :p :b . @prefix late: <http://late.org/> .\n"
        "late:c :p :a .\n"
    )
    assert store.prefixes.resolve("fake") is None
    assert store.prefixes.resolve("late") == "http://late.org/"
    assert {"", "late"} <= store.prefixes.declared and "fake" not in store.prefixes.declared
    print("  ✓ Prefixes come from the parser, not from literal text")


def test_materialize():
    """Test the triple store to property graph mapping."""
    print("\nTest 2: Materialization...")

    pg = materialize(toy_store())
    emma = EX + "emma"
    assert pg.labels(emma) == {"ROOT__Person"}
    assert pg.properties(emma) == {"ROOT__name": "Emma", "ROOT__age": Decimal(25)}
    print("  ✓ rdf:type becomes a label, literals become properties")

    assert (emma, "ROOT__knows", EX + "yann") in pg.edges
    assert (emma, "ROOT__knows", EX + "yara") in pg.edges
    assert len(pg.edges) == 2
    assert len(pg) == 6
    print("  ✓ IRI objects become typed edges")

    pg = materialize(toy_store(), default_prefix_label="BASE")
    assert pg.labels(emma) == {"BASE__Person"}
    print("  ✓ Custom label for the empty prefix")

    products = materialize(products_store())
    product = "http://www4.wiwiss.fu-berlin.de/bizer/bsbm/v01/instances/Product0"
    assert pg_label(products, product) == "bsbm_inst__ProductType1"
    assert "rdfs__label" in products.properties(product)
    print("  ✓ Dashes in prefixes become underscores")

    store = load_turtle(
        "<http://a.org/x> <http://other.org/v#p> <http://a.org/y> .\n"
        "<http://a.org/x> <http://third.org/q> 'v' .\n"
    )
    pg = materialize(store)
    assert pg.edges == [("http://a.org/x", "ns0__p", "http://a.org/y")]
    assert pg.properties("http://a.org/x") == {"ns1__q": "v"}
    print("  ✓ Undeclared namespaces get generated prefixes in order of use")

    store = load_turtle(
        "@prefix : <http://example.org/> .\n"
        ':p1 a :Person ; :tag "x" .\n'
        ':p2 :tag "x" .\n'
    )
    pg = materialize(store, explicit_rels=[":tag"])
    assert pg.edges == [(EX + "p1", "ROOT__tag", '"x"'), (EX + "p2", "ROOT__tag", '"x"')], pg.edges
    assert pg.properties('"x"') == {"value": "x"}
    assert pg.labels('"x"') == set()
    assert pg.properties(EX + "p1") == {}
    print("  ✓ Explicit relationship to a literal ends at a shared value node")

    try:
        materialize(load_turtle(
            "@prefix bsbm-inst: <http://a.org/> .\n"
            "@prefix bsbm_inst: <http://b.org/> .\n"
            "bsbm-inst:x bsbm_inst:p 1 .\n"
        ))
        assert False, "Should have raised AmbiguousNameError"
    except AmbiguousNameError:
        print("  ✓ Document prefixes spelled alike rejected")


def pg_label(pg, uri):
    (label,) = pg.labels(uri)
    return label


def test_eval_sparql():
    """Test the reference SPARQL evaluator."""
    print("\nTest 3: SPARQL evaluation...")

    store = toy_store()
    table = sparql(
        store,
        PREFIX + "SELECT ?name ?age WHERE { ?p a :Person . ?p :name ?name . ?p :age ?age . "
        "FILTER(?age > 26) } ORDER BY DESC(?age)",
    )
    assert table.columns == ["name", "age"]
    assert table.rows == [("Yara", Decimal(40)), ("Yann", Decimal(30))]
    print("  ✓ FILTER and ORDER BY DESC")

    table = sparql(store, PREFIX + "SELECT ?y WHERE { ?x :name 'Emma' . ?x :knows ?y . }")
    assert set(table.rows) == {(NodeRef(uri=EX + "yann"),), (NodeRef(uri=EX + "yara"),)}
    print("  ✓ Resources come back as NodeRef")

    table = sparql(
        store,
        PREFIX + "SELECT ?n ?f WHERE { ?p a :Person . ?p :name ?n . "
        "OPTIONAL { ?p :knows ?f . } } ORDER BY ?f",
    )
    assert len(table.rows) == 4
    assert [row[1] for row in table.rows[:2]] == [None, None]
    assert {row[0] for row in table.rows[:2]} == {"Yann", "Yara"}
    print("  ✓ OPTIONAL leaves cells unbound; unbound sorts first")

    table = sparql(store, PREFIX + "SELECT (COUNT(?p) AS ?c) (AVG(?a) AS ?avg) WHERE { ?p :age ?a . }")
    assert table.rows == [(Decimal(3), Decimal(95) / Decimal(3))]
    print("  ✓ Aggregates without GROUP BY form one group")

    table = sparql(store, "SELECT (COUNT(*) AS ?n) WHERE { ?s a :singer . }")
    assert table.rows == [(Decimal(3),)]
    print("  ✓ Undeclared query prefix resolved against the store")

    table = sparql(store, PREFIX + "SELECT ?n WHERE { ?s a :singer . ?s :name ?n . } ORDER BY ?n LIMIT 2 OFFSET 1")
    assert table.rows == [("Bo",), ("Cy",)]
    print("  ✓ OFFSET then LIMIT")

    try:
        sparql(store, PREFIX + "SELECT ?n WHERE { ?p :name ?n . } GROUP BY ?p")
        assert False, "Should have raised EvalError"
    except EvalError:
        print("  ✓ Non-key projection in a grouped query rejected")


def test_eval_cypher():
    """Test the reference Cypher evaluator."""
    print("\nTest 4: Cypher evaluation...")

    pg = materialize(toy_store())
    table = eval_cypher(
        pg,
        "MATCH (p:ROOT__Person) WHERE p.ROOT__age > 26 RETURN p.ROOT__name AS name ORDER BY name DESC",
    )
    assert table.columns == ["name"]
    assert table.rows == [("Yara",), ("Yann",)]
    print("  ✓ MATCH, WHERE, RETURN, ORDER BY")

    table = eval_cypher(
        pg,
        "MATCH (p:ROOT__Person)\nOPTIONAL MATCH (p)-[:ROOT__knows]->(f)\n"
        "RETURN p.ROOT__name AS n, f\nORDER BY f",
    )
    assert len(table.rows) == 4
    assert [row[1] for row in table.rows[2:]] == [None, None]
    assert table.rows[0][1] == NodeRef(uri=EX + "yann")
    print("  ✓ OPTIONAL MATCH pads nulls; nulls sort last ascending")

    table = eval_cypher(
        pg, "MATCH (p:ROOT__Person)\nWITH COUNT(*) AS c, AVG(p.ROOT__age) AS a\nRETURN c, a"
    )
    assert table.rows[0][0] == Decimal(3)
    assert abs(table.rows[0][1] - Decimal("31.6666666")) < Decimal("1e-6")
    print("  ✓ WITH aggregation")

    table = eval_cypher(
        pg, "MATCH (s:ROOT__singer)\nRETURN s.ROOT__name AS n\nORDER BY n ASC\nLIMIT 2\nSKIP 1"
    )
    assert table.rows == [("Bo",), ("Cy",)]
    print("  ✓ SKIP applied before LIMIT regardless of clause order")

    table = eval_cypher(pg, "MATCH (p:ROOT__Person {ROOT__name: 'Emma'})-[:ROOT__knows]->(f) RETURN f.ROOT__age")
    assert table.columns == ["f.ROOT__age"]
    assert sorted(table.rows) == [(Decimal(30),), (Decimal(40),)]
    print("  ✓ Inline properties; unaliased columns named by their text")

    table = eval_cypher(pg, "MATCH (p:ROOT__Nobody)\nWITH COUNT(*) AS c\nRETURN c")
    assert table.rows == [(Decimal(0),)]
    print("  ✓ Aggregation over no rows gives one row")

    for query in ("MATCH (p RETURN p", "MATCH (p:ROOT__Person) RETURN q"):
        try:
            eval_cypher(pg, query)
            assert False, f"Should have raised CypherEvalError: {query}"
        except CypherEvalError as e:
            assert e.kind == "syntax"
    print("  ✓ Parse and scope errors")

    try:
        eval_cypher(pg, "MATCH (p:ROOT__Person) RETURN p.ROOT__name - 1")
        assert False, "Should have raised CypherEvalError"
    except CypherEvalError as e:
        assert e.kind == "runtime"
        print("  ✓ Type errors at runtime")

    statement = parse_cypher("MATCH (s:ROOT__singer) RETURN s")
    assert eval_cypher(pg, statement).columns == ["s"]
    print("  ✓ Pre-parsed statements accepted")


def main():
    """Run all tests."""
    print("=" * 60)
    print("Running Sandbox Tests")
    print("=" * 60)

    try:
        test_load_turtle()
        test_materialize()
        test_eval_sparql()
        test_eval_cypher()

        print("\n" + "=" * 60)
        print("All tests passed! ✓")
        print("=" * 60)

    except Exception as e:
        print(f"\n✗ Test failed: {e}")
        import traceback

        traceback.print_exc()
        sys.exit(1)


if __name__ == "__main__":
    main()
