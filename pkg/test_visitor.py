#!/usr/bin/env python3
"""
Tests for the visitor that builds the Cypher pattern AST:
- Golden AST for a grouped query with HAVING, ORDER BY, OFFSET and LIMIT
- Pattern categorisation (labels, value constraints, properties, relationships)
- Explicit relationship types
- Property paths and OPTIONAL blocks
- Conflicts and unbound variables
- GROUP BY aliases
- IS NOT NULL property guards
"""

import sys
from pathlib import Path

# Add src to path
sys.path.insert(0, str(Path(__file__).parent / "src"))

from sparql2cypher.frontend import UnsupportedError, parse_text
from sparql2cypher.interpreter import assemble
from sparql2cypher.samples import get_sample
from sparql2cypher.schemas import Ast
from sparql2cypher.visitor import (
    ConflictError,
    UnboundVariableError,
    build_ast,
    init_ast,
    visit_aggregate,
    visit_limit,
    visit_offset,
    visit_var,
)

PET_OWNER_AST = {
    "vars": ["pet", "avgPersonAge", "x", "petName", "personAge"],
    "iri": {},
    "nodes": {"x": {"label": "ROOT__Person"}, "pet": {"label": "ROOT__Pet"}},
    "props": {"personAge": "x.person__age", "petName": "pet.pet__name"},
    "rels": [
        {"s": "x", "r": ":person__hasPet", "o": "pet", "optional": False, "inverse": False}
    ],
    "rel_types": [":person__hasPet"],
    "aggregates": {"avgPersonAge": "AVG(x.person__age)"},
    "WHERE": ["pet.pet__name CONTAINS 'b'"],
    "WITH": {
        "avgPersonAge": "AVG(x.person__age) AS avgPersonAge",
        "petName": "pet.pet__name AS petName",
    },
    "WHERE_WITH": [["avgPersonAge", ">", "30"]],
    "RETURN": ["petName, avgPersonAge"],
    "ORDER BY": {"avgPersonAge": "DESC"},
    "LIMIT": 10,
    "OFFSET": 1,
}


def ast_of(sparql: str, **kwargs) -> Ast:
    return build_ast(parse_text(sparql), **kwargs)


def test_golden_ast():
    """Test the AST of the pet owner query against the expected containers."""
    print("Test 1: Golden AST...")

    ast = ast_of(get_sample("pet_owner_ages")["sparql"]).to_json_dict()

    assert len(ast) == 16
    assert ast["subgraphs"] == {} and ast["UNWIND"] == {}
    for key, expected in PET_OWNER_AST.items():
        if key == "vars":
            assert set(ast[key]) == set(expected), f"vars: {ast[key]}"
        elif key in ("WITH", "ORDER BY"):
            assert list(ast[key].items()) == list(expected.items()), f"{key}: {ast[key]}"
        else:
            assert ast[key] == expected, f"{key}: {ast[key]} != {expected}"
    print("  ✓ All populated containers match, WITH order kept")

    restored = Ast.from_json_dict(ast)
    assert restored.to_json_dict() == ast
    print("  ✓ JSON form reloads to the same AST")


def test_container_helpers():
    """Test the per-container visit functions."""
    print("\nTest 2: Container helpers...")

    ast = init_ast()
    assert ast.limit is None and ast.skip is None and not ast.vars

    assert visit_var("?x", False, ast) == "x"
    assert visit_var("$x", False, ast) == "x"
    assert ast.vars == ["x"]
    ast.props["age"] = "x.ROOT__age"
    assert visit_var("?age", True, ast) == "x.ROOT__age"
    assert visit_var("?age", False, ast) == "age"
    print("  ✓ visit_var cleans, registers once and namespaces inside aggregates")

    assert visit_aggregate("COUNT(x)", None, ast) == "agg__0"
    assert visit_aggregate("SUM(x.ROOT__age)", None, ast) == "agg__1"
    assert visit_aggregate("AVG(x.ROOT__age)", "avgAge", ast) == "avgAge"
    assert ast.with_["avgAge"] == "AVG(x.ROOT__age) AS avgAge"
    try:
        visit_aggregate("MAX(x.ROOT__age)", "avgAge", ast)
        assert False, "Should have raised ConflictError"
    except ConflictError:
        pass
    print("  ✓ visit_aggregate numbers anonymous aliases and rejects rebinding")

    visit_limit(0, ast)
    visit_offset(3, ast)
    assert (ast.limit, ast.skip) == (0, 3)
    try:
        visit_limit(-1, ast)
        assert False, "Should have raised ValueError"
    except ValueError:
        pass
    print("  ✓ LIMIT 0 kept, negative values rejected")

    try:
        visit_var("?match", False, ast)
        assert False, "Should have raised UnsupportedError"
    except UnsupportedError as e:
        assert e.construct == "RESERVED_VARIABLE"
    print("  ✓ Cypher keywords rejected as variable names")


def test_pattern_types():
    """Test the four triple pattern types."""
    print("\nTest 3: Pattern types...")

    ast = ast_of(
        """PREFIX : <http://example.org/>
        SELECT ?name ?city WHERE {
          ?x a :Person .
          ?x :name 'Emma' .
          ?x :nick ?name .
          ?x :livesIn ?c .
          ?c a :City .
          ?c :cityName ?city .
        }"""
    )
    assert ast.nodes["x"].label == "ROOT__Person"
    assert ast.nodes["c"].label == "ROOT__City"
    print("  ✓ Class label")
    assert ast.nodes["x"].properties == {"ROOT__name": "'Emma'"}
    print("  ✓ Value constraint")
    assert ast.props == {"name": "x.ROOT__nick", "city": "c.ROOT__cityName"}
    print("  ✓ Variable property")
    assert [(r.s, r.r, r.o) for r in ast.rels] == [("x", ":ROOT__livesIn", "c")]
    assert ast.rel_types == [":ROOT__livesIn"]
    print("  ✓ Variable relationship")
    assert ast.return_items == ["name, city"]


def test_explicit_relationships():
    """Test that explicit relationship types turn properties into relationships."""
    print("\nTest 4: Explicit relationship types...")

    query = get_sample("known_people_age")["sparql"]

    ast = ast_of(query)
    assert not ast.rels
    assert ast.props["y"] == "x.ROOT__knows"
    print("  ✓ Without explicit types ?y is a property of ?x")

    ast = ast_of(query, explicit_rels=[":knows"])
    assert [(r.s, r.r, r.o) for r in ast.rels] == [("x", ":ROOT__knows", "y")]
    assert ast.props["ag"] == "y.ROOT__age"
    assert ast.aggregates == {"avgAge": "AVG(y.ROOT__age)"}
    assert "y" not in ast.props
    print("  ✓ With :knows explicit, ?y is a node and AVG reads its property")


def test_paths_and_optional():
    """Test sequence paths, inverse paths and OPTIONAL relationships."""
    print("\nTest 5: Paths and OPTIONAL...")

    ast = ast_of(
        """PREFIX : <http://example.org/>
        SELECT ?x ?z WHERE { ?x a :A . ?z a :C . ?x :p/:q ?z . }"""
    )
    assert ast.rels[0].r == ":ROOT__p/:ROOT__q"
    assert ast.rel_types == [":ROOT__p", ":ROOT__q"]
    print("  ✓ Sequence path kept as one relationship")

    ast = ast_of(
        """PREFIX : <http://example.org/>
        SELECT ?x WHERE { ?x a :A . ?y a :B . ?x ^:owns ?y . }"""
    )
    assert ast.rels[0].inverse is True
    print("  ✓ Inverse path flagged")

    ast = ast_of(get_sample("optional_relationship")["sparql"])
    optional = [r for r in ast.rels if r.optional]
    assert [(r.s, r.r, r.o) for r in optional] == [("product", ":ele__publisher", "producer")]
    assert ast.nodes["producer"].optional is True
    assert ast.nodes["producer"].label == "bsbm__Producer"
    assert ast.nodes["product"].label == "bsbm_inst__ProductType1"
    assert ast.where == [["product.bsbm__productPropertyNumeric1", ">", "1000"]]
    assert ast.order_by == {"product.rdfs__label": "ASC"}
    assert ast.return_items == ["DISTINCT label"]
    print("  ✓ OPTIONAL relationship, restated labels and DISTINCT projection")

    try:
        ast_of(
            """PREFIX : <http://example.org/>
            SELECT ?x WHERE { ?x a :A . OPTIONAL { ?y :p ?z . } }"""
        )
        assert False, "Should have raised UnsupportedError"
    except UnsupportedError as e:
        assert e.construct == "DISCONNECTED_OPTIONAL"
        print("  ✓ OPTIONAL block not joined to the pattern rejected")


def test_filters():
    """Test FILTER rendering into WHERE terms."""
    print("\nTest 6: FILTER terms...")

    ast = ast_of(
        """PREFIX : <http://example.org/>
        SELECT ?n WHERE {
          ?x a :P .
          ?x :name ?n .
          ?x :age ?a .
          FILTER(?a != 3)
          FILTER(?a IN (1, 2))
          FILTER(STRSTARTS(LCASE(?n), 'e') || !BOUND(?a))
        }"""
    )
    assert ast.where[0] == ["x.ROOT__age", "<>", "3"]
    assert ast.where[1] == ["x.ROOT__age", "IN", "(1, 2)"]
    assert ast.where[2] == "toLower(x.ROOT__name) STARTS WITH 'e' || NOT (x.ROOT__age IS NOT NULL)"
    print("  ✓ Comparisons, IN lists and boolean compounds")


def test_errors():
    """Test conflicts, unbound variables and unsupported patterns."""
    print("\nTest 7: Visitor errors...")

    try:
        ast_of("PREFIX : <http://e.org/>\nSELECT ?x WHERE { ?x a :A . ?x a :B . }")
        assert False, "Should have raised ConflictError"
    except ConflictError:
        print("  ✓ Two labels on one variable")

    try:
        ast_of("PREFIX : <http://e.org/>\nSELECT ?y WHERE { ?x a :A . }")
        assert False, "Should have raised UnboundVariableError"
    except UnboundVariableError:
        print("  ✓ Projected variable never bound")

    try:
        ast_of("PREFIX : <http://e.org/>\nSELECT ?x WHERE { ?x a :A . FILTER(?q > 1) }")
        assert False, "Should have raised UnboundVariableError"
    except UnboundVariableError:
        print("  ✓ Filtered variable never bound")

    unsupported = {
        "SELECT ?x WHERE { ?x a ?cls . }": "VARIABLE_CLASS",
        "SELECT ?x WHERE { ?x a :A . ?x :knows :bob . }": "IRI_OBJECT",
        "SELECT ?x WHERE { :bob :knows ?x . }": "CONSTANT_SUBJECT",
        "SELECT ?x WHERE { ?x a :A . ?x :p/:q 'v' . }": "PATH_TO_PROPERTY",
    }
    for query, construct in unsupported.items():
        try:
            ast_of("PREFIX : <http://e.org/>\n" + query)
            assert False, f"Should have rejected: {query}"
        except UnsupportedError as e:
            assert e.construct == construct, f"{query}: {e.construct}"
    print(f"  ✓ {len(unsupported)} unsupported patterns tagged")


def test_group_aliases():
    """Test GROUP BY conditions with an alias projected by SELECT."""
    print("\nTest 8: GROUP BY aliases...")

    ast = ast_of(
        "PREFIX : <http://e.org/>\n"
        "SELECT ?y (COUNT(*) AS ?c) WHERE { ?e a :Event . ?e :d ?d . }\n"
        "GROUP BY (YEAR(?d) AS ?y)"
    )
    assert ast.with_ == {"c": "COUNT(*) AS c", "y": "date(e.ROOT__d).year AS y"}, ast.with_
    assert ast.return_items == ["y, c"], ast.return_items
    text = assemble(ast).text
    assert text == "MATCH (e:ROOT__Event)\nWITH COUNT(*) AS c, date(e.ROOT__d).year AS y\nRETURN y, c", text
    print("  ✓ Expression alias becomes a WITH key")

    query = (
        "PREFIX : <http://e.org/>\n"
        "SELECT ?b (COUNT(?x) AS ?n) WHERE { ?x a :P . ?x :age ?a . }\n"
        "GROUP BY ?a (?a AS ?b)"
    )
    ast = ast_of(query)
    assert list(ast.with_) == ["n", "a"], ast.with_
    assert ast.with_["a"] == "x.ROOT__age AS a"
    assert ast.return_items == ["a AS b, n"], ast.return_items
    print("  ✓ Alias of an existing key leaves WITH unchanged")

    ast = ast_of(query + "\nHAVING (?b > 20)")
    assert ast.where_with == [["a", ">", "20"]], ast.where_with
    print("  ✓ HAVING reads the alias through its key")

    try:
        ast_of(
            "PREFIX : <http://e.org/>\n"
            "SELECT ?z (COUNT(*) AS ?c) WHERE { ?x a :P . ?x :age ?a . }\n"
            "GROUP BY (?a AS ?y)"
        )
        assert False, "Should have raised UnboundVariableError"
    except UnboundVariableError:
        print("  ✓ Projected variable outside the pattern and the aliases")


def test_property_guards():
    """Test IS NOT NULL guards for properties read by required triples."""
    print("\nTest 9: Property guards...")

    query = (
        "PREFIX : <http://e.org/>\n"
        "SELECT ?x ?a WHERE { ?x a :P . ?x :age ?a . FILTER(?a > 60 || ?a < 20) }"
    )
    assert ast_of(query).where == ["x.ROOT__age > 60 || x.ROOT__age < 20"]
    print("  ✓ No guards by default")

    ast = ast_of(query, guard_properties=True)
    assert ast.where == ["x.ROOT__age IS NOT NULL", "x.ROOT__age > 60 || x.ROOT__age < 20"], ast.where
    where = [line for line in assemble(ast).text.splitlines() if line.startswith("WHERE")]
    assert where == ["WHERE x.ROOT__age IS NOT NULL AND ((x.ROOT__age > 60) OR (x.ROOT__age < 20))"], where
    print("  ✓ Guard joined with the disjunction kept intact")


def main():
    """Run all tests."""
    print("=" * 60)
    print("Running Visitor Tests")
    print("=" * 60)

    try:
        test_golden_ast()
        test_container_helpers()
        test_pattern_types()
        test_explicit_relationships()
        test_paths_and_optional()
        test_filters()
        test_errors()
        test_group_aliases()
        test_property_guards()

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
