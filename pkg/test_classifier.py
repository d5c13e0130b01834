#!/usr/bin/env python3
"""
Tests for the failure taxonomy:
- One query per category
- COUNT_ALL in s2ctrans-compat mode
- Tally over a mixed batch
"""

import sys
from pathlib import Path

# Add src to path
sys.path.insert(0, str(Path(__file__).parent / "src"))

from sparql2cypher import pipeline
from sparql2cypher.classifier import classify, has_count_all, tally
from sparql2cypher.frontend import parse_text
from sparql2cypher.pipeline import batch, try_translate
from sparql2cypher.samples import get_sample, toy_dataset
from sparql2cypher.schemas import FAILURE_KINDS, DatasetEntry, RunConfig
from sparql2cypher.visitor import ConflictError

PREFIX = "PREFIX : <http://example.org/>\n"

CATEGORY_QUERIES = {
    "NS2": [
        get_sample("nested_select")["sparql"],
        PREFIX + "SELECT ?x WHERE { ?x a :A . MINUS { ?x :p ?y . } }",
        PREFIX + "SELECT ?n WHERE { ?x a :A . ?x :name ?n . } GROUP BY ?n HAVING (COUNT(*) > 1)",
    ],
    "NS1": [
        get_sample("not_exists")["sparql"],
        PREFIX + "SELECT ?n WHERE { ?x a :A . ?x :name ?n . FILTER(?n NOT IN ('a', 'b')) }",
    ],
    "OTHER": [
        PREFIX + "SELECT ?x WHERE { { ?x a :A . } UNION { ?x a :B . } }",
        PREFIX + "SELECT ?x WHERE { ?x a :A . ?x a :B . }",
        PREFIX + "SELECT ?x WHERE { ?x a ?cls . }",
    ],
    "SYNTAX": [
        "SELEC ?x WHERE { ?x a :A . }",
        PREFIX + "SELECT ?x WHERE { ?x a :A .",
    ],
}

TRANSLATABLE = [
    PREFIX + "SELECT ?n WHERE { ?x a :A . ?x :name ?n . }",
    PREFIX + "SELECT DISTINCT ?n WHERE { ?x a :B . ?x :label ?n . } LIMIT 3",
    PREFIX + "SELECT (COUNT(?x) AS ?c) WHERE { ?x a :C . }",
]


def test_categories():
    """Test that each query lands in its failure category."""
    print("Test 1: One query per category...")

    for kind, queries in CATEGORY_QUERIES.items():
        for query in queries:
            result = try_translate(query)
            assert not result.ok, f"Should have failed: {query}"
            assert result.failure.kind == kind, f"{query}: {result.failure.kind} != {kind}"
            assert result.failure.detail
        print(f"  ✓ {kind}: {len(queries)} queries")

    for query in TRANSLATABLE:
        result = try_translate(query)
        assert result.ok, f"{query}: {result.failure}"
        assert classify(parse_text(query)) is None
    print(f"  ✓ {len(TRANSLATABLE)} translatable queries classified as translated")


def test_count_all():
    """Test COUNT_ALL reporting in s2ctrans-compat mode only."""
    print("\nTest 2: COUNT(*) in compat mode...")

    sparql = get_sample("singer_count")["sparql"]
    assert has_count_all(parse_text(sparql))
    assert not has_count_all(parse_text(TRANSLATABLE[2]))

    lite = try_translate(sparql)
    assert lite.ok
    print("  ✓ lite mode translates COUNT(*)")

    compat = try_translate(sparql, RunConfig(report_mode="s2ctrans-compat"))
    assert not compat.ok
    assert compat.failure.kind == "COUNT_ALL"
    assert compat.cypher is None
    print("  ✓ s2ctrans-compat mode reports COUNT_ALL")


def test_classify_errors():
    """Test classification of raw exceptions."""
    print("\nTest 3: Raw exceptions...")

    assert classify(ConflictError("x has two labels")).kind == "OTHER"
    assert classify(RuntimeError("boom")).kind == "OTHER"
    try:
        parse_text("SELECT ?x WHERE { ?x a :A . } LIMIT")
    except Exception as e:
        assert classify(e).kind == "SYNTAX"
    print("  ✓ Translator errors map to OTHER, parse errors to SYNTAX")

    def broken_build_ast(*args, **kwargs):
        raise RuntimeError("visitor bug")

    original = pipeline.build_ast
    pipeline.build_ast = broken_build_ast
    try:
        try_translate("SELECT ?x WHERE { ?x a :A . }")
        assert False, "Should have raised RuntimeError"
    except RuntimeError as e:
        assert str(e) == "visitor bug"
    finally:
        pipeline.build_ast = original
    assert try_translate("SELECT ?x WHERE { ?x a :A . }").ok
    print("  ✓ Errors outside the translator's types are not filed as OTHER")


def test_mixed_batch_tally():
    """Test category counts over a 20-query batch."""
    print("\nTest 4: Mixed batch of 20...")

    sparqls = [e.sparql for e in toy_dataset()]
    sparqls += [get_sample("optional_relationship")["sparql"], get_sample("pet_owner_ages")["sparql"]]
    sparqls += TRANSLATABLE
    for queries in CATEGORY_QUERIES.values():
        sparqls += queries
    assert len(sparqls) == 20

    entries = [DatasetEntry(db_id="mixed", sparql=s) for s in sparqls]
    translated, report = batch(entries, label="mixed")

    assert report.n == 20
    assert report.parsed == 10
    assert report.matched is None
    assert report.errors == {"COUNT_ALL": 0, "NS2": 3, "NS1": 2, "OTHER": 3, "SYNTAX": 2}
    assert abs(report.parse_err_rate - 0.5) < 1e-9
    print(f"  ✓ 10 translated, errors {report.errors}")

    statuses = [e.status for e in translated]
    assert statuses[:10] == ["translated"] * 10
    assert all(e.cypher for e in translated[:10])
    assert all(e.cypher is None for e in translated[10:])
    print("  ✓ Per-entry status and cypher fields set in input order")

    compat_entries, compat = batch(entries, RunConfig(report_mode="s2ctrans-compat"))
    assert compat.errors["COUNT_ALL"] == 1
    assert compat.parsed == 9
    assert compat_entries[0].status == "COUNT_ALL"
    print("  ✓ Compat mode moves the COUNT(*) entry to COUNT_ALL")

    assert tally([None, None]) == {kind: 0 for kind in FAILURE_KINDS}


def main():
    """Run all tests."""
    print("=" * 60)
    print("Running Classifier Tests")
    print("=" * 60)

    try:
        test_categories()
        test_count_all()
        test_classify_errors()
        test_mixed_batch_tally()

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
