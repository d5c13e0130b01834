#!/usr/bin/env python3
"""
Tests for the batch and evaluation pipeline and the s2c command line.
"""

import io
import json
import sys
import tempfile
from contextlib import redirect_stderr, redirect_stdout
from pathlib import Path

# Add src to path
sys.path.insert(0, str(Path(__file__).parent / "src"))

from sparql2cypher.cli import EXIT_ERROR, EXIT_OK, EXIT_UNSUPPORTED, main as cli_main
from sparql2cypher.cypher_eval import CypherEvalError
from sparql2cypher.dataset_loader import DatasetLoadError, dump_entries, load_dataset
from sparql2cypher.executors import SandboxExecutor
from sparql2cypher.pipeline import batch, evaluate
from sparql2cypher.report import load_report
from sparql2cypher.samples import (
    PRODUCTS_DB_ID,
    TOY_DB_ID,
    TOY_TURTLE,
    get_sample,
    products_dataset,
    products_store,
    products_turtle,
    toy_dataset,
    toy_store,
)
from sparql2cypher.schemas import DatasetEntry, OptionalPlacement, RunConfig

AFTER_WHERE = RunConfig(optional_placement=OptionalPlacement.AFTER_WHERE)


class FailingCypherExecutor(SandboxExecutor):
    """Sandbox whose graph side always fails."""

    def run_cypher(self, db_id, query):
        raise CypherEvalError("runtime", "graph store unavailable")


def run_cli(*argv):
    """Run s2c and capture (exit code, stdout, stderr)."""
    out, err = io.StringIO(), io.StringIO()
    with redirect_stdout(out), redirect_stderr(err):
        code = cli_main(list(argv))
    return code, out.getvalue(), err.getvalue()


def write_dataset(path: Path, entries: list[DatasetEntry]):
    records = [
        {"id": f"{e.db_id}-{i}", "db_id": e.db_id, "question": e.question, "sparql": e.sparql}
        for i, e in enumerate(entries)
    ]
    path.write_text(json.dumps(records, indent=2), encoding="utf-8")


def test_batch_determinism():
    """Test that batch translation is repeatable and keeps input order."""
    print("Test 1: Batch determinism...")

    entries = toy_dataset() + [DatasetEntry(db_id="toy", sparql=get_sample("nested_select")["sparql"])]
    first, report = batch(entries)
    second, _ = batch(entries)

    assert dump_entries(first) == dump_entries(second)
    assert [e.question for e in first] == [e.question for e in entries]
    assert report.n == 6 and report.parsed == 5 and report.errors["NS2"] == 1
    assert first[-1].status == "NS2" and first[-1].cypher is None
    assert all(e.cypher is None for e in entries)
    print("  ✓ Same output on every run, input entries untouched")


def test_toy_evaluation():
    """Test that every toy entry matches."""
    print("\nTest 2: Toy evaluation...")

    executor = SandboxExecutor(stores={TOY_DB_ID: toy_store()})
    evaluation = evaluate(toy_dataset(), executor, label="toy")
    report = evaluation.report

    assert [o.kind for o in evaluation.outcomes] == ["MATCH"] * 5, evaluation.outcomes
    assert report.exec_acc == 1.0 and report.total_acc == 1.0
    assert report.selection["empty"] == 0
    print("  ✓ 5 of 5 matched, α 100%")


def test_optional_placement_evaluation():
    """Test that OPTIONAL MATCH placement decides the product query outcome."""
    print("\nTest 3: OPTIONAL placement...")

    executor = SandboxExecutor(stores={PRODUCTS_DB_ID: products_store()})

    before = evaluate(products_dataset(), executor)
    assert before.outcomes[0].kind == "VAL", before.outcomes[0]
    print("  ✓ BEFORE_WHERE filters only the optional part: VAL")

    after = evaluate(products_dataset(), executor, AFTER_WHERE)
    assert after.outcomes[0].kind == "MATCH", after.outcomes[0]
    print("  ✓ AFTER_WHERE filters the required pattern: MATCH")


def test_skips_and_exec():
    """Test skipped entries, translation failures and Cypher-side errors."""
    print("\nTest 4: Skips, failures and EXEC...")

    entries = toy_dataset() + [
        DatasetEntry(db_id="elsewhere", sparql=get_sample("singer_count")["sparql"]),
        DatasetEntry(
            db_id=TOY_DB_ID,
            sparql="SELECT ?n WHERE { ?x a foo:Thing . ?x foo:name ?n . }",
        ),
        DatasetEntry(db_id=TOY_DB_ID, sparql=get_sample("not_exists")["sparql"]),
    ]
    executor = SandboxExecutor(stores={TOY_DB_ID: toy_store()})
    evaluation = evaluate(entries, executor, intersect_ids=["0", "1", "5"])

    assert [s.entry_id for s in evaluation.skipped] == ["5", "6"]
    assert "no graph" in evaluation.skipped[0].reason
    assert "SPARQL side failed" in evaluation.skipped[1].reason
    assert evaluation.failures["7"].kind == "NS1"
    report = evaluation.report
    assert (report.n, report.parsed, report.matched, report.skipped) == (6, 5, 5, 2)
    assert report.intersection == 2 and report.intersection_matched == 2
    print("  ✓ Missing graph and failing SPARQL skipped, NS1 counted")

    failing = FailingCypherExecutor(stores={TOY_DB_ID: toy_store()})
    evaluation = evaluate(toy_dataset(), failing)
    assert [o.kind for o in evaluation.outcomes] == ["EXEC"] * 5
    assert evaluation.report.errors["EXEC"] == 5
    assert evaluation.report.exec_acc == 0
    print("  ✓ Cypher-side errors reported as EXEC")


def test_dataset_loading():
    """Test JSON and JSONL dataset files."""
    print("\nTest 5: Dataset loading...")

    with tempfile.TemporaryDirectory() as tmp:
        json_path = Path(tmp) / "toy.json"
        write_dataset(json_path, toy_dataset())
        entries = load_dataset(json_path)
        assert len(entries) == 5 and entries[0].model_extra["id"] == "toy-0"

        jsonl_path = Path(tmp) / "toy.jsonl"
        jsonl_path.write_text(
            "\n".join(json.dumps({"db_id": "toy", "sparql": e.sparql}) for e in toy_dataset()) + "\n",
            encoding="utf-8",
        )
        assert [e.sparql for e in load_dataset(jsonl_path)] == [e.sparql for e in entries]
        print("  ✓ JSON list and JSON Lines")

        bad_entry = Path(tmp) / "bad.json"
        bad_entry.write_text(json.dumps([{"db_id": "toy", "sparql": "  "}]), encoding="utf-8")
        for source in (bad_entry, Path(tmp) / "missing.json", Path(tmp) / "toy.txt"):
            try:
                load_dataset(source)
                assert False, f"Should have raised DatasetLoadError: {source}"
            except DatasetLoadError:
                pass
        print("  ✓ Invalid entries, missing files and unknown formats rejected")


def test_cli_translate():
    """Test s2c translate exit codes and output."""
    print("\nTest 6: s2c translate...")

    with tempfile.TemporaryDirectory() as tmp:
        query = Path(tmp) / "query.rq"
        query.write_text(get_sample("optional_relationship")["sparql"], encoding="utf-8")

        code, out, _ = run_cli("translate", str(query))
        assert code == EXIT_OK
        assert out.splitlines()[1].startswith("OPTIONAL MATCH")
        print("  ✓ Text output, exit 0")

        code, out, _ = run_cli("translate", str(query), "--optional-after-where", "--emit-ast", "--format", "json")
        payload = json.loads(out)
        assert code == EXIT_OK
        assert payload["cypher"].splitlines()[1].startswith("WHERE")
        assert payload["ast"]["RETURN"] == ["DISTINCT label"]
        print("  ✓ JSON output with AST")

        query.write_text(get_sample("nested_select")["sparql"], encoding="utf-8")
        code, out, _ = run_cli("translate", str(query))
        assert code == EXIT_UNSUPPORTED
        assert json.loads(out)["kind"] == "NS2"
        print("  ✓ Unsupported query: failure JSON, exit 2")

        query.write_text("SELEC ?x WHERE { ?x a :A . }", encoding="utf-8")
        code, out, err = run_cli("translate", str(query))
        assert code == EXIT_ERROR and out == ""
        assert "Syntax error" in err
        print("  ✓ Syntax error on stderr, exit 1")

        query.write_text("   \n", encoding="utf-8")
        assert run_cli("translate", str(query))[0] == EXIT_ERROR
        assert run_cli("translate", str(Path(tmp) / "missing.rq"))[0] == EXIT_ERROR
        query.write_text(get_sample("singer_count")["sparql"], encoding="utf-8")
        assert run_cli("translate", str(query), "--default-prefix", "1x")[0] == EXIT_ERROR
        print("  ✓ Empty input, missing file and bad configuration: exit 1")

        code, out, _ = run_cli("translate", str(query), "--report-mode", "s2ctrans-compat")
        assert code == EXIT_UNSUPPORTED and json.loads(out)["kind"] == "COUNT_ALL"
        print("  ✓ Compat mode reports COUNT_ALL")


def test_cli_batch_evaluate_report():
    """Test s2c batch, evaluate and report on files."""
    print("\nTest 7: s2c batch, evaluate and report...")

    with tempfile.TemporaryDirectory() as tmp:
        tmp = Path(tmp)
        graphs = tmp / "graphs"
        graphs.mkdir()
        (graphs / f"{TOY_DB_ID}.ttl").write_text(TOY_TURTLE, encoding="utf-8")
        (graphs / f"{PRODUCTS_DB_ID}.ttl").write_text(products_turtle(), encoding="utf-8")
        dataset = tmp / "mixed.json"
        write_dataset(dataset, toy_dataset() + products_dataset())

        translated = tmp / "translated.json"
        code, out, _ = run_cli("batch", "--input", str(dataset), "--output", str(translated))
        assert code == EXIT_OK
        records = json.loads(translated.read_text(encoding="utf-8"))
        assert all(r["status"] == "translated" and r["cypher"] for r in records)
        assert records[0]["id"] == "toy-0"
        assert "mixed" in out
        print("  ✓ batch writes cypher and status for every entry")

        assert run_cli("batch", "--input", str(tmp / "none.json"), "--output", str(translated))[0] == EXIT_ERROR

        ids = tmp / "ids.txt"
        ids.write_text("toy-0\ntoy-1\nproducts-5\n", encoding="utf-8")
        before, after = tmp / "before.json", tmp / "after.json"
        code, out, _ = run_cli(
            "evaluate", "--dataset", str(dataset), "--graphs", str(graphs),
            "--label", "before", "--output", str(before), "--csv", str(tmp / "before.csv"),
            "--details", str(tmp / "details.json"), "--intersect", str(ids),
        )
        assert code == EXIT_OK
        report = load_report(before)
        assert (report.n, report.parsed, report.matched) == (6, 6, 5)
        assert report.errors["VAL"] == 1
        assert report.intersection == 3 and report.intersection_matched == 2
        details = json.loads((tmp / "details.json").read_text(encoding="utf-8"))
        assert [o["kind"] for o in details["outcomes"]][-1] == "VAL"
        assert (tmp / "before.csv").read_text(encoding="utf-8").startswith("metric,before")
        print("  ✓ evaluate: 5 of 6 matched with OPTIONAL MATCH before WHERE")

        code, _, _ = run_cli(
            "evaluate", "--dataset", str(dataset), "--graphs", str(graphs),
            "--optional-after-where", "--label", "after", "--output", str(after),
        )
        assert code == EXIT_OK and load_report(after).matched == 6
        print("  ✓ evaluate: 6 of 6 matched with OPTIONAL MATCH after WHERE")

        assert run_cli("evaluate", "--dataset", str(dataset))[0] == EXIT_ERROR

        code, out, _ = run_cli("report", str(before), str(after))
        assert code == EXIT_OK
        header = out.splitlines()[0]
        assert "before" in header and "after" in header
        assert "83.3%" in out and "100.0%" in out
        code, out, _ = run_cli("report", str(before), "--format", "csv")
        assert out.startswith("metric,before")
        assert run_cli("report", str(tmp / "missing.json"))[0] == EXIT_ERROR
        print("  ✓ report prints runs side by side")


def main():
    """Run all tests."""
    print("=" * 60)
    print("Running Pipeline and CLI Tests")
    print("=" * 60)

    try:
        test_batch_determinism()
        test_toy_evaluation()
        test_optional_placement_evaluation()
        test_skips_and_exec()
        test_dataset_loading()
        test_cli_translate()
        test_cli_batch_evaluate_report()

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
