"""
Command-line entry point.

    s2c translate [FILE] [--explicit-rels p1,p2] [--optional-after-where] [--emit-ast]
    s2c batch --input X --output Y
    s2c evaluate --dataset X --graphs DIR --backend sandbox|external
    s2c report X [Y ...]

Exit codes: 0 success, 1 syntax or input error, 2 unsupported query.
"""

import argparse
import json
import logging
import sys
from pathlib import Path
from typing import Optional

from pydantic import ValidationError

from . import __version__
from .dataset_loader import DatasetLoadError, load_dataset, save_dataset
from .executors import ExternalExecutor, SandboxExecutor
from .pipeline import batch, evaluate, try_translate
from .report import ReportFormatError, format_report, load_report, write_report
from .schemas import OptionalPlacement, RunConfig

logger = logging.getLogger(__name__)

EXIT_OK = 0
EXIT_ERROR = 1
EXIT_UNSUPPORTED = 2


def _config_options() -> argparse.ArgumentParser:
    parent = argparse.ArgumentParser(add_help=False)
    parent.add_argument(
        "--explicit-rels",
        default="",
        help="Comma-separated prefixed predicates always mapped to relationships (e.g. :knows,foaf:knows)",
    )
    parent.add_argument(
        "--optional-after-where",
        action="store_true",
        help="Place OPTIONAL MATCH lines after the WHERE clause",
    )
    parent.add_argument("--default-prefix", default="ROOT", help="Label for the empty prefix")
    parent.add_argument(
        "--strict-prefixes", action="store_true", help="Reject prefixes the query does not declare"
    )
    parent.add_argument(
        "--guard-properties",
        action="store_true",
        help="Add IS NOT NULL for properties read by required triple patterns",
    )
    parent.add_argument(
        "--report-mode",
        choices=["lite", "s2ctrans-compat"],
        default="lite",
        help="s2ctrans-compat reports COUNT(*) projections as COUNT_ALL",
    )
    return parent


def build_parser() -> argparse.ArgumentParser:
    config = _config_options()
    parser = argparse.ArgumentParser(prog="s2c", description="Translate SPARQL queries to Cypher")
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    parser.add_argument("-v", "--verbose", action="store_true", help="Log debug output to stderr")
    sub = parser.add_subparsers(dest="command", required=True)

    translate = sub.add_parser("translate", parents=[config], help="Translate one query")
    translate.add_argument("input", nargs="?", default="-", help="Query file; '-' or omitted reads stdin")
    translate.add_argument("--emit-ast", action="store_true", help="Also print the intermediate AST")
    translate.add_argument("--format", choices=["text", "json"], default="text")
    translate.set_defaults(func=cmd_translate)

    batch_cmd = sub.add_parser("batch", parents=[config], help="Translate every entry of a dataset")
    batch_cmd.add_argument("--input", required=True, help="Dataset JSON or JSONL file, or URL")
    batch_cmd.add_argument("--output", required=True, help="Output dataset JSON file")
    batch_cmd.set_defaults(func=cmd_batch)

    evaluate_cmd = sub.add_parser(
        "evaluate", parents=[config], help="Run translated queries and compare with SPARQL results"
    )
    evaluate_cmd.add_argument("--dataset", required=True, help="Dataset JSON or JSONL file, or URL")
    evaluate_cmd.add_argument("--graphs", help="Directory of <db_id>.ttl files (sandbox backend)")
    evaluate_cmd.add_argument("--backend", choices=["sandbox", "external"], default="sandbox")
    evaluate_cmd.add_argument(
        "--intersect", help="File of entry ids parsed by another tool (JSON list or one per line)"
    )
    evaluate_cmd.add_argument("--label", default="", help="Report column label")
    evaluate_cmd.add_argument("--output", help="Report JSON file")
    evaluate_cmd.add_argument("--csv", help="Report CSV file")
    evaluate_cmd.add_argument("--details", help="JSON file with per-entry outcomes and skips")
    evaluate_cmd.set_defaults(func=cmd_evaluate)

    report_cmd = sub.add_parser("report", help="Print one or more report files side by side")
    report_cmd.add_argument("reports", nargs="+", help="Report JSON files")
    report_cmd.add_argument("--format", choices=["text", "csv"], default="text")
    report_cmd.set_defaults(func=cmd_report)
    return parser


def config_from_args(args: argparse.Namespace) -> RunConfig:
    """Map CLI flags onto RunConfig; raises pydantic.ValidationError for bad values."""
    rels = [r.strip() for r in args.explicit_rels.split(",") if r.strip()]
    placement = (
        OptionalPlacement.AFTER_WHERE if args.optional_after_where else OptionalPlacement.BEFORE_WHERE
    )
    return RunConfig(
        explicit_rels=rels,
        optional_placement=placement,
        strict_prefixes=args.strict_prefixes,
        guard_properties=args.guard_properties,
        default_prefix_label=args.default_prefix,
        output_format=getattr(args, "format", "text"),
        report_mode=args.report_mode,
    )


def _read_query(source: str) -> str:
    if source == "-":
        return sys.stdin.read()
    return Path(source).expanduser().read_text(encoding="utf-8")


def cmd_translate(args: argparse.Namespace, config: RunConfig) -> int:
    try:
        sparql = _read_query(args.input)
    except OSError as e:
        print(f"Error: cannot read query: {e}", file=sys.stderr)
        return EXIT_ERROR
    if not sparql.strip():
        print("Error: empty query", file=sys.stderr)
        return EXIT_ERROR

    result = try_translate(sparql, config)
    if not result.ok:
        if result.failure.kind == "SYNTAX":
            print(f"Syntax error: {result.failure.detail}", file=sys.stderr)
            return EXIT_ERROR
        print(result.failure.model_dump_json())
        return EXIT_UNSUPPORTED

    if config.output_format == "json":
        payload = {"cypher": result.cypher}
        if args.emit_ast:
            payload["ast"] = result.ast.to_json_dict()
        print(json.dumps(payload, indent=2, ensure_ascii=False))
    else:
        print(result.cypher)
        if args.emit_ast:
            print()
            print(json.dumps(result.ast.to_json_dict(), indent=2, ensure_ascii=False))
    return EXIT_OK


def cmd_batch(args: argparse.Namespace, config: RunConfig) -> int:
    try:
        entries = load_dataset(args.input)
        translated, report = batch(entries, config, label=Path(args.input).stem)
        save_dataset(translated, args.output)
    except DatasetLoadError as e:
        print(f"Error: {e}", file=sys.stderr)
        return EXIT_ERROR

    print(format_report([report]), end="")
    return EXIT_OK


def read_ids(path: str) -> list[str]:
    """Entry ids from a JSON list or a plain file with one id per line."""
    text = Path(path).expanduser().read_text(encoding="utf-8")
    try:
        data = json.loads(text)
    except json.JSONDecodeError:
        return [line.strip() for line in text.splitlines() if line.strip()]
    if not isinstance(data, list):
        raise ValueError(f"{path}: expected a JSON list of entry ids")
    return [str(item) for item in data]


def cmd_evaluate(args: argparse.Namespace, config: RunConfig) -> int:
    if args.backend == "sandbox":
        if not args.graphs:
            print("Error: --graphs is required for the sandbox backend", file=sys.stderr)
            return EXIT_ERROR
        executor = SandboxExecutor(
            args.graphs,
            explicit_rels=tuple(config.explicit_rels),
            default_prefix_label=config.default_prefix_label,
        )
    else:
        executor = ExternalExecutor()

    try:
        entries = load_dataset(args.dataset)
        intersect_ids = read_ids(args.intersect) if args.intersect else None
    except (DatasetLoadError, OSError, ValueError) as e:
        print(f"Error: {e}", file=sys.stderr)
        return EXIT_ERROR

    label = args.label or Path(args.dataset).stem
    evaluation = evaluate(entries, executor, config, intersect_ids=intersect_ids, label=label)
    for skipped in evaluation.skipped:
        logger.info("skipped %s: %s", skipped.entry_id, skipped.reason)

    try:
        if args.output:
            write_report(evaluation.report, args.output, args.csv)
        elif args.csv:
            Path(args.csv).write_text(format_report([evaluation.report], "csv"), encoding="utf-8")
        if args.details:
            Path(args.details).write_text(evaluation.model_dump_json(indent=2), encoding="utf-8")
    except OSError as e:
        print(f"Error: cannot write results: {e}", file=sys.stderr)
        return EXIT_ERROR

    print(format_report([evaluation.report]), end="")
    return EXIT_OK


def cmd_report(args: argparse.Namespace, config: Optional[RunConfig] = None) -> int:
    try:
        reports = [load_report(path) for path in args.reports]
    except ReportFormatError as e:
        print(f"Error: {e}", file=sys.stderr)
        return EXIT_ERROR
    print(format_report(reports, args.format), end="")
    return EXIT_OK


def main(argv: Optional[list[str]] = None) -> int:
    """Run the s2c command line; returns the process exit code."""
    parser = build_parser()
    args = parser.parse_args(argv)

    logging.basicConfig(
        level=logging.DEBUG if args.verbose else logging.WARNING,
        stream=sys.stderr,
        format="%(levelname)s %(name)s: %(message)s",
    )

    config = None
    if args.command != "report":
        try:
            config = config_from_args(args)
        except ValidationError as e:
            print(f"Invalid configuration:\n{e}", file=sys.stderr)
            return EXIT_ERROR
    return args.func(args, config)


if __name__ == "__main__":
    sys.exit(main())
