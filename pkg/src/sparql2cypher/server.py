"""
sparql2cypher MCP Server - tool surface over the translator and the evaluation harness.
"""

import asyncio
import json
import logging
import sys
from typing import Any

from mcp.server import Server
from mcp.types import TextContent, Tool

from .dataset_loader import dump_entries, load_dataset, save_dataset, validate_entries
from .executors import ExternalExecutor, SandboxExecutor
from .pipeline import batch, evaluate, try_translate
from .report import format_report, write_report
from .samples import (
    PRODUCTS_DB_ID,
    TOY_DB_ID,
    get_sample,
    list_samples,
    products_dataset,
    products_store,
    toy_dataset,
    toy_store,
)
from .schemas import RunConfig

logger = logging.getLogger(__name__)

# Create server instance
server = Server("sparql2cypher")

_CONFIG_PROPERTIES = {
    "explicit_rels": {
        "type": "array",
        "items": {"type": "string"},
        "description": "Prefixed predicates always mapped to relationships, e.g. [':knows']",
    },
    "optional_placement": {
        "type": "string",
        "enum": ["BEFORE_WHERE", "AFTER_WHERE"],
        "description": "Where OPTIONAL MATCH lines go relative to WHERE (default: BEFORE_WHERE)",
    },
    "strict_prefixes": {
        "type": "boolean",
        "description": "Reject prefixes the query does not declare (default: false)",
    },
    "guard_properties": {
        "type": "boolean",
        "description": "Add IS NOT NULL for properties read by required triple patterns (default: false)",
    },
    "default_prefix_label": {
        "type": "string",
        "description": "Label used for the empty prefix (default: ROOT)",
    },
    "report_mode": {
        "type": "string",
        "enum": ["lite", "s2ctrans-compat"],
        "description": "s2ctrans-compat reports COUNT(*) projections as COUNT_ALL",
    },
}

_BUNDLED = {
    "toy": (TOY_DB_ID, toy_store, toy_dataset),
    "products": (PRODUCTS_DB_ID, products_store, products_dataset),
}


@server.list_tools()
async def list_tools() -> list[Tool]:
    """List available tools."""
    return [
        Tool(
            name="translate_sparql",
            description="""Translate a SPARQL SELECT query into Cypher.

Triple patterns become MATCH patterns: class triples give node labels, literal
objects give inline properties, property triples give node properties and
triples between nodes give relationships. FILTER, GROUP BY, HAVING, ORDER BY,
LIMIT and OFFSET map onto WHERE, WITH, RETURN and the Cypher modifiers.

Unsupported queries are reported with their category:
- NS2: nested SELECT, MINUS, COUNT(*) outside the projection
- NS1: EXISTS, NOT EXISTS, NOT IN
- OTHER: any other construct outside the translatable subset
- SYNTAX: the query does not parse""",
            inputSchema={
                "type": "object",
                "properties": {
                    "sparql": {"type": "string", "description": "SPARQL query text"},
                    "emit_ast": {
                        "type": "boolean",
                        "description": "Include the intermediate AST as JSON (default: false)",
                    },
                    **_CONFIG_PROPERTIES,
                },
                "required": ["sparql"],
            },
        ),
        Tool(
            name="batch_translate",
            description="""Translate every entry of a Spider4SSC-style dataset.

Provide entries inline or a dataset file/URL. Each entry gets a 'cypher' field
when translation succeeds and a 'status' field (translated or the failure
category). Returns the per-category counts and, without an output path, the
updated entries.""",
            inputSchema={
                "type": "object",
                "properties": {
                    "entries": {
                        "type": "array",
                        "items": {"type": "object"},
                        "description": "Inline entries with db_id, question and sparql",
                    },
                    "input": {"type": "string", "description": "Dataset JSON/JSONL path or URL"},
                    "output": {"type": "string", "description": "Where to write the updated dataset"},
                    **_CONFIG_PROPERTIES,
                },
            },
        ),
        Tool(
            name="evaluate_dataset",
            description="""Run translated queries next to their SPARQL originals and compare the results.

Backends:
- sandbox: in-memory evaluation over one Turtle file per db_id in graphs_dir
- external: live SPARQL and graph-store endpoints from S2C_SPARQL_ENDPOINT / S2C_GRAPH_ENDPOINT

Use 'bundled' ("toy" or "products") to evaluate a bundled fixture without files.
Returns the metrics table: parsed and matched counts, error categories,
NUM_RES/VAL/N4j_EXEC mismatches, execution accuracy (α) and total accuracy (τ).""",
            inputSchema={
                "type": "object",
                "properties": {
                    "dataset": {"type": "string", "description": "Dataset JSON/JSONL path or URL"},
                    "graphs_dir": {"type": "string", "description": "Directory of <db_id>.ttl files"},
                    "bundled": {
                        "type": "string",
                        "enum": sorted(_BUNDLED),
                        "description": "Evaluate a bundled dataset and graph instead",
                    },
                    "backend": {
                        "type": "string",
                        "enum": ["sandbox", "external"],
                        "description": "Execution backend (default: sandbox)",
                    },
                    "intersect_ids": {
                        "type": "array",
                        "items": {"type": "string"},
                        "description": "Entry ids parsed by another tool, for intersection metrics",
                    },
                    "output": {"type": "string", "description": "Where to write the report JSON"},
                    "label": {"type": "string", "description": "Report column label"},
                    **_CONFIG_PROPERTIES,
                },
            },
        ),
        Tool(
            name="list_sample_queries",
            description="List the bundled sample queries, or show one in full by name.",
            inputSchema={
                "type": "object",
                "properties": {
                    "name": {"type": "string", "description": "Sample to show in full"},
                },
            },
        ),
    ]


@server.call_tool()
async def call_tool(name: str, arguments: Any) -> list[TextContent]:
    """Handle tool calls."""
    arguments = arguments or {}
    try:
        if name == "translate_sparql":
            return await translate_sparql_handler(arguments)
        elif name == "batch_translate":
            return await batch_translate_handler(arguments)
        elif name == "evaluate_dataset":
            return await evaluate_dataset_handler(arguments)
        elif name == "list_sample_queries":
            return await list_sample_queries_handler(arguments)
        else:
            return [TextContent(type="text", text=f"Unknown tool: {name}")]
    except Exception as e:
        logger.exception("tool %s failed", name)
        return [TextContent(type="text", text=f"Error: {str(e)}")]


def _config(arguments: dict[str, Any]) -> RunConfig:
    """RunConfig from the config keys present in the arguments."""
    return RunConfig(**{key: arguments[key] for key in _CONFIG_PROPERTIES if key in arguments})


async def translate_sparql_handler(arguments: dict[str, Any]) -> list[TextContent]:
    """Handle translate_sparql tool calls."""
    sparql = arguments.get("sparql", "")
    if not sparql.strip():
        return [TextContent(type="text", text="No query provided. Pass the SPARQL text in 'sparql'.")]

    config = _config(arguments)
    result = try_translate(sparql, config)
    if not result.ok:
        message = f"Translation failed ({result.failure.kind})\n" + "=" * 60 + "\n\n"
        message += result.failure.detail
        return [TextContent(type="text", text=message)]

    message = result.cypher
    if arguments.get("emit_ast"):
        message += "\n\nAST:\n" + json.dumps(result.ast.to_json_dict(), indent=2, ensure_ascii=False)
    return [TextContent(type="text", text=message)]


async def batch_translate_handler(arguments: dict[str, Any]) -> list[TextContent]:
    """Handle batch_translate tool calls."""
    if arguments.get("entries") is not None:
        entries = validate_entries(arguments["entries"])
        label = "inline"
    elif arguments.get("input"):
        entries = load_dataset(arguments["input"])
        label = arguments["input"]
    else:
        return [
            TextContent(
                type="text",
                text="No dataset provided. Pass 'entries' inline or an 'input' path or URL.",
            )
        ]

    translated, report = batch(entries, _config(arguments), label=label)

    message = "Batch Translation\n" + "=" * 60 + "\n\n"
    message += f"Entries: {report.n}\n"
    message += f"Translated: {report.parsed}\n\n"
    message += format_report([report])

    if arguments.get("output"):
        save_dataset(translated, arguments["output"])
        message += f"\n✓ Dataset written to {arguments['output']}"
    else:
        message += "\n" + "=" * 60 + "\n"
        message += dump_entries(translated)
    return [TextContent(type="text", text=message)]


async def evaluate_dataset_handler(arguments: dict[str, Any]) -> list[TextContent]:
    """Handle evaluate_dataset tool calls."""
    config = _config(arguments)
    bundled = arguments.get("bundled")

    if bundled:
        if bundled not in _BUNDLED:
            available = ", ".join(sorted(_BUNDLED))
            return [TextContent(type="text", text=f"Unknown bundled dataset '{bundled}'. Available: {available}")]
        db_id, make_store, make_dataset = _BUNDLED[bundled]
        entries = make_dataset()
        executor = SandboxExecutor(
            explicit_rels=tuple(config.explicit_rels),
            default_prefix_label=config.default_prefix_label,
            stores={db_id: make_store()},
        )
        label = arguments.get("label") or bundled
    elif arguments.get("dataset"):
        if arguments.get("backend", "sandbox") == "external":
            executor = ExternalExecutor()
        elif arguments.get("graphs_dir"):
            executor = SandboxExecutor(
                arguments["graphs_dir"],
                explicit_rels=tuple(config.explicit_rels),
                default_prefix_label=config.default_prefix_label,
            )
        else:
            return [TextContent(type="text", text="The sandbox backend needs 'graphs_dir'.")]
        entries = load_dataset(arguments["dataset"])
        label = arguments.get("label") or arguments["dataset"]
    else:
        return [TextContent(type="text", text="No dataset provided. Pass 'dataset' or 'bundled'.")]

    evaluation = evaluate(
        entries, executor, config, intersect_ids=arguments.get("intersect_ids"), label=label
    )

    message = "Differential Evaluation\n" + "=" * 60 + "\n\n"
    message += format_report([evaluation.report])

    mismatches = [o for o in evaluation.outcomes if o.kind != "MATCH"]
    if mismatches:
        message += "\nMismatches:\n"
        for outcome in mismatches:
            message += f"• {outcome.entry_id}: {outcome.kind} {outcome.detail}\n"
    if evaluation.skipped:
        message += "\nSkipped:\n"
        for skipped in evaluation.skipped:
            message += f"• {skipped.entry_id}: {skipped.reason}\n"

    if arguments.get("output"):
        write_report(evaluation.report, arguments["output"])
        message += f"\n✓ Report written to {arguments['output']}"
    return [TextContent(type="text", text=message)]


async def list_sample_queries_handler(arguments: dict[str, Any]) -> list[TextContent]:
    """Handle list_sample_queries tool calls."""
    name = arguments.get("name")
    if name:
        sample = get_sample(name)
        message = f"Sample: {name}\n" + "=" * 60 + "\n\n"
        message += f"{sample['description']}\n\nSPARQL:\n{sample['sparql']}\n"
        if sample.get("cypher"):
            message += f"\nExpected Cypher:\n{sample['cypher']}\n"
        return [TextContent(type="text", text=message)]

    message = "Available Sample Queries\n" + "=" * 60 + "\n\n"
    for sample_name, description in sorted(list_samples().items()):
        message += f"• {sample_name}\n  {description}\n\n"

    message += "=" * 60 + "\n"
    message += "Usage:\n"
    message += "Use 'list_sample_queries' with a name to see the query text,\n"
    message += "then pass it to 'translate_sparql'."
    return [TextContent(type="text", text=message)]


def main():
    """Run the MCP server."""
    from mcp.server.stdio import stdio_server

    logging.basicConfig(level=logging.INFO, stream=sys.stderr)

    async def run():
        async with stdio_server() as (read_stream, write_stream):
            await server.run(
                read_stream,
                write_stream,
                server.create_initialization_options(),
            )

    asyncio.run(run())


if __name__ == "__main__":
    main()
