"""
Translation, batch and evaluation cores shared by the CLI and the tool server.
"""

import logging
from collections.abc import Iterable
from dataclasses import dataclass
from typing import Optional

from .classifier import TRANSLATION_ERRORS, classify
from .cypher_eval import CypherEvalError
from .dataset_loader import entry_id
from .equivalence import aggregate_metrics, compare
from .executors import Executor, ExecutorError
from .frontend import parse_text
from .interpreter import CypherQuery, assemble
from .rdf_store import TurtleSyntaxError
from .schemas import (
    Ast,
    DatasetEntry,
    Evaluation,
    FailureCategory,
    Report,
    RunConfig,
    SkippedEntry,
)
from .sparql_eval import EvalError
from .visitor import build_ast

logger = logging.getLogger(__name__)


@dataclass
class TranslationResult:
    """Outcome of translating one query: the Cypher query or the failure category."""

    sparql: str
    query: Optional[CypherQuery] = None
    ast: Optional[Ast] = None
    failure: Optional[FailureCategory] = None

    @property
    def ok(self) -> bool:
        return self.failure is None

    @property
    def cypher(self) -> Optional[str]:
        return self.query.text if self.query is not None else None


def translate(sparql: str, config: Optional[RunConfig] = None) -> tuple[CypherQuery, Ast]:
    """
    Translate one SPARQL query.

    Args:
        sparql: Query text
        config: Translation settings; defaults apply when omitted

    Returns:
        (CypherQuery, Ast)

    Raises:
        Any frontend, visitor or interpreter error; see try_translate for the
        classified form
    """
    config = config or RunConfig()
    tree = parse_text(sparql)
    ast = build_ast(
        tree,
        explicit_rels=config.explicit_rels,
        strict_prefixes=config.strict_prefixes,
        default_prefix_label=config.default_prefix_label,
        guard_properties=config.guard_properties,
    )
    return assemble(ast, config.optional_placement), ast


def try_translate(sparql: str, config: Optional[RunConfig] = None) -> TranslationResult:
    """
    Translate and classify; never raises for a bad query.

    Errors outside the translator's own error types are bugs and propagate.
    """
    config = config or RunConfig()
    try:
        tree = parse_text(sparql)
        compat_failure = classify(tree, config.report_mode)
        if compat_failure is not None:
            return TranslationResult(sparql, failure=compat_failure)
        query, ast = translate(sparql, config)
    except TRANSLATION_ERRORS as e:
        failure = classify(e, config.report_mode)
        logger.debug("translation failed (%s): %s", failure.kind, failure.detail)
        return TranslationResult(sparql, failure=failure)
    return TranslationResult(sparql, query=query, ast=ast)


def batch(
    entries: list[DatasetEntry], config: Optional[RunConfig] = None, label: str = ""
) -> tuple[list[DatasetEntry], Report]:
    """
    Translate every entry of a dataset.

    Entries that translate get their cypher field filled; every entry gets
    a status ("translated" or the failure kind). A failing entry never
    affects the others.

    Returns:
        (updated entries in input order, translation-only Report)
    """
    config = config or RunConfig()
    out: list[DatasetEntry] = []
    failures: list[FailureCategory] = []
    for index, entry in enumerate(entries):
        result = try_translate(entry.sparql, config)
        updated = entry.model_copy(deep=True)
        if result.ok:
            updated.cypher = result.cypher
            updated.status = "translated"
        else:
            failures.append(result.failure)
            updated.status = result.failure.kind
            logger.warning("entry %s not translated: %s", entry_id(entry, index), result.failure.kind)
        out.append(updated)

    report = aggregate_metrics(None, len(entries), failures, label=label)
    return out, report


def evaluate(
    entries: list[DatasetEntry],
    executor: Executor,
    config: Optional[RunConfig] = None,
    intersect_ids: Optional[Iterable[str]] = None,
    label: str = "",
) -> Evaluation:
    """
    Translate each entry, run both queries and compare the results.

    Entries without a graph, or whose SPARQL side fails, are skipped with
    the reason recorded. Cypher-side failures count as EXEC.

    Args:
        entries: Dataset entries
        executor: Backend running both queries
        config: Translation settings
        intersect_ids: Entry ids parsed by another tool, for the intersection metrics
        label: Report column label

    Returns:
        Evaluation with outcomes, failures, skipped entries and the Report
    """
    config = config or RunConfig()
    evaluation = Evaluation()
    failures: list[FailureCategory] = []

    for index, entry in enumerate(entries):
        eid = entry_id(entry, index)
        result = try_translate(entry.sparql, config)
        if not result.ok:
            failures.append(result.failure)
            evaluation.failures[eid] = result.failure
            continue

        if not executor.has_graph(entry.db_id):
            reason = f"no graph for database '{entry.db_id}'"
            logger.warning("skipping entry %s: %s", eid, reason)
            evaluation.skipped.append(SkippedEntry(entry_id=eid, reason=reason))
            continue

        try:
            sparql_res = executor.run_sparql(entry.db_id, entry.sparql)
        except (EvalError, ExecutorError, TurtleSyntaxError) as e:
            reason = f"SPARQL side failed: {e}"
            logger.warning("skipping entry %s: %s", eid, reason)
            evaluation.skipped.append(SkippedEntry(entry_id=eid, reason=reason))
            continue

        try:
            cypher_res = executor.run_cypher(entry.db_id, result.cypher)
        except (CypherEvalError, ExecutorError) as e:
            cypher_res = e
        outcome = compare(sparql_res, cypher_res, eid)
        if outcome.kind != "MATCH":
            logger.debug("entry %s: %s %s", eid, outcome.kind, outcome.detail)
        evaluation.outcomes.append(outcome)

    evaluation.report = aggregate_metrics(
        evaluation.outcomes,
        len(entries),
        failures,
        skipped=len(evaluation.skipped),
        intersect_ids=intersect_ids,
        label=label,
    )
    return evaluation
