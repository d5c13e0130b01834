"""
Result comparison between the SPARQL and Cypher side of a query, and the
accuracy metrics aggregated over a run.

Comparison rules:
  - numbers equal within an absolute tolerance of 1e-6
  - 0 and null are the same value, in every column
  - rows are sorted before comparing, so row order never matters
  - two empty results match; otherwise differing row counts are NUM_RES
  - graph nodes compare by URI, so a node equals its URI string
Column names are ignored. Duplicate rows count (multiset comparison).
"""

import logging
from collections import Counter
from collections.abc import Iterable
from datetime import date
from decimal import Decimal
from typing import Any, Optional, Union

from .classifier import tally
from .schemas import MISMATCH_KINDS, FailureCategory, MatchOutcome, NodeRef, Report, ResultTable

logger = logging.getLogger(__name__)

TOLERANCE = Decimal("1e-6")

# Canonical ascending order across kinds; URIs are strings by then.
_RANK = {"null": 0, "boolean": 1, "number": 2, "string": 3, "list": 4}


def canonical_value(value: Any) -> Any:
    """Comparable form of one cell: nodes become URI strings, null becomes 0."""
    if value is None:
        return Decimal(0)
    if isinstance(value, NodeRef):
        return value.uri
    if isinstance(value, bool):
        return value
    if isinstance(value, Decimal):
        return value
    if isinstance(value, (int, float)):
        return Decimal(str(value))
    if isinstance(value, date):
        return value.isoformat()
    if isinstance(value, (list, tuple)):
        return tuple(canonical_value(v) for v in value)
    return str(value)


def _kind(value: Any) -> str:
    if value is None:
        return "null"
    if isinstance(value, bool):
        return "boolean"
    if isinstance(value, Decimal):
        return "number"
    if isinstance(value, tuple):
        return "list"
    return "string"


def _sort_key(value: Any) -> tuple:
    kind = _kind(value)
    if kind == "list":
        return (_RANK[kind], tuple(_sort_key(v) for v in value))
    if kind == "null":
        return (_RANK[kind], 0)
    return (_RANK[kind], value)


def normalize(table: ResultTable) -> ResultTable:
    """
    Canonicalize a result table for comparison.

    Cells go through canonical_value and rows are sorted by their
    canonical values. Applying it twice changes nothing.
    """
    rows = [tuple(canonical_value(v) for v in row) for row in table.rows]
    rows.sort(key=lambda row: tuple(_sort_key(v) for v in row))
    return ResultTable(columns=list(table.columns), rows=rows)


def values_equal(left: Any, right: Any) -> bool:
    """Equality of two canonical cells with the float tolerance applied to numbers."""
    lk, rk = _kind(left), _kind(right)
    if lk != rk:
        return False
    if lk == "number":
        return abs(left - right) <= TOLERANCE
    if lk == "list":
        return len(left) == len(right) and all(values_equal(a, b) for a, b in zip(left, right))
    return left == right


def compare(
    sparql_res: Union[ResultTable, Exception],
    cypher_res: Union[ResultTable, Exception],
    entry_id: Optional[str] = None,
) -> MatchOutcome:
    """
    Compare the result of the original query with the translated one.

    Args:
        sparql_res: SPARQL result table
        cypher_res: Cypher result table, or the error its evaluation raised
        entry_id: Dataset entry the outcome belongs to

    Returns:
        MatchOutcome of kind MATCH, NUM_RES, VAL or EXEC

    Raises:
        ValueError: If the SPARQL side is an error; such entries are excluded
            from evaluation instead of compared
    """
    if isinstance(sparql_res, Exception):
        raise ValueError(f"SPARQL side failed, entry cannot be compared: {sparql_res}")
    if isinstance(cypher_res, Exception):
        return MatchOutcome(kind="EXEC", detail=f"{type(cypher_res).__name__}: {cypher_res}", entry_id=entry_id)

    left, right = normalize(sparql_res).rows, normalize(cypher_res).rows
    if not left and not right:
        return MatchOutcome(kind="MATCH", entry_id=entry_id, empty=True)
    if len(left) != len(right):
        return MatchOutcome(
            kind="NUM_RES", detail=f"{len(left)} rows vs {len(right)} rows", entry_id=entry_id
        )

    for index, (a, b) in enumerate(zip(left, right)):
        if len(a) != len(b):
            return MatchOutcome(
                kind="VAL", detail=f"row {index}: {len(a)} columns vs {len(b)}", entry_id=entry_id
            )
        for column, (x, y) in enumerate(zip(a, b)):
            if not values_equal(x, y):
                return MatchOutcome(
                    kind="VAL", detail=f"row {index} column {column}: {x!r} != {y!r}", entry_id=entry_id
                )
    return MatchOutcome(kind="MATCH", entry_id=entry_id)


def _ratio(numerator: int, denominator: int) -> Optional[float]:
    return numerator / denominator if denominator else None


def _mismatches(outcomes: Iterable[MatchOutcome]) -> dict[str, int]:
    counts = Counter(o.kind for o in outcomes if o.kind != "MATCH")
    return {kind: counts.get(kind, 0) for kind in MISMATCH_KINDS}


def aggregate_metrics(
    outcomes: Optional[list[MatchOutcome]],
    n: int,
    parse_failures: list[Optional[FailureCategory]],
    skipped: int = 0,
    intersect_ids: Optional[Iterable[str]] = None,
    label: str = "",
) -> Report:
    """
    Reduce per-entry outcomes to the run metrics.

    Args:
        outcomes: One MatchOutcome per executed entry, or None for a
            translation-only run
        n: Number of entries in the dataset
        parse_failures: Failure category of every entry that did not transpile
        skipped: Entries excluded from execution (no graph, SPARQL side failed)
        intersect_ids: Entry ids parsed by another tool; adds C_∩, M_∩ and α_∩
        label: Column label used in report tables

    Returns:
        Report; ratios with a zero denominator stay unset

    Raises:
        ValueError: If outcomes, failures and skipped entries do not add up to n
    """
    failures = [f for f in parse_failures if f is not None]
    n_eval = n - skipped
    report = Report(label=label, skipped=skipped)

    if outcomes is None:
        parsed = n_eval - len(failures)
    else:
        parsed = len(outcomes)
        if parsed + len(failures) != n_eval:
            raise ValueError(
                f"{parsed} outcomes + {len(failures)} failures + {skipped} skipped != {n} entries"
            )
    if parsed < 0:
        raise ValueError(f"{len(failures)} failures exceed {n_eval} entries")

    report.n = n_eval
    report.parsed = parsed
    report.errors = tally(failures)
    report.parse_err_rate = _ratio(n_eval - parsed, n_eval)

    if outcomes is not None:
        matched = sum(1 for o in outcomes if o.kind == "MATCH")
        report.matched = matched
        report.errors.update(_mismatches(outcomes))
        report.exec_acc = _ratio(matched, parsed)
        report.total_acc = _ratio(matched, n_eval)
        report.selection = {
            "equivalent": sum(1 for o in outcomes if o.kind == "MATCH" and not o.empty),
            "empty": sum(1 for o in outcomes if o.kind == "MATCH" and o.empty),
            "not equivalent": parsed - matched,
        }

        if intersect_ids is not None:
            ids = set(intersect_ids)
            shared = [o for o in outcomes if o.entry_id in ids]
            report.intersection = len(shared)
            report.intersection_matched = sum(1 for o in shared if o.kind == "MATCH")
            report.intersection_acc = _ratio(report.intersection_matched, report.intersection)
            report.intersection_errors = _mismatches(shared)

    logger.debug("report %s: n=%d parsed=%d matched=%s", label, report.n, parsed, report.matched)
    return report
